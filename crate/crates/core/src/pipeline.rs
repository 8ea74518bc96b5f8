//! End-to-end runs assembled from a [`Config`], with their serializable reports.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::barrier::{
    certify_barrier_supersolution, check_scaling, profile_to_blowdown, smallest_m_lambda, smallest_sign_certificate,
    BarrierCertOptions, BarrierProfile, ScalingReport,
};
use crate::certificate::CertificateReport;
use crate::config::{Config, LambdaChoice};
use crate::discrete::{
    amann_iterate, build_first_pair, build_second_pair, certify_nonordering, certify_ordering, certify_pairs,
    certify_solution, equation_residual, search_third_solution, DiscreteOperator, FirstPair, IterationTrace,
    PairCertificates, SecondPair, SolutionKind, Start,
};
use crate::discrete::amann::ThirdSearch;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::io::write_json;
use crate::nonlinearity::{build_h, validate, DerivedReactions, ValidationReport};
use crate::pq_core::Params;
use crate::radial::{certify_radial_claim, solve_radial, ClaimReport, RadialProfile};
use crate::window::WindowReport;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRun {
    pub params: Params,
    pub validation: ValidationReport,
    pub window: WindowReport,
}

impl WindowRun {
    pub fn pass(&self) -> bool {
        self.window.nonempty
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("window.json"), self)
    }
}

pub fn run_window(cfg: &Config, lambda: Option<LambdaChoice>) -> Result<WindowRun> {
    let r = cfg.resolve(lambda)?;
    Ok(WindowRun {
        validation: validate(&cfg.nonlinearity, &r.params),
        params: r.params,
        window: r.window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialRun {
    pub params: Params,
    pub window: WindowReport,
    #[serde(skip)]
    pub profile: RadialProfile,
    pub claim: ClaimReport,
}

impl RadialRun {
    pub fn pass(&self) -> bool {
        self.claim.pass
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.profile.write_csv(&dir.join("radial.csv"))?;
        write_json(&dir.join("radial_claim.json"), self)
    }
}

fn claim_tolerance(cfg: &Config) -> f64 {
    cfg.tolerances.claim_fraction * cfg.nonlinearity.theta2
}

fn reactions(cfg: &Config, params: &Params) -> Result<DerivedReactions> {
    DerivedReactions::new(&cfg.nonlinearity, params)
}

fn check_window(params: &Params, window: &WindowReport) -> Result<()> {
    if window.contains(params.lambda) {
        Ok(())
    } else {
        Err(Error::WindowViolation {
            lambda: params.lambda,
            lower: window.lambda_star,
            upper: window.lambda_upper,
        })
    }
}

pub fn run_radial(cfg: &Config, lambda: Option<LambdaChoice>) -> Result<RadialRun> {
    let r = cfg.resolve(lambda)?;
    check_window(&r.params, &r.window)?;
    let h = build_h(&cfg.nonlinearity, &r.params)?;
    let profile = solve_radial(&r.params, &h, &r.window, cfg.grid.nodes)?;
    let claim = certify_radial_claim(&profile, &r.window, claim_tolerance(cfg));
    Ok(RadialRun {
        params: r.params,
        window: r.window,
        profile,
        claim,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignCheck {
    pub p: f64,
    pub certificate: CertificateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierRun {
    pub tau: f64,
    pub q: f64,
    pub gamma: f64,
    pub r_tau: Option<f64>,
    pub range: f64,
    pub conservation_residual: f64,
    pub sign: SignCheck,
    pub scaling: Vec<ScalingReport>,
    pub options: BarrierCertOptions,
    pub supersolution: CertificateReport,
    #[serde(skip)]
    pub profile: BarrierProfile,
}

impl BarrierRun {
    /// Conservation within 1e-6 and both certificates.
    pub fn pass(&self) -> bool {
        self.conservation_residual <= 1e-6 && self.sign.certificate.pass && self.supersolution.pass
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.profile.write_csv(&dir.join("barrier.csv"))?;
        write_json(&dir.join("barrier.json"), self)
    }
}

pub fn run_barrier(cfg: &Config, lambda: Option<LambdaChoice>) -> Result<BarrierRun> {
    let r = cfg.resolve(lambda)?;
    let params = r.params;
    let b = &cfg.barrier;
    let profile = profile_to_blowdown(b.tau, params.q, params.gamma, b.nodes)?;
    let sign = SignCheck {
        p: params.p,
        certificate: smallest_sign_certificate(&profile, params.p)?,
    };
    let scaling = b
        .scaling_taus
        .iter()
        .map(|&t| check_scaling(b.tau, t, params.q, params.gamma))
        .collect::<Result<Vec<_>>>()?;
    let options = BarrierCertOptions {
        m_lambda: smallest_m_lambda(params.lambda, 1.0, params.q, params.gamma),
        alpha: 1.0,
        beta: 1.0,
        nu: b.nu.unwrap_or(0.2 * params.radius.min(profile.range())),
        nodes: cfg.grid.nodes,
    };
    let supersolution = certify_barrier_supersolution(&profile, &params, &options)?;
    Ok(BarrierRun {
        tau: b.tau,
        q: params.q,
        gamma: params.gamma,
        r_tau: profile.r_tau,
        range: profile.range(),
        conservation_residual: profile.conservation_residual(),
        sign,
        scaling,
        options,
        supersolution,
        profile,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstPairSummary {
    pub eta: f64,
    pub eta_halvings: usize,
    pub alpha_star: f64,
    pub alpha_doublings: usize,
    pub chi_lower: f64,
    pub chi_upper: f64,
    pub lower_norm: f64,
    pub upper_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondPairSummary {
    pub m_lambda: f64,
    pub beta_star: f64,
    pub eps_lower: f64,
    pub eps_upper: f64,
    pub zeta_vs_quadrature: f64,
    pub lower_norm: f64,
    pub upper_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairsRun {
    pub params: Params,
    pub window: WindowReport,
    pub nodes: usize,
    pub theta_lambda: f64,
    pub claim: ClaimReport,
    pub first: FirstPairSummary,
    pub second: SecondPairSummary,
    pub certificates: PairCertificates,
    #[serde(skip)]
    pub first_pair: FirstPair,
    #[serde(skip)]
    pub second_pair: SecondPair,
    #[serde(skip)]
    pub profile: RadialProfile,
}

impl PairsRun {
    pub fn pass(&self) -> bool {
        self.claim.pass && self.certificates.pass
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let f = &self.first_pair;
        let s = &self.second_pair;
        crate::io::write_columns(
            &dir.join("pairs.csv"),
            &["r", "u0", "u_up", "v0", "v_up", "zeta"],
            &[
                &f.lower.nodes,
                &f.lower.values,
                &f.upper.values,
                &s.lower.values,
                &s.upper.values,
                &s.zeta.values,
            ],
        )?;
        write_json(&dir.join("pairs.json"), self)
    }
}

struct Prepared {
    params: Params,
    window: WindowReport,
    derived: DerivedReactions,
    op: DiscreteOperator,
}

fn prepare(cfg: &Config, lambda: Option<LambdaChoice>) -> Result<Prepared> {
    let r = cfg.resolve(lambda)?;
    check_window(&r.params, &r.window)?;
    let derived = reactions(cfg, &r.params)?;
    let op = DiscreteOperator::unit(&r.params, cfg.grid.nodes);
    Ok(Prepared {
        params: r.params,
        window: r.window,
        derived,
        op,
    })
}

fn pairs_from(cfg: &Config, prep: &Prepared) -> Result<PairsRun> {
    let profile = solve_radial(&prep.params, &prep.derived.h, &prep.window, cfg.grid.nodes)?;
    let claim = certify_radial_claim(&profile, &prep.window, claim_tolerance(cfg));
    let first = build_first_pair(&prep.op, &prep.derived)?;
    let second = build_second_pair(&prep.op, &prep.derived, &prep.window, &profile)?;
    let certificates = certify_pairs(&prep.op, &prep.derived, &first, &second)?;
    Ok(PairsRun {
        params: prep.params,
        window: prep.window.clone(),
        nodes: cfg.grid.nodes,
        theta_lambda: prep.derived.theta_lambda,
        claim,
        first: FirstPairSummary {
            eta: first.eta,
            eta_halvings: first.eta_halvings,
            alpha_star: first.alpha_star,
            alpha_doublings: first.alpha_doublings,
            chi_lower: first.chi_lower,
            chi_upper: first.chi_upper,
            lower_norm: first.lower.sup_norm(),
            upper_norm: first.upper.sup_norm(),
        },
        second: SecondPairSummary {
            m_lambda: second.m_lambda,
            beta_star: second.beta_star,
            eps_lower: second.eps_lower,
            eps_upper: second.eps_upper,
            zeta_vs_quadrature: second.zeta_vs_quadrature,
            lower_norm: second.lower.sup_norm(),
            upper_norm: second.upper.sup_norm(),
        },
        certificates,
        first_pair: first,
        second_pair: second,
        profile,
    })
}

pub fn run_pairs(cfg: &Config, lambda: Option<LambdaChoice>) -> Result<PairsRun> {
    pairs_from(cfg, &prepare(cfg, lambda)?)
}

/// An iteration trace without the iterates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub start: Start,
    pub khat: f64,
    pub iterations: usize,
    pub increments: Vec<f64>,
    pub residuals: Vec<f64>,
    pub monotone: Vec<bool>,
    pub all_monotone: bool,
    pub converged: bool,
    pub within_bounds: bool,
    pub final_residual: f64,
    pub limit_norm: f64,
}

impl From<&IterationTrace> for TraceSummary {
    fn from(t: &IterationTrace) -> Self {
        TraceSummary {
            start: t.start,
            khat: t.khat,
            iterations: t.iterations(),
            increments: t.increments.clone(),
            residuals: t.residuals.clone(),
            monotone: t.monotone.clone(),
            all_monotone: t.all_monotone(),
            converged: t.converged,
            within_bounds: t.within_bounds,
            final_residual: t.residuals.last().cloned().unwrap_or(f64::NAN),
            limit_norm: t.limit().sup_norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distinctness {
    pub distance: f64,
    pub threshold: f64,
    pub distinct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRun {
    pub pairs: PairsRun,
    pub minimal: TraceSummary,
    pub maximal: TraceSummary,
    pub residual_tolerance: f64,
    pub distinctness: Distinctness,
    pub third: ThirdSearch,
    #[serde(skip)]
    pub u1: GridFunction,
    #[serde(skip)]
    pub u2: GridFunction,
}

impl SolveRun {
    /// Everything except the third-solution search.
    pub fn pass(&self) -> bool {
        let ok = |t: &TraceSummary| {
            t.converged && t.all_monotone && t.within_bounds && t.final_residual <= self.residual_tolerance
        };
        self.pairs.pass() && ok(&self.minimal) && ok(&self.maximal) && self.distinctness.distinct
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.pairs.write(dir)?;
        self.u1.write_csv(&dir.join("u1.csv"), "u1")?;
        self.u2.write_csv(&dir.join("u2.csv"), "u2")?;
        write_json(&dir.join("solve.json"), self)
    }
}

pub fn run_solve(cfg: &Config, lambda: Option<LambdaChoice>, seed: Option<u64>) -> Result<SolveRun> {
    let prep = prepare(cfg, lambda)?;
    let pairs = pairs_from(cfg, &prep)?;
    let (f, s) = (&pairs.first_pair, &pairs.second_pair);
    let low = amann_iterate(&prep.op, &prep.derived, &f.lower, &s.upper, Start::FromLower)?;
    let high = amann_iterate(&prep.op, &prep.derived, &s.lower, &f.upper, Start::FromUpper)?;
    let (u1, u2) = (low.limit().clone(), high.limit().clone());
    let distance = u1.sup_distance(&u2);
    let threshold = 0.1 * cfg.nonlinearity.theta1;
    let third = search_third_solution(
        &prep.op,
        &prep.derived,
        &u1,
        &u2,
        f.upper.max(),
        seed.unwrap_or(cfg.seed),
    );
    log::info!(
        "third-solution search: {} attempts, found = {}",
        third.attempts.len(),
        third.found
    );
    Ok(SolveRun {
        minimal: (&low).into(),
        maximal: (&high).into(),
        residual_tolerance: cfg.tolerances.residual,
        distinctness: Distinctness {
            distance,
            threshold,
            distinct: distance >= threshold,
        },
        third,
        pairs,
        u1,
        u2,
    })
}

/// What `certify` checks a grid function against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyKind {
    Subsolution,
    Supersolution,
    /// input <= other pointwise
    Ordering,
    /// input > other somewhere
    Nonordering,
    /// input is a radial profile CSV
    RadialClaim,
}

impl std::str::FromStr for CertifyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "subsolution" => CertifyKind::Subsolution,
            "supersolution" => CertifyKind::Supersolution,
            "ordering" => CertifyKind::Ordering,
            "nonordering" => CertifyKind::Nonordering,
            "radial-claim" | "radial_claim" => CertifyKind::RadialClaim,
            other => return Err(Error::Schema(format!("unknown certificate kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CertifyOutcome {
    Pointwise(CertificateReport),
    Radial(ClaimReport),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyRun {
    pub kind: CertifyKind,
    pub params: Params,
    pub outcome: CertifyOutcome,
    pub pass: bool,
}

impl CertifyRun {
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("certificate.json"), self)
    }
}

pub fn run_certify(
    cfg: &Config,
    lambda: Option<LambdaChoice>,
    kind: CertifyKind,
    input: &Path,
    against: Option<&Path>,
) -> Result<CertifyRun> {
    let r = cfg.resolve(lambda)?;
    let outcome = match kind {
        CertifyKind::RadialClaim => {
            let profile = RadialProfile::read_csv(input)?;
            CertifyOutcome::Radial(certify_radial_claim(&profile, &r.window, claim_tolerance(cfg)))
        }
        CertifyKind::Subsolution | CertifyKind::Supersolution => {
            let u = GridFunction::read_csv(input)?;
            let derived = reactions(cfg, &r.params)?;
            let op = DiscreteOperator::unit(&r.params, u.intervals());
            let sk = if kind == CertifyKind::Subsolution {
                SolutionKind::Subsolution
            } else {
                SolutionKind::Supersolution
            };
            CertifyOutcome::Pointwise(certify_solution(&op, &derived, &u, sk, false)?)
        }
        CertifyKind::Ordering | CertifyKind::Nonordering => {
            let other = against.ok_or_else(|| Error::Configuration(format!("{kind:?} needs a second function")))?;
            let a = GridFunction::read_csv(input)?;
            let b = GridFunction::read_csv(other)?;
            CertifyOutcome::Pointwise(if kind == CertifyKind::Ordering {
                certify_ordering(&a, &b, false)?
            } else {
                certify_nonordering(&a, &b)?
            })
        }
    };
    let pass = match &outcome {
        CertifyOutcome::Pointwise(c) => c.pass,
        CertifyOutcome::Radial(c) => c.pass,
    };
    Ok(CertifyRun {
        kind,
        params: r.params,
        outcome,
        pass,
    })
}

/// One lambda of a sweep; failures are recorded rather than raised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub claim_pass: bool,
    pub pairs_pass: bool,
    pub u1_norm: f64,
    pub u2_norm: f64,
    pub u1_residual: f64,
    pub u2_residual: f64,
    pub distance: f64,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub window: WindowReport,
    pub rows: Vec<SweepRow>,
}

impl SweepRun {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let col = |f: fn(&SweepRow) -> f64| self.rows.iter().map(f).collect::<Vec<f64>>();
        let flag = |f: fn(&SweepRow) -> bool| col_bool(&self.rows, f);
        crate::io::write_columns(
            &dir.join("sweep.csv"),
            &["lambda", "pass", "u1_norm", "u2_norm", "distance"],
            &[
                &col(|r| r.lambda),
                &flag(|r| r.pass),
                &col(|r| r.u1_norm),
                &col(|r| r.u2_norm),
                &col(|r| r.distance),
            ],
        )?;
        write_json(&dir.join("sweep.json"), self)
    }
}

fn col_bool(rows: &[SweepRow], f: fn(&SweepRow) -> bool) -> Vec<f64> {
    rows.iter().map(|r| if f(r) { 1.0 } else { 0.0 }).collect()
}

/// Evenly spaced lambdas over the window; one point gives the midpoint.
pub fn sweep_lambdas(window: &WindowReport, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![window.midpoint()];
    }
    let (a, b) = (window.lambda_star, window.lambda_upper);
    (0..points)
        .map(|k| a + (b - a) * k as f64 / (points - 1) as f64)
        .collect()
}

fn sweep_row(cfg: &Config, lambda: f64) -> SweepRow {
    let mut row = SweepRow {
        lambda,
        claim_pass: false,
        pairs_pass: false,
        u1_norm: f64::NAN,
        u2_norm: f64::NAN,
        u1_residual: f64::NAN,
        u2_residual: f64::NAN,
        distance: f64::NAN,
        pass: false,
        error: None,
    };
    match run_solve(cfg, Some(LambdaChoice::Value(lambda)), None) {
        Ok(s) => {
            row.claim_pass = s.pairs.claim.pass;
            row.pairs_pass = s.pairs.certificates.pass;
            row.u1_norm = s.u1.sup_norm();
            row.u2_norm = s.u2.sup_norm();
            row.u1_residual = s.minimal.final_residual;
            row.u2_residual = s.maximal.final_residual;
            row.distance = s.distinctness.distance;
            row.pass = s.pass();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs `solve` at each sweep lambda in parallel; rows come back in lambda order.
pub fn run_sweep(cfg: &Config) -> Result<SweepRun> {
    let window = cfg.window()?;
    let rows = sweep_lambdas(&window, cfg.sweep.points)
        .into_par_iter()
        .map(|l| sweep_row(cfg, l))
        .collect();
    Ok(SweepRun { window, rows })
}

/// Relative residual of the original equation for a grid function.
pub fn residual_of(cfg: &Config, lambda: Option<LambdaChoice>, u: &GridFunction) -> Result<f64> {
    let r = cfg.resolve(lambda)?;
    let derived = reactions(cfg, &r.params)?;
    equation_residual(&DiscreteOperator::unit(&r.params, u.intervals()), &derived, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_lambdas_cover_window() {
        let w = Config::reference().window().unwrap();
        let ls = sweep_lambdas(&w, 5);
        assert_eq!(ls.len(), 5);
        assert_eq!(ls[0], w.lambda_star);
        assert!((ls[4] - w.lambda_upper).abs() <= 1e-15 * w.lambda_upper);
        assert!(ls.windows(2).all(|p| p[0] < p[1]));
        assert_eq!(sweep_lambdas(&w, 1), vec![w.midpoint()]);
    }

    #[test]
    fn certify_kind_parsing() {
        assert_eq!("radial-claim".parse::<CertifyKind>().unwrap(), CertifyKind::RadialClaim);
        assert!("sub".parse::<CertifyKind>().is_err());
    }

    #[test]
    fn window_run_nonempty() {
        let run = run_window(&Config::reference(), None).unwrap();
        assert!(run.pass());
    }
}
