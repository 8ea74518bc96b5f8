//! Constructors for the two sub/supersolution pairs and their certificates.

use serde::Serialize;

use crate::certificate::CertificateReport;
use crate::discrete::certify::{certify_nonordering, certify_ordering, certify_solution, SolutionKind};
use crate::discrete::operator::DiscreteOperator;
use crate::discrete::solve::{solve_eta_problem, solve_load, solve_singular_constant, Pointwise, Problem, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::nonlinearity::DerivedReactions;
use crate::radial::RadialProfile;
use crate::window::WindowReport;

pub const SEARCH_STEPS: usize = 60;
pub const BISECTION_STEPS: usize = 80;

/// u_0 = w_eta and u^0 = alpha_* u_alpha.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstPair {
    pub lower: GridFunction,
    pub upper: GridFunction,
    pub eta: f64,
    pub eta_halvings: usize,
    pub alpha_star: f64,
    pub alpha_doublings: usize,
    /// (lambda/2) min f(w_eta) w_eta^{-gamma}
    pub chi_lower: f64,
    /// alpha_*^{q-1} min u_alpha^{-gamma}
    pub chi_upper: f64,
}

/// v_0 = psi and v^0 = m u_beta.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondPair {
    pub lower: GridFunction,
    pub upper: GridFunction,
    /// Discrete solution of -L zeta = lambda h(v).
    pub zeta: GridFunction,
    /// sup |zeta - Phi| against the quadrature profile.
    pub zeta_vs_quadrature: f64,
    pub m_lambda: f64,
    pub beta_star: f64,
    /// (lambda/2) min f(psi) psi^{-gamma}
    pub eps_lower: f64,
    /// m^{p-1} min u_beta^{-gamma}
    pub eps_upper: f64,
}

fn interior_min(u: &GridFunction, f: impl Fn(f64) -> f64) -> f64 {
    let n = u.values.len() - 1;
    u.values[..n].iter().map(|&t| f(t)).fold(f64::INFINITY, f64::min)
}

pub fn build_first_pair(op: &DiscreteOperator, reactions: &DerivedReactions) -> Result<FirstPair> {
    let params = op.params;
    let (lambda, gamma, p, q) = (params.lambda, params.gamma, params.p, params.q);
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams("pair construction needs lambda > 0".into()));
    }
    let half_ratio = |t: f64| 0.5 * reactions.source(t);

    let us = solve_singular_constant(op, lambda * reactions.f0())?;
    let mut eta = lambda * reactions.f0() * us.sup_norm().powf(-gamma);
    let mut found = None;
    for k in 0..SEARCH_STEPS {
        let w = solve_eta_problem(op, eta)?;
        let chi = interior_min(&w, half_ratio);
        if eta <= chi {
            found = Some((w, chi, k));
            break;
        }
        eta *= 0.5;
    }
    let (lower, chi_lower, eta_halvings) = found.ok_or_else(|| Error::SearchExhausted {
        what: "eta".into(),
        steps: SEARCH_STEPS,
    })?;

    let e = q + gamma - 1.0;
    let mut astar: f64 = 1.0;
    let mut found = None;
    for k in 0..SEARCH_STEPS {
        let alpha = astar.powf(p - q);
        let ua = solve_singular_constant(&DiscreteOperator::new(&params, op.n, alpha, 1.0), 1.0)?;
        let c = ua.sup_norm();
        if tail_condition(reactions, lambda, astar * c, c, e) {
            found = Some((ua, k));
            break;
        }
        astar *= 2.0;
    }
    let (ua, alpha_doublings) = found.ok_or_else(|| Error::SearchExhausted {
        what: "alpha_*".into(),
        steps: SEARCH_STEPS,
    })?;
    let chi_upper = astar.powf(q - 1.0) * interior_min(&ua, |t| t.powf(-gamma));
    let upper = ua.with_values(ua.values.iter().map(|v| astar * v).collect());
    Ok(FirstPair {
        lower,
        upper,
        eta,
        eta_halvings,
        alpha_star: astar,
        alpha_doublings,
        chi_lower,
        chi_upper,
    })
}

/// lambda sup_{t >= m} f(t)/t^e * c^e <= 1, sampled on a log grid over [m, 1e12 m].
fn tail_condition(reactions: &DerivedReactions, lambda: f64, m: f64, c: f64, e: f64) -> bool {
    let samples = 2000;
    (0..=samples).all(|k| {
        let t = m * 10f64.powf(12.0 * k as f64 / samples as f64);
        lambda * reactions.f(t) * (c / t).powf(e) <= 1.0
    })
}

pub fn build_second_pair(
    op: &DiscreteOperator,
    reactions: &DerivedReactions,
    window: &WindowReport,
    profile: &RadialProfile,
) -> Result<SecondPair> {
    let params = op.params;
    let (lambda, gamma, p, q) = (params.lambda, params.gamma, params.p, params.q);
    if !window.contains(lambda) {
        return Err(Error::WindowViolation {
            lambda,
            lower: window.lambda_star,
            upper: window.lambda_upper,
        });
    }
    if profile.phi.values.len() != op.n + 1 {
        return Err(Error::GridMismatch(format!(
            "radial profile has {} intervals, operator has {}",
            profile.phi.intervals(),
            op.n
        )));
    }
    let theta1 = reactions.h.theta1;

    let upper_for = |m: f64| -> Result<(GridFunction, f64)> {
        let beta = m.powf(q - p);
        let ub = solve_singular_constant(&DiscreteOperator::new(&params, op.n, 1.0, beta), 1.0)?;
        Ok((ub, beta))
    };
    let scaled_norm = |m: f64| -> Result<f64> { Ok(m * upper_for(m)?.0.sup_norm()) };
    let (mut lo, mut hi) = (1e-12f64, 1e12f64);
    if scaled_norm(lo)? > theta1 || scaled_norm(hi)? <= theta1 {
        return Err(Error::SearchExhausted {
            what: "m_lambda bracket".into(),
            steps: 0,
        });
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        if scaled_norm(mid)? <= theta1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut m = lo;
    let mut chosen = None;
    for _ in 0..SEARCH_STEPS {
        let (ub, beta) = upper_for(m)?;
        let norm = m * ub.sup_norm();
        if norm <= theta1 && m.powf(p - 1.0 + gamma) >= lambda * reactions.f(norm) {
            chosen = Some((ub, beta));
            break;
        }
        m *= 0.5;
    }
    let (ub, beta_star) = chosen.ok_or_else(|| Error::SearchExhausted {
        what: "m_lambda".into(),
        steps: SEARCH_STEPS,
    })?;
    let eps_upper = m.powf(p - 1.0) * interior_min(&ub, |t| t.powf(-gamma));
    let upper = ub.with_values(ub.values.iter().map(|v| m * v).collect());

    let h_source: Vec<f64> = profile.v.values.iter().map(|&t| lambda * reactions.h.eval(t)).collect();
    let zeta = solve_load(op, &h_source)?;
    let zeta_vs_quadrature = zeta.sup_distance(&profile.phi);
    let g_source: Vec<f64> = zeta.values.iter().map(|&t| reactions.g(t)).collect();
    let prob = Problem {
        op,
        term: Pointwise::Regularized {
            theta: reactions.theta_lambda,
        },
        source: &g_source,
    };
    let (psi, _) = prob.solve(&zeta.values, SolveOptions::default())?;
    let lower = zeta.with_values(psi);
    let eps_lower = interior_min(&lower, |t| 0.5 * reactions.source(t));
    Ok(SecondPair {
        lower,
        upper,
        zeta,
        zeta_vs_quadrature,
        m_lambda: m,
        beta_star,
        eps_lower,
        eps_upper,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCertificates {
    pub u0_subsolution: CertificateReport,
    pub u_up_supersolution: CertificateReport,
    pub v0_subsolution: CertificateReport,
    pub v_up_supersolution: CertificateReport,
    pub u0_le_v0: CertificateReport,
    pub v0_lt_u_up: CertificateReport,
    pub u0_lt_v_up: CertificateReport,
    pub v_up_le_u_up: CertificateReport,
    pub v0_not_le_v_up: CertificateReport,
    pub zeta_le_psi: CertificateReport,
    pub pass: bool,
}

impl PairCertificates {
    pub fn named(&self) -> [(&'static str, &CertificateReport); 10] {
        [
            ("u0 subsolution", &self.u0_subsolution),
            ("u^0 supersolution", &self.u_up_supersolution),
            ("v0 subsolution", &self.v0_subsolution),
            ("v^0 supersolution", &self.v_up_supersolution),
            ("u0 <= v0", &self.u0_le_v0),
            ("v0 < u^0", &self.v0_lt_u_up),
            ("u0 < v^0", &self.u0_lt_v_up),
            ("v^0 <= u^0", &self.v_up_le_u_up),
            ("v0 not <= v^0", &self.v0_not_le_v_up),
            ("zeta <= psi", &self.zeta_le_psi),
        ]
    }
}

pub fn certify_pairs(
    op: &DiscreteOperator,
    reactions: &DerivedReactions,
    first: &FirstPair,
    second: &SecondPair,
) -> Result<PairCertificates> {
    let sub = |u: &GridFunction| certify_solution(op, reactions, u, SolutionKind::Subsolution, true);
    let sup = |u: &GridFunction| certify_solution(op, reactions, u, SolutionKind::Supersolution, true);
    let mut out = PairCertificates {
        u0_subsolution: sub(&first.lower)?,
        u_up_supersolution: sup(&first.upper)?,
        v0_subsolution: sub(&second.lower)?,
        v_up_supersolution: sup(&second.upper)?,
        u0_le_v0: certify_ordering(&first.lower, &second.lower, false)?,
        v0_lt_u_up: certify_ordering(&second.lower, &first.upper, true)?,
        u0_lt_v_up: certify_ordering(&first.lower, &second.upper, true)?,
        v_up_le_u_up: certify_ordering(&second.upper, &first.upper, false)?,
        v0_not_le_v_up: certify_nonordering(&second.lower, &second.upper)?,
        zeta_le_psi: certify_ordering(&second.zeta, &second.lower, false)?,
        pass: false,
    };
    out.pass = out.named().iter().all(|(_, c)| c.pass);
    Ok(out)
}
