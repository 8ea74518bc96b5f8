//! The reaction f, its admissibility checks, and the derived reactions h and f-hat.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pq_core::{lpq_scalar, Params};
use crate::window::f_of;

const BRIDGE_SAMPLES: usize = 4097;
const THETA_CAP: f64 = 1e8;
const LIMIT_TOL: f64 = 1e-6;

/// Reaction families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionKind {
    /// f(t) = exp(k t / (k + t)).
    ExpSaturating { k: f64 },
    /// f(t) = offset + t^exponent.
    Power {
        exponent: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Piecewise linear through (t_i, f_i), t_0 = 0, constant beyond the last point.
    Table { t: Vec<f64>, f: Vec<f64> },
}

impl ReactionKind {
    pub fn check_shape(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Configuration(m.to_string()));
        match self {
            ReactionKind::ExpSaturating { k } if !(k.is_finite() && *k > 0.0) => {
                bad("exp_saturating needs k > 0")
            }
            ReactionKind::Power { exponent, offset }
                if !(exponent.is_finite() && *exponent > 0.0 && offset.is_finite()) =>
            {
                bad("power needs a positive exponent and finite offset")
            }
            ReactionKind::Table { t, f } => {
                if t.len() < 2 || t.len() != f.len() {
                    return bad("table needs at least two (t, f) points of equal length");
                }
                if t[0] != 0.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("table abscissae must start at 0 and increase");
                }
                if f.iter().chain(t).any(|v| !v.is_finite()) {
                    return bad("table entries must be finite");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn f0(&self) -> f64 {
        match self {
            ReactionKind::ExpSaturating { .. } => 1.0,
            ReactionKind::Power { offset, .. } => *offset,
            ReactionKind::Table { f, .. } => f[0],
        }
    }

    /// f(t); f(t) = f(0) for t <= 0.
    pub fn f(&self, t: f64) -> f64 {
        self.f0() + self.f_minus_f0(t)
    }

    /// f(t) - f(0) without cancellation for small t.
    pub fn f_minus_f0(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            ReactionKind::ExpSaturating { k } => (k * t / (k + t)).exp_m1(),
            ReactionKind::Power { exponent, .. } => t.powf(*exponent),
            ReactionKind::Table { t: ts, f } => {
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return f[last] - f[0];
                }
                let j = ts.partition_point(|&x| x <= t) - 1;
                let s = (t - ts[j]) / (ts[j + 1] - ts[j]);
                (f[j] - f[0]) + s * (f[j + 1] - f[j])
            }
        }
    }

    /// ln f(t), safe for very large t.
    pub fn ln_f(&self, t: f64) -> f64 {
        match self {
            ReactionKind::ExpSaturating { k } => k * t.max(0.0) / (k + t.max(0.0)),
            ReactionKind::Power { exponent, offset } if t > 1.0 => {
                let lp = exponent * t.ln();
                lp + (offset * (-lp).exp()).ln_1p()
            }
            _ => self.f(t).ln(),
        }
    }
}

/// Reaction together with the two thresholds and the optional constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub reaction: ReactionKind,
    pub theta1: f64,
    pub theta2: f64,
    /// Monotonization constant; computed on the relevant range when absent.
    #[serde(default)]
    pub khat: Option<f64>,
    /// Left end of the bridge region; the minimizer of f/(2t^gamma) on (0, theta1] when absent.
    #[serde(default)]
    pub theta_star: Option<f64>,
}

impl NonlinearitySpec {
    pub fn check_shape(&self) -> Result<()> {
        self.reaction.check_shape()?;
        if !(self.theta1 > 0.0 && self.theta2 > self.theta1 && self.theta2.is_finite()) {
            return Err(Error::Configuration("need 0 < theta1 < theta2".into()));
        }
        if let Some(k) = self.khat {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::Configuration("khat must be nonnegative".into()));
            }
        }
        if let Some(ts) = self.theta_star {
            if !(ts > 0.0 && ts <= self.theta1) {
                return Err(Error::Configuration("theta_star must lie in (0, theta1]".into()));
            }
        }
        Ok(())
    }
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn lin_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

fn merged(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    let mut all: Vec<f64> = parts.drain(..).flatten().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|b, a| (*b - *a).abs() <= 1e-9 * a.abs().max(b.abs()));
    all
}

/// Sampling grid for monotonicity checks: 0, a log grid up to `t_max` and a linear grid on [0, 2 theta2].
pub fn probe_grid(theta2: f64, t_max: f64) -> Vec<f64> {
    let top = t_max.max(2.0 * theta2);
    let mut g = merged(vec![
        vec![0.0],
        log_grid(1e-12 * top.min(1.0), top, 4000),
        lin_grid(0.0, 2.0 * theta2, 10_000),
    ]);
    g.retain(|&t| t <= t_max);
    if *g.last().unwrap() < t_max {
        g.push(t_max);
    }
    g
}

/// f(t) / (2 t^gamma).
pub fn half_ratio(kind: &ReactionKind, gamma: f64, t: f64) -> f64 {
    kind.f(t) / (2.0 * t.powf(gamma))
}

/// Minimizer and minimum of g on (0, b] by a log scan refined with golden section.
pub fn minimize_on(g: impl Fn(f64) -> f64, b: f64) -> (f64, f64) {
    let ts = log_grid(1e-12 * b, b, 2001);
    let vals: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
    let i = (0..ts.len())
        .min_by(|&a, &c| vals[a].total_cmp(&vals[c]))
        .unwrap();
    if i == ts.len() - 1 {
        let (a, c) = (ts[i - 1], ts[i]);
        let (t, v) = golden(&g, a, c);
        return if v < vals[i] { (t, v) } else { (b, vals[i]) };
    }
    let (a, c) = (ts[i.saturating_sub(1)], ts[i + 1]);
    let (t, v) = golden(&g, a, c);
    if v < vals[i] {
        (t, v)
    } else {
        (ts[i], vals[i])
    }
}

pub(crate) fn golden(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a) <= 1e-13 * b.abs().max(a.abs()) {
            break;
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    if gc < gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Truncated reaction: fbar on [0, theta*], f/(2t^gamma) on [theta1, inf), nondecreasing bridge between.
#[derive(Debug, Clone, PartialEq)]
pub struct HFunction {
    pub reaction: ReactionKind,
    pub gamma: f64,
    pub theta_star: f64,
    pub fbar: f64,
    pub theta1: f64,
    bridge_t: Vec<f64>,
    bridge_min: Vec<f64>,
}

impl HFunction {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.theta_star {
            return self.fbar;
        }
        let direct = half_ratio(&self.reaction, self.gamma, t);
        if t >= self.theta1 {
            return direct;
        }
        let ts = &self.bridge_t;
        let j = (ts.partition_point(|&x| x <= t) - 1).min(ts.len() - 2);
        let s = (t - ts[j]) / (ts[j + 1] - ts[j]);
        let env = self.bridge_min[j] + s * (self.bridge_min[j + 1] - self.bridge_min[j]);
        direct.min(env).max(self.fbar)
    }
}

pub fn build_h(spec: &NonlinearitySpec, params: &Params) -> Result<HFunction> {
    spec.check_shape()?;
    let gamma = params.gamma;
    let kind = &spec.reaction;
    let ratio = |t: f64| half_ratio(kind, gamma, t);
    let theta1 = spec.theta1;
    let (theta_star, fbar) = match spec.theta_star {
        Some(ts) => (ts, minimize_on(ratio, ts).1),
        None => minimize_on(ratio, theta1),
    };
    let bridge_t = if theta_star < theta1 {
        lin_grid(theta_star, theta1, BRIDGE_SAMPLES)
    } else {
        vec![theta1, theta1 * (1.0 + 1e-15)]
    };
    let mut bridge_min: Vec<f64> = bridge_t.iter().map(|&t| ratio(t)).collect();
    for i in (0..bridge_min.len() - 1).rev() {
        bridge_min[i] = bridge_min[i].min(bridge_min[i + 1]);
    }
    if bridge_min[0] < fbar * (1.0 - 1e-12) {
        return Err(Error::BridgeNotMonotone {
            theta_star,
            fbar,
            bridge_min: bridge_min[0],
        });
    }
    Ok(HFunction {
        reaction: kind.clone(),
        gamma,
        theta_star,
        fbar,
        theta1,
        bridge_t,
        bridge_min,
    })
}

/// f-hat(t) = lambda (f(t) - f(0)) / t^gamma, zero for t <= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Fhat {
    pub reaction: ReactionKind,
    pub lambda: f64,
    pub gamma: f64,
}

impl Fhat {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.lambda * self.reaction.f_minus_f0(t) / t.powf(self.gamma)
        }
    }
}

pub fn build_fhat(spec: &NonlinearitySpec, params: &Params) -> Fhat {
    Fhat {
        reaction: spec.reaction.clone(),
        lambda: params.lambda,
        gamma: params.gamma,
    }
}

/// Smallest k >= 0 making f-hat(t) + k t nondecreasing on the probe grid over [0, t_max], padded by 1%.
pub fn auto_khat(fhat: &Fhat, theta2: f64, t_max: f64) -> f64 {
    let g = probe_grid(theta2, t_max);
    let vals: Vec<f64> = g.iter().map(|&t| fhat.eval(t)).collect();
    let mut k: f64 = 0.0;
    for i in 0..g.len() - 1 {
        let slope = (vals[i + 1] - vals[i]) / (g[i + 1] - g[i]);
        k = k.max(-slope);
    }
    if k > 0.0 {
        1.01 * k
    } else {
        0.0
    }
}

/// Smallest grid-feasible Theta >= 0 with lambda h + Theta L nondecreasing on [0, 2 theta2].
pub fn choose_theta_lambda(h: &HFunction, params: &Params, theta2: f64) -> Result<f64> {
    if params.lambda == 0.0 {
        return Ok(0.0);
    }
    let top = 2.0 * theta2;
    let g = merged(vec![
        vec![0.0],
        log_grid(1e-10 * top, top, 10_000),
        lin_grid(0.0, top, 10_000),
    ]);
    let mut theta: f64 = 0.0;
    let mut prev = (h.eval(g[0]), lpq_scalar(g[0], params));
    for &t in &g[1..] {
        let cur = (h.eval(t), lpq_scalar(t, params));
        let dh = cur.0 - prev.0;
        if dh < 0.0 {
            theta = theta.max(-params.lambda * dh / (cur.1 - prev.1));
        }
        prev = cur;
    }
    if theta > THETA_CAP {
        return Err(Error::Configuration(format!(
            "Theta_lambda = {theta:e} exceeds cap {THETA_CAP:e}"
        )));
    }
    Ok(theta)
}

/// Everything derived from f at a fixed lambda.
#[derive(Debug, Clone)]
pub struct DerivedReactions {
    pub params: Params,
    pub h: HFunction,
    pub fhat: Fhat,
    pub theta_lambda: f64,
    pub theta2: f64,
    khat: Option<f64>,
}

impl DerivedReactions {
    pub fn new(spec: &NonlinearitySpec, params: &Params) -> Result<Self> {
        let h = build_h(spec, params)?;
        let theta_lambda = choose_theta_lambda(&h, params, spec.theta2)?;
        Ok(DerivedReactions {
            params: *params,
            h,
            fhat: build_fhat(spec, params),
            theta_lambda,
            theta2: spec.theta2,
            khat: spec.khat,
        })
    }

    pub fn reaction(&self) -> &ReactionKind {
        &self.h.reaction
    }

    pub fn f(&self, t: f64) -> f64 {
        self.h.reaction.f(t)
    }

    pub fn f0(&self) -> f64 {
        self.h.reaction.f0()
    }

    /// lambda f(t) / t^gamma.
    pub fn source(&self, t: f64) -> f64 {
        self.params.lambda * self.f(t) / t.powf(self.params.gamma)
    }

    /// g(t) = lambda h(t) + Theta L(t).
    pub fn g(&self, t: f64) -> f64 {
        self.params.lambda * self.h.eval(t) + self.theta_lambda * lpq_scalar(t, &self.params)
    }

    /// Configured k-hat, or the smallest monotonizing value on [0, t_max].
    pub fn khat_on(&self, t_max: f64) -> f64 {
        self.khat
            .unwrap_or_else(|| auto_khat(&self.fhat, self.theta2, t_max.max(1e-300)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(pass: bool, detail: String) -> Self {
        Check { pass, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub f0: Check,
    pub f1: Check,
    pub f2: Check,
    pub f2_prime: Check,
    pub f3: Check,
    pub f4: Check,
    pub khat: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        [&self.f0, &self.f1, &self.f2, &self.f2_prime, &self.f3, &self.f4]
            .iter()
            .all(|c| c.pass)
    }
}

fn first_decrease(ts: &[f64], vals: &[f64]) -> Option<f64> {
    (0..ts.len() - 1)
        .find(|&i| vals[i + 1] < vals[i] - 1e-12 * vals[i].abs())
        .map(|i| ts[i])
}

fn limit_check(kind: &ReactionKind, exponent: f64) -> Check {
    // ln(f(T)/T^e) along T = 10^3 .. 10^300
    let probes: Vec<(f64, f64)> = (3..=300)
        .map(|k| {
            let t = 10f64.powi(k);
            (t, kind.ln_f(t) - exponent * t.ln())
        })
        .collect();
    let at = |k: i32| probes[(k - 3) as usize].1;
    let last = probes.last().unwrap().1;
    let tail_decreasing = probes[probes.len() - 10..]
        .windows(2)
        .all(|w| w[1].1 <= w[0].1);
    let pass = last < LIMIT_TOL.ln() && tail_decreasing;
    Check::new(
        pass,
        format!(
            "ln(f(T)/T^{exponent}) = {:.4} at T=1e6, {:.4} at T=1e300",
            at(6),
            last
        ),
    )
}

/// Numerical falsification checks of the structural assumptions on f.
pub fn validate(spec: &NonlinearitySpec, params: &Params) -> ValidationReport {
    let kind = &spec.reaction;
    let gamma = params.gamma;
    let f0 = kind.f0();
    let c0 = Check::new(f0 > 0.0, format!("f(0) = {f0:e}"));

    let grid = probe_grid(spec.theta2, 1e9);
    let fv: Vec<f64> = grid.iter().map(|&t| kind.f(t)).collect();
    let c1 = match first_decrease(&grid, &fv) {
        None => Check::new(true, format!("nondecreasing on {} samples in [0, 1e9]", grid.len())),
        Some(t) => Check::new(false, format!("decreases after t = {t:e}")),
    };

    let c2 = limit_check(kind, params.p - 1.0 + gamma);
    let c2p = limit_check(kind, params.q - 1.0 + gamma);

    let (t1, t2) = (spec.theta1, spec.theta2);
    let upper = t2.min(f_of(t2, params));
    let c3 = if !(t1 > 0.0 && t1 < upper) {
        Check::new(false, format!("theta1 = {t1:e} not below min(theta2, F(theta2)) = {upper:e}"))
    } else {
        let ts = if t2 / t1 > 10.0 {
            log_grid(t1, t2, 10_000)
        } else {
            lin_grid(t1, t2, 10_000)
        };
        let rv: Vec<f64> = ts.iter().map(|&t| kind.f(t) / t.powf(gamma)).collect();
        match first_decrease(&ts, &rv) {
            None => Check::new(true, format!("theta1 = {t1:e} < {upper:e}; f/t^gamma nondecreasing on (theta1, theta2)")),
            Some(t) => Check::new(false, format!("f/t^gamma decreases after t = {t:e}")),
        }
    };

    let fhat = build_fhat(spec, params);
    let khat = spec.khat.unwrap_or_else(|| auto_khat(&fhat, spec.theta2, 1e9));
    let sv: Vec<f64> = grid.iter().map(|&t| fhat.eval(t) + khat * t).collect();
    let c4 = match first_decrease(&grid, &sv) {
        None => Check::new(true, format!("fhat + {khat:e} t nondecreasing on [0, 1e9]")),
        Some(t) => Check::new(false, format!("fhat + {khat:e} t decreases after t = {t:e}")),
    };

    ValidationReport {
        f0: c0,
        f1: c1,
        f2: c2,
        f2_prime: c2p,
        f3: c3,
        f4: c4,
        khat,
    }
}
