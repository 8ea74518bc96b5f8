//! Closed-form constants and the parameter window [lambda_*, lambda^*].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{HFunction, NonlinearitySpec};
use crate::pq_core::{lpq_scalar, Params};

pub const DEFAULT_CHI: f64 = 1.01;
pub const DEFAULT_KAPPA: f64 = 1.01;

/// C(N,q) = ((N+q-1)^{N+q-1} / N^N)^{1/(q-1)}.
pub fn capacity_constant(dim: usize, q: f64) -> f64 {
    let n = dim as f64;
    let m = n + q - 1.0;
    ((m * m.ln() - n * n.ln()) / (q - 1.0)).exp()
}

/// F(theta) = x min{1, x^{(q-p)/(p-1)}} with x = q theta / (2 C(N,q)).
pub fn f_of(theta: f64, params: &Params) -> f64 {
    let x = params.q * theta / (2.0 * capacity_constant(params.dim, params.q));
    x * x.powf((params.q - params.p) / (params.p - 1.0)).min(1.0)
}

pub fn epsilon(params: &Params) -> f64 {
    params.n() * params.radius / (params.n() + params.q - 1.0)
}

/// (lambda_*, lambda^*) for a given theta, theta2 and h(theta).
pub fn window_bounds(params: &Params, theta: f64, theta2: f64, h_theta: f64) -> (f64, f64) {
    let (p, q, r, n) = (params.p, params.q, params.radius, params.n());
    let eps = epsilon(params);
    let lower = theta.powf(p - 1.0).max(theta.powf(q - 1.0)) * 2.0 * r.powf(n - 1.0) * n
        / ((r - eps).powf(q - 1.0) * eps.powf(n) * h_theta);
    let upper = (theta2 * q / (q - 1.0)).powf(q - 1.0) * n / (h_theta * r.powf(q));
    (lower, upper)
}

/// Cutoff parameters and an optional explicit theta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowOptions {
    #[serde(default = "default_chi")]
    pub chi: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub theta: Option<f64>,
}

fn default_chi() -> f64 {
    DEFAULT_CHI
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            chi: DEFAULT_CHI,
            kappa: DEFAULT_KAPPA,
            theta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub capacity: f64,
    pub f_theta2: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub h_theta: f64,
    pub lambda_star: f64,
    pub lambda_upper: f64,
    pub nonempty: bool,
    pub chi: f64,
    pub kappa: f64,
    /// 2(chi kappa)^{q-1} / (R-eps)^{q-1} >= L(chi kappa / (R-eps)).
    pub cutoff_bound_holds: bool,
}

impl WindowReport {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_star + self.lambda_upper)
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lambda_star * (1.0 - 1e-12) && lambda <= self.lambda_upper * (1.0 + 1e-12)
    }
}

pub fn compute_window(
    params: &Params,
    spec: &NonlinearitySpec,
    h: &HFunction,
    options: &WindowOptions,
) -> Result<WindowReport> {
    let bound = params.radius_bound();
    if params.radius > bound {
        return Err(Error::InfeasibleGeometry {
            radius: params.radius,
            bound,
        });
    }
    if !(options.chi >= 1.0 && options.kappa >= 1.0) {
        return Err(Error::Configuration("chi and kappa must be at least 1".into()));
    }
    let (t1, t2) = (spec.theta1, spec.theta2);
    let f_theta2 = f_of(t2, params);
    let upper = t2.min(f_theta2);
    if t1 >= upper {
        return Err(Error::EmptyThetaRange { theta1: t1, upper });
    }
    let theta = match options.theta {
        Some(t) if t > t1 && t < upper => t,
        Some(t) => {
            return Err(Error::Configuration(format!(
                "theta = {t:e} outside ({t1:e}, {upper:e})"
            )))
        }
        None => t1 + 0.5 * (upper - t1),
    };
    let h_theta = h.eval(theta);
    let (lambda_star, lambda_upper) = window_bounds(params, theta, t2, h_theta);
    let eps = epsilon(params);
    let ck = options.chi * options.kappa;
    let gap = params.radius - eps;
    let cutoff_bound_holds = 2.0 * ck.powf(params.q - 1.0) / gap.powf(params.q - 1.0)
        >= lpq_scalar(ck / gap, params);
    Ok(WindowReport {
        capacity: capacity_constant(params.dim, params.q),
        f_theta2,
        epsilon: eps,
        theta,
        theta1: t1,
        theta2: t2,
        h_theta,
        lambda_star,
        lambda_upper,
        nonempty: lambda_star < lambda_upper,
        chi: options.chi,
        kappa: options.kappa,
        cutoff_bound_holds,
    })
}
