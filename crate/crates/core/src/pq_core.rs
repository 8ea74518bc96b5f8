//! Scalar (p,q) operator algebra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INVERSE_MAX_ITER: usize = 200;

/// Problem parameters for the singular (p,q) problem on the ball B(0, R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub dim: usize,
    pub radius: f64,
    pub lambda: f64,
}

impl Params {
    pub fn new(p: f64, q: f64, gamma: f64, dim: usize, radius: f64, lambda: f64) -> Result<Self> {
        let params = Params {
            p,
            q,
            gamma,
            dim,
            radius,
            lambda,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if !(self.p.is_finite() && self.q.is_finite() && 1.0 < self.p && self.p < self.q) {
            return bad("exponents must satisfy 1 < p < q < inf");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.dim == 0 {
            return bad("dimension must be at least 1");
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad("radius must be positive");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be finite and nonnegative");
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Params { lambda, ..*self }
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    /// Largest radius admitted by the radial construction, 1 + N/(q-1).
    pub fn radius_bound(&self) -> f64 {
        1.0 + self.n() / (self.q - 1.0)
    }

    pub fn flux(&self) -> PqFlux {
        PqFlux::unit(self.p, self.q)
    }
}

/// Weighted map t -> alpha |t|^{p-2} t + beta |t|^{q-2} t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqFlux {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

fn signed_pow(t: f64, e: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * t.abs().powf(e)
    }
}

impl PqFlux {
    pub fn unit(p: f64, q: f64) -> Self {
        PqFlux {
            p,
            q,
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn weighted(p: f64, q: f64, alpha: f64, beta: f64) -> Self {
        PqFlux { p, q, alpha, beta }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut out = 0.0;
        if self.alpha != 0.0 {
            out += self.alpha * signed_pow(t, self.p - 1.0);
        }
        if self.beta != 0.0 {
            out += self.beta * signed_pow(t, self.q - 1.0);
        }
        out
    }

    /// Derivative of `eval`; infinite at t = 0 when the active lower exponent is below 2.
    pub fn derivative(&self, t: f64) -> f64 {
        let a = t.abs();
        let mut out = 0.0;
        if self.alpha != 0.0 {
            out += self.alpha * (self.p - 1.0) * a.powf(self.p - 2.0);
        }
        if self.beta != 0.0 {
            out += self.beta * (self.q - 1.0) * a.powf(self.q - 2.0);
        }
        out
    }

    fn bracket(&self, s: f64) -> (f64, f64) {
        let (p1, q1) = (self.p - 1.0, self.q - 1.0);
        let w = self.alpha + self.beta;
        let a = (s / w).powf(1.0 / p1);
        let b = (s / w).powf(1.0 / q1);
        let mut lo = a.min(b);
        let mut hi = f64::INFINITY;
        if self.alpha > 0.0 {
            hi = hi.min((s / self.alpha).powf(1.0 / p1));
        }
        if self.beta > 0.0 {
            hi = hi.min((s / self.beta).powf(1.0 / q1));
        }
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        (lo, hi)
    }

    /// Unique t with eval(t) = s, by safeguarded Newton inside an analytic bracket.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        if !s.is_finite() {
            return Err(Error::DegenerateInput(format!("inverse of non-finite value {s}")));
        }
        if s < 0.0 {
            return self.inverse(-s).map(|t| -t);
        }
        let (mut lo, mut hi) = self.bracket(s);
        // widen by a few ulps so rounding in powf cannot exclude the root
        lo *= 1.0 - 1e-14;
        hi *= 1.0 + 1e-14;
        let mut t = (lo * hi).sqrt();
        for _ in 0..INVERSE_MAX_ITER {
            let r = self.eval(t) - s;
            if r == 0.0 {
                return Ok(t);
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(0.5 * (lo + hi));
            }
            let d = self.derivative(t);
            let newton = t - r / d;
            let next = if d.is_finite() && d > 0.0 && newton > lo && newton < hi {
                newton
            } else if hi > 4.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if (next - t).abs() <= 2.0 * f64::EPSILON * t {
                return Ok(next);
            }
            t = next;
        }
        Err(Error::ConvergenceFailure {
            what: format!("flux inverse at s = {s:e}"),
            iterations: INVERSE_MAX_ITER,
        })
    }
}

/// |t|^{p-2} t + |t|^{q-2} t.
pub fn lpq_scalar(t: f64, params: &Params) -> f64 {
    params.flux().eval(t)
}

pub fn lpq_inverse(s: f64, params: &Params) -> Result<f64> {
    params.flux().inverse(s)
}

/// Constant in the monotonicity inequality for the q-flux.
pub fn simon_constant(q: f64) -> f64 {
    if q >= 2.0 {
        2f64.powf(2.0 - q)
    } else {
        q - 1.0
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn q_field(x: &[f64], q: f64) -> Vec<f64> {
    let n = norm(x);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    let s = n.powf(q - 2.0);
    x.iter().map(|a| s * a).collect()
}

/// Both sides of the vector monotonicity inequality for the q-flux.
pub fn simon_gap(u: &[f64], v: &[f64], q: f64) -> Result<(f64, f64)> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::DegenerateInput("vectors must share a positive length".into()));
    }
    if q <= 1.0 {
        return Err(Error::InvalidParams("q must exceed 1".into()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if q < 2.0 && nu == 0.0 && nv == 0.0 {
        return Err(Error::DegenerateInput("u = v = 0 with q < 2".into()));
    }
    let fu = q_field(u, q);
    let fv = q_field(v, q);
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let lhs: f64 = fu
        .iter()
        .zip(&fv)
        .zip(&diff)
        .map(|((a, b), d)| (a - b) * d)
        .sum();
    let nd = norm(&diff);
    let rhs = if q >= 2.0 {
        simon_constant(q) * nd.powf(q)
    } else {
        simon_constant(q) * nd * nd / (nu + nv).powf(2.0 - q)
    };
    Ok((lhs, rhs))
}

/// Summed form for 1 < q < 2 with exponent theta = q(2-q)/2 on |u| + |v|.
pub fn simon_sum_gap(pairs: &[(Vec<f64>, Vec<f64>)], q: f64) -> Result<(f64, f64)> {
    if !(q > 1.0 && q < 2.0) {
        return Err(Error::InvalidParams("summed form requires 1 < q < 2".into()));
    }
    let theta = q * (2.0 - q) / 2.0;
    let mut lhs = 0.0;
    let mut dq = 0.0;
    let mut weight = 0.0;
    for (u, v) in pairs {
        if u.len() != v.len() {
            return Err(Error::DegenerateInput("vectors must share a length".into()));
        }
        let fu = q_field(u, q);
        let fv = q_field(v, q);
        let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        lhs += fu
            .iter()
            .zip(&fv)
            .zip(&diff)
            .map(|((a, b), d)| (a - b) * d)
            .sum::<f64>();
        dq += norm(&diff).powf(q);
        let s = norm(u) + norm(v);
        weight += s.powf(theta * 2.0 / (2.0 - q));
    }
    if weight == 0.0 {
        return Err(Error::DegenerateInput("all vectors vanish".into()));
    }
    let holder = weight.powf((2.0 - q) / 2.0);
    let rhs = simon_constant(q) * (dq / holder).powf(2.0 / q);
    Ok((lhs, rhs))
}
