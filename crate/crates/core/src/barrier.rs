//! The one-dimensional barrier -(|Xi'|^{q-2} Xi')' = Xi^{-gamma}, Xi(0) = 0, Xi'(0) = tau.

use std::path::Path;

use serde::Serialize;

use crate::certificate::{CertificateKind, CertificateReport};
use crate::discrete::DiscreteOperator;
use crate::error::{Error, Result};
use crate::grid::{uniform_nodes, GridFunction};
use crate::io;
use crate::nonlinearity::golden;
use crate::pq_core::Params;

const START_FRACTION: f64 = 1e-8;
const GEOMETRIC_RATIO: f64 = 1.05;
const GRADED_CELLS: usize = 16;
const GRADED_SUBSTEPS: usize = 8;

/// Computed barrier on a uniform grid; z = (Xi')^{q-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierProfile {
    pub tau: f64,
    pub q: f64,
    pub gamma: f64,
    pub xi: GridFunction,
    pub xi_prime: GridFunction,
    pub z: Vec<f64>,
    /// Integrator states (r, Xi, z) inside the first cell, starting at the series point.
    pub origin_steps: Vec<(f64, f64, f64)>,
    /// Radius where Xi' vanishes, when reached.
    pub r_tau: Option<f64>,
}

#[derive(Clone, Copy)]
struct System {
    q: f64,
    gamma: f64,
}

impl System {
    fn rhs(&self, xi: f64, z: f64) -> (f64, f64) {
        (z.max(0.0).powf(1.0 / (self.q - 1.0)), -xi.powf(-self.gamma))
    }

    fn rk4(&self, (xi, z): (f64, f64), dr: f64) -> (f64, f64) {
        let k1 = self.rhs(xi, z);
        let k2 = self.rhs(xi + 0.5 * dr * k1.0, z + 0.5 * dr * k1.1);
        let k3 = self.rhs(xi + 0.5 * dr * k2.0, z + 0.5 * dr * k2.1);
        let k4 = self.rhs(xi + dr * k3.0, z + dr * k3.1);
        (
            xi + dr / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            z + dr / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    }
}

/// Expansion at the origin in powers of rho = r^{1-gamma}, through rho^2.
fn series_start(tau: f64, q: f64, gamma: f64, r: f64) -> (f64, f64) {
    let c = series_coefficient(tau, q, gamma);
    let rho = r.powf(1.0 - gamma);
    let k = 1.0 / (q - 1.0);
    let a = tau.powf(q - 1.0);
    let b = tau.powf(-gamma) / (1.0 - gamma);
    let cc = b * gamma * c / (2.0 * tau * (2.0 - gamma));
    let e2 = tau * (-k * cc / a + 0.5 * k * (k - 1.0) * (b / a).powi(2));
    let y = tau - c * rho / (2.0 - gamma) + e2 * rho * rho / (3.0 - 2.0 * gamma);
    (r * y, a - b * rho - cc * rho * rho)
}

fn series_coefficient(tau: f64, q: f64, gamma: f64) -> f64 {
    tau.powf(2.0 - gamma - q) / ((1.0 - gamma) * (q - 1.0))
}

pub fn solve_barrier(tau: f64, q: f64, gamma: f64, r_max: f64, n: usize) -> Result<BarrierProfile> {
    if !(tau > 0.0 && q > 1.0 && gamma > 0.0 && gamma < 1.0 && r_max > 0.0 && n >= 2) {
        return Err(Error::InvalidParams(format!(
            "barrier needs tau > 0, q > 1, gamma in (0,1), r_max > 0, n >= 2; got tau={tau}, q={q}, gamma={gamma}, r_max={r_max}, n={n}"
        )));
    }
    let sys = System { q, gamma };
    let h = r_max / n as f64;
    let mut xi = vec![0.0; n + 1];
    let mut z = vec![0.0; n + 1];
    z[0] = tau.powf(q - 1.0);

    // (r, state) after each accepted step inside the current cell
    let mut r = START_FRACTION * h;
    let mut state = series_start(tau, q, gamma, r);
    let mut blow = None;
    let mut last = 0;
    let mut origin_steps = vec![(r, state.0, state.1)];
    'cells: for j in 0..n {
        let target = (j + 1) as f64 * h;
        let steps: Vec<f64> = if j == 0 {
            let mut pts = Vec::new();
            let mut s = r;
            while s < target {
                s = (s * GEOMETRIC_RATIO).min(target);
                pts.push(s);
            }
            pts
        } else {
            let m = if j < GRADED_CELLS { GRADED_SUBSTEPS } else { 1 };
            (1..=m)
                .map(|k| if k == m { target } else { j as f64 * h + k as f64 * h / m as f64 })
                .collect()
        };
        for next in steps {
            let new = sys.rk4(state, next - r);
            if !(new.1 > 0.0) {
                let dr = if new.1.is_finite() {
                    state.1 / (state.1 - new.1) * (next - r)
                } else {
                    // stages left the domain z > 0; extrapolate with z' = -Xi^{-gamma}
                    (state.1 * state.0.powf(gamma)).min(next - r)
                };
                blow = Some(r + dr);
                break 'cells;
            }
            r = next;
            state = new;
            if j == 0 {
                origin_steps.push((r, state.0, state.1));
            }
        }
        xi[j + 1] = state.0;
        z[j + 1] = state.1;
        last = j + 1;
    }
    let nodes = uniform_nodes(r_max, n);
    let keep = last + 1;
    let xi_prime: Vec<f64> = z[..keep].iter().map(|&v| v.max(0.0).powf(1.0 / (q - 1.0))).collect();
    let profile = BarrierProfile {
        tau,
        q,
        gamma,
        xi: GridFunction {
            nodes: nodes[..keep].to_vec(),
            values: xi[..keep].to_vec(),
        },
        xi_prime: GridFunction {
            nodes: nodes[..keep].to_vec(),
            values: xi_prime,
        },
        z: z[..keep].to_vec(),
        origin_steps,
        r_tau: blow,
    };
    match blow {
        Some(_) => Err(Error::BlowDown(Box::new(profile))),
        None => Ok(profile),
    }
}

impl BarrierProfile {
    pub fn spacing(&self) -> f64 {
        self.xi.nodes[1] - self.xi.nodes[0]
    }

    /// Largest radius covered by the grid.
    pub fn range(&self) -> f64 {
        *self.xi.nodes.last().unwrap()
    }

    /// Y = Xi/r, dY/drho, z, dz/drho at node j, with rho = r^{1-gamma}.
    fn node_data(&self, j: usize) -> (f64, f64, f64, f64) {
        let (tau, q, g) = (self.tau, self.q, self.gamma);
        if j == 0 {
            let c = series_coefficient(tau, q, g);
            return (tau, -c / (2.0 - g), self.z[0], -tau.powf(-g) / (1.0 - g));
        }
        let r = self.xi.nodes[j];
        let y = self.xi.values[j] / r;
        let rho = r.powf(1.0 - g);
        let dy = (self.xi_prime.values[j] - y) / ((1.0 - g) * rho);
        (y, dy, self.z[j], -y.powf(-g) / (1.0 - g))
    }

    /// (Xi, Xi') at any r in [0, range()], by cubic Hermite interpolation in r^{1-gamma}.
    pub fn eval(&self, r: f64) -> Option<(f64, f64)> {
        let len = self.xi.nodes.len();
        if !(r >= 0.0) || r > self.range() * (1.0 + 1e-14) || len < 2 {
            return None;
        }
        let h = self.spacing();
        let j = ((r / h).floor() as usize).min(len - 2);
        let g = self.gamma;
        let (r0, r1) = (self.xi.nodes[j], self.xi.nodes[j + 1]);
        let (p0, p1) = (r0.powf(1.0 - g), r1.powf(1.0 - g));
        let d = p1 - p0;
        let s = ((r.powf(1.0 - g) - p0) / d).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
        let (y0, dy0, z0, dz0) = self.node_data(j);
        let (y1, dy1, z1, dz1) = self.node_data(j + 1);
        let y = h00 * y0 + h10 * d * dy0 + h01 * y1 + h11 * d * dy1;
        let z = h00 * z0 + h10 * d * dz0 + h01 * z1 + h11 * d * dz1;
        Some((r * y, z.max(0.0).powf(1.0 / (self.q - 1.0))))
    }

    /// Cumulative integral of Xi^{-gamma} at every node.
    pub fn load_integral(&self) -> Vec<f64> {
        let (tau, q, g) = (self.tau, self.q, self.gamma);
        let len = self.xi.nodes.len();
        let mut out = vec![0.0; len];
        // G = Y^{-gamma} as a function of rho = r^{1-gamma}; returns (rho, G, dG/drho)
        let point = |r: f64, xi: f64, z: f64| {
            let y = xi / r;
            let rho = r.powf(1.0 - g);
            let dy = (z.max(0.0).powf(1.0 / (q - 1.0)) - y) / ((1.0 - g) * rho);
            (rho, y.powf(-g), -g * y.powf(-g - 1.0) * dy)
        };
        let cell = |a: (f64, f64, f64), b: (f64, f64, f64)| {
            let d = b.0 - a.0;
            (d * (a.1 + b.1) / 2.0 + d * d * (a.2 - b.2) / 12.0) / (1.0 - g)
        };
        if len < 2 {
            return out;
        }
        // series part on [0, rho_0]
        let (r0, x0, z0) = self.origin_steps[0];
        let rho0 = r0.powf(1.0 - g);
        let c = series_coefficient(tau, q, g);
        let mut acc = tau.powf(-g) * (rho0 + g * c * rho0 * rho0 / (2.0 * tau * (2.0 - g))) / (1.0 - g);
        let mut prev = point(r0, x0, z0);
        for &(r, x, z) in &self.origin_steps[1..] {
            let cur = point(r, x, z);
            acc += cell(prev, cur);
            prev = cur;
        }
        out[1] = acc;
        for j in 2..len {
            let cur = point(self.xi.nodes[j], self.xi.values[j], self.z[j]);
            out[j] = out[j - 1] + cell(prev, cur);
            prev = cur;
        }
        out
    }

    /// sup over nodes r >= h of |z + int_0^r Xi^{-gamma} - tau^{q-1}| / tau^{q-1}.
    pub fn conservation_residual(&self) -> f64 {
        let target = self.tau.powf(self.q - 1.0);
        let q_int = self.load_integral();
        (1..self.z.len()).fold(0.0f64, |m, j| m.max((self.z[j] + q_int[j] - target).abs() / target))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_columns(
            path,
            &["r", "xi", "xi_prime"],
            &[&self.xi.nodes, &self.xi.values, &self.xi_prime.values],
        )
    }
}

/// Integrates past the blow-down radius and returns the truncated profile with about n nodes.
pub fn profile_to_blowdown(tau: f64, q: f64, gamma: f64, n: usize) -> Result<BarrierProfile> {
    let mut r_max = 1.0;
    let mut estimate = None;
    for _ in 0..2000 {
        match solve_barrier(tau, q, gamma, r_max, 2000.min(n)) {
            Ok(_) => r_max *= 2.0,
            Err(Error::BlowDown(p)) => {
                estimate = p.r_tau;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut est = estimate.ok_or_else(|| Error::SearchExhausted {
        what: "barrier blow-down radius".into(),
        steps: 2000,
    })?;
    for _ in 0..200 {
        match solve_barrier(tau, q, gamma, 1.02 * est, n) {
            Err(Error::BlowDown(p)) => {
                if p.xi.nodes.len() >= n / 2 {
                    return Ok(*p);
                }
                est = p.r_tau.unwrap_or(est);
            }
            Ok(_) => est *= 1.02,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SearchExhausted {
        what: "barrier blow-down radius".into(),
        steps: 200,
    })
}

/// Exponents (a, b) in Xi_{tau2}(r) = s^a Xi_{tau1}(s^b r), s = tau2 / tau1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPair {
    pub a: f64,
    pub b: f64,
    /// sup |Xi_{tau2}(r) - s^a Xi_{tau1}(s^b r)| / sup Xi_{tau2} over the common range.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub tau1: f64,
    pub tau2: f64,
    pub q: f64,
    pub gamma: f64,
    /// Least-squares fit; absent when tau1 = tau2.
    pub fitted: Option<ExponentPair>,
    /// a = q/(1-gamma), b = -(q-1+gamma)/(1-gamma).
    pub derived: ExponentPair,
    /// a = q/(gamma-1), b = -q/(q+gamma-1).
    pub stated: ExponentPair,
    pub r_tau1: f64,
    pub r_tau2: f64,
    pub r_tau_ratio: f64,
    pub derived_ratio: f64,
    pub stated_ratio: f64,
}

fn identity_residual(p1: &BarrierProfile, p2: &BarrierProfile, s: f64, a: f64, b: f64) -> f64 {
    if s == 1.0 {
        return p1.xi.sup_distance(&p2.xi) / p2.xi.sup_norm();
    }
    let scale = p2.xi.sup_norm();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (r, v) in p2.xi.nodes.iter().zip(&p2.xi.values) {
        if let Some((x, _)) = p1.eval(s.powf(b) * r) {
            worst = worst.max((v - s.powf(a) * x).abs());
            count += 1;
        }
    }
    if count < 2 {
        f64::INFINITY
    } else {
        worst / scale
    }
}

/// Variance of ln Xi_{tau2}(r) - ln Xi_{tau1}(s^b r) over the interior of the common range, and its mean.
fn log_gap_stats(p1: &BarrierProfile, p2: &BarrierProfile, s: f64, b: f64) -> (f64, f64) {
    let r2 = p2.range();
    let mut vals = Vec::new();
    for (r, v) in p2.xi.nodes.iter().zip(&p2.xi.values) {
        if *r < 0.05 * r2 || *r > 0.95 * r2 {
            continue;
        }
        let t = s.powf(b) * r;
        if t > 0.95 * p1.range() {
            continue;
        }
        if let Some((x, _)) = p1.eval(t) {
            vals.push(v.ln() - x.ln());
        }
    }
    if vals.len() < 10 {
        return (f64::INFINITY, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / vals.len() as f64;
    (var, mean)
}

pub fn check_scaling(tau1: f64, tau2: f64, q: f64, gamma: f64) -> Result<ScalingReport> {
    let n = 10_000;
    let p1 = profile_to_blowdown(tau1, q, gamma, n)?;
    let p2 = if tau2 == tau1 {
        p1.clone()
    } else {
        profile_to_blowdown(tau2, q, gamma, n)?
    };
    let s = tau2 / tau1;
    let derived_ab = (q / (1.0 - gamma), -(q - 1.0 + gamma) / (1.0 - gamma));
    let stated_ab = (q / (gamma - 1.0), -q / (q + gamma - 1.0));
    let pair = |(a, b): (f64, f64)| ExponentPair {
        a,
        b,
        residual: identity_residual(&p1, &p2, s, a, b),
    };
    let (r1, r2) = (p1.r_tau.unwrap_or(f64::NAN), p2.r_tau.unwrap_or(f64::NAN));
    let fitted = if s == 1.0 {
        None
    } else {
        let ls = s.ln();
        let b0 = -(r2 / r1).ln() / ls;
        let (b, _) = golden(&|b| log_gap_stats(&p1, &p2, s, b).0, b0 - 0.5, b0 + 0.5);
        let (_, mean) = log_gap_stats(&p1, &p2, s, b);
        Some(pair((mean / ls, b)))
    };
    Ok(ScalingReport {
        tau1,
        tau2,
        q,
        gamma,
        fitted,
        derived: pair(derived_ab),
        stated: pair(stated_ab),
        r_tau1: r1,
        r_tau2: r2,
        r_tau_ratio: r2 / r1,
        derived_ratio: s.powf(-derived_ab.1),
        stated_ratio: s.powf(stated_ab.1),
    })
}

/// Checks that (Xi')^{p-1} is nonincreasing, by central differences at interior nodes.
pub fn smallest_sign_certificate(profile: &BarrierProfile, p: f64) -> Result<CertificateReport> {
    if !(p > 1.0 && p < profile.q) {
        return Err(Error::InvalidParams(format!(
            "sign certificate needs 1 < p < q = {}, got p = {p}",
            profile.q
        )));
    }
    let d = &profile.xi_prime.values;
    let nodes = &profile.xi.nodes;
    let sides = (1..d.len().saturating_sub(1)).map(|j| {
        (nodes[j], d[j - 1].powf(p - 1.0), d[j + 1].powf(p - 1.0))
    });
    Ok(CertificateReport::from_sides(CertificateKind::SignCondition, 1e-12, false, sides))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierCertOptions {
    pub m_lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Collar width.
    pub nu: f64,
    /// Intervals of the ball grid.
    pub nodes: usize,
}

/// Smallest M with M^{q-1+gamma} beta >= lambda.
pub fn smallest_m_lambda(lambda: f64, beta: f64, q: f64, gamma: f64) -> f64 {
    (lambda / beta).powf(1.0 / (q - 1.0 + gamma))
}

/// (1/Xi^gamma(nu), (N-1)/(2(R-nu)) tau^{p-1}(beta tau^{q-p} + alpha)); the collar is admissible when lhs >= rhs.
pub fn collar_condition(
    profile: &BarrierProfile,
    params: &Params,
    alpha: f64,
    beta: f64,
    nu: f64,
) -> Result<(f64, f64)> {
    if nu > profile.range() {
        return Err(Error::ProfileTooShort {
            available: profile.range(),
            needed: nu,
        });
    }
    let (xi, _) = profile.eval(nu).expect("nu inside profile range");
    let lhs = xi.powf(-profile.gamma);
    let t = profile.tau;
    let rhs = if nu >= params.radius {
        f64::INFINITY
    } else {
        0.5 * (params.n() - 1.0) / (params.radius - nu)
            * t.powf(params.p - 1.0)
            * (beta * t.powf(params.q - params.p) + alpha)
    };
    Ok((lhs, rhs))
}

/// Certifies -L^{alpha,beta} w >= lambda / w^gamma for w = M Xi(R - r) on the nodes with 0 < R - r <= nu.
pub fn certify_barrier_supersolution(
    profile: &BarrierProfile,
    params: &Params,
    opts: &BarrierCertOptions,
) -> Result<CertificateReport> {
    if (profile.q - params.q).abs() > 1e-14 || (profile.gamma - params.gamma).abs() > 1e-14 {
        return Err(Error::Configuration(format!(
            "barrier computed for q = {}, gamma = {} but problem has q = {}, gamma = {}",
            profile.q, profile.gamma, params.q, params.gamma
        )));
    }
    if !(opts.m_lambda > 0.0 && opts.nu > 0.0 && opts.nodes >= 2) {
        return Err(Error::InvalidParams("M_lambda, nu and nodes must be positive".into()));
    }
    let rad = params.radius;
    let h = rad / opts.nodes as f64;
    let (lhs, rhs) = collar_condition(profile, params, opts.alpha, opts.beta, opts.nu.min(profile.range()))?;
    if opts.nu >= rad || lhs < rhs {
        return Err(Error::CollarTooWide {
            nu: opts.nu,
            lhs,
            rhs,
        });
    }
    if profile.range() < opts.nu + h {
        return Err(Error::ProfileTooShort {
            available: profile.range(),
            needed: opts.nu + h,
        });
    }
    let op = DiscreteOperator::new(params, opts.nodes, opts.alpha, opts.beta);
    let top = profile.range();
    let w: Vec<f64> = op
        .nodes()
        .iter()
        .map(|&r| {
            let d = (rad - r).max(0.0).min(top);
            opts.m_lambda * profile.eval(d).map(|x| x.0).unwrap_or(0.0)
        })
        .collect();
    let res = op.apply_values(&w);
    let nodes = op.nodes();
    let sides: Vec<(f64, f64, f64)> = (0..opts.nodes)
        .filter(|&i| {
            let d = rad - nodes[i];
            d > 0.0 && d <= opts.nu * (1.0 + 1e-12)
        })
        .map(|i| (nodes[i], res[i], params.lambda * w[i].powf(-params.gamma)))
        .collect();
    Ok(CertificateReport::from_sides(CertificateKind::Supersolution, 1e-10, false, sides))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Blow-down radius from the first integral: (Xi_max / tau) int_0^1 (1 - u^{1-gamma})^{-1/q} du.
    fn blowdown_oracle(tau: f64, q: f64, gamma: f64) -> f64 {
        let xmax = (tau.powf(q) * (q - 1.0) * (1.0 - gamma) / q).powf(1.0 / (1.0 - gamma));
        // 1 - u = s^q removes the endpoint singularity
        let cells = 4000;
        let (x, w) = gauss5();
        let mut sum = 0.0;
        for k in 0..cells {
            for (xi, wi) in x.iter().zip(&w) {
                let s = (k as f64 + xi) / cells as f64;
                let u: f64 = 1.0 - s.powf(q);
                let base = 1.0 - u.powf(1.0 - gamma);
                let integrand = if s == 0.0 { 0.0 } else { q * s.powf(q - 1.0) * base.powf(-1.0 / q) };
                sum += wi * integrand / cells as f64;
            }
        }
        xmax / tau * sum
    }

    fn gauss5() -> ([f64; 5], [f64; 5]) {
        (
            [0.046910077030668, 0.230765344947158, 0.5, 0.769234655052842, 0.953089922969332],
            [0.118463442528095, 0.239314335249683, 0.284444444444444, 0.239314335249683, 0.118463442528095],
        )
    }

    #[test]
    fn initial_conditions_exact() {
        let p = solve_barrier(1.3, 3.0, 0.5, 0.05, 1000).unwrap();
        assert_eq!(p.xi.values[0], 0.0);
        assert_eq!(p.xi_prime.values[0], 1.3);
        assert_eq!(p.eval(0.0), Some((0.0, 1.3)));
    }

    #[test]
    fn conservation_holds() {
        for &(tau, q, g) in &[(1.0, 2.0, 0.5), (1.0, 3.0, 0.5), (2.0, 3.0, 0.3), (0.5, 1.5, 0.8)] {
            let p = profile_to_blowdown(tau, q, g, 10_000).unwrap();
            assert!(p.conservation_residual() <= 1e-6, "tau={tau} q={q} g={g}: {}", p.conservation_residual());
        }
    }

    #[test]
    fn energy_identity_and_blowdown_radius() {
        let (tau, q, g) = (1.0, 3.0, 0.5);
        let p = profile_to_blowdown(tau, q, g, 10_000).unwrap();
        let e0 = (q - 1.0) / q * tau.powf(q);
        for j in 0..p.xi.values.len() {
            let e = (q - 1.0) / q * p.xi_prime.values[j].powf(q)
                + p.xi.values[j].powf(1.0 - g) / (1.0 - g);
            assert!((e - e0).abs() <= 1e-7 * e0, "node {j}: {e} vs {e0}");
        }
        assert_relative_eq!(p.r_tau.unwrap(), blowdown_oracle(tau, q, g), max_relative = 1e-4);
    }

    #[test]
    fn small_r_behaviour_converges() {
        // Y = Xi/r approaches the two-term series; halving the step should not move it
        let (tau, q, g) = (1.0, 2.0, 0.5);
        let a = solve_barrier(tau, q, g, 0.01, 500).unwrap();
        let b = solve_barrier(tau, q, g, 0.01, 1000).unwrap();
        let r = 0.001;
        let (xa, _) = a.eval(r).unwrap();
        let (xb, _) = b.eval(r).unwrap();
        assert!((xa - xb).abs() <= 1e-9 * xb);
        let (series, _) = series_start(tau, q, g, r);
        assert!((xb - series).abs() / xb < 1e-2);
    }

    #[test]
    fn concavity_bounds() {
        let p = profile_to_blowdown(2.0, 3.0, 0.5, 4000).unwrap();
        for (j, r) in p.xi.nodes.iter().enumerate() {
            assert!(p.xi.values[j] <= 2.0 * r * (1.0 + 1e-14));
            assert!(p.xi_prime.values[j] <= 2.0);
        }
    }

    #[test]
    fn blowdown_truncates() {
        match solve_barrier(1.0, 3.0, 0.5, 1.0, 1000) {
            Err(Error::BlowDown(p)) => {
                let r = p.r_tau.unwrap();
                assert!(r < 1.0 && p.range() <= r);
                assert!(*p.z.last().unwrap() > 0.0);
            }
            other => panic!("expected blow-down, got {other:?}"),
        }
    }

    #[test]
    fn scaling_identity_for_equal_taus() {
        let rep = check_scaling(1.0, 1.0, 3.0, 0.5).unwrap();
        assert!(rep.fitted.is_none());
        assert_eq!(rep.derived.residual, 0.0);
        assert_eq!(rep.r_tau_ratio, 1.0);
    }

    #[test]
    fn scaling_fit_recovers_derived_exponents() {
        for tau2 in [0.5, 2.0] {
            let rep = check_scaling(1.0, tau2, 3.0, 0.5).unwrap();
            let fit = rep.fitted.unwrap();
            assert!((fit.a - 6.0).abs() < 1e-3 && (fit.b + 5.0).abs() < 1e-3, "{fit:?}");
            assert!(rep.derived.residual < 1e-6, "{}", rep.derived.residual);
            assert_relative_eq!(rep.r_tau_ratio, rep.derived_ratio, max_relative = 1e-4);
            assert!(rep.stated.residual > 1e-2);
        }
    }

    #[test]
    fn sign_certificate_passes() {
        let prof = profile_to_blowdown(1.0, 3.0, 0.5, 10_000).unwrap();
        for p in [1.5, 2.5] {
            let rep = smallest_sign_certificate(&prof, p).unwrap();
            assert!(rep.pass && rep.min_margin > 0.0);
        }
        assert!(smallest_sign_certificate(&prof, 3.0).is_err());
    }

    fn cert_setup(lambda: f64) -> (BarrierProfile, Params) {
        let params = Params::new(2.0, 3.0, 0.5, 2, 1.0, lambda).unwrap();
        (profile_to_blowdown(1.0, 3.0, 0.5, 10_000).unwrap(), params)
    }

    #[test]
    fn barrier_certificate_with_smallest_m() {
        let (prof, params) = cert_setup(1.0);
        let opts = BarrierCertOptions {
            m_lambda: smallest_m_lambda(1.0, 1.0, 3.0, 0.5),
            alpha: 1.0,
            beta: 1.0,
            nu: 0.05,
            nodes: 2048,
        };
        let rep = certify_barrier_supersolution(&prof, &params, &opts).unwrap();
        assert!(rep.pass, "min margin {}", rep.min_margin);
        assert!(rep.margins.len() > 50);
    }

    #[test]
    fn barrier_certificate_zero_lambda() {
        let (prof, params) = cert_setup(0.0);
        for m in [1.0, 7.0] {
            let opts = BarrierCertOptions {
                m_lambda: m,
                alpha: 1.0,
                beta: 1.0,
                nu: 0.05,
                nodes: 1024,
            };
            assert!(certify_barrier_supersolution(&prof, &params, &opts).unwrap().pass);
        }
    }

    #[test]
    fn collar_errors() {
        let (prof, params) = cert_setup(1.0);
        let mut opts = BarrierCertOptions {
            m_lambda: 1.0,
            alpha: 1.0,
            beta: 1.0,
            nu: 1.0,
            nodes: 256,
        };
        assert!(matches!(
            certify_barrier_supersolution(&prof, &params, &opts),
            Err(Error::CollarTooWide { .. }) | Err(Error::ProfileTooShort { .. })
        ));
        let whole = solve_barrier(2.0, 3.0, 0.5, 1.0, 2000).unwrap();
        opts.nu = 0.999;
        assert!(matches!(
            certify_barrier_supersolution(&whole, &params, &opts),
            Err(Error::CollarTooWide { .. })
        ));
        opts.nu = 0.5;
        assert!(matches!(
            certify_barrier_supersolution(&prof, &params, &opts),
            Err(Error::ProfileTooShort { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn profile_monotone(tau in 0.3f64..3.0, q in 1.5f64..4.0, g in 0.1f64..0.9) {
            let p = profile_to_blowdown(tau, q, g, 2000).unwrap();
            for w in p.xi.values.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
            for w in p.z.windows(2) {
                prop_assert!(w[1] < w[0]);
            }
        }
    }
}
