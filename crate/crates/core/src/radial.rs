//! Cutoff profile v = theta * Upsilon and the radial solution Phi by nested quadrature.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{uniform_nodes, GridFunction};
use crate::io;
use crate::nonlinearity::HFunction;
use crate::pq_core::{Params, PqFlux};
use crate::window::WindowReport;

/// Five-point Gauss-Legendre nodes and weights on [0, 1].
const GL_X: [f64; 5] = [
    0.046_910_077_030_668_004,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_6,
    0.953_089_922_969_332,
];
const GL_W: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_45,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

/// Upsilon(r): 1 on [0, eps], 1 - (1 - ((R-r)/(R-eps))^kappa)^chi on (eps, R].
pub fn cutoff(r: f64, radius: f64, eps: f64, chi: f64, kappa: f64) -> f64 {
    if r <= eps {
        return 1.0;
    }
    let x = ((radius - r) / (radius - eps)).clamp(0.0, 1.0);
    1.0 - (1.0 - x.powf(kappa)).powf(chi)
}

pub fn cutoff_derivative(r: f64, radius: f64, eps: f64, chi: f64, kappa: f64) -> f64 {
    if r <= eps {
        return 0.0;
    }
    let x = ((radius - r) / (radius - eps)).clamp(0.0, 1.0);
    let inner = 1.0 - x.powf(kappa);
    let a = if chi == 1.0 { 1.0 } else { inner.powf(chi - 1.0) };
    let b = if kappa == 1.0 { 1.0 } else { x.powf(kappa - 1.0) };
    -chi * kappa * a * b / (radius - eps)
}

/// Solves -(r^{N-1} F(Phi'))' = r^{N-1} s(r), Phi'(0) = 0, Phi(R) = 0 for nodal s.
///
/// The inner integral uses the exact r^{N-1} weight against piecewise linear s; the outer
/// integral applies Gauss-Legendre to F^{-1} of the piecewise linear inner integral, with
/// r = h t^2 in the first cell.
pub fn nested_quadrature(
    flux: &PqFlux,
    dim: usize,
    radius: f64,
    source: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = source.len() - 1;
    let h = radius / n as f64;
    let k = dim as i32 - 1;
    let r: Vec<f64> = uniform_nodes(radius, n);
    let mut inner = vec![0.0; n + 1];
    let mut acc = 0.0;
    for i in 0..n {
        let (a, b) = (r[i], r[i + 1]);
        let m_k = (b.powi(k + 1) - a.powi(k + 1)) / (k + 1) as f64;
        let m_k1 = (b.powi(k + 2) - a.powi(k + 2)) / (k + 2) as f64;
        acc += (source[i] * (b * m_k - m_k1) + source[i + 1] * (m_k1 - a * m_k)) / h;
        inner[i + 1] = acc / b.powi(k);
    }
    let mut slope = vec![0.0; n + 1];
    for i in 1..=n {
        slope[i] = -flux.inverse(inner[i])?;
    }
    let mut phi = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let (ia, ib) = (inner[i], inner[i + 1]);
        let mut cell = 0.0;
        if i == 0 {
            for (x, w) in GL_X.iter().zip(GL_W) {
                let s = x * x;
                cell += w * 2.0 * x * flux.inverse(ia + (ib - ia) * s)?;
            }
        } else {
            for (x, w) in GL_X.iter().zip(GL_W) {
                cell += w * flux.inverse(ia + (ib - ia) * x)?;
            }
        }
        phi[i] = phi[i + 1] + h * cell;
    }
    Ok((phi, slope))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub phi: GridFunction,
    pub phi_prime: GridFunction,
    pub v: GridFunction,
    pub v_prime: GridFunction,
}

impl RadialProfile {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_columns(
            path,
            &["r", "phi", "phi_prime", "v", "v_prime"],
            &[
                &self.phi.nodes,
                &self.phi.values,
                &self.phi_prime.values,
                &self.v.values,
                &self.v_prime.values,
            ],
        )
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let (headers, cols) = io::read_columns(path)?;
        if headers != ["r", "phi", "phi_prime", "v", "v_prime"] {
            return Err(Error::Schema(format!(
                "{}: expected columns r,phi,phi_prime,v,v_prime",
                path.display()
            )));
        }
        let g = |j: usize| GridFunction::new(cols[0].clone(), cols[j].clone());
        Ok(RadialProfile {
            phi: g(1)?,
            phi_prime: g(2)?,
            v: g(3)?,
            v_prime: g(4)?,
        })
    }
}

/// Comparison profile v = theta Upsilon and its derivative on n intervals.
pub fn comparison_profile(params: &Params, window: &WindowReport, n: usize) -> (GridFunction, GridFunction) {
    let (rad, eps, chi, kappa, theta) = (
        params.radius,
        window.epsilon,
        window.chi,
        window.kappa,
        window.theta,
    );
    let v = GridFunction::from_fn(rad, n, |r| theta * cutoff(r, rad, eps, chi, kappa));
    let dv = GridFunction::from_fn(rad, n, |r| {
        theta * cutoff_derivative(r, rad, eps, chi, kappa)
    });
    (v, dv)
}

/// Radial solution driven by lambda h(v); errors when lambda is outside the window.
pub fn solve_radial(
    params: &Params,
    h: &HFunction,
    window: &WindowReport,
    n: usize,
) -> Result<RadialProfile> {
    if !window.contains(params.lambda) {
        return Err(Error::WindowViolation {
            lambda: params.lambda,
            lower: window.lambda_star,
            upper: window.lambda_upper,
        });
    }
    solve_radial_unchecked(params, window, n, |t| h.eval(t))
}

/// Radial solution for an arbitrary load `load(v)`, without the window check.
pub fn solve_radial_unchecked(
    params: &Params,
    window: &WindowReport,
    n: usize,
    load: impl Fn(f64) -> f64,
) -> Result<RadialProfile> {
    let (v, v_prime) = comparison_profile(params, window, n);
    let source: Vec<f64> = v.values.iter().map(|&t| params.lambda * load(t)).collect();
    let (phi, slope) = nested_quadrature(&params.flux(), params.dim, params.radius, &source)?;
    Ok(RadialProfile {
        phi: v.with_values(phi),
        phi_prime: v.with_values(slope),
        v,
        v_prime,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimCheck {
    /// Worst signed slack; negative beyond tolerance means failure.
    pub worst: f64,
    pub at_r: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimReport {
    pub tolerance: f64,
    /// min (Phi - v)
    pub lower_envelope: ClaimCheck,
    /// theta2 - max Phi
    pub sup_bound: ClaimCheck,
    /// min over [eps, R] of (v' - Phi')
    pub slope: ClaimCheck,
    pub pass: bool,
}

fn worst_of(nodes: &[f64], slack: impl Iterator<Item = (usize, f64)>, tol: f64) -> ClaimCheck {
    let (i, w) = slack
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::INFINITY));
    ClaimCheck {
        worst: w,
        at_r: nodes[i],
        pass: w >= -tol,
    }
}

/// Checks Phi >= v, max Phi <= theta2 and Phi' <= v' on [eps, R].
pub fn certify_radial_claim(profile: &RadialProfile, window: &WindowReport, tolerance: f64) -> ClaimReport {
    let nodes = &profile.phi.nodes;
    let phi = &profile.phi.values;
    let v = &profile.v.values;
    let lower = worst_of(nodes, (0..phi.len()).map(|i| (i, phi[i] - v[i])), tolerance);
    let sup = worst_of(
        nodes,
        (0..phi.len()).map(|i| (i, window.theta2 - phi[i])),
        tolerance,
    );
    let dphi = &profile.phi_prime.values;
    let dv = &profile.v_prime.values;
    let slope = worst_of(
        nodes,
        (0..phi.len())
            .filter(|&i| nodes[i] >= window.epsilon * (1.0 - 1e-12))
            .map(|i| (i, dv[i] - dphi[i])),
        tolerance,
    );
    let pass = lower.pass && sup.pass && slope.pass;
    ClaimReport {
        tolerance,
        lower_envelope: lower,
        sup_bound: sup,
        slope,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn window_stub(theta: f64, theta2: f64, eps: f64) -> WindowReport {
        WindowReport {
            capacity: 8.0,
            f_theta2: theta2,
            epsilon: eps,
            theta,
            theta1: 0.5 * theta,
            theta2,
            h_theta: 1.0,
            lambda_star: 0.0,
            lambda_upper: f64::INFINITY,
            nonempty: true,
            chi: 1.01,
            kappa: 1.01,
            cutoff_bound_holds: true,
        }
    }

    #[test]
    fn cutoff_values() {
        assert_eq!(cutoff(0.0, 1.0, 0.5, 1.01, 1.01), 1.0);
        assert_eq!(cutoff(1.0, 1.0, 0.5, 1.01, 1.01), 0.0);
        assert_relative_eq!(cutoff(0.75, 1.0, 0.5, 1.0, 1.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cutoff_derivative_matches_difference() {
        for &r in &[0.55, 0.7, 0.9, 0.99] {
            let d = 1e-6;
            let fd = (cutoff(r + d, 1.0, 0.5, 1.01, 1.01) - cutoff(r - d, 1.0, 0.5, 1.01, 1.01)) / (2.0 * d);
            assert_relative_eq!(cutoff_derivative(r, 1.0, 0.5, 1.01, 1.01), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn zero_load_gives_zero() {
        let p = Params::new(2.0, 3.0, 0.5, 2, 1.0, 0.0).unwrap();
        let prof = solve_radial_unchecked(&p, &window_stub(2.0, 10.0, 0.5), 64, |_| 1.0).unwrap();
        assert!(prof.phi.values.iter().all(|&x| x == 0.0));
    }

    fn constant_load_oracle(lambda: f64, c: f64, n_dim: f64, r: f64) -> f64 {
        // integral of (-1 + sqrt(1 + 4 a s)) / 2 from r to 1, a = lambda c / N
        let a = lambda * c / n_dim;
        let anti = |s: f64| -0.5 * s + (1.0 + 4.0 * a * s).powf(1.5) / (12.0 * a);
        anti(1.0) - anti(r)
    }

    #[test]
    fn constant_load_matches_closed_form() {
        let p = Params::new(2.0, 3.0, 0.5, 2, 1.0, 3.0).unwrap();
        let prof = solve_radial_unchecked(&p, &window_stub(2.0, 10.0, 0.5), 4096, |_| 1.7).unwrap();
        for (r, phi) in prof.phi.nodes.iter().zip(&prof.phi.values) {
            assert!((phi - constant_load_oracle(3.0, 1.7, 2.0, *r)).abs() <= 1e-6);
        }
        assert_eq!(prof.phi_prime.values[0], 0.0);
        assert_eq!(*prof.phi.values.last().unwrap(), 0.0);
    }

    #[test]
    fn second_order_convergence() {
        let p = Params::new(1.5, 3.0, 0.5, 3, 1.0, 2.0).unwrap();
        let w = window_stub(2.0, 10.0, 0.6);
        let load = |t: f64| 1.0 + t * t;
        let sols: Vec<GridFunction> = [256, 512, 1024]
            .iter()
            .map(|&n| solve_radial_unchecked(&p, &w, n, load).unwrap().phi)
            .collect();
        let d1 = sols[0]
            .values
            .iter()
            .zip(sols[1].coarsen(2))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let d2 = sols[1]
            .values
            .iter()
            .zip(sols[2].coarsen(2))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!((d1 / d2).log2() > 1.8, "observed order {}", (d1 / d2).log2());
    }

    proptest! {
        #[test]
        fn phi_nonincreasing_and_v_slope_bounded(lambda in 0.01f64..100.0, n in 16usize..200) {
            let p = Params::new(2.0, 3.0, 0.5, 2, 1.0, lambda).unwrap();
            let w = window_stub(3.0, 10.0, 0.5);
            let prof = solve_radial_unchecked(&p, &w, n, |t| 1.0 + t).unwrap();
            prop_assert!(prof.phi_prime.values.iter().all(|&d| d <= 0.0));
            prop_assert!(prof.phi.values.windows(2).all(|x| x[1] <= x[0]));
            let bound = 3.0 * 1.01 * 1.01 / 0.5;
            prop_assert!(prof.v_prime.values.iter().all(|&d| d.abs() <= bound * (1.0 + 1e-12)));
        }

        #[test]
        fn cutoff_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(cutoff(hi, 1.0, 0.4, 1.01, 1.01) <= cutoff(lo, 1.0, 0.4, 1.01, 1.01));
        }
    }
}
