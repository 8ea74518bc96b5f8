//! Flux-form radial discretization of -div(alpha |u'|^{p-2} u' + beta |u'|^{q-2} u').

use crate::grid::{uniform_nodes, GridFunction};
use crate::pq_core::{Params, PqFlux};

/// Finite-volume operator on n intervals of [0, R]; node n carries the Dirichlet value 0.
///
/// Face gradients are the difference quotients scaled by the factor that is exact for a
/// local power law u' ~ r^a, with a the inverse elasticity of the flux at that gradient.
/// Away from the center the factor is 1 + O(j^{-2}); at the center it removes the
/// first-order error caused by the degenerate flux.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub params: Params,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    h: f64,
    face_weight: Vec<f64>,
    volume: Vec<f64>,
    half_log: Vec<f64>,
    full_log: Vec<f64>,
}

impl DiscreteOperator {
    pub fn new(params: &Params, n: usize, alpha: f64, beta: f64) -> Self {
        let h = params.radius / n as f64;
        let dim = params.dim as i32;
        let face_weight = (0..n)
            .map(|j| ((j as f64 + 0.5) * h).powi(dim - 1))
            .collect();
        let volume = (0..n)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
                let hi = (i as f64 + 0.5) * h;
                (hi.powi(dim) - lo.powi(dim)) / dim as f64
            })
            .collect();
        let half_log = (0..n)
            .map(|j| if j == 0 { 0.0 } else { (0.5 / j as f64).ln_1p() })
            .collect();
        let full_log = (0..n)
            .map(|j| if j == 0 { 0.0 } else { (1.0 / j as f64).ln_1p() })
            .collect();
        DiscreteOperator {
            params: *params,
            n,
            alpha,
            beta,
            h,
            face_weight,
            volume,
            half_log,
            full_log,
        }
    }

    pub fn unit(params: &Params, n: usize) -> Self {
        Self::new(params, n, 1.0, 1.0)
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        uniform_nodes(self.params.radius, self.n)
    }

    pub fn flux(&self) -> PqFlux {
        PqFlux::weighted(self.params.p, self.params.q, self.alpha, self.beta)
    }

    /// Control-volume measure (without the surface constant) of node i < n.
    pub fn volume(&self, i: usize) -> f64 {
        self.volume[i]
    }

    /// Inverse elasticity a(t) and t a'(t) of the flux at |gradient| t.
    fn elasticity(&self, t: f64) -> (f64, f64) {
        let (pm, qm) = (self.params.p - 1.0, self.params.q - 1.0);
        if self.beta == 0.0 {
            return (1.0 / pm, 0.0);
        }
        if self.alpha == 0.0 {
            return (1.0 / qm, 0.0);
        }
        let x = if t == 0.0 {
            0.0
        } else {
            (self.beta / self.alpha) * t.powf(qm - pm)
        };
        if !x.is_finite() {
            return (1.0 / qm, 0.0);
        }
        let den = pm + qm * x;
        let a = (1.0 + x) / den;
        let ta = -(qm - pm) * (qm - pm) * x / (den * den);
        (a, ta)
    }

    /// Gradient factor rho_j(a) and d ln rho / da.
    fn rho(&self, j: usize, a: f64) -> (f64, f64) {
        if j == 0 {
            let r = (a + 1.0) * (-a * std::f64::consts::LN_2).exp();
            return (r, 1.0 / (a + 1.0) - std::f64::consts::LN_2);
        }
        let (l1, l) = (self.half_log[j], self.full_log[j]);
        let e = ((a + 1.0) * l).exp_m1();
        let r = (a + 1.0) * (a * l1).exp() / (j as f64 * e);
        let dl = 1.0 / (a + 1.0) + l1 - l * (e + 1.0) / e;
        (r, dl)
    }

    /// Corrected face gradient and its derivative with respect to the difference quotient.
    fn face_gradient(&self, j: usize, d: f64) -> (f64, f64) {
        let (a, ta) = self.elasticity(d.abs());
        let (r, dl) = self.rho(j, a);
        (r * d, r * (1.0 + ta * dl))
    }

    /// Face fluxes r_{j+1/2}^{N-1} F(g_j) and their derivatives with respect to u_{j+1}.
    pub(crate) fn fluxes(&self, u: &[f64], with_jacobian: bool) -> (Vec<f64>, Vec<f64>) {
        let f = self.flux();
        let mut flux = vec![0.0; self.n];
        let mut stiff = if with_jacobian { vec![0.0; self.n] } else { Vec::new() };
        for j in 0..self.n {
            let d = (u[j + 1] - u[j]) / self.h;
            let (g, dg) = self.face_gradient(j, d);
            flux[j] = self.face_weight[j] * f.eval(g);
            if with_jacobian {
                let gabs = g.abs().max(1e-200);
                stiff[j] = self.face_weight[j] * f.derivative(gabs) * dg / self.h;
            }
        }
        (flux, stiff)
    }

    /// Integrated residual -(flux_i - flux_{i-1}) of node i < n.
    pub(crate) fn balance(&self, flux: &[f64], i: usize) -> f64 {
        let left = if i == 0 { 0.0 } else { flux[i - 1] };
        -(flux[i] - left)
    }

    /// Nodal values of -L^{alpha,beta} u; the boundary entry is 0.
    pub fn apply_values(&self, u: &[f64]) -> Vec<f64> {
        let (flux, _) = self.fluxes(u, false);
        let mut out = vec![0.0; self.n + 1];
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.balance(&flux, i) / self.volume[i];
        }
        out
    }

    /// Nodal values of -L u with a first-order bound on their floating-point error.
    ///
    /// The bound is 16 eps times the face flux magnitudes plus their sensitivity to
    /// relative perturbations of the nodal values, over the control volume.
    pub fn apply_with_rounding(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (flux, stiff) = self.fluxes(u, true);
        let face = |j: usize| flux[j].abs() + stiff[j].abs() * (u[j].abs() + u[j + 1].abs());
        let mut out = vec![0.0; self.n + 1];
        let mut bound = vec![0.0; self.n + 1];
        for i in 0..self.n {
            let left = if i == 0 { 0.0 } else { face(i - 1) };
            out[i] = self.balance(&flux, i) / self.volume[i];
            bound[i] = 16.0 * f64::EPSILON * (face(i) + left) / self.volume[i];
        }
        (out, bound)
    }

    pub fn apply(&self, u: &GridFunction) -> GridFunction {
        u.with_values(self.apply_values(&u.values))
    }
}
