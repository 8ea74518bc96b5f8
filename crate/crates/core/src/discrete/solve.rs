//! Newton and lagged-Picard solvers for -L u + c(u) = s with Dirichlet data at r = R.

use crate::discrete::operator::DiscreteOperator;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::radial::nested_quadrature;

const NEWTON_MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 50;
const STEP_TOL: f64 = 1e-13;
const FLOOR_FRACTION: f64 = 0.1;
const PICARD_MAX_ITER: usize = 500;
const PICARD_RELAX: f64 = 0.5;

/// Pointwise term c(u) added to -L u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pointwise {
    None,
    /// c(u) = shift u - load u^{-gamma}
    Singular { load: f64, shift: f64 },
    /// c(u) = theta L_{p,q}(u)
    Regularized { theta: f64 },
}

impl Pointwise {
    fn is_singular(&self) -> bool {
        matches!(self, Pointwise::Singular { load, .. } if *load > 0.0)
    }
}

/// Which iteration produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Newton,
    Picard,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub allow_newton: bool,
    pub allow_picard: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            allow_newton: true,
            allow_picard: true,
        }
    }
}

/// Problem -L^{alpha,beta} u + c(u) = source on the interior nodes.
pub struct Problem<'a> {
    pub op: &'a DiscreteOperator,
    pub term: Pointwise,
    pub source: &'a [f64],
}

impl Problem<'_> {
    fn gamma(&self) -> f64 {
        self.op.params.gamma
    }

    fn c(&self, u: f64) -> f64 {
        match self.term {
            Pointwise::None => 0.0,
            Pointwise::Singular { load, shift } => shift * u - load * u.powf(-self.gamma()),
            Pointwise::Regularized { theta } => theta * self.op.params.flux().eval(u),
        }
    }

    fn dc(&self, u: f64) -> f64 {
        match self.term {
            Pointwise::None => 0.0,
            Pointwise::Singular { load, shift } => {
                shift + self.gamma() * load * u.powf(-self.gamma() - 1.0)
            }
            Pointwise::Regularized { theta } => {
                if theta == 0.0 {
                    0.0
                } else {
                    theta * self.op.params.flux().derivative(u.abs().max(1e-200))
                }
            }
        }
    }

    /// Integrated residual per interior node.
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let (flux, _) = self.op.fluxes(u, false);
        (0..self.op.n)
            .map(|i| self.op.balance(&flux, i) + self.op.volume(i) * (self.c(u[i]) - self.source[i]))
            .collect()
    }

    fn merit(&self, u: &[f64]) -> f64 {
        self.residual(u).iter().map(|r| r * r).sum()
    }

    fn newton_step(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let n = self.op.n;
        let (flux, k) = self.op.fluxes(u, true);
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut merit = 0.0;
        for i in 0..n {
            let left = if i == 0 { 0.0 } else { k[i - 1] };
            diag[i] = k[i] + left + self.op.volume(i) * self.dc(u[i]);
            let r = self.op.balance(&flux, i) + self.op.volume(i) * (self.c(u[i]) - self.source[i]);
            rhs[i] = -r;
            merit += r * r;
        }
        // symmetric tridiagonal with off-diagonal -k[i] between i and i+1
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut m = diag[0];
        c[0] = -k[0] / m;
        d[0] = rhs[0] / m;
        for i in 1..n {
            let off = -k[i - 1];
            m = diag[i] - off * c[i - 1];
            c[i] = if i + 1 < n { -k[i] / m } else { 0.0 };
            d[i] = (rhs[i] - off * d[i - 1]) / m;
        }
        let mut du = vec![0.0; n + 1];
        du[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            du[i] = d[i] - c[i] * du[i + 1];
        }
        (du, merit)
    }

    fn newton(&self, guess: &[f64]) -> Result<Vec<f64>> {
        let n = self.op.n;
        let positive = self.term.is_singular();
        let mut u = guess.to_vec();
        u[n] = 0.0;
        if positive && u[..n].iter().any(|&x| !(x > 0.0)) {
            return Err(Error::PositivityLoss {
                node: u[..n].iter().position(|&x| !(x > 0.0)).unwrap(),
            });
        }
        let mut blocked = 0;
        for _ in 0..NEWTON_MAX_ITER {
            let (du, merit) = self.newton_step(&u);
            if merit == 0.0 {
                return Ok(u);
            }
            if du.iter().any(|x| !x.is_finite()) {
                break;
            }
            let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let step = du.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if step <= STEP_TOL * scale || step == 0.0 {
                for i in 0..n {
                    u[i] += du[i];
                }
                if positive && u[..n].iter().any(|&x| !(x > 0.0)) {
                    break;
                }
                return Ok(u);
            }
            let mut t: f64 = 1.0;
            if positive {
                for i in 0..n {
                    if du[i] < 0.0 {
                        t = t.min(-(1.0 - FLOOR_FRACTION) * u[i] / du[i]);
                    }
                }
                blocked = if t < 1e-12 { blocked + 1 } else { 0 };
                if blocked >= 5 {
                    return Err(Error::PositivityLoss {
                        node: (0..n)
                            .min_by(|&a, &b| u[a].total_cmp(&u[b]))
                            .unwrap_or(0),
                    });
                }
            }
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + t * b).collect();
                if self.merit(&trial) < merit {
                    u = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                if step <= 1e-9 * scale {
                    return Ok(u);
                }
                break;
            }
        }
        Err(Error::ConvergenceFailure {
            what: "Newton iteration".into(),
            iterations: NEWTON_MAX_ITER,
        })
    }

    /// Lagged singular term with under-relaxation.
    fn picard(&self, guess: &[f64]) -> Result<Vec<f64>> {
        let n = self.op.n;
        let (load, shift) = match self.term {
            Pointwise::Singular { load, shift } => (load, shift),
            _ => {
                return Err(Error::ConvergenceFailure {
                    what: "Picard fallback applies to singular problems only".into(),
                    iterations: 0,
                })
            }
        };
        let gamma = self.gamma();
        let mut u = guess.to_vec();
        u[n] = 0.0;
        let inner_term = if shift > 0.0 {
            Pointwise::Singular { load: 0.0, shift }
        } else {
            Pointwise::None
        };
        for _ in 0..PICARD_MAX_ITER {
            if u[..n].iter().any(|&x| !(x > 0.0)) {
                return Err(Error::PositivityLoss {
                    node: u[..n].iter().position(|&x| !(x > 0.0)).unwrap(),
                });
            }
            let mut src = self.source.to_vec();
            for i in 0..n {
                src[i] += load * u[i].powf(-gamma);
            }
            let inner = Problem {
                op: self.op,
                term: inner_term,
                source: &src,
            };
            let w = inner.newton(&u)?;
            let mut change = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..n {
                let next = (1.0 - PICARD_RELAX) * u[i] + PICARD_RELAX * w[i];
                change = change.max((next - u[i]).abs());
                scale = scale.max(next.abs());
                u[i] = next;
            }
            if change <= 1e-12 * scale {
                return Ok(u);
            }
        }
        Err(Error::ConvergenceFailure {
            what: "Picard iteration".into(),
            iterations: PICARD_MAX_ITER,
        })
    }

    pub fn solve(&self, guess: &[f64], options: SolveOptions) -> Result<(Vec<f64>, Method)> {
        let mut last = None;
        if options.allow_newton {
            match self.newton(guess) {
                Ok(u) => return Ok((u, Method::Newton)),
                Err(e) => last = Some(e),
            }
        }
        if options.allow_picard && self.term.is_singular() {
            match self.picard(guess) {
                Ok(u) => return Ok((u, Method::Picard)),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or(Error::ConvergenceFailure {
            what: "no solver enabled".into(),
            iterations: 0,
        }))
    }
}

/// Continuum radial solution for a constant source, sampled on the operator grid.
pub fn constant_source_profile(op: &DiscreteOperator, source: f64) -> Result<Vec<f64>> {
    let coarse = 64;
    let (phi, _) = nested_quadrature(&op.flux(), op.params.dim, op.params.radius, &vec![source; coarse + 1])?;
    let h = op.params.radius / coarse as f64;
    Ok(op
        .nodes()
        .iter()
        .map(|&r| {
            let x = (r / h).min(coarse as f64);
            let j = (x.floor() as usize).min(coarse - 1);
            let s = x - j as f64;
            phi[j] * (1.0 - s) + phi[j + 1] * s
        })
        .collect())
}

/// Initial guess for -L u = load u^{-gamma}: the constant-source profile whose source matches its own peak.
pub fn singular_guess(op: &DiscreteOperator, load: f64) -> Result<Vec<f64>> {
    let gamma = op.params.gamma;
    let peak = |s: f64| -> Result<f64> {
        Ok(constant_source_profile(op, load * s.powf(-gamma))?[0])
    };
    let (mut lo, mut hi) = (1e-300f64, 1e300f64);
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        if peak(mid)? > mid {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
    }
    constant_source_profile(op, load * lo.powf(-gamma))
}

/// Solves -L w = source (nodal) by Newton from the constant-source profile.
pub fn solve_load(op: &DiscreteOperator, source: &[f64]) -> Result<GridFunction> {
    let mean = source[..op.n].iter().sum::<f64>() / op.n as f64;
    let guess = constant_source_profile(op, mean)?;
    let prob = Problem {
        op,
        term: Pointwise::None,
        source,
    };
    let (w, _) = prob.solve(&guess, SolveOptions::default())?;
    Ok(GridFunction {
        nodes: op.nodes(),
        values: w,
    })
}

/// -L w = eta.
pub fn solve_eta_problem(op: &DiscreteOperator, eta: f64) -> Result<GridFunction> {
    if !(eta > 0.0) {
        return Err(Error::DegenerateInput(format!("eta = {eta} must be positive")));
    }
    solve_load(op, &vec![eta; op.n + 1])
}

/// -L^{alpha,beta} u = load u^{-gamma}, u > 0.
pub fn solve_singular_constant(op: &DiscreteOperator, load: f64) -> Result<GridFunction> {
    solve_singular_constant_with(op, load, SolveOptions::default()).map(|(u, _)| u)
}

pub fn solve_singular_constant_with(
    op: &DiscreteOperator,
    load: f64,
    options: SolveOptions,
) -> Result<(GridFunction, Method)> {
    if !(load > 0.0) {
        return Err(Error::DegenerateInput(format!("load = {load} must be positive")));
    }
    let guess = singular_guess(op, load)?;
    let zero = vec![0.0; op.n + 1];
    let prob = Problem {
        op,
        term: Pointwise::Singular { load, shift: 0.0 },
        source: &zero,
    };
    let (u, m) = prob.solve(&guess, options)?;
    Ok((
        GridFunction {
            nodes: op.nodes(),
            values: u,
        },
        m,
    ))
}
