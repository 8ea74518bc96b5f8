//! The map T-hat and monotone iteration between ordered sub/supersolutions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discrete::certify::equation_residual;
use crate::discrete::operator::DiscreteOperator;
use crate::discrete::solve::{singular_guess, Pointwise, Problem, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::nonlinearity::DerivedReactions;

pub const MAX_ITERATIONS: usize = 200;
const ABS_TOL_FRACTION: f64 = 1e-8;
const REL_TOL: f64 = 1e-10;
const MONOTONE_TOL: f64 = 1e-10;
const POLISH_TOL: f64 = 1e-14;

/// u -> w solving -L w - lambda f(0) w^{-gamma} + k w = f-hat(u) + k u.
pub struct ThatMap<'a> {
    pub op: &'a DiscreteOperator,
    pub reactions: &'a DerivedReactions,
    pub khat: f64,
}

impl<'a> ThatMap<'a> {
    /// Map with the monotonizing shift fitted to functions bounded by `t_max`.
    pub fn new(op: &'a DiscreteOperator, reactions: &'a DerivedReactions, t_max: f64) -> Self {
        ThatMap {
            op,
            reactions,
            khat: reactions.khat_on(t_max),
        }
    }

    pub fn apply(&self, u: &GridFunction, guess: Option<&[f64]>) -> Result<GridFunction> {
        let op = self.op;
        if u.values.len() != op.n + 1 {
            return Err(Error::GridMismatch(format!(
                "T-hat on {} intervals given {} values",
                op.n,
                u.values.len()
            )));
        }
        let load = self.reactions.params.lambda * self.reactions.f0();
        let source: Vec<f64> = u
            .values
            .iter()
            .map(|&t| {
                let t = t.max(0.0);
                self.reactions.fhat.eval(t) + self.khat * t
            })
            .collect();
        let initial;
        let guess = match guess {
            Some(g) if g[..op.n].iter().all(|&x| x > 0.0) => g,
            _ => {
                initial = if load > 0.0 {
                    singular_guess(op, load)?
                } else {
                    u.values.clone()
                };
                &initial
            }
        };
        let term = if load > 0.0 {
            Pointwise::Singular {
                load,
                shift: self.khat,
            }
        } else if self.khat > 0.0 {
            Pointwise::Singular {
                load: 0.0,
                shift: self.khat,
            }
        } else {
            Pointwise::None
        };
        let prob = Problem {
            op,
            term,
            source: &source,
        };
        let (w, _) = prob.solve(guess, SolveOptions::default())?;
        Ok(u.with_values(w))
    }
}

pub fn that_map(op: &DiscreteOperator, reactions: &DerivedReactions, u: &GridFunction, khat: f64) -> Result<GridFunction> {
    ThatMap { op, reactions, khat }.apply(u, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    FromLower,
    FromUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub start: Start,
    pub khat: f64,
    pub iterates: Vec<GridFunction>,
    /// sup |u^{k+1} - u^k|
    pub increments: Vec<f64>,
    /// Relative residual of the original equation per iterate.
    pub residuals: Vec<f64>,
    /// Whether each step moved in the expected direction, pointwise.
    pub monotone: Vec<bool>,
    pub converged: bool,
    /// The limit lies in [lower, upper] up to the monotone tolerance.
    pub within_bounds: bool,
}

impl IterationTrace {
    pub fn limit(&self) -> &GridFunction {
        self.iterates.last().expect("trace has at least the starting iterate")
    }

    pub fn all_monotone(&self) -> bool {
        self.monotone.iter().all(|&m| m)
    }

    pub fn iterations(&self) -> usize {
        self.increments.len()
    }
}

fn stepped_monotone(prev: &[f64], next: &[f64], start: Start) -> bool {
    prev.iter().zip(next).all(|(&a, &b)| {
        let slack = MONOTONE_TOL * a.abs().max(b.abs());
        match start {
            Start::FromLower => b >= a - slack,
            Start::FromUpper => b <= a + slack,
        }
    })
}

/// Past the tolerances, keep iterating until the increment reaches rounding level or stops shrinking.
fn converged(inc: f64, prev: f64, norm: f64, theta2: f64) -> bool {
    inc <= ABS_TOL_FRACTION * theta2 && inc <= REL_TOL * norm && (inc <= POLISH_TOL * norm || inc >= 0.5 * prev)
}

pub fn amann_iterate(
    op: &DiscreteOperator,
    reactions: &DerivedReactions,
    lower: &GridFunction,
    upper: &GridFunction,
    start: Start,
) -> Result<IterationTrace> {
    let map = ThatMap::new(op, reactions, upper.max());
    iterate_map(&map, lower, upper, start, MAX_ITERATIONS)
}

fn iterate_map(
    map: &ThatMap<'_>,
    lower: &GridFunction,
    upper: &GridFunction,
    start: Start,
    budget: usize,
) -> Result<IterationTrace> {
    let theta2 = map.reactions.theta2;
    let mut u = match start {
        Start::FromLower => lower.clone(),
        Start::FromUpper => upper.clone(),
    };
    let mut trace = IterationTrace {
        start,
        khat: map.khat,
        iterates: vec![u.clone()],
        increments: Vec::new(),
        residuals: vec![equation_residual(map.op, map.reactions, &u).unwrap_or(f64::NAN)],
        monotone: Vec::new(),
        converged: false,
        within_bounds: false,
    };
    for k in 0..budget {
        let next = map.apply(&u, Some(&u.values))?;
        let inc = next.sup_distance(&u);
        let mono = stepped_monotone(&u.values, &next.values, start);
        if !mono {
            log::warn!("monotone iteration step {k} ({start:?}) is not pointwise monotone");
        }
        trace.increments.push(inc);
        trace.monotone.push(mono);
        trace
            .residuals
            .push(equation_residual(map.op, map.reactions, &next).unwrap_or(f64::NAN));
        let norm = next.sup_norm();
        let prev = if k == 0 { f64::INFINITY } else { trace.increments[k - 1] };
        trace.iterates.push(next.clone());
        u = next;
        if converged(inc, prev, norm, theta2) {
            trace.converged = true;
            break;
        }
    }
    if !trace.converged {
        return Err(Error::IterationBudget {
            iterations: budget,
            last_increment: trace.increments.last().cloned().unwrap_or(f64::NAN),
        });
    }
    let lim = trace.limit();
    trace.within_bounds = stepped_monotone(&lower.values, &lim.values, Start::FromLower)
        && stepped_monotone(&upper.values, &lim.values, Start::FromUpper);
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThirdAttempt {
    pub seed: String,
    pub converged: bool,
    pub iterations: usize,
    pub distance_u1: f64,
    pub distance_u2: f64,
    /// Limit differs from both known solutions by more than the resolution threshold.
    pub distinct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThirdSearch {
    pub attempts: Vec<ThirdAttempt>,
    pub found: bool,
}

/// Iterates T-hat from unordered seeds between u1 and u2; reports any limit distinct from both.
pub fn search_third_solution(
    op: &DiscreteOperator,
    reactions: &DerivedReactions,
    u1: &GridFunction,
    u2: &GridFunction,
    t_max: f64,
    seed: u64,
) -> ThirdSearch {
    let map = ThatMap::new(op, reactions, t_max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds: Vec<(String, GridFunction)> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&th| {
            let v = u1
                .values
                .iter()
                .zip(&u2.values)
                .map(|(a, b)| th * a + (1.0 - th) * b)
                .collect();
            (format!("convex {th}"), u1.with_values(v))
        })
        .collect();
    for k in 0..3 {
        let th: f64 = rng.gen_range(0.05..0.95);
        let v = u1
            .values
            .iter()
            .zip(&u2.values)
            .map(|(a, b)| {
                let s = (th + 0.2 * rng.gen_range(-1.0..1.0)).clamp(0.0, 1.0);
                s * a + (1.0 - s) * b
            })
            .collect();
        seeds.push((format!("perturbed {k}"), u1.with_values(v)));
    }
    let threshold = 1e-6 * u2.sup_norm().max(u1.sup_norm());
    let attempts: Vec<ThirdAttempt> = seeds
        .into_iter()
        .map(|(name, s)| match iterate_map(&map, &s, &s, Start::FromLower, MAX_ITERATIONS) {
            Ok(tr) => {
                let lim = tr.limit();
                let (d1, d2) = (lim.sup_distance(u1), lim.sup_distance(u2));
                ThirdAttempt {
                    seed: name,
                    converged: true,
                    iterations: tr.iterations(),
                    distance_u1: d1,
                    distance_u2: d2,
                    distinct: d1 > threshold && d2 > threshold,
                }
            }
            Err(_) => ThirdAttempt {
                seed: name,
                converged: false,
                iterations: MAX_ITERATIONS,
                distance_u1: f64::NAN,
                distance_u2: f64::NAN,
                distinct: false,
            },
        })
        .collect();
    let found = attempts.iter().any(|a| a.distinct);
    log::info!(
        "third-solution search: {} seeds, distinct limit {}",
        attempts.len(),
        if found { "found" } else { "not found" }
    );
    ThirdSearch { attempts, found }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::solve::solve_singular_constant;
    use crate::nonlinearity::{NonlinearitySpec, ReactionKind};
    use crate::pq_core::Params;
    use proptest::prelude::*;
    use rand::Rng;

    fn reactions(kind: ReactionKind, lambda: f64) -> (DiscreteOperator, DerivedReactions) {
        let params = Params::new(2.0, 3.0, 0.5, 2, 1.0, lambda).unwrap();
        let spec = NonlinearitySpec {
            reaction: kind,
            theta1: 1.0,
            theta2: 100.0,
            khat: None,
            theta_star: None,
        };
        (DiscreteOperator::unit(&params, 128), DerivedReactions::new(&spec, &params).unwrap())
    }

    fn constant() -> ReactionKind {
        ReactionKind::Table {
            t: vec![0.0, 1.0],
            f: vec![2.0, 2.0],
        }
    }

    #[test]
    fn constant_f_map_is_independent_of_u() {
        let (op, r) = reactions(constant(), 0.5);
        let direct = solve_singular_constant(&op, 1.0).unwrap();
        for scale in [0.1, 3.0] {
            let u = GridFunction::from_fn(1.0, 128, |x| scale * (1.0 - x * x));
            let w = that_map(&op, &r, &u, 0.0).unwrap();
            assert!(w.sup_distance(&direct) <= 1e-10 * direct.sup_norm());
        }
    }

    #[test]
    fn constant_f_converges_in_two_steps() {
        let (op, r) = reactions(constant(), 0.5);
        let lower = GridFunction::from_fn(1.0, 128, |x| 1e-3 * (1.0 - x));
        let upper = GridFunction::from_fn(1.0, 128, |x| 10.0 * (1.0 - x));
        let tr = amann_iterate(&op, &r, &lower, &upper, Start::FromLower).unwrap();
        assert!(tr.converged && tr.iterations() == 2);
        assert!(tr.residuals.last().unwrap() < &1e-9);
    }

    #[test]
    fn zero_lambda_map_is_zero_source() {
        let (op, r) = reactions(ReactionKind::ExpSaturating { k: 10.0 }, 0.0);
        let u = GridFunction::from_fn(1.0, 128, |x| 1.0 - x);
        let w = that_map(&op, &r, &u, 0.0).unwrap();
        assert!(w.sup_norm() < 1e-12);
    }

    #[test]
    fn grid_mismatch() {
        let (op, r) = reactions(constant(), 0.5);
        let u = GridFunction::from_fn(1.0, 64, |x| 1.0 - x);
        assert!(that_map(&op, &r, &u, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn map_is_increasing(seed in 0u64..1000) {
            let (op, r) = reactions(ReactionKind::ExpSaturating { k: 10.0 }, 0.3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base: Vec<f64> = op.nodes().iter().map(|x| (1.0 - x) * rng.gen_range(0.0..3.0)).collect();
            let bump: Vec<f64> = op.nodes().iter().map(|x| (1.0 - x) * rng.gen_range(0.0..2.0)).collect();
            let u1 = GridFunction { nodes: op.nodes(), values: base.clone() };
            let u2 = u1.with_values(base.iter().zip(&bump).map(|(a, b)| a + b).collect());
            let map = ThatMap::new(&op, &r, u2.max());
            let w1 = map.apply(&u1, None).unwrap();
            let w2 = map.apply(&u2, None).unwrap();
            let tol = 1e-10 * w2.sup_norm().max(1.0);
            for i in 0..=128 {
                prop_assert!(w2.values[i] >= w1.values[i] - tol);
            }
        }
    }
}
