//! Acceptance checks on the reference configuration; one line per criterion.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singular_pq::barrier::{check_scaling, profile_to_blowdown, smallest_sign_certificate};
use singular_pq::config::{Config, LambdaChoice, NamedLambda};
use singular_pq::discrete::{build_first_pair, DiscreteOperator, ThatMap};
use singular_pq::nonlinearity::DerivedReactions;
use singular_pq::pipeline::{run_pairs, run_radial, run_solve, SolveRun};
use singular_pq::pq_core::{lpq_inverse, lpq_scalar, simon_gap, simon_sum_gap};
use singular_pq::radial::solve_radial_unchecked;
use singular_pq::window::{f_of, window_bounds};
use singular_pq::{GridFunction, Params};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion(id: u32, name: &str, budget: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = body();
    let took = start.elapsed();
    let in_time = took < budget;
    let pass = out.pass && in_time;
    println!(
        "criterion {id} [{}] {name}: {}; runtime {:.2}s (limit {}s{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", exceeded" }
    );
    pass
}

fn log_spaced(lo_exp: f64, hi_exp: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / (count - 1) as f64))
        .collect()
}

fn operator_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (p, q) in [(1.5, 2.0), (2.0, 3.0), (1.2, 4.0)] {
        let params = Params::new(p, q, 0.5, 2, 1.0, 1.0).unwrap();
        for s in log_spaced(-6.0, 6.0, 241) {
            for s in [s, -s] {
                let t = lpq_inverse(s, &params).unwrap();
                let err = (lpq_scalar(t, &params) - s).abs() / s.abs().max(1.0);
                worst = worst.max(err);
                checked += 1;
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("{checked} round trips, worst scaled error {worst:.2e} (bound 1e-10)"),
    )
}

fn random_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
    (0..3).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

fn simon_inequalities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut violations = 0;
    let mut total = 0;
    for q in [1.5, 2.0, 3.0, 4.0] {
        for k in 0..100_000 {
            let u = random_vector(&mut rng);
            let v = if k % 10 == 0 {
                // nearly coincident vectors
                u.iter().map(|x| x * (1.0 + 1e-3 * rng.gen_range(-1.0..1.0))).collect()
            } else {
                random_vector(&mut rng)
            };
            let (lhs, rhs) = simon_gap(&u, &v, q).unwrap();
            // lhs = rhs exactly when q = 2; allow rounding of the two evaluations
            if lhs < rhs - 1e-12 * (lhs.abs() + rhs.abs()) {
                violations += 1;
            }
            total += 1;
        }
    }
    for _ in 0..10_000 {
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..2).map(|_| (random_vector(&mut rng), random_vector(&mut rng))).collect();
        let (lhs, rhs) = simon_sum_gap(&pairs, 1.5).unwrap();
        if lhs < rhs - 1e-12 * (lhs.abs() + rhs.abs()) {
            violations += 1;
        }
        total += 1;
    }
    outcome(violations == 0, format!("{violations} violations in {total} random pairs"))
}

fn window_sweep() -> Outcome {
    let mut tuples = 0;
    let mut violations = Vec::new();
    for p in [1.2, 1.5, 2.0, 2.5] {
        for dq in [0.3, 1.0, 2.0] {
            let q = p + dq;
            for dim in [1usize, 2, 3] {
                let bound = 1.0 + dim as f64 / (q - 1.0);
                for radius in [0.5 * bound, bound] {
                    let params = Params::new(p, q, 0.5, dim, radius, 1.0).unwrap();
                    for theta2 in [10.0, 1e4] {
                        let top = f64::min(theta2, f_of(theta2, &params));
                        for frac in [0.1, 0.5, 1.0] {
                            let theta = frac * top;
                            let (lo, hi) = window_bounds(&params, theta, theta2, 1.0);
                            tuples += 1;
                            if !(lo < hi) {
                                violations.push(format!(
                                    "p={p} q={q} N={dim} R={radius} theta2={theta2} theta={theta:e} lambda_*={lo:e} lambda^*={hi:e}"
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    for v in &violations {
        println!("  counterexample: {v}");
    }
    outcome(
        violations.is_empty() && tuples >= 50,
        format!("{} empty windows among {tuples} admissible tuples", violations.len()),
    )
}

fn radial_claim(cfg: &Config) -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for named in [NamedLambda::Lower, NamedLambda::Midpoint, NamedLambda::Upper] {
        let run = run_radial(cfg, Some(LambdaChoice::Named(named))).unwrap();
        let c = &run.claim;
        pass &= c.pass;
        details.push(format!(
            "{named:?}: min(phi-v) {:.3e}, theta2-max phi {:.3e}, min(v'-phi') {:.3e}",
            c.lower_envelope.worst, c.sup_bound.worst, c.slope.worst
        ));
    }
    // constant h: phi(r) = int_r^1 (sqrt(1 + 4 a s) - 1)/2 ds with a = lambda c / N
    let base = cfg.resolve(None).unwrap();
    let (lambda, c) = (3.0, 1.7);
    let params = Params::new(2.0, 3.0, 0.5, 2, 1.0, lambda).unwrap();
    let prof = solve_radial_unchecked(&params, &base.window, 4096, |_| c).unwrap();
    let a = lambda * c / 2.0;
    let anti = |s: f64| -0.5 * s + (1.0 + 4.0 * a * s).powf(1.5) / (12.0 * a);
    let err = prof
        .phi
        .nodes
        .iter()
        .zip(&prof.phi.values)
        .map(|(r, v)| (v - (anti(1.0) - anti(*r))).abs())
        .fold(0.0, f64::max);
    pass &= err <= 1e-6;
    details.push(format!("constant-load oracle error {err:.2e} at n=4096 (bound 1e-6)"));
    outcome(pass, details.join("; "))
}

fn barrier() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    let mut worst = 0.0f64;
    for (tau, q, gamma) in [(1.0, 3.0, 0.5), (0.5, 3.0, 0.5), (2.0, 3.0, 0.5), (1.0, 1.5, 0.8)] {
        let prof = profile_to_blowdown(tau, q, gamma, 10_000).unwrap();
        worst = worst.max(prof.conservation_residual());
    }
    pass &= worst <= 1e-6;
    details.push(format!("conservation residual {worst:.2e} (bound 1e-6)"));
    let prof = profile_to_blowdown(1.0, 3.0, 0.5, 10_000).unwrap();
    for p in [1.5, 2.5] {
        let cert = smallest_sign_certificate(&prof, p).unwrap();
        pass &= cert.pass;
        details.push(format!("sign certificate p={p}: {} (min margin {:.2e})", cert.pass, cert.min_margin));
    }
    for tau in [0.5, 2.0] {
        let rep = check_scaling(1.0, tau, 3.0, 0.5).unwrap();
        match rep.fitted {
            Some(f) => details.push(format!(
                "scaling tau={tau}: fitted (a,b)=({:.4},{:.4}) residual {:.1e}; stated ({:.4},{:.4}) residual {:.1e}; R ratio {:.4} vs stated {:.4}",
                f.a, f.b, f.residual, rep.stated.a, rep.stated.b, rep.stated.residual, rep.r_tau_ratio, rep.stated_ratio
            )),
            None => {
                pass = false;
                details.push(format!("scaling tau={tau}: no fit produced"));
            }
        }
    }
    outcome(pass, details.join("; "))
}

fn pairs(cfg: &Config) -> Outcome {
    let run = run_pairs(cfg, None).unwrap();
    let parts: Vec<String> = run
        .certificates
        .named()
        .iter()
        .map(|(n, c)| format!("{n} {} ({:.2e})", if c.pass { "ok" } else { "failed" }, c.min_margin))
        .collect();
    outcome(run.certificates.pass, parts.join(", "))
}

fn multiplicity(cfg: &Config) -> (Outcome, SolveRun) {
    let run = run_solve(cfg, None, None).unwrap();
    let tol = 1e-6;
    let theta2 = cfg.nonlinearity.theta2;
    let describe = |t: &singular_pq::pipeline::TraceSummary| {
        let last = t.increments.last().cloned().unwrap_or(f64::NAN);
        let ok = t.converged
            && t.iterations <= 200
            && last < 1e-8 * theta2
            && t.all_monotone
            && t.final_residual <= tol;
        (
            ok,
            format!(
                "{:?}: {} iterations, last increment {:.2e}, monotone {}, residual {:.2e}, sup {:.4e}",
                t.start, t.iterations, last, t.all_monotone, t.final_residual, t.limit_norm
            ),
        )
    };
    let (a, da) = describe(&run.minimal);
    let (b, db) = describe(&run.maximal);
    let d = run.distinctness;
    let pass = a && b && d.distance >= 0.1 * cfg.nonlinearity.theta1;
    let third = format!(
        "third-solution search: {} seeds, found {}",
        run.third.attempts.len(),
        run.third.found
    );
    (
        outcome(
            pass,
            format!("{da}; {db}; |u1-u2| {:.4e} (threshold {:.1e}); {third}", d.distance, d.threshold),
        ),
        run,
    )
}

fn map_monotonicity(cfg: &Config) -> Outcome {
    let r = cfg.resolve(None).unwrap();
    let derived = DerivedReactions::new(&cfg.nonlinearity, &r.params).unwrap();
    let op = DiscreteOperator::unit(&r.params, cfg.grid.nodes);
    let upper = build_first_pair(&op, &derived).unwrap().upper;
    let map = ThatMap::new(&op, &derived, upper.max());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..100 {
        let lo: Vec<f64> = upper.values.iter().map(|u| u * rng.gen_range(0.0..1.0)).collect();
        let hi: Vec<f64> = lo
            .iter()
            .zip(&upper.values)
            .map(|(l, u)| l + (u - l) * rng.gen_range(0.0..1.0))
            .collect();
        let a = map.apply(&upper.with_values(lo), None).unwrap();
        let b = map.apply(&upper.with_values(hi), None).unwrap();
        let mut ok = true;
        for (x, y) in a.values.iter().zip(&b.values) {
            let m = (y - x) / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
            worst = worst.min(m);
            ok &= *y >= *x - 1e-10 * x.abs().max(y.abs());
        }
        failures += usize::from(!ok);
    }
    outcome(
        failures == 0,
        format!("{failures} of 100 ordered pairs violated; smallest relative gap {worst:.2e} (tolerance -1e-10)"),
    )
}

fn coarse_distance(a: &GridFunction, b: &GridFunction) -> f64 {
    let s = b.intervals() / a.intervals();
    a.values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - b.values[i * s]).abs())
        .fold(0.0, f64::max)
}

fn mesh_consistency(cfg: &Config, finest: SolveRun) -> Outcome {
    let mut runs: Vec<SolveRun> = [512, 1024]
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.grid.nodes = n;
            run_solve(&c, None, None).unwrap()
        })
        .collect();
    runs.push(finest);
    let order = |f: fn(&SolveRun) -> &GridFunction| {
        (coarse_distance(f(&runs[0]), f(&runs[1])) / coarse_distance(f(&runs[1]), f(&runs[2]))).log2()
    };
    let phi = order(|s| &s.pairs.profile.phi);
    let u1 = order(|s| &s.u1);
    let u2 = order(|s| &s.u2);
    outcome(
        phi >= 1.8 && u1 >= 1.8 && u2 >= 1.8,
        format!("orders over n=512,1024,2048: phi {phi:.3}, u1 {u1:.3}, u2 {u2:.3} (required 1.8)"),
    )
}

fn main() {
    let cfg = Config::reference();
    let secs = Duration::from_secs;
    let mut results = vec![
        criterion(1, "operator round trip", secs(1), operator_round_trip),
        criterion(2, "monotonicity inequalities", secs(5), simon_inequalities),
        criterion(3, "window nonempty", secs(5), window_sweep),
        criterion(4, "radial claim", secs(10), || radial_claim(&cfg)),
        criterion(5, "barrier", secs(10), barrier),
        criterion(6, "pairs certified", secs(60), || pairs(&cfg)),
    ];
    let mut finest = None;
    results.push(criterion(7, "two distinct solutions", secs(300), || {
        let (o, run) = multiplicity(&cfg);
        finest = Some(run);
        o
    }));
    results.push(criterion(8, "T-hat monotone", secs(120), || map_monotonicity(&cfg)));
    let finest = finest.expect("criterion 7 produced a run");
    results.push(criterion(9, "mesh consistency", secs(120), || mesh_consistency(&cfg, finest)));
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, &p)| !p)
        .map(|(i, _)| i + 1)
        .collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        if std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
