//! Pointwise discrete certificates for sub/supersolutions and orderings.

use serde::{Deserialize, Serialize};

use crate::certificate::{relative, CertificateKind, CertificateReport};
use crate::discrete::operator::DiscreteOperator;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::nonlinearity::DerivedReactions;

/// Relative tolerance for sub/supersolution certificates.
pub const SOLUTION_TOL: f64 = 1e-10;
/// Relative tolerance for non-strict orderings.
pub const ORDERING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Subsolution,
    Supersolution,
}

fn check_grid(op: &DiscreteOperator, u: &GridFunction) -> Result<()> {
    if u.values.len() != op.n + 1 || (u.radius() - op.params.radius).abs() > 1e-12 * op.params.radius {
        return Err(Error::GridMismatch(format!(
            "function has {} intervals on [0, {}], operator has {} on [0, {}]",
            u.intervals(),
            u.radius(),
            op.n,
            op.params.radius
        )));
    }
    Ok(())
}

fn first_nonpositive(u: &GridFunction, n: usize) -> Option<usize> {
    u.values[..n].iter().position(|&x| !(x > 0.0))
}

/// (r, -L u, lambda f(u)/u^gamma, rounding bound of -L u) at interior nodes.
fn sides(op: &DiscreteOperator, reactions: &DerivedReactions, u: &GridFunction) -> Result<Vec<(f64, f64, f64, f64)>> {
    check_grid(op, u)?;
    if let Some(node) = first_nonpositive(u, op.n) {
        return Err(Error::PositivityLoss { node });
    }
    let (res, bound) = op.apply_with_rounding(&u.values);
    Ok((0..op.n)
        .map(|i| (u.nodes[i], res[i], reactions.source(u.values[i]), bound[i]))
        .collect())
}

/// Subsolution: -L u <= lambda f(u)/u^gamma; supersolution reversed. Strict requires positive margins.
pub fn certify_solution(
    op: &DiscreteOperator,
    reactions: &DerivedReactions,
    u: &GridFunction,
    kind: SolutionKind,
    strict: bool,
) -> Result<CertificateReport> {
    let s = sides(op, reactions, u)?;
    Ok(match kind {
        SolutionKind::Subsolution => CertificateReport::from_bounded_sides(
            CertificateKind::Subsolution,
            SOLUTION_TOL,
            strict,
            s.into_iter().map(|(r, lhs, rhs, b)| (r, rhs, lhs, b)),
        ),
        SolutionKind::Supersolution => {
            CertificateReport::from_bounded_sides(CertificateKind::Supersolution, SOLUTION_TOL, strict, s)
        }
    })
}

/// max |-L u - lambda f(u)/u^gamma| / max(max |-L u|, max lambda f(u)/u^gamma) over interior nodes.
pub fn equation_residual(op: &DiscreteOperator, reactions: &DerivedReactions, u: &GridFunction) -> Result<f64> {
    let s = sides(op, reactions, u)?;
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for &(_, l, r, _) in &s {
        err = err.max((l - r).abs());
        scale = scale.max(l.abs()).max(r.abs());
    }
    Ok(if scale == 0.0 { 0.0 } else { err / scale })
}

/// max over interior nodes of the per-node relative residual |l - r| / (|l| + |r|).
pub fn pointwise_residual(op: &DiscreteOperator, reactions: &DerivedReactions, u: &GridFunction) -> Result<f64> {
    let s = sides(op, reactions, u)?;
    Ok(s.iter().fold(0.0f64, |m, &(_, l, r, _)| m.max(relative(l, r).abs())))
}

/// a <= b at all nodes, with a < b at interior nodes when strict.
pub fn certify_ordering(a: &GridFunction, b: &GridFunction, strict: bool) -> Result<CertificateReport> {
    if a.values.len() != b.values.len() {
        return Err(Error::GridMismatch("ordering needs functions on the same grid".into()));
    }
    let n = a.values.len() - 1;
    let range = if strict { 0..n } else { 0..n + 1 };
    Ok(CertificateReport::from_sides(
        CertificateKind::Ordering,
        ORDERING_TOL,
        strict,
        range.map(|i| (a.nodes[i], b.values[i], a.values[i])),
    ))
}

/// a > b at some node; margins are b - a relative, and pass means some margin is negative.
pub fn certify_nonordering(a: &GridFunction, b: &GridFunction) -> Result<CertificateReport> {
    let mut rep = certify_ordering(a, b, false)?;
    rep.kind = CertificateKind::Nonordering;
    rep.pass = rep.min_margin < -ORDERING_TOL;
    Ok(rep)
}
