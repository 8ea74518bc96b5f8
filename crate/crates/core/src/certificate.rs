//! Pointwise certificate reports shared by the barrier and discrete modules.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Subsolution,
    Supersolution,
    /// a <= b pointwise, strict at interior nodes when requested
    Ordering,
    /// a > b at some node
    Nonordering,
    /// a derivative expression has the required sign
    SignCondition,
}

/// Signed margins are normalized so that positive means satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: CertificateKind,
    pub tolerance: f64,
    /// Relative margin per checked node, (lhs - rhs) / (|lhs| + |rhs|).
    pub margins: Vec<f64>,
    /// Radii of the checked nodes.
    pub at: Vec<f64>,
    pub min_margin: f64,
    /// Smallest unnormalized margin lhs - rhs.
    pub min_absolute: f64,
    /// Non-strict nodes accepted only because |lhs - rhs| is within the rounding bound of lhs.
    pub rounding_limited: usize,
    pub strict: bool,
    pub pass: bool,
}

pub(crate) fn relative(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs() + rhs.abs();
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

impl CertificateReport {
    /// Report from (radius, lhs, rhs) triples requiring lhs >= rhs.
    pub fn from_sides(
        kind: CertificateKind,
        tolerance: f64,
        strict: bool,
        sides: impl IntoIterator<Item = (f64, f64, f64)>,
    ) -> Self {
        Self::from_bounded_sides(kind, tolerance, strict, sides.into_iter().map(|(r, l, h)| (r, l, h, 0.0)))
    }

    /// As [`Self::from_sides`], with an absolute rounding bound on each lhs.
    ///
    /// A non-strict node passes when its relative margin is at least -tolerance or when
    /// lhs - rhs >= -bound. Strict certificates ignore the bound.
    pub fn from_bounded_sides(
        kind: CertificateKind,
        tolerance: f64,
        strict: bool,
        sides: impl IntoIterator<Item = (f64, f64, f64, f64)>,
    ) -> Self {
        let mut margins = Vec::new();
        let mut at = Vec::new();
        let mut min_absolute = f64::INFINITY;
        let mut rounding_limited = 0;
        let mut ok = true;
        for (r, lhs, rhs, bound) in sides {
            let m = relative(lhs, rhs);
            let node_ok = if strict {
                m > 0.0
            } else if m >= -tolerance {
                true
            } else if lhs - rhs >= -bound {
                rounding_limited += 1;
                true
            } else {
                false
            };
            ok &= node_ok && !m.is_nan();
            margins.push(m);
            at.push(r);
            min_absolute = min_absolute.min(lhs - rhs);
        }
        let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        CertificateReport {
            kind,
            tolerance,
            pass: ok && !margins.is_empty(),
            margins,
            at,
            min_margin,
            min_absolute,
            rounding_limited,
            strict,
        }
    }

    /// Index of the worst node.
    pub fn worst(&self) -> Option<usize> {
        (0..self.margins.len()).min_by(|&a, &b| self.margins[a].total_cmp(&self.margins[b]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_passes_unless_strict() {
        let sides = vec![(0.0, 1.0, 1.0), (0.5, 2.0, 1.0)];
        let r = CertificateReport::from_sides(CertificateKind::Subsolution, 1e-12, false, sides.clone());
        assert!(r.pass);
        assert_eq!(r.min_margin, 0.0);
        let s = CertificateReport::from_sides(CertificateKind::Subsolution, 1e-12, true, sides);
        assert!(!s.pass);
        assert_eq!(s.worst(), Some(0));
    }

    #[test]
    fn empty_or_nan_fails() {
        let r = CertificateReport::from_sides(CertificateKind::Ordering, 0.0, false, Vec::new());
        assert!(!r.pass);
        let r = CertificateReport::from_sides(CertificateKind::Ordering, 0.0, false, vec![(0.0, f64::NAN, 1.0)]);
        assert!(!r.pass);
    }

    #[test]
    fn rounding_bound_rescues_only_non_strict() {
        let sides = vec![(0.0, 0.0, 1e-9, 1e-6), (0.5, 2.0, 1.0, 0.0)];
        let r = CertificateReport::from_bounded_sides(CertificateKind::Subsolution, 1e-10, false, sides.clone());
        assert!(r.pass);
        assert_eq!(r.rounding_limited, 1);
        assert_eq!(r.min_margin, -1.0);
        let s = CertificateReport::from_bounded_sides(CertificateKind::Subsolution, 1e-10, true, sides);
        assert!(!s.pass);
        let t = CertificateReport::from_bounded_sides(
            CertificateKind::Subsolution,
            1e-10,
            false,
            vec![(0.0, 0.0, 1e-5, 1e-6)],
        );
        assert!(!t.pass);
    }

    #[test]
    fn relative_margin_is_bounded() {
        assert_eq!(relative(1.0, -1.0), 1.0);
        assert_eq!(relative(0.0, 0.0), 0.0);
        assert!((relative(3.0, 1.0) - 0.5).abs() < 1e-15);
    }
}
