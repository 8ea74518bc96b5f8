//! Uniform radial grids and nodal functions on them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Nodal values on the uniform grid r_i = i R / n, i = 0..=n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn uniform_nodes(radius: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|i| radius * i as f64 / intervals as f64)
        .collect()
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let g = GridFunction { nodes, values };
        g.validate()?;
        Ok(g)
    }

    pub fn from_fn(radius: f64, intervals: usize, f: impl Fn(f64) -> f64) -> Self {
        let nodes = uniform_nodes(radius, intervals);
        let values = nodes.iter().map(|&r| f(r)).collect();
        GridFunction { nodes, values }
    }

    pub fn zeros(radius: f64, intervals: usize) -> Self {
        Self::from_fn(radius, intervals, |_| 0.0)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.nodes.len());
        GridFunction {
            nodes: self.nodes.clone(),
            values,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() != self.values.len() {
            return Err(Error::GridMismatch(format!(
                "{} nodes but {} values",
                self.nodes.len(),
                self.values.len()
            )));
        }
        if self.nodes.len() < 3 {
            return Err(Error::GridMismatch("need at least two intervals".into()));
        }
        if self.nodes[0] != 0.0 {
            return Err(Error::GridMismatch("first node must be r = 0".into()));
        }
        let h = self.spacing();
        if !(h > 0.0) {
            return Err(Error::GridMismatch("nodes must increase".into()));
        }
        for w in self.nodes.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-12 * h.max(self.radius()) {
                return Err(Error::GridMismatch("spacing is not uniform".into()));
            }
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::GridMismatch("non-finite value".into()));
        }
        Ok(())
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn radius(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn spacing(&self) -> f64 {
        self.radius() / self.intervals() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Values at every `stride`-th node, for comparison with a coarser grid.
    pub fn coarsen(&self, stride: usize) -> Vec<f64> {
        self.values.iter().step_by(stride).cloned().collect()
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn write_csv(&self, path: &Path, column: &str) -> Result<()> {
        io::write_columns(path, &["r", column], &[&self.nodes, &self.values])
    }

    /// Reads the first two columns of a CSV with a header row.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let (_, cols) = io::read_columns(path)?;
        if cols.len() < 2 {
            return Err(Error::Schema(format!("{}: need at least two columns", path.display())));
        }
        GridFunction::new(cols[0].clone(), cols[1].clone())
    }
}
