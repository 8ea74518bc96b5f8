use thiserror::Error;

use crate::barrier::BarrierProfile;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("root finder did not converge for {what} after {iterations} iterations")]
    ConvergenceFailure { what: String, iterations: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("no nondecreasing bridge: fbar({theta_star}) = {fbar} exceeds min on bridge {bridge_min}")]
    BridgeNotMonotone {
        theta_star: f64,
        fbar: f64,
        bridge_min: f64,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("infeasible geometry: R = {radius} exceeds 1 + N/(q-1) = {bound}")]
    InfeasibleGeometry { radius: f64, bound: f64 },

    #[error("empty theta range: theta1 = {theta1} >= min(theta2, F(theta2)) = {upper}")]
    EmptyThetaRange { theta1: f64, upper: f64 },

    #[error("lambda = {lambda} outside window [{lower}, {upper}]")]
    WindowViolation { lambda: f64, lower: f64, upper: f64 },

    #[error("barrier blow-down at r = {:.6e}", .0.r_tau.unwrap_or(f64::NAN))]
    BlowDown(Box<BarrierProfile>),

    #[error("collar too wide: nu = {nu}, 1/Xi^gamma(nu) = {lhs} < {rhs}")]
    CollarTooWide { nu: f64, lhs: f64, rhs: f64 },

    #[error("barrier profile covers [0, {available}] but {needed} is required")]
    ProfileTooShort { available: f64, needed: f64 },

    #[error("positivity lost at node {node}")]
    PositivityLoss { node: usize },

    #[error("search for {what} exhausted after {steps} steps")]
    SearchExhausted { what: String, steps: usize },

    #[error("monotone iteration did not converge in {iterations} iterations (last increment {last_increment:e})")]
    IterationBudget {
        iterations: usize,
        last_increment: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of an iterative solver rather than of the input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure { .. }
                | Error::PositivityLoss { .. }
                | Error::SearchExhausted { .. }
                | Error::IterationBudget { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
