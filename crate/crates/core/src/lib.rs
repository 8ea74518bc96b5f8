//! Sub/supersolution pairs, barriers and monotone iteration for the singular
//! (p,q)-Laplacian problem -L_{p,q} u = lambda f(u)/u^gamma on a ball.

pub mod barrier;
pub mod certificate;
pub mod config;
pub mod discrete;
pub mod error;
pub mod grid;
pub mod io;
pub mod nonlinearity;
pub mod pipeline;
pub mod pq_core;
pub mod radial;
pub mod window;

pub use certificate::{CertificateKind, CertificateReport};
pub use config::Config;
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use pq_core::Params;
