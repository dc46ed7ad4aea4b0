//! Curvature, energy conditions and causal geodesics of standard static
//! space-times `I ×_f F` and generalized Robertson–Walker space-times.

pub mod auditor;
pub mod catalog;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod geodesics;
pub mod grid;
pub mod jet;
pub mod markowitz;
pub mod ode;
pub mod report;
pub mod riemann;
pub mod spacetime;
pub mod specfile;

pub use error::{Error, Result};
pub use expr::{parse, Expr};
pub use grid::{Ball, Domain, GridSpec};
pub use jet::Jet2;
