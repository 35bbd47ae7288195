//! Low-rank solver for linear semidefinite programs
//!
//! ```text
//! min <C, X>  s.t.  <A_i, X> = b_i,  X psd
//! ```
//!
//! A Burer-Monteiro augmented Lagrangian warm start on `X = R R^T` is
//! followed by ADMM on the split factorisation `X = U V^T`.

pub mod admm;
pub mod alm;
pub mod cg;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod factor;
pub mod io;
pub mod lanczos;
pub mod problem;
pub mod rank;

pub use driver::{solve, GammaRule, SolveReport, SolverConfig, Status};
pub use error::{Error, Result};
pub use factor::Factor;
pub use problem::{recombine, ClassTag, ObjectiveSense, SdpProblem, SparseSymMatrix};
pub use rank::RankMode;
