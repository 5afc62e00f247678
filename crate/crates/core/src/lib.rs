// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod fft;
pub mod fiber;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod params;
pub mod solver;
pub mod verify;

pub use constants::{ConstantsReport, OptConfig};
pub use error::{Error, Result};
pub use field::{Family, Field, FieldSummary};
pub use grid::GridSpec;
pub use params::ModelParams;
pub use solver::{BoxPolicy, SolveConfig, SolveReport, SweepConfig, SweepReport};
pub use verify::{VerifyOptions, VerifyReport};
