//! Shared fixtures for the criterion benches.

use fracground::field::{sample, Family, Field};
use fracground::grid::GridSpec;

/// Unit Gaussian on the default grid of the given dimension.
pub fn gaussian_on_default_grid(dim: usize) -> Field {
    let grid = GridSpec::default_for_dim(dim).expect("default grid");
    sample(&grid, Family::Gaussian { width: 1.0 }).expect("gaussian")
}
