//! Model parameters and the exponents derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The model quintuple: dimension, fractional order, power, coupling, mass.
///
/// The constraint is `||u||_2^2 = mass^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    pub eta: f64,
    pub mass: f64,
}

/// Exponents fixed by `(N, s, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    /// Critical Sobolev exponent `2N / (N - 2s)`.
    pub two_star: f64,
    /// Gagliardo-Nirenberg interpolation exponent `(Np - 2N) / (2ps)`.
    pub zeta_p: f64,
    /// `2 + 4s/N`.
    pub mass_critical_p: f64,
    /// Power-law exponent of the level decay in the coupling, `4s / (Np - 2N - 4s)`.
    pub level_decay_exponent: f64,
}

impl DerivedExponents {
    /// Arithmetic only; no validity checks.
    pub fn compute(dim: usize, s: f64, p: f64) -> Self {
        let n = dim as f64;
        Self {
            two_star: 2.0 * n / (n - 2.0 * s),
            zeta_p: (n * p - 2.0 * n) / (2.0 * p * s),
            mass_critical_p: 2.0 + 4.0 * s / n,
            level_decay_exponent: 4.0 * s / (n * p - 2.0 * n - 4.0 * s),
        }
    }
}

impl ModelParams {
    /// Validated constructor; the error message names the violated bound.
    pub fn new(dim: usize, s: f64, p: f64, eta: f64, mass: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDim(dim));
        }
        if !(s > 0.0 && s < 1.0) {
            return bad(format!("s must lie in (0, 1), got {s}"));
        }
        let n = dim as f64;
        if n <= 2.0 * s {
            return bad(format!("N must exceed 2s (N = {dim}, s = {s})"));
        }
        let ex = DerivedExponents::compute(dim, s, p);
        if !p.is_finite() || p <= ex.mass_critical_p {
            return bad(format!(
                "p must exceed 2 + 4s/N = {:.6} (got p = {p})",
                ex.mass_critical_p
            ));
        }
        if p >= ex.two_star * (1.0 - 1e-12) {
            return bad(format!(
                "p must be below 2*_s = 2N/(N-2s) = {:.6} (got p = {p})",
                ex.two_star
            ));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return bad(format!("eta must be positive, got {eta}"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return bad(format!("m must be positive, got {mass}"));
        }
        Ok(Self { dim, s, p, eta, mass })
    }

    /// Constructor that skips the range checks on `p`; used for boundary probes.
    pub fn new_unchecked(dim: usize, s: f64, p: f64, eta: f64, mass: f64) -> Self {
        Self { dim, s, p, eta, mass }
    }

    pub fn exponents(&self) -> DerivedExponents {
        DerivedExponents::compute(self.dim, self.s, self.p)
    }

    pub fn two_star(&self) -> f64 {
        self.exponents().two_star
    }

    pub fn zeta_p(&self) -> f64 {
        self.exponents().zeta_p
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.dim, self.s, self.p, eta, self.mass)
    }

    /// Target value of `||u||_2^2`.
    pub fn target_mass_sq(&self) -> f64 {
        self.mass * self.mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dimensional_half_laplacian() {
        let p = ModelParams::new(2, 0.5, 3.5, 1.0, 1.0).unwrap();
        let e = p.exponents();
        assert!((e.two_star - 4.0).abs() < 1e-15);
        assert!((e.zeta_p - 6.0 / 7.0).abs() < 1e-15);
        assert!((e.zeta_p * 3.5 - 3.0).abs() < 1e-14);
        assert!((e.level_decay_exponent - 2.0).abs() < 1e-14);
        assert!((e.mass_critical_p - 3.0).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_baseline() {
        let e = ModelParams::new(1, 0.4, 6.0, 1.0, 1.0).unwrap().exponents();
        assert!((e.two_star - 10.0).abs() < 1e-13);
        assert!((e.zeta_p - 5.0 / 6.0).abs() < 1e-15);
        assert!((e.zeta_p * 6.0 - 5.0).abs() < 1e-14);
    }

    #[test]
    fn zeta_is_one_at_critical_power() {
        let e = DerivedExponents::compute(2, 0.5, 4.0);
        assert!((e.zeta_p - 1.0).abs() < 1e-15);
        let e = DerivedExponents::compute(1, 0.4, 10.0);
        assert!((e.zeta_p - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_subcritical_power_with_bound() {
        let err = ModelParams::new(1, 0.4, 2.1, 1.0, 1.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("p must exceed 2 + 4s/N"), "{msg}");
        assert!(msg.contains("3.6"), "{msg}");
    }

    #[test]
    fn rejects_supercritical_and_degenerate() {
        assert!(ModelParams::new(1, 0.4, 10.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1, 0.6, 5.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(2, 0.5, 3.5, 0.0, 1.0).is_err());
        assert!(ModelParams::new(2, 0.5, 3.5, 1.0, -1.0).is_err());
        assert!(ModelParams::new(2, 1.0, 3.5, 1.0, 1.0).is_err());
    }
}
