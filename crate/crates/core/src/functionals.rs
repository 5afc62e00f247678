//! Energy, Pohozaev functional, gradient, multiplier and the geometry radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, Field, FieldSummary};
use crate::params::{DerivedExponents, ModelParams};

pub fn derived_exponents(params: &ModelParams) -> DerivedExponents {
    params.exponents()
}

/// `A/2 - B_*/2* - (eta/p) B_p`.
pub fn energy(summary: &FieldSummary, params: &ModelParams) -> f64 {
    0.5 * summary.a - summary.b_star / params.two_star() - params.eta / params.p * summary.b_p
}

/// `A - B_* - eta zeta_p B_p`.
pub fn pohozaev(summary: &FieldSummary, params: &ModelParams) -> f64 {
    summary.a - summary.b_star - params.eta * params.zeta_p() * summary.b_p
}

/// `(A - B_* - eta B_p) / M`.
pub fn lagrange_multiplier(summary: &FieldSummary, params: &ModelParams) -> Result<f64> {
    if !(summary.m > 0.0) {
        return Err(Error::Degenerate("multiplier needs positive mass".into()));
    }
    Ok((summary.a - summary.b_star - params.eta * summary.b_p) / summary.m)
}

/// Energy minus its value predicted on the Pohozaev manifold.
///
/// Since `1/2* + s/N = 1/2`, this reduces to `pohozaev / 2` identically.
pub fn manifold_identity_residual(summary: &FieldSummary, params: &ModelParams) -> f64 {
    energy(summary, params) - manifold_energy(summary, params)
}

/// `(eta/2p)(zeta_p p - 2) B_p + (s/N) B_*`.
pub fn manifold_energy(summary: &FieldSummary, params: &ModelParams) -> f64 {
    let zp = params.zeta_p() * params.p;
    params.eta / (2.0 * params.p) * (zp - 2.0) * summary.b_p + params.s / params.dim as f64 * summary.b_star
}

/// `sign(u) |u|^{q-1}` applied pointwise.
pub(crate) fn odd_power(v: f64, q: f64) -> f64 {
    v.signum() * v.abs().powf(q - 1.0)
}

/// Gradient of the energy under the discrete `L^2` pairing.
pub fn gradient_field(field: &Field, params: &ModelParams) -> Result<Field> {
    let symbol = field::multiplier(field.grid(), params.s);
    Ok(gradient_with(field, params, &symbol, 1.0, 1.0, 1.0))
}

/// `ca (-Delta)^s u - cs |u|^{2*-2}u - cp eta |u|^{p-2}u`.
pub(crate) fn gradient_with(
    field: &Field,
    params: &ModelParams,
    symbol: &[f64],
    ca: f64,
    cs: f64,
    cp: f64,
) -> Field {
    let lap = field::apply_multiplier(field, symbol);
    let ts = params.two_star();
    let (p, eta) = (params.p, params.eta);
    let vals = lap
        .values()
        .iter()
        .zip(field.values())
        .map(|(l, &u)| ca * l - cs * odd_power(u, ts) - cp * eta * odd_power(u, p))
        .collect();
    Field::from_values_unchecked(*field.grid(), vals)
}

/// Sobolev and Gagliardo-Nirenberg constants fed to the geometry radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConstants {
    pub sobolev: f64,
    /// `C(N, p, s)` itself, not its `p`-th power.
    pub gn: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoBranch {
    Coupling,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub rho: f64,
    pub branch: RhoBranch,
    pub constants_used: SharpConstants,
    pub coupling_branch: f64,
    pub critical_branch: f64,
}

fn check_constants(c: &SharpConstants) -> Result<()> {
    if c.sobolev > 0.0 && c.gn > 0.0 && c.sobolev.is_finite() && c.gn.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "constants must be positive, got S = {}, C = {}",
            c.sobolev, c.gn
        )))
    }
}

/// Exponents appearing in the coupling term of the lower bound.
struct CouplingTerm {
    factor: f64,
    a_power: f64,
}

fn coupling_term(params: &ModelParams, c: &SharpConstants) -> CouplingTerm {
    let n = params.dim as f64;
    let (s, p) = (params.s, params.p);
    let a_power = (n * p - 2.0 * n) / (4.0 * s);
    let m_power = (2.0 * s * p - n * p + 2.0 * n) / (2.0 * s);
    CouplingTerm {
        factor: params.eta * c.gn.powf(p) / p * 2f64.powf(a_power) * params.mass.powf(m_power),
        a_power,
    }
}

/// Radius below which the energy is bounded below by a positive multiple of `A`.
pub fn rho(params: &ModelParams, constants: &SharpConstants) -> Result<GeometryReport> {
    check_constants(constants)?;
    let n = params.dim as f64;
    let s = params.s;
    let ex = params.exponents();
    let term = coupling_term(params, constants);
    // (p / (8 eta C^p 2^.. m^..))^{4s/(Np-2N-4s)} = (1 / (8 factor))^{..}
    let coupling_branch = (1.0 / (8.0 * term.factor)).powf(ex.level_decay_exponent);
    let critical_branch =
        (ex.two_star / 8.0).powf((n - 2.0 * s) / (2.0 * s)) * (constants.sobolev / 2.0).powf(n / (2.0 * s));
    let (rho, branch) = if coupling_branch <= critical_branch {
        (coupling_branch, RhoBranch::Coupling)
    } else {
        (critical_branch, RhoBranch::Critical)
    };
    Ok(GeometryReport {
        rho,
        branch,
        constants_used: *constants,
        coupling_branch,
        critical_branch,
    })
}

/// Closed-form lower bound of the energy in terms of `A` alone.
pub fn energy_lower_bound(a: f64, params: &ModelParams, constants: &SharpConstants) -> f64 {
    let ts = params.two_star();
    let term = coupling_term(params, constants);
    0.5 * a
        - 2f64.powf(ts / 2.0) / (ts * constants.sobolev.powf(ts / 2.0)) * a.powf(ts / 2.0)
        - term.factor * a.powf(term.a_power)
}
