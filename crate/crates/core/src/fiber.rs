//! Exact action of the dilation fiber on summaries.

use crate::error::{Error, Result};
use crate::field::FieldSummary;
use crate::functionals::{energy, pohozaev};
use crate::params::ModelParams;

/// Iteration budget for the root bisection, bracketing included.
pub const ROOT_MAX_ITERS: usize = 200;
const FD_STEP: f64 = 1e-6;

/// Summary of `xi * u` computed from the summary of `u`.
pub fn scale_summary(summary: &FieldSummary, xi: f64, params: &ModelParams) -> FieldSummary {
    let n = params.dim as f64;
    FieldSummary {
        a: (2.0 * params.s * xi).exp() * summary.a,
        m: summary.m,
        b_p: ((params.p - 2.0) * n * xi / 2.0).exp() * summary.b_p,
        b_star: ((params.two_star() - 2.0) * n * xi / 2.0).exp() * summary.b_star,
    }
}

/// One fiber `xi -> xi * u`, represented by the summary of `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberProfile {
    base: FieldSummary,
    params: ModelParams,
}

impl FiberProfile {
    pub fn new(base: FieldSummary, params: ModelParams) -> Result<Self> {
        if !(base.a > 0.0) || !(base.b_star > 0.0 || base.b_p > 0.0) || !base.is_finite() {
            return Err(Error::Degenerate(format!(
                "fiber needs A > 0 and a positive nonlinear term, got {base:?}"
            )));
        }
        Ok(Self { base, params })
    }

    pub fn base(&self) -> &FieldSummary {
        &self.base
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn at(&self, xi: f64) -> FieldSummary {
        scale_summary(&self.base, xi, &self.params)
    }
}

pub fn fiber_energy(profile: &FiberProfile, xi: f64) -> f64 {
    energy(&profile.at(xi), &profile.params)
}

pub fn fiber_pohozaev(profile: &FiberProfile, xi: f64) -> f64 {
    pohozaev(&profile.at(xi), &profile.params)
}

/// Normalized gap between a central difference of the fiber energy and
/// `s` times the fiber Pohozaev value.
pub fn fiber_derivative_residual(profile: &FiberProfile, xi: f64) -> f64 {
    let fd = (fiber_energy(profile, xi + FD_STEP) - fiber_energy(profile, xi - FD_STEP)) / (2.0 * FD_STEP);
    let exact = profile.params.s * fiber_pohozaev(profile, xi);
    (fd - exact).abs() / exact.abs().max(1.0)
}

/// Closed-form derivative of the fiber energy.
pub fn fiber_energy_derivative(profile: &FiberProfile, xi: f64) -> f64 {
    let p = &profile.params;
    let n = p.dim as f64;
    let ts = p.two_star();
    let x = profile.at(xi);
    0.5 * 2.0 * p.s * x.a - (ts - 2.0) * n / 2.0 * x.b_star / ts - p.eta / p.p * (p.p - 2.0) * n / 2.0 * x.b_p
}

/// `P(xi * u) / e^{2 s xi}` as a function of `t = e^{s xi}`; strictly decreasing.
pub fn reduced_pohozaev(profile: &FiberProfile, t: f64) -> f64 {
    let p = &profile.params;
    let zeta = p.zeta_p();
    profile.base.a
        - t.powf(p.two_star() - 2.0) * profile.base.b_star
        - p.eta * zeta * t.powf(p.p * zeta - 2.0) * profile.base.b_p
}

/// Unique zero of the fiber Pohozaev function, by bisection in `t = e^{s xi}`.
pub fn fiber_root(profile: &FiberProfile) -> Result<f64> {
    let f = |t: f64| reduced_pohozaev(profile, t);
    let mut iters = 0usize;
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    if f(1.0) > 0.0 {
        while f(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            iters += 1;
            if iters > ROOT_MAX_ITERS || !hi.is_finite() {
                return Err(Error::FiberDegenerated);
            }
        }
    } else {
        while f(lo) <= 0.0 {
            hi = lo;
            lo *= 0.5;
            iters += 1;
            if iters > ROOT_MAX_ITERS || lo == 0.0 {
                return Err(Error::FiberDegenerated);
            }
        }
    }
    while iters < ROOT_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return Ok(mid.ln() / profile.params.s);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    let t = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    Ok(t.ln() / profile.params.s)
}

/// Root of the fiber through a summary; convenience over [`FiberProfile`].
pub fn summary_root(summary: &FieldSummary, params: &ModelParams) -> Result<f64> {
    fiber_root(&FiberProfile::new(*summary, *params)?)
}

/// Maximum of the energy along the fiber through `summary`.
pub fn fiber_max_energy(summary: &FieldSummary, params: &ModelParams) -> Result<(f64, f64)> {
    let xi = summary_root(summary, params)?;
    Ok((xi, energy(&scale_summary(summary, xi, params), params)))
}
