//! Normalized ground states by descent on the mass sphere intersected with
//! the Pohozaev manifold, plus diagnostics and coupling sweeps.
//!
//! The reported level is the minimum of the energy over the discrete
//! Pohozaev manifold.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{compactness_threshold, ConstantsReport};
use crate::error::{Error, Result};
use crate::fiber::summary_root;
use crate::field::{self, dilate, dilate_unguarded, dot, Field, FieldSummary};
use crate::functionals::{energy, lagrange_multiplier, manifold_energy, odd_power, pohozaev};
use crate::grid::GridSpec;
use crate::params::ModelParams;

/// Label stored in reports for the quantity being computed.
pub const LEVEL_KIND: &str = "pohozaev-manifold minimum";

/// Accepted steps without relative energy progress before the solve stops.
pub const STALL_WINDOW: usize = 500;
const STALL_TOL: f64 = 1e-14;
/// Relative energy change treated as evaluation round-off by the line search.
const ENERGY_NOISE: f64 = 1e-13;
/// Largest accepted step, as a fraction of `||u||_2`.
const TRUST_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub step_init: f64,
    pub armijo: f64,
    /// Tangent gradient tolerance, relative to `max(1, A)`.
    pub tol_grad: f64,
    /// Tolerance on `|P| / A`.
    pub tol_pohozaev: f64,
    pub max_iters: usize,
    /// 0 disables; `k > 0` symmetrizes every `k` iterations.
    pub radial_projection_every: usize,
    pub seed: u64,
    pub grid: GridSpec,
}

impl SolveConfig {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            step_init: 1e-2,
            armijo: 1e-4,
            tol_grad: 1e-8,
            tol_pohozaev: 1e-8,
            max_iters: 50_000,
            radial_projection_every: 0,
            seed: 0,
            grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.tol_grad > 0.0 && self.tol_pohozaev > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo coefficient must lie in (0, 1)");
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return bad("initial step must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub energy: f64,
    pub pohozaev_abs: f64,
    pub grad_norm: f64,
    /// True when a symmetrization preceded this entry.
    pub symmetrized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub level_kind: String,
    pub params: ModelParams,
    pub final_field: Field,
    pub summary: FieldSummary,
    pub energy_level: f64,
    /// `|P| / A`.
    pub pohozaev_residual: f64,
    pub mu: f64,
    /// `|mu M - eta (zeta_p - 1) B_p|`.
    pub mu_identity_residual: f64,
    /// `||(-Delta)^s u - mu u - |u|^{2*-2}u - eta |u|^{p-2}u||_2 / ||u||_2`.
    pub pde_residual: f64,
    /// Norm of the gradient projected on the tangent space of both constraints.
    pub tangent_gradient: f64,
    /// Mass fraction outside `|x|_inf > L/2`.
    pub outer_mass_fraction: f64,
    pub iterations: usize,
    pub history: Vec<HistoryEntry>,
    pub compactness_margin: Option<f64>,
    pub converged: bool,
    pub stop_reason: String,
}

impl SolveReport {
    /// Fills the compactness margin `s S^{N/2s}/N - E` from a constants report.
    pub fn attach_constants(&mut self, constants: &ConstantsReport) {
        self.compactness_margin =
            Some(compactness_threshold(constants.s_est, &self.params) - self.energy_level);
    }
}

/// `g - (<g, u>/M) u`.
pub fn project_tangent(gradient: &Field, u: &Field) -> Result<Field> {
    let m = u.mass();
    if !(m > 0.0) {
        return Err(Error::Degenerate("tangent projection at a zero field".into()));
    }
    let c = gradient.inner(u)? / m;
    gradient.add_scaled(-c, u)
}

/// `m u / ||u||_2`, so that `||u||_2^2 = m^2`.
pub fn renormalize_mass(u: &Field, m: f64) -> Result<Field> {
    let norm = u.mass().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("cannot renormalize a zero field".into()));
    }
    Ok(u.scale(m / norm))
}

/// Moves `u` along its dilation fiber to the Pohozaev root, then restores the mass.
///
/// The root computed from the summary is exact for the continuum action; the
/// grid dilation is not, so the root is re-solved on the dilated field until
/// `|P| <= 1e-10 A` or the correction stops shrinking.
pub fn pohozaev_project(u: &Field, params: &ModelParams) -> Result<Field> {
    let mut xi = 0.0;
    let mut best: Option<(f64, Field)> = None;
    for _ in 0..PROJECTION_ITERS {
        let v = renormalize_mass(&dilate(u, xi)?, params.mass)?;
        let x = field::summarize(&v, params)?;
        let rel = pohozaev(&x, params).abs() / x.a;
        if best.as_ref().is_some_and(|(r, _)| rel >= *r) {
            break;
        }
        let done = rel <= 1e-10;
        best = Some((rel, v));
        if done {
            break;
        }
        xi += summary_root(&x, params)?;
    }
    Ok(best.map(|(_, v)| v).expect("at least one projection pass"))
}

/// Replaces every sample by the mean over its radius shell (shell width `h`),
/// then restores the original mass. Returns the field and a flag that is set
/// when the operation was skipped because the grid is one-dimensional.
pub fn radial_symmetrize(u: &Field) -> Result<(Field, bool)> {
    let grid = *u.grid();
    if grid.dim == 1 {
        return Ok((u.clone(), true));
    }
    let n = grid.points_per_axis;
    let centre = (n / 2) as i64;
    // Radii from integer offsets keep the binning exactly symmetric.
    let bins: Vec<usize> = (0..grid.len())
        .map(|f| {
            let idx = grid.unravel(f);
            let r2: i64 = idx[..grid.dim]
                .iter()
                .map(|&i| {
                    let d = i as i64 - centre;
                    d * d
                })
                .sum();
            ((r2 as f64).sqrt() + 0.5).floor() as usize
        })
        .collect();
    let nbins = bins.iter().max().map_or(0, |b| b + 1);
    let mut sum = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    for (b, v) in bins.iter().zip(u.values()) {
        sum[*b] += v;
        count[*b] += 1;
    }
    let vals = bins.iter().map(|&b| sum[b] / count[b] as f64).collect();
    let out = Field::from_values(grid, vals)?;
    let m = u.mass();
    if out.is_zero() || m == 0.0 {
        return Ok((out, false));
    }
    Ok((renormalize_mass(&out, m.sqrt())?, false))
}

const PROJECTION_ITERS: usize = 20;
const LBFGS_MEMORY: usize = 8;

/// Gaussian of width `L/8`, the starting point used when none is given.
pub fn default_initializer(grid: &GridSpec) -> Result<Field> {
    field::sample(
        grid,
        field::Family::Gaussian {
            width: grid.half_length / 8.0,
        },
    )
}

/// Relative amplitude of the seeded initializer perturbation.
pub const PERTURBATION: f64 = 1e-2;

/// Adds band-limited noise of sup norm `PERTURBATION * max|u|`; seed 0 is a no-op.
pub fn perturb(u: &Field, seed: u64) -> Result<Field> {
    if seed == 0 {
        return Ok(u.clone());
    }
    let noise = field::sample(u.grid(), field::Family::RandomBandlimited { cutoff: 0.25, seed })?;
    u.add_scaled(PERTURBATION * u.max_abs(), &noise)
}

/// Discrete problem data shared by all iterations.
struct Problem<'a> {
    params: &'a ModelParams,
    grid: GridSpec,
    symbol: Vec<f64>,
    cell: f64,
}

struct State {
    u: Field,
    summary: FieldSummary,
    energy: f64,
}

impl<'a> Problem<'a> {
    fn new(params: &'a ModelParams, grid: GridSpec) -> Self {
        Self {
            params,
            grid,
            symbol: field::multiplier(&grid, params.s),
            cell: grid.cell_volume(),
        }
    }

    fn summarize(&self, u: &Field) -> FieldSummary {
        field::summarize_with(u, self.params, &self.symbol)
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.cell * dot(a, b)
    }

    /// Energy gradient and Pohozaev gradient, sharing one operator application.
    fn gradients(&self, u: &Field) -> (Vec<f64>, Vec<f64>) {
        let lap = field::apply_multiplier(u, &self.symbol);
        let ts = self.params.two_star();
        let (p, eta, zeta) = (self.params.p, self.params.eta, self.params.zeta_p());
        let mut gi = Vec::with_capacity(u.values().len());
        let mut gp = Vec::with_capacity(u.values().len());
        for (&l, &v) in lap.values().iter().zip(u.values()) {
            let crit = odd_power(v, ts);
            let sub = odd_power(v, p);
            gi.push(l - crit - eta * sub);
            gp.push(2.0 * l - ts * crit - eta * zeta * p * sub);
        }
        (gi, gp)
    }

    /// Backtracking from `step` (capped by the trust radius) along `-d`.
    /// Returns the accepted state and step.
    fn line_search(
        &self,
        state: &State,
        d: &[f64],
        gd: f64,
        step: f64,
        tangent: f64,
        armijo: f64,
    ) -> Result<Option<(State, f64)>> {
        let df = Field::from_values_unchecked(self.grid, d.to_vec());
        let mut step = step.min(TRUST_RADIUS * (state.u.mass() / df.mass()).sqrt());
        while step > 1e-14 {
            if let Ok(next) = self.retract(&state.u.add_scaled(-step, &df)?) {
                let predicted = step * gd;
                let ok = if predicted > ENERGY_NOISE * state.energy.abs() {
                    next.energy <= state.energy - armijo * predicted
                } else {
                    // decrease below round-off: require progress in the gradient
                    next.energy - state.energy <= ENERGY_NOISE * state.energy.abs()
                        && self.tangent_norm(&next.u) < tangent
                };
                if ok {
                    return Ok(Some((next, step)));
                }
            }
            step *= 0.5;
        }
        Ok(None)
    }

    fn tangent_norm(&self, u: &Field) -> f64 {
        let (gi, gp) = self.gradients(u);
        let (g, _, _) = self.project_pair(&gi, u.values(), &gp);
        self.inner(&g, &g).sqrt()
    }

    fn pde_residual(&self, u: &Field, mu: f64) -> f64 {
        let (gi, _) = self.gradients(u);
        let r: Vec<f64> = gi.iter().zip(u.values()).map(|(g, v)| g - mu * v).collect();
        (self.inner(&r, &r) / u.mass()).sqrt()
    }

    /// Removes the components along `u` and `q` (L^2-orthogonal projection).
    fn project_pair(&self, g: &[f64], u: &[f64], q: &[f64]) -> (Vec<f64>, f64, f64) {
        let (uu, uq, qq) = (self.inner(u, u), self.inner(u, q), self.inner(q, q));
        let (gu, gq) = (self.inner(g, u), self.inner(g, q));
        let det = uu * qq - uq * uq;
        let (alpha, beta) = if det.abs() > 1e-14 * uu * qq {
            ((gu * qq - gq * uq) / det, (gq * uu - gu * uq) / det)
        } else {
            (gu / uu, 0.0)
        };
        let out = g
            .iter()
            .zip(u)
            .zip(q)
            .map(|((g, u), q)| g - alpha * u - beta * q)
            .collect();
        (out, alpha, beta)
    }

    /// Newton iteration onto `P = 0` within the mass sphere.
    fn retract(&self, v: &Field) -> Result<State> {
        let m = self.params.mass;
        let mut u = renormalize_mass(v, m)?;
        let mut x = self.summarize(&u);
        for _ in 0..50 {
            let pz = pohozaev(&x, self.params);
            if !(x.a > 0.0) {
                return Err(Error::FiberDegenerated);
            }
            if pz.abs() <= 1e-16 * x.a {
                return Ok(State {
                    energy: energy(&x, self.params),
                    u,
                    summary: x,
                });
            }
            let (_, gp) = self.gradients(&u);
            let mass = u.mass();
            let c = self.inner(&gp, u.values()) / mass;
            let w: Vec<f64> = gp.iter().zip(u.values()).map(|(g, v)| g - c * v).collect();
            let slope = self.inner(&w, &w);
            if !(slope > 0.0) {
                return Err(Error::FiberDegenerated);
            }
            let wf = Field::from_values_unchecked(self.grid, w);
            let mut t = -pz / slope;
            let mut improved = None;
            for _ in 0..30 {
                let cand = renormalize_mass(&u.add_scaled(t, &wf)?, m)?;
                let cx = self.summarize(&cand);
                if pohozaev(&cx, self.params).abs() < pz.abs() {
                    improved = Some((cand, cx));
                    break;
                }
                t *= 0.5;
            }
            match improved {
                Some((cand, cx)) => {
                    u = cand;
                    x = cx;
                }
                None => break,
            }
        }
        let pz = pohozaev(&x, self.params);
        if pz.abs() <= 1e-10 * x.a {
            Ok(State {
                energy: energy(&x, self.params),
                u,
                summary: x,
            })
        } else {
            Err(Error::Degenerate(format!(
                "pohozaev retraction stalled at |P|/A = {:.3e}",
                pz.abs() / x.a
            )))
        }
    }

    /// Initial move onto the manifold along the dilation fiber, then the
    /// discrete retraction.
    fn initial_state(&self, init: &Field) -> Result<State> {
        let u = renormalize_mass(init, self.params.mass)?;
        let x = self.summarize(&u);
        let xi = summary_root(&x, self.params)?.clamp(-field::XI_MAX, field::XI_MAX);
        self.retract(&dilate_unguarded(&u, xi))
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Limited-memory inverse Hessian in the `L^2` metric, seeded with the
/// spectral preconditioner.
struct Lbfgs {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
}

impl Lbfgs {
    fn new(capacity: usize) -> Self {
        Self {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn push(&mut self, prob: &Problem, s: Vec<f64>, y: Vec<f64>) {
        let sy = prob.inner(&s, &y);
        let scale = (prob.inner(&s, &s) * prob.inner(&y, &y)).sqrt();
        if !(sy > 1e-10 * scale) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    fn direction(&self, prob: &Problem, g: &[f64], pre: &[f64]) -> Vec<f64> {
        let precondition = |v: Vec<f64>| {
            field::apply_multiplier(&Field::from_values_unchecked(prob.grid, v), pre).into_values()
        };
        let mut q = g.to_vec();
        let mut coeffs = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * prob.inner(s, &q);
            q.iter_mut().zip(y).for_each(|(q, y)| *q -= a * y);
            coeffs.push(a);
        }
        let mut r = precondition(q);
        if let Some((s, y, _)) = self.pairs.back() {
            let py = precondition(y.clone());
            let gamma = prob.inner(s, y) / prob.inner(y, &py);
            r.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(coeffs.iter().rev()) {
            let b = rho * prob.inner(y, &r);
            r.iter_mut().zip(s).for_each(|(r, s)| *r += (a - b) * s);
        }
        r
    }
}

/// Minimizes the energy on the mass sphere intersected with the Pohozaev
/// manifold, starting from `init`.
pub fn solve_ground_state(init: &Field, params: &ModelParams, config: &SolveConfig) -> Result<SolveReport> {
    config.validate()?;
    let grid = *init.grid();
    if grid != config.grid {
        return Err(Error::GridMismatch);
    }
    if grid.dim != params.dim {
        return Err(Error::InvalidArgument("grid and model dimensions differ".into()));
    }
    let prob = Problem::new(params, grid);
    let init = &perturb(init, config.seed)?;
    let a0 = prob.summarize(init).a;
    if !(a0 > 0.0) {
        return Err(Error::Degenerate(
            "initializer has zero seminorm (constant field)".into(),
        ));
    }
    let mut state = prob.initial_state(init)?;
    let a_floor = 1e-12 * state.summary.a;
    let precond_base: Vec<f64> = prob.symbol.clone();
    let mut history = Vec::new();
    let mut step = config.step_init;
    let mut iterations = 0;
    let mut stop_reason = String::from("max_iters reached");
    let mut symmetrized = false;
    let mut stall_ref = (0usize, state.energy);
    let mut memory = Lbfgs::new(LBFGS_MEMORY);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for it in 0..config.max_iters {
        iterations = it;
        let (gi, gp) = prob.gradients(&state.u);
        let (g, alpha, _) = prob.project_pair(&gi, state.u.values(), &gp);
        let tangent = prob.inner(&g, &g).sqrt();
        history.push(HistoryEntry {
            iteration: it,
            energy: state.energy,
            pohozaev_abs: pohozaev(&state.summary, params).abs(),
            grad_norm: tangent,
            symmetrized,
        });
        symmetrized = false;
        if tangent <= config.tol_grad * state.summary.a.max(1.0) {
            stop_reason = "tangent gradient below tolerance".into();
            break;
        }
        let shift = alpha.abs().max(1e-6);
        let pre: Vec<f64> = precond_base.iter().map(|m| 1.0 / (shift + m)).collect();
        if let Some((u_prev, g_prev)) = prev.take() {
            memory.push(&prob, diff(state.u.values(), &u_prev), diff(&g, &g_prev));
        }
        let mut d = memory.direction(&prob, &g, &pre);
        d = prob.project_pair(&d, state.u.values(), &gp).0;
        let mut gd = prob.inner(&g, &d);
        if !(gd > 0.0) && !memory.is_empty() {
            memory.clear();
            d = memory.direction(&prob, &g, &pre);
            d = prob.project_pair(&d, state.u.values(), &gp).0;
            gd = prob.inner(&g, &d);
        }
        if !(gd > 0.0) {
            stop_reason = "descent direction lost".into();
            break;
        }
        if !memory.is_empty() {
            step = 1.0;
        }
        let mut found = prob.line_search(&state, &d, gd, step, tangent, config.armijo)?;
        if found.is_none() && !memory.is_empty() {
            memory.clear();
            let d = prob
                .project_pair(&memory.direction(&prob, &g, &pre), state.u.values(), &gp)
                .0;
            let gd = prob.inner(&g, &d);
            if gd > 0.0 {
                found = prob.line_search(&state, &d, gd, f64::INFINITY, tangent, config.armijo)?;
            }
        }
        let Some((next, taken)) = found else {
            stop_reason = "line search stalled".into();
            break;
        };
        step = taken;
        if next.summary.a < a_floor {
            return Err(Error::FiberDegenerated);
        }
        prev = Some((state.u.values().to_vec(), g));
        state = next;
        step *= 2.0;
        iterations = it + 1;
        if stall_ref.1 - state.energy > STALL_TOL * state.energy.abs() {
            stall_ref = (it, state.energy);
        } else if it - stall_ref.0 >= STALL_WINDOW {
            stop_reason = "energy stalled".into();
            break;
        }
        let k = config.radial_projection_every;
        if k > 0 && (it + 1) % k == 0 && grid.dim > 1 {
            let (sym, _) = radial_symmetrize(&state.u)?;
            if let Ok(next) = prob.retract(&sym) {
                state = next;
                symmetrized = true;
                prev = None;
                memory.clear();
            }
        }
    }
    let tangent = prob.tangent_norm(&state.u);
    let x = state.summary;
    let mu = lagrange_multiplier(&x, params)?;
    let pz = pohozaev(&x, params);
    let pde = prob.pde_residual(&state.u, mu);
    let poh_rel = pz.abs() / x.a;
    let converged = tangent <= config.tol_grad * x.a.max(1.0) && poh_rel <= config.tol_pohozaev;
    Ok(SolveReport {
        level_kind: LEVEL_KIND.into(),
        params: *params,
        summary: x,
        energy_level: energy(&x, params),
        pohozaev_residual: poh_rel,
        mu,
        mu_identity_residual: (mu * x.m - params.eta * (params.zeta_p() - 1.0) * x.b_p).abs(),
        pde_residual: pde,
        tangent_gradient: tangent,
        outer_mass_fraction: state.u.outer_mass_fraction(),
        iterations,
        history,
        compactness_margin: None,
        converged,
        stop_reason,
        final_field: state.u,
    })
}

/// One named check of [`Diagnostics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub checks: Vec<Check>,
    pub threshold: f64,
}

impl Diagnostics {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// The five checks on a summary: threshold, multiplier sign, multiplier
/// identity, manifold energy identity and positivity.
pub fn diagnose_summary(summary: &FieldSummary, sobolev: f64, params: &ModelParams) -> Result<Diagnostics> {
    let e = energy(summary, params);
    let mu = lagrange_multiplier(summary, params)?;
    let threshold = compactness_threshold(sobolev, params);
    let mu_m = mu * summary.m;
    let ident = (mu_m - params.eta * (params.zeta_p() - 1.0) * summary.b_p).abs();
    let manifold = manifold_energy(summary, params);
    let energy_gap = (e - manifold).abs() / e.abs().max(f64::MIN_POSITIVE);
    let checks = vec![
        Check {
            name: "below_compactness_threshold".into(),
            pass: e < threshold,
            value: threshold - e,
            bound: 0.0,
        },
        Check {
            name: "negative_multiplier".into(),
            pass: mu < 0.0,
            value: mu,
            bound: 0.0,
        },
        Check {
            name: "multiplier_identity".into(),
            pass: ident <= 1e-8 * mu_m.abs(),
            value: ident,
            bound: 1e-8 * mu_m.abs(),
        },
        Check {
            name: "manifold_energy_identity".into(),
            pass: energy_gap <= 1e-8,
            value: energy_gap,
            bound: 1e-8,
        },
        Check {
            name: "positive_energy".into(),
            pass: e > 0.0,
            value: e,
            bound: 0.0,
        },
    ];
    Ok(Diagnostics { checks, threshold })
}

/// Diagnostics of a converged report against an estimated Sobolev constant.
pub fn diagnose(
    report: &SolveReport,
    constants: &ConstantsReport,
    params: &ModelParams,
) -> Result<Diagnostics> {
    if !report.converged {
        return Err(Error::Unconverged);
    }
    diagnose_summary(&report.summary, constants.s_est, params)
}

/// How the box is chosen for each coupling of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoxPolicy {
    /// Every entry uses `SweepConfig::solve.grid` and the initializer width given.
    Fixed { init_width: f64 },
    /// Half-length `box_factor * l` and initializer width `init_factor * l`,
    /// where `l` is the [`natural_length`] at that coupling; `n` comes from
    /// `SweepConfig::solve.grid`.
    Natural { box_factor: f64, init_factor: f64 },
}

impl Default for BoxPolicy {
    fn default() -> Self {
        BoxPolicy::Natural {
            box_factor: 16.0,
            init_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub solve: SolveConfig,
    pub boxes: BoxPolicy,
    /// Slope fit window in `eta`; `None` uses every converged entry.
    pub fit_range: Option<(f64, f64)>,
}

impl SweepConfig {
    pub fn new(solve: SolveConfig) -> Self {
        Self {
            solve,
            boxes: BoxPolicy::default(),
            fit_range: None,
        }
    }
}

/// Length `e^{-xi}` at which the unit-mass Gaussian of width 1 sits on the
/// Pohozaev manifold. Sampled with `n` points per axis on a half-length of 8.
pub fn natural_length(params: &ModelParams, n: usize) -> Result<f64> {
    let grid = GridSpec::new(params.dim, n, 8.0)?;
    let u = field::sample(&grid, field::Family::Gaussian { width: 1.0 })?;
    let u = renormalize_mass(&u, params.mass)?;
    let xi = summary_root(&field::summarize(&u, params)?, params)?;
    Ok((-xi).exp())
}

fn sweep_setup(params: &ModelParams, cfg: &SweepConfig) -> Result<(GridSpec, Field)> {
    let (grid, width) = match cfg.boxes {
        BoxPolicy::Fixed { init_width } => (cfg.solve.grid, init_width),
        BoxPolicy::Natural {
            box_factor,
            init_factor,
        } => {
            let n = cfg.solve.grid.points_per_axis;
            let l = natural_length(params, n)?;
            (GridSpec::new(params.dim, n, box_factor * l)?, init_factor * l)
        }
    };
    let init = field::sample(&grid, field::Family::Gaussian { width })?;
    Ok((grid, init))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eta: f64,
    pub grid: GridSpec,
    pub energy: f64,
    pub mu: f64,
    pub pohozaev_residual: f64,
    pub pde_residual: f64,
    pub outer_mass_fraction: f64,
    pub iterations: usize,
    pub converged: bool,
    pub compactness_margin: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub expected: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub level_kind: String,
    pub params: ModelParams,
    pub entries: Vec<SweepEntry>,
    pub slope: Option<SlopeFit>,
    /// Set when no slope could be fitted.
    pub slope_note: Option<String>,
    /// Energies strictly decreasing along converged entries.
    pub strictly_decreasing: bool,
    /// Smallest coupling from which every converged margin is positive.
    pub empirical_threshold_eta: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn entry_from(
    eta: f64,
    grid: GridSpec,
    res: Result<SolveReport>,
    constants: Option<&ConstantsReport>,
) -> SweepEntry {
    match res {
        Ok(mut r) => {
            if let Some(c) = constants {
                r.attach_constants(c);
            }
            SweepEntry {
                eta,
                grid,
                energy: r.energy_level,
                mu: r.mu,
                pohozaev_residual: r.pohozaev_residual,
                pde_residual: r.pde_residual,
                outer_mass_fraction: r.outer_mass_fraction,
                iterations: r.iterations,
                converged: r.converged,
                compactness_margin: r.compactness_margin,
                error: None,
            }
        }
        Err(e) => SweepEntry {
            eta,
            grid,
            energy: f64::NAN,
            mu: f64::NAN,
            pohozaev_residual: f64::NAN,
            pde_residual: f64::NAN,
            outer_mass_fraction: f64::NAN,
            iterations: 0,
            converged: false,
            compactness_margin: None,
            error: Some(e.to_string()),
        },
    }
}

/// Solves at every coupling in `etas`, in parallel. Entries are independent
/// and merged in the order of `etas`; per-entry failures are recorded.
pub fn sweep_eta(
    params_base: &ModelParams,
    etas: &[f64],
    cfg: &SweepConfig,
    constants: Option<&ConstantsReport>,
) -> Result<SweepReport> {
    if etas.is_empty() {
        return Err(Error::InvalidArgument("empty coupling list".into()));
    }
    if etas.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("couplings must be positive".into()));
    }
    if etas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "couplings must be strictly increasing".into(),
        ));
    }
    cfg.solve.validate()?;
    let entries: Vec<SweepEntry> = etas
        .par_iter()
        .map(|&eta| {
            let mut grid = cfg.solve.grid;
            let res = params_base.with_eta(eta).and_then(|p| {
                let (g, init) = sweep_setup(&p, cfg)?;
                grid = g;
                solve_ground_state(&init, &p, &SolveConfig { grid: g, ..cfg.solve })
            });
            entry_from(eta, grid, res, constants)
        })
        .collect();
    let in_range = |e: &SweepEntry| match cfg.fit_range {
        Some((lo, hi)) => e.eta >= lo && e.eta <= hi,
        None => true,
    };
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.converged && in_range(e) && e.energy > 0.0)
        .map(|e| (e.eta, e.energy))
        .collect();
    let expected = -params_base.exponents().level_decay_exponent;
    let (slope, slope_note) = match loglog_fit(&pts) {
        Some((s, b)) => (
            Some(SlopeFit {
                slope: s,
                intercept: b,
                expected,
                points: pts.len(),
            }),
            None,
        ),
        None => (
            None,
            Some(format!(
                "slope needs at least two converged entries, have {}",
                pts.len()
            )),
        ),
    };
    let conv: Vec<&SweepEntry> = entries.iter().filter(|e| e.converged).collect();
    let strictly_decreasing = conv.len() >= 2 && conv.windows(2).all(|w| w[1].energy < w[0].energy);
    let empirical_threshold_eta = constants.and_then(|_| {
        let mut threshold = None;
        for e in conv.iter().rev() {
            match e.compactness_margin {
                Some(m) if m > 0.0 => threshold = Some(e.eta),
                _ => break,
            }
        }
        threshold
    });
    Ok(SweepReport {
        level_kind: LEVEL_KIND.into(),
        params: *params_base,
        entries,
        slope,
        slope_note,
        strictly_decreasing,
        empirical_threshold_eta,
    })
}
