//! Grid estimates of the Sobolev and Gagliardo-Nirenberg constants.
//!
//! On a periodic box constants have zero seminorm, which sends the Sobolev
//! quotient to zero and the GN quotient to infinity. Both optimizations
//! therefore run on mean-free fields; see [`OptConfig`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, sample, Family, Field, FieldSummary};
use crate::functionals::{odd_power, SharpConstants};
use crate::grid::GridSpec;
use crate::params::ModelParams;

/// Relative agreement required between the last two refinement levels.
pub const REFINEMENT_TOLERANCE: f64 = 0.05;

/// `A / B_*^{2/2*}`.
pub fn sobolev_quotient(summary: &FieldSummary, params: &ModelParams) -> Result<f64> {
    if !(summary.b_star > 0.0) {
        return Err(Error::Degenerate("sobolev quotient of a zero field".into()));
    }
    Ok(summary.a / summary.b_star.powf(2.0 / params.two_star()))
}

/// `B_p / (A^{p zeta/2} M^{p(1 - zeta)/2})`; its supremum is `C^p`.
pub fn gn_quotient(summary: &FieldSummary, params: &ModelParams) -> Result<f64> {
    if !(summary.a > 0.0 && summary.m > 0.0 && summary.b_p > 0.0) {
        return Err(Error::Degenerate(format!(
            "gn quotient needs A, M, B_p > 0, got {summary:?}"
        )));
    }
    let p = params.p;
    let z = params.zeta_p();
    Ok(summary.b_p / (summary.a.powf(p * z / 2.0) * summary.m.powf(p * (1.0 - z) / 2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub max_iters: usize,
    /// Stop once the preconditioned gradient pairing drops below this.
    pub tol: f64,
    pub step_init: f64,
    pub armijo: f64,
    /// Accepted steps over which the log-quotient must move less than
    /// `stall_tol` to count as converged.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Number of grid levels `n, 2n, 4n, ...` in the refinement trace.
    pub levels: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            max_iters: 60_000,
            tol: 1e-22,
            step_init: 1.0,
            armijo: 1e-4,
            stall_window: 200,
            stall_tol: 1e-13,
            levels: 2,
        }
    }
}

/// Result of one quotient optimization on one grid.
#[derive(Debug, Clone)]
pub struct OptOutcome {
    pub value: f64,
    pub field: Field,
    /// Quotient after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementEntry {
    pub points_per_axis: usize,
    pub half_length: f64,
    pub estimate: f64,
    pub iterations: usize,
}

/// One constant estimated over a refinement sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    /// Estimate on the base grid.
    pub estimate: f64,
    pub grid: GridSpec,
    pub refinement: Vec<RefinementEntry>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub s_est: f64,
    /// `C(N, p, s)`; the optimized quotient is its `p`-th power.
    pub c_est: f64,
    pub c_pow_p_est: f64,
    pub sobolev: ConstantEstimate,
    pub gn: ConstantEstimate,
    pub converged: bool,
}

impl ConstantsReport {
    /// Report built from known values, with empty refinement traces.
    pub fn from_values(params: ModelParams, grid: GridSpec, sobolev: f64, c_pow_p: f64) -> Self {
        let single = |estimate| ConstantEstimate {
            estimate,
            grid,
            refinement: Vec::new(),
            converged: true,
        };
        Self {
            params,
            grid,
            s_est: sobolev,
            c_est: c_pow_p.powf(1.0 / params.p),
            c_pow_p_est: c_pow_p,
            sobolev: single(sobolev),
            gn: single(c_pow_p),
            converged: true,
        }
    }

    pub fn sharp(&self) -> SharpConstants {
        SharpConstants {
            sobolev: self.s_est,
            gn: self.c_est,
        }
    }

    /// `s S^{N/2s} / N`.
    pub fn compactness_threshold(&self) -> f64 {
        compactness_threshold(self.s_est, &self.params)
    }
}

pub fn compactness_threshold(sobolev: f64, params: &ModelParams) -> f64 {
    let n = params.dim as f64;
    params.s * sobolev.powf(n / (2.0 * params.s)) / n
}

#[derive(Clone, Copy)]
enum Target {
    Sobolev,
    Gn,
}

fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

struct Objective<'a> {
    params: &'a ModelParams,
    symbol: Vec<f64>,
    precond: Vec<f64>,
    target: Target,
}

impl Objective<'_> {
    /// Quantity minimized: `log Q` for Sobolev, `-log Q` for GN.
    fn value(&self, f: &Field) -> (f64, FieldSummary) {
        let x = field::summarize_with(f, self.params, &self.symbol);
        let v = match self.target {
            Target::Sobolev => x.a.ln() - 2.0 / self.params.two_star() * x.b_star.ln(),
            Target::Gn => {
                let (p, z) = (self.params.p, self.params.zeta_p());
                -(x.b_p.ln() - p * z / 2.0 * x.a.ln() - p * (1.0 - z) / 2.0 * x.m.ln())
            }
        };
        (if v.is_finite() { v } else { f64::INFINITY }, x)
    }

    fn gradient(&self, f: &Field, x: &FieldSummary) -> Vec<f64> {
        let lap = field::apply_multiplier(f, &self.symbol);
        let ts = self.params.two_star();
        let (p, z) = (self.params.p, self.params.zeta_p());
        let mut g: Vec<f64> = lap
            .values()
            .iter()
            .zip(f.values())
            .map(|(&l, &u)| match self.target {
                Target::Sobolev => 2.0 * l / x.a - 2.0 * odd_power(u, ts) / x.b_star,
                Target::Gn => -(p * odd_power(u, p) / x.b_p - p * z * l / x.a - p * (1.0 - z) * u / x.m),
            })
            .collect();
        remove_mean(&mut g);
        g
    }

    fn report(&self, v: f64) -> f64 {
        match self.target {
            Target::Sobolev => v.exp(),
            Target::Gn => (-v).exp(),
        }
    }
}

fn optimize(init: &Field, params: &ModelParams, cfg: &OptConfig, target: Target) -> Result<OptOutcome> {
    let grid = *init.grid();
    let symbol = field::multiplier(&grid, params.s);
    let precond = symbol.iter().map(|m| 1.0 / (1.0 + m)).collect();
    let obj = Objective {
        params,
        symbol,
        precond,
        target,
    };
    let mut vals = init.values().to_vec();
    remove_mean(&mut vals);
    let mut u = Field::from_values(grid, vals)?;
    if u.is_zero() {
        return Err(Error::Degenerate("initializer is constant".into()));
    }
    let (mut f, mut x) = obj.value(&u);
    if !f.is_finite() {
        return Err(Error::Degenerate("initial quotient is not finite".into()));
    }
    let cell = grid.cell_volume();
    let mut history = vec![obj.report(f)];
    let mut logs = vec![f];
    let mut step = cfg.step_init;
    for it in 0..cfg.max_iters {
        let w = cfg.stall_window;
        if w > 0 && logs.len() > w && (logs[logs.len() - 1 - w] - f).abs() <= cfg.stall_tol {
            return Ok(OptOutcome {
                value: obj.report(f),
                field: u,
                history,
                iterations: it,
                converged: true,
            });
        }
        let g = Field::from_values_unchecked(grid, obj.gradient(&u, &x));
        let d = field::apply_multiplier(&g, &obj.precond);
        let gd = cell * field::dot(g.values(), d.values());
        if gd <= cfg.tol {
            return Ok(OptOutcome {
                value: obj.report(f),
                field: u,
                history,
                iterations: it,
                converged: true,
            });
        }
        let mut accepted = None;
        for _ in 0..80 {
            let trial = u.add_scaled(-step, &d)?;
            let (ft, xt) = obj.value(&trial);
            if ft <= f - cfg.armijo * step * gd {
                accepted = Some((trial, ft, xt));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, ft, xt)) => {
                u = trial;
                f = ft;
                x = xt;
                history.push(obj.report(f));
                logs.push(f);
                step = (step * 2.0).min(1e6);
            }
            // No representable decrease remains: the quotient sits at its
            // floating-point floor.
            None => {
                return Ok(OptOutcome {
                    value: obj.report(f),
                    field: u,
                    history,
                    iterations: it,
                    converged: true,
                })
            }
        }
    }
    Ok(OptOutcome {
        value: obj.report(f),
        field: u,
        history,
        iterations: cfg.max_iters,
        converged: false,
    })
}

/// Minimizes the Sobolev quotient over mean-free fields starting from `init`.
pub fn minimize_sobolev(init: &Field, params: &ModelParams, cfg: &OptConfig) -> Result<OptOutcome> {
    optimize(init, params, cfg, Target::Sobolev)
}

/// Maximizes the GN quotient over mean-free fields starting from `init`.
pub fn maximize_gn(init: &Field, params: &ModelParams, cfg: &OptConfig) -> Result<OptOutcome> {
    optimize(init, params, cfg, Target::Gn)
}

/// Bubble initializer for the Sobolev estimate.
pub fn sobolev_initializer(grid: &GridSpec, params: &ModelParams) -> Result<Field> {
    sample(
        grid,
        Family::Bubble {
            s: params.s,
            scale: 1.0,
        },
    )
}

/// Gaussian initializer for the GN estimate.
pub fn gn_initializer(grid: &GridSpec) -> Result<Field> {
    sample(grid, Family::Gaussian { width: 1.0 })
}

fn refinement_grids(grid: &GridSpec, levels: usize) -> Result<Vec<GridSpec>> {
    if levels == 0 {
        return Err(Error::InvalidArgument("at least one refinement level".into()));
    }
    let mut out = vec![*grid];
    for _ in 1..levels {
        let next = out.last().expect("nonempty").refined()?;
        out.push(next);
    }
    Ok(out)
}

fn estimate(
    grid: &GridSpec,
    params: &ModelParams,
    cfg: &OptConfig,
    target: Target,
) -> Result<ConstantEstimate> {
    if grid.dim != params.dim {
        return Err(Error::InvalidArgument("grid and model dimensions differ".into()));
    }
    let grids = refinement_grids(grid, cfg.levels)?;
    let runs: Vec<Result<OptOutcome>> = grids
        .par_iter()
        .map(|g| {
            let init = match target {
                Target::Sobolev => sobolev_initializer(g, params)?,
                Target::Gn => gn_initializer(g)?,
            };
            optimize(&init, params, cfg, target)
        })
        .collect();
    let mut refinement = Vec::with_capacity(grids.len());
    for (g, run) in grids.iter().zip(runs) {
        let run = run?;
        if !run.converged {
            return Err(Error::NotConverged {
                iterations: run.iterations,
                last_value: run.value,
            });
        }
        refinement.push(RefinementEntry {
            points_per_axis: g.points_per_axis,
            half_length: g.half_length,
            estimate: run.value,
            iterations: run.iterations,
        });
    }
    let converged = match refinement.as_slice() {
        [.., a, b] => (a.estimate - b.estimate).abs() <= REFINEMENT_TOLERANCE * b.estimate.abs(),
        _ => false,
    };
    Ok(ConstantEstimate {
        estimate: refinement[0].estimate,
        grid: *grid,
        refinement,
        converged,
    })
}

/// Sobolev constant estimate with a refinement trace over `cfg.levels` grids.
pub fn estimate_sobolev(grid: &GridSpec, params: &ModelParams, cfg: &OptConfig) -> Result<ConstantEstimate> {
    estimate(grid, params, cfg, Target::Sobolev)
}

/// Estimate of `C^p`, the supremum of the GN quotient.
pub fn estimate_gn(grid: &GridSpec, params: &ModelParams, cfg: &OptConfig) -> Result<ConstantEstimate> {
    estimate(grid, params, cfg, Target::Gn)
}

pub fn estimate_constants(grid: &GridSpec, params: &ModelParams, cfg: &OptConfig) -> Result<ConstantsReport> {
    let (sob, gn) = rayon::join(
        || estimate_sobolev(grid, params, cfg),
        || estimate_gn(grid, params, cfg),
    );
    let (sob, gn) = (sob?, gn?);
    Ok(ConstantsReport {
        params: *params,
        grid: *grid,
        s_est: sob.estimate,
        c_est: gn.estimate.powf(1.0 / params.p),
        c_pow_p_est: gn.estimate,
        converged: sob.converged && gn.converged,
        sobolev: sob,
        gn,
    })
}

/// Fifty decaying test fields: Gaussians, Gaussian pairs, Mexican hats and
/// Gaussian-windowed band-limited noise, at widths between `L/40` and `L/14`.
pub fn probe_set(grid: &GridSpec, seed: u64) -> Vec<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_length;
    let dim = grid.dim;
    let mut out = Vec::with_capacity(50);
    for i in 0..50 {
        let width = l * rng.random_range(1.0 / 40.0..1.0 / 14.0);
        let mut centre = [0.0; 3];
        for c in centre.iter_mut().take(dim) {
            *c = rng.random_range(-l / 8.0..l / 8.0);
        }
        let r2 = move |x: &[f64], c: &[f64; 3], w: f64| {
            x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (w * w)
        };
        let f = match i % 4 {
            0 => Field::from_fn(*grid, |x| (-r2(x, &centre, width) / 2.0).exp()),
            1 => {
                let mut other = [0.0; 3];
                for c in other.iter_mut().take(dim) {
                    *c = rng.random_range(-l / 8.0..l / 8.0);
                }
                let w2 = l * rng.random_range(1.0 / 40.0..1.0 / 14.0);
                let amp = rng.random_range(-1.0..1.0);
                Field::from_fn(*grid, |x| {
                    (-r2(x, &centre, width) / 2.0).exp() + amp * (-r2(x, &other, w2) / 2.0).exp()
                })
            }
            2 => Field::from_fn(*grid, |x| {
                let q = r2(x, &centre, width);
                (1.0 - q / dim as f64) * (-q / 2.0).exp()
            }),
            _ => {
                let cutoff = rng.random_range(0.02..0.1);
                let noise = sample(
                    grid,
                    Family::RandomBandlimited {
                        cutoff,
                        seed: rng.random(),
                    },
                )
                .expect("valid cutoff");
                let window = Field::from_fn(*grid, |x| (-r2(x, &centre, width) / 2.0).exp());
                noise.mul(&window).expect("same grid")
            }
        };
        out.push(f);
    }
    out
}
