use std::path::Path;

use anyhow::{bail, Result};
use fracground::constants::estimate_constants;
use fracground::field::{sample, Family};
use fracground::io::write_field;
use fracground::solver::{
    default_initializer, diagnose_summary, perturb, solve_ground_state, sweep_eta, Diagnostics,
};
use fracground::verify::{run_suite, Status, VerifyOptions};
use fracground::{Error, FieldSummary, ModelParams, SweepConfig};
use serde::Serialize;

use crate::artifacts::{self, ArtifactWriter, SlopeSummary};
use crate::config::RunConfig;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Ran, but did not converge or a check failed.
    Incomplete,
}

impl Outcome {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Outcome::Success
        } else {
            Outcome::Incomplete
        }
    }
}

/// `report.json`: the solve report without the field and history, which
/// have their own artifacts.
#[derive(Serialize)]
struct SolveSummary<'a> {
    level_kind: &'a str,
    params: &'a ModelParams,
    summary: &'a FieldSummary,
    energy_level: f64,
    pohozaev_residual: f64,
    mu: f64,
    mu_identity_residual: f64,
    pde_residual: f64,
    tangent_gradient: f64,
    outer_mass_fraction: f64,
    iterations: usize,
    compactness_margin: Option<f64>,
    converged: bool,
    stop_reason: &'a str,
    diagnostics: Option<Diagnostics>,
    diagnostics_note: Option<String>,
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid;
    let init = match cfg.init_width {
        Some(width) => sample(&grid, Family::Gaussian { width })?,
        None => default_initializer(&grid)?,
    };
    let init = perturb(&init, cfg.solve.seed)?;
    let mut report = solve_ground_state(&init, &cfg.params, &cfg.solve)?;
    let constants = cfg.load_constants()?;
    if let Some(c) = &constants {
        report.attach_constants(c);
    }
    let (diagnostics, note) = if report.converged {
        let sobolev = constants.as_ref().map_or(f64::INFINITY, |c| c.s_est);
        let mut d = diagnose_summary(&report.summary, sobolev, &cfg.params)?;
        let note = if constants.is_none() {
            d.checks.retain(|c| c.name != "below_compactness_threshold");
            Some("threshold check needs a constants report".to_string())
        } else {
            None
        };
        (Some(d), note)
    } else {
        (None, Some("not converged; diagnostics not evaluated".to_string()))
    };
    let ok = report.converged && diagnostics.as_ref().is_some_and(Diagnostics::all_pass);

    let mut out = ArtifactWriter::new(&cfg.out)?;
    out.write_json(
        "report.json",
        &SolveSummary {
            level_kind: &report.level_kind,
            params: &report.params,
            summary: &report.summary,
            energy_level: report.energy_level,
            pohozaev_residual: report.pohozaev_residual,
            mu: report.mu,
            mu_identity_residual: report.mu_identity_residual,
            pde_residual: report.pde_residual,
            tangent_gradient: report.tangent_gradient,
            outer_mass_fraction: report.outer_mass_fraction,
            iterations: report.iterations,
            compactness_margin: report.compactness_margin,
            converged: report.converged,
            stop_reason: &report.stop_reason,
            diagnostics,
            diagnostics_note: note,
        },
    )?;
    out.write("history.csv", artifacts::history_csv(&report.history).as_bytes())?;
    let mut bin = Vec::new();
    write_field(&mut bin, &report.final_field, cfg.params.s)?;
    out.write("field.bin", &bin)?;
    out.write(
        artifacts::PROFILE_CSV,
        artifacts::profile_csv(&artifacts::radial_profile(&report.final_field)).as_bytes(),
    )?;
    let svg = artifacts::profile_plot(&out.path(artifacts::PROFILE_CSV))?;
    out.write(artifacts::PROFILE_SVG, svg.as_bytes())?;
    out.finish("solve", cfg, "manifest.json")?;

    println!(
        "E = {:.12e}  mu = {:.6e}  |P|/A = {:.2e}  residual = {:.2e}  iterations = {}  converged = {} ({})",
        report.energy_level,
        report.mu,
        report.pohozaev_residual,
        report.pde_residual,
        report.iterations,
        report.converged,
        report.stop_reason
    );
    Ok(Outcome::from_ok(ok))
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.etas.is_empty() {
        bail!("sweep needs a non-empty coupling list (--eta or sweep.etas)");
    }
    let constants = cfg.load_constants()?;
    let sweep_cfg = SweepConfig {
        solve: cfg.solve,
        boxes: cfg.boxes,
        fit_range: cfg.fit_range,
    };
    let report = sweep_eta(&cfg.params, &cfg.etas, &sweep_cfg, constants.as_ref())?;

    let mut out = ArtifactWriter::new(&cfg.out)?;
    out.write(
        artifacts::SWEEP_CSV,
        artifacts::sweep_csv(&report.entries).as_bytes(),
    )?;
    out.write_json(
        artifacts::SLOPE_JSON,
        &SlopeSummary {
            slope: report.slope,
            slope_note: report.slope_note.clone(),
            expected: -cfg.params.exponents().level_decay_exponent,
            fit_range: cfg.fit_range,
            strictly_decreasing: report.strictly_decreasing,
            empirical_threshold_eta: report.empirical_threshold_eta,
            level_kind: report.level_kind.clone(),
        },
    )?;
    let svg = artifacts::loglog_plot(&out.path(artifacts::SWEEP_CSV), &out.path(artifacts::SLOPE_JSON))?;
    out.write(artifacts::LOGLOG_SVG, svg.as_bytes())?;
    out.finish("sweep", cfg, "manifest.json")?;

    for e in &report.entries {
        match &e.error {
            Some(err) => println!("eta = {:<10} error: {err}", e.eta),
            None => println!(
                "eta = {:<10} E = {:.6e}  mu = {:.4e}  converged = {}",
                e.eta, e.energy, e.mu, e.converged
            ),
        }
    }
    match (&report.slope, &report.slope_note) {
        (Some(fit), _) => println!(
            "slope = {:.4} over {} points (reference {:.4})",
            fit.slope, fit.points, fit.expected
        ),
        (None, Some(note)) => println!("no slope: {note}"),
        (None, None) => {}
    }
    if let Some(eta) = report.empirical_threshold_eta {
        println!("margin positive from eta = {eta}");
    }
    let ok = report.entries.iter().all(|e| e.converged);
    Ok(Outcome::from_ok(ok))
}

pub fn constants(cfg: &RunConfig) -> Result<Outcome> {
    let report = match estimate_constants(&cfg.grid, &cfg.params, &cfg.optimizer) {
        Ok(r) => r,
        Err(e @ Error::NotConverged { .. }) => {
            eprintln!("constants: {e}");
            return Ok(Outcome::Incomplete);
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = ArtifactWriter::new(&cfg.out)?;
    out.write_json("constants.json", &report)?;
    out.finish("constants", cfg, "manifest.json")?;
    println!(
        "S = {:.8}  C = {:.8}  C^p = {:.8}  refinement-stable = {}",
        report.s_est, report.c_est, report.c_pow_p_est, report.converged
    );
    Ok(Outcome::from_ok(report.converged))
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let opts = VerifyOptions {
        seed: cfg.solve.seed.max(1),
        constants: cfg.load_constants()?,
        ..VerifyOptions::default()
    };
    let report = run_suite(&opts, None);
    let width = report.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &report.rows {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skipped",
        };
        println!(
            "{:<width$}  {status:<7}  {:>10.3e}  {:>10.3e}  {}",
            r.name, r.measured, r.bound, r.detail
        );
    }
    let mut out = ArtifactWriter::new(&cfg.out)?;
    out.write_json("verify.json", &report)?;
    out.finish("verify", cfg, "manifest.json")?;
    Ok(Outcome::from_ok(report.all_pass()))
}

/// Regenerates the SVGs under `input` from the persisted tables.
pub fn plot(cfg: &RunConfig, input: &Path) -> Result<Outcome> {
    let profile = input.join(artifacts::PROFILE_CSV);
    let sweep = input.join(artifacts::SWEEP_CSV);
    if !profile.exists() && !sweep.exists() {
        bail!(
            "no {} or {} in {}",
            artifacts::PROFILE_CSV,
            artifacts::SWEEP_CSV,
            input.display()
        );
    }
    let mut out = ArtifactWriter::new(&cfg.out)?;
    if profile.exists() {
        out.write(
            artifacts::PROFILE_SVG,
            artifacts::profile_plot(&profile)?.as_bytes(),
        )?;
    }
    if sweep.exists() {
        let svg = artifacts::loglog_plot(&sweep, &input.join(artifacts::SLOPE_JSON))?;
        out.write(artifacts::LOGLOG_SVG, svg.as_bytes())?;
    }
    out.finish("plot", cfg, "plot-manifest.json")?;
    Ok(Outcome::Success)
}
