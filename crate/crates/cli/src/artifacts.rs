//! Artifact files: CSV tables, JSON reports, plots and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fracground::solver::{HistoryEntry, SlopeFit, SweepEntry};
use fracground::Field;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::svg::{Plot, Scale, Series, Style};

pub const PROFILE_CSV: &str = "profile.csv";
pub const PROFILE_SVG: &str = "profile.svg";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SLOPE_JSON: &str = "slope.json";
pub const LOGLOG_SVG: &str = "loglog.svg";

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Collects written files and emits the manifest last.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    threads: usize,
    config: &'a RunConfig,
    artifacts: &'a [ArtifactEntry],
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.entries.retain(|e| e.file != name);
        self.entries.push(ArtifactEntry {
            file: name.into(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, command: &str, config: &RunConfig, manifest_name: &str) -> Result<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            threads: rayon::current_num_threads(),
            config,
            artifacts: &self.entries,
        };
        let path = self.dir.join(manifest_name);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// Writes `value` as the shortest round-trip representation; NaN stays "NaN".
fn num(value: f64) -> String {
    format!("{value:e}")
}

pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut out = String::from("iteration,energy,pohozaev_abs,grad_norm,symmetrized\n");
    for h in history {
        out += &format!(
            "{},{},{},{},{}\n",
            h.iteration,
            num(h.energy),
            num(h.pohozaev_abs),
            num(h.grad_norm),
            h.symmetrized
        );
    }
    out
}

/// Radial profile: mean of `u` over shells `|x|` in `[k h, (k+1) h)`, up to `L`.
pub fn radial_profile(u: &Field) -> Vec<(f64, f64)> {
    let g = u.grid();
    let h = g.spacing();
    let bins = g.points_per_axis / 2;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (r, v) in g.radii().iter().zip(u.values()) {
        let k = (r / h + 1e-9).floor() as usize;
        if k < bins {
            sum[k] += v;
            count[k] += 1;
        }
    }
    (0..bins)
        .filter(|&k| count[k] > 0)
        .map(|k| (k as f64 * h, sum[k] / count[k] as f64))
        .collect()
}

pub fn profile_csv(profile: &[(f64, f64)]) -> String {
    let mut out = String::from("r,u\n");
    for (r, v) in profile {
        out += &format!("{},{}\n", num(*r), num(*v));
    }
    out
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    r: f64,
    u: f64,
}

/// Parses a CSV file into rows, reporting the offending line on failure.
fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        match rec {
            Ok(row) => rows.push(row),
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                bail!("{} line {line}: {e}", path.display());
            }
        }
    }
    Ok(rows)
}

pub fn profile_plot(csv_path: &Path) -> Result<String> {
    let rows: Vec<ProfileRow> = read_rows(csv_path)?;
    if rows.is_empty() {
        bail!("{} has no data rows", csv_path.display());
    }
    Ok(Plot {
        title: "radial profile of the computed state".into(),
        x_label: "|x|".into(),
        y_label: "u".into(),
        x_scale: Scale::Linear,
        y_scale: Scale::Linear,
        series: vec![Series {
            label: "u(|x|)".into(),
            points: rows.iter().map(|r| (r.r, r.u)).collect(),
            style: Style::Line,
            color: "#1f77b4",
        }],
    }
    .render())
}

const SWEEP_HEADER: &str = "eta,energy,mu,pohozaev_residual,pde_residual,outer_mass_fraction,iterations,converged,compactness_margin,points_per_axis,half_length,error";

#[derive(Debug, Deserialize)]
struct SweepRow {
    eta: f64,
    energy: f64,
    converged: bool,
}

pub fn sweep_csv(entries: &[SweepEntry]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for e in entries {
        let margin = e.compactness_margin.map(num).unwrap_or_default();
        let error = e.error.as_deref().unwrap_or("").replace([',', '\n', '"'], " ");
        out += &format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            num(e.eta),
            num(e.energy),
            num(e.mu),
            num(e.pohozaev_residual),
            num(e.pde_residual),
            num(e.outer_mass_fraction),
            e.iterations,
            e.converged,
            margin,
            e.grid.points_per_axis,
            num(e.grid.half_length),
            error
        );
    }
    out
}

/// Contents of `slope.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub slope: Option<SlopeFit>,
    pub slope_note: Option<String>,
    /// Reference exponent `-4s/(Np - 2N - 4s)`.
    pub expected: f64,
    pub fit_range: Option<(f64, f64)>,
    pub strictly_decreasing: bool,
    pub empirical_threshold_eta: Option<f64>,
    pub level_kind: String,
}

pub fn loglog_plot(csv_path: &Path, slope_path: &Path) -> Result<String> {
    let rows: Vec<SweepRow> = read_rows(csv_path)?;
    let text = fs::read_to_string(slope_path).with_context(|| format!("reading {}", slope_path.display()))?;
    let slope: SlopeSummary =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", slope_path.display()))?;
    let data: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.converged && r.energy > 0.0)
        .map(|r| (r.eta, r.energy))
        .collect();
    let mut series = vec![Series {
        label: "computed level".into(),
        points: data.clone(),
        style: Style::Markers,
        color: "black",
    }];
    let in_fit: Vec<(f64, f64)> = data
        .iter()
        .copied()
        .filter(|(eta, _)| slope.fit_range.is_none_or(|(lo, hi)| *eta >= lo && *eta <= hi))
        .collect();
    if let (Some(first), Some(last)) = (in_fit.first(), in_fit.last()) {
        let ends = [first.0, last.0];
        if let Some(fit) = &slope.slope {
            series.push(Series {
                label: format!("fit, slope {:.4}", fit.slope),
                points: ends
                    .iter()
                    .map(|x| (*x, (fit.intercept + fit.slope * x.ln()).exp()))
                    .collect(),
                style: Style::Line,
                color: "#1f77b4",
            });
        }
        // reference line through the geometric mean of the fitted points
        let n = in_fit.len() as f64;
        let mx = in_fit.iter().map(|p| p.0.ln()).sum::<f64>() / n;
        let my = in_fit.iter().map(|p| p.1.ln()).sum::<f64>() / n;
        series.push(Series {
            label: format!("reference slope {:.4}", slope.expected),
            points: ends
                .iter()
                .map(|x| (*x, (my + slope.expected * (x.ln() - mx)).exp()))
                .collect(),
            style: Style::Dashed,
            color: "#d62728",
        });
    }
    Ok(Plot {
        title: "level against coupling".into(),
        x_label: "eta".into(),
        y_label: "E".into(),
        x_scale: Scale::Log,
        y_scale: Scale::Log,
        series,
    }
    .render())
}
