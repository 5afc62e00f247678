//! Run configuration: a TOML file (`key = value` under `[sections]`) merged
//! with command-line flags. Flags win.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use fracground::{BoxPolicy, ConstantsReport, GridSpec, ModelParams, OptConfig, SolveConfig};
use serde::{Deserialize, Serialize};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Coupling list, comma separated; `solve` takes exactly one value.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    /// Grid as `N:n:L` (dimension, points per axis, half length).
    #[arg(long, global = true, value_name = "N:n:L")]
    pub grid: Option<String>,
    /// Model as `s,p,eta,m`.
    #[arg(long, global = true, value_name = "s,p,eta,m")]
    pub params: Option<String>,
    /// Perturbation seed for the initial state (0 keeps it unperturbed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Radial symmetrization period in iterations (0 disables).
    #[arg(long, global = true, value_name = "INT")]
    pub radial_every: Option<usize>,
    /// Iteration cap per solve.
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// Constants report JSON used for threshold checks.
    #[arg(long, global = true, value_name = "PATH")]
    pub constants: Option<PathBuf>,
    /// Grid levels in the constants refinement trace.
    #[arg(long, global = true)]
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    solve: SolveSection,
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    constants: ConstantsSection,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    s: Option<f64>,
    p: Option<f64>,
    eta: Option<f64>,
    mass: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    dim: Option<usize>,
    n: Option<usize>,
    half_length: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveSection {
    step_init: Option<f64>,
    armijo: Option<f64>,
    tol_grad: Option<f64>,
    tol_pohozaev: Option<f64>,
    max_iters: Option<usize>,
    radial_every: Option<usize>,
    seed: Option<u64>,
    init_width: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    etas: Option<Vec<f64>>,
    /// `"natural"` or `"fixed"`.
    boxes: Option<String>,
    box_factor: Option<f64>,
    init_factor: Option<f64>,
    init_width: Option<f64>,
    fit_min: Option<f64>,
    fit_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsSection {
    file: Option<PathBuf>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    levels: Option<usize>,
}

/// Fully resolved configuration; serialized into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub solve: SolveConfig,
    /// Initializer width for `solve`; `None` uses `L/8`.
    pub init_width: Option<f64>,
    pub etas: Vec<f64>,
    pub boxes: BoxPolicy,
    pub fit_range: Option<(f64, f64)>,
    pub optimizer: OptConfig,
    pub constants_file: Option<PathBuf>,
    pub out: PathBuf,
}

/// Model defaults per dimension: the 1D baseline and a half-Laplacian in 2D and 3D.
fn default_model(dim: usize) -> (f64, f64) {
    match dim {
        1 => (0.4, 6.0),
        2 => (0.5, 3.5),
        _ => (0.5, 2.8),
    }
}

fn parse_grid(text: &str) -> Result<(usize, usize, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let [d, n, l] = parts.as_slice() else {
        bail!("--grid expects N:n:L, got {text:?}");
    };
    Ok((
        d.trim()
            .parse()
            .with_context(|| format!("grid dimension {d:?}"))?,
        n.trim().parse().with_context(|| format!("grid size {n:?}"))?,
        l.trim()
            .parse()
            .with_context(|| format!("grid half length {l:?}"))?,
    ))
}

fn parse_params(text: &str) -> Result<[f64; 4]> {
    let vals = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("parameter {v:?}"))
        })
        .collect::<Result<Vec<f64>>>()?;
    match vals.as_slice() {
        [s, p, eta, m] => Ok([*s, *p, *eta, *m]),
        _ => bail!("--params expects s,p,eta,m, got {text:?}"),
    }
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

impl RunConfig {
    /// Merges the config file (if any) with `flags`, then validates.
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let flag_grid = flags.grid.as_deref().map(parse_grid).transpose()?;
        let flag_params = flags.params.as_deref().map(parse_params).transpose()?;

        let dim = flag_grid.map(|g| g.0).or(file.grid.dim).unwrap_or(1);
        let grid = match flag_grid {
            Some((d, n, l)) => GridSpec::new(d, n, l)?,
            None => {
                let default = GridSpec::default_for_dim(dim)?;
                GridSpec::new(
                    dim,
                    file.grid.n.unwrap_or(default.points_per_axis),
                    file.grid.half_length.unwrap_or(default.half_length),
                )?
            }
        };

        let (s0, p0) = default_model(dim);
        let [s, p, mut eta, mass] = flag_params.unwrap_or([
            file.model.s.unwrap_or(s0),
            file.model.p.unwrap_or(p0),
            file.model.eta.unwrap_or(1.0),
            file.model.mass.unwrap_or(1.0),
        ]);
        let etas = flags
            .eta
            .clone()
            .or_else(|| file.sweep.etas.clone())
            .unwrap_or_default();
        if let (Some(_), [single]) = (&flags.eta, etas.as_slice()) {
            eta = *single;
        }
        let params = ModelParams::new(dim, s, p, eta, mass)?;

        let mut solve = SolveConfig::new(grid);
        let fs = &file.solve;
        solve.step_init = fs.step_init.unwrap_or(solve.step_init);
        solve.armijo = fs.armijo.unwrap_or(solve.armijo);
        solve.tol_grad = fs.tol_grad.unwrap_or(solve.tol_grad);
        solve.tol_pohozaev = fs.tol_pohozaev.unwrap_or(solve.tol_pohozaev);
        solve.max_iters = flags.max_iters.or(fs.max_iters).unwrap_or(solve.max_iters);
        solve.radial_projection_every = flags.radial_every.or(fs.radial_every).unwrap_or(0);
        solve.seed = flags.seed.or(fs.seed).unwrap_or(0);
        solve.validate()?;

        let sw = &file.sweep;
        let boxes = match sw.boxes.as_deref().unwrap_or("natural") {
            "natural" => {
                let BoxPolicy::Natural {
                    box_factor,
                    init_factor,
                } = BoxPolicy::default()
                else {
                    unreachable!("default box policy is natural")
                };
                BoxPolicy::Natural {
                    box_factor: sw.box_factor.unwrap_or(box_factor),
                    init_factor: sw.init_factor.unwrap_or(init_factor),
                }
            }
            "fixed" => BoxPolicy::Fixed {
                init_width: sw.init_width.unwrap_or(grid.half_length / 8.0),
            },
            other => bail!("sweep.boxes must be \"natural\" or \"fixed\", got {other:?}"),
        };
        let fit_range = match (sw.fit_min, sw.fit_max) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(f64::INFINITY))),
        };

        let mut optimizer = OptConfig::default();
        let fc = &file.constants;
        optimizer.max_iters = fc.max_iters.unwrap_or(optimizer.max_iters);
        optimizer.tol = fc.tol.unwrap_or(optimizer.tol);
        optimizer.levels = flags.levels.or(fc.levels).unwrap_or(optimizer.levels);
        if optimizer.levels == 0 {
            bail!("constants.levels must be at least 1");
        }

        Ok(Self {
            params,
            grid,
            solve,
            init_width: fs.init_width,
            etas,
            boxes,
            fit_range,
            optimizer,
            constants_file: flags.constants.clone().or(file.constants.file),
            out: flags
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("fracground-out")),
        })
    }

    /// Loads the constants report, if one is configured and present.
    pub fn load_constants(&self) -> Result<Option<ConstantsReport>> {
        let Some(path) = &self.constants_file else {
            return Ok(None);
        };
        if !path.exists() {
            eprintln!("warning: constants file {} not found", path.display());
            return Ok(None);
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let report: ConstantsReport =
            serde_json::from_str(&text).with_context(|| format!("parsing constants {}", path.display()))?;
        if report.params.dim != self.params.dim {
            bail!(
                "constants file is for dimension {}, run is dimension {}",
                report.params.dim,
                self.params.dim
            );
        }
        Ok(Some(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_1d_baseline() {
        let c = RunConfig::resolve(&Flags::default()).unwrap();
        assert_eq!(c.grid, GridSpec::default_for_dim(1).unwrap());
        assert_eq!(
            (c.params.s, c.params.p, c.params.eta, c.params.mass),
            (0.4, 6.0, 1.0, 1.0)
        );
        assert_eq!(c.solve.seed, 0);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "[model]\neta = 3.0\n[grid]\ndim = 1\nn = 256\n[solve]\nseed = 4\nmax_iters = 10\n",
        )
        .unwrap();
        let flags = Flags {
            config: Some(path.clone()),
            seed: Some(9),
            ..Flags::default()
        };
        let c = RunConfig::resolve(&flags).unwrap();
        assert_eq!(c.params.eta, 3.0);
        assert_eq!(c.grid.points_per_axis, 256);
        assert_eq!((c.solve.seed, c.solve.max_iters), (9, 10));
        let flags = Flags {
            config: Some(path),
            grid: Some("2:64:10".into()),
            params: Some("0.5,3.5,2,1".into()),
            ..Flags::default()
        };
        let c = RunConfig::resolve(&flags).unwrap();
        assert_eq!(
            (c.grid.dim, c.grid.points_per_axis, c.grid.half_length),
            (2, 64, 10.0)
        );
        assert_eq!((c.params.dim, c.params.eta), (2, 2.0));
    }

    #[test]
    fn invalid_model_names_the_bound() {
        let flags = Flags {
            params: Some("0.4,2.1,1,1".into()),
            ..Flags::default()
        };
        let err = RunConfig::resolve(&flags).unwrap_err().to_string();
        assert!(err.contains("p must exceed 2 + 4s/N"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "[solve]\nsteps = 3\n").unwrap();
        let flags = Flags {
            config: Some(path),
            ..Flags::default()
        };
        assert!(RunConfig::resolve(&flags).is_err());
    }

    #[test]
    fn malformed_grid_flag() {
        assert!(parse_grid("1:1024").is_err());
        assert!(parse_grid("1:x:4").is_err());
        assert_eq!(parse_grid("2:128:20").unwrap(), (2, 128, 20.0));
    }
}
