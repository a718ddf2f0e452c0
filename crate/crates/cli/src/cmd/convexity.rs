//! Log-concavity of t ↦ γ(tC) for a convex body containing the origin,
//! plus the boundary-mass decay γ({|u − level| ≤ ε}) → 0 for sublevel
//! bodies.

use std::path::PathBuf;

use gperim_core::cube::CubeFamily;
use gperim_core::mc::{self, ConvexBody};
use gperim_core::{Shape, Spectrum, TruncatedSpace};
use serde::{Deserialize, Serialize};

use crate::config::{load_file, parse_grid, resolve};
use crate::{output, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Shape text for a sublevel body {u < level}
    #[arg(long)]
    shape: Option<String>,
    /// Sublevel threshold
    #[arg(long)]
    level: Option<f64>,
    /// Probe the n-th box of the solved family instead of a sublevel set
    #[arg(long = "cube")]
    cube_n: Option<usize>,
    #[arg(long)]
    spectrum: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Dilation grid a:b:steps
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Slab half-widths for the boundary-mass probe (repeatable)
    #[arg(long = "eps")]
    eps: Vec<f64>,
    /// Threshold solver tolerance (box bodies)
    #[arg(long)]
    tol: Option<f64>,
    /// TOML file supplying defaults for the flags above
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output base path; writes <out>.json
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    shape: Option<String>,
    level: Option<f64>,
    cube_n: Option<usize>,
    spectrum: Option<String>,
    dim: Option<usize>,
    t_grid: Option<String>,
    samples: Option<u64>,
    seed: Option<u64>,
    eps: Option<Vec<f64>>,
    tol: Option<f64>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum BodyConfig {
    Sublevel {
        shape: String,
        level: f64,
        spectrum: String,
        dim: usize,
    },
    Cube {
        n: usize,
        tol: f64,
    },
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    body: BodyConfig,
    t_grid: String,
    samples: u64,
    seed: u64,
    eps: Vec<f64>,
}

#[derive(Serialize)]
struct BoundaryRow {
    eps: f64,
    mass: f64,
    density: f64,
    density_std_error: f64,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = load_file(args.config.as_deref())?;
    let cube_n = args.cube_n.or(file.cube_n);
    if cube_n.is_some() && (args.shape.is_some() || args.level.is_some()) {
        return Err(CliError::Config(
            "--cube conflicts with --shape/--level; pick one body".into(),
        ));
    }
    let mut eps = if args.eps.is_empty() {
        file.eps.unwrap_or_else(|| vec![0.1, 0.01, 0.001])
    } else {
        args.eps
    };
    if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(CliError::Config("slab half-widths must be positive".into()));
    }
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eps.dedup();

    let (body_cfg, default_grid) = match cube_n {
        Some(n) => (
            BodyConfig::Cube {
                n,
                tol: resolve(args.tol, file.tol, 1e-12),
            },
            "0.7:1.3:13",
        ),
        None => (
            BodyConfig::Sublevel {
                shape: resolve(args.shape, file.shape, "ball".into()),
                level: resolve(args.level, file.level, 1.0),
                spectrum: resolve(args.spectrum, file.spectrum, "explicit:1,1".into()),
                dim: resolve(args.dim, file.dim, 2),
            },
            "0.2:1.6:15",
        ),
    };
    let cfg = Config {
        command: "convexity",
        body: body_cfg,
        t_grid: resolve(args.t_grid, file.t_grid, default_grid.into()),
        samples: resolve(args.samples, file.samples, 200_000),
        seed: resolve(args.seed, file.seed, 42),
        eps,
    };
    let grid = parse_grid(&cfg.t_grid)?;
    let config_value = output::config_json(&cfg)?;

    let (concavity, boundary) = match &cfg.body {
        BodyConfig::Cube { n, tol } => {
            let family = CubeFamily::build(*n, *tol)?;
            let space = TruncatedSpace::new(Spectrum::explicit(vec![1.0; *n])?, *n)?;
            let body = ConvexBody::Cube { family: &family, n: *n };
            let report = mc::log_concavity_probe(&body, &space, &grid, cfg.samples, cfg.seed)?;
            (report, None)
        }
        BodyConfig::Sublevel {
            shape,
            level,
            spectrum,
            dim,
        } => {
            let spectrum: Spectrum = spectrum.parse()?;
            let space = TruncatedSpace::new(spectrum, *dim)?;
            let shape: Shape = shape.parse::<Shape>()?.expand_to_dim(*dim)?;
            let body = ConvexBody::Sublevel { shape: &shape, level: *level };
            let report = mc::log_concavity_probe(&body, &space, &grid, cfg.samples, cfg.seed)?;
            let boundary = boundary_mass(&shape, &space, *level, &cfg)?;
            (report, Some(boundary))
        }
    };
    let results = serde_json::json!({
        "concavity": concavity,
        "boundary_mass": boundary,
    });
    let json_text = output::json_document(&config_value, results)?;
    output::emit(args.out.as_deref(), None, &json_text)
}

/// Slab masses at shrinking half-widths; they should fall roughly linearly
/// in ε because the level density is bounded near the level.
fn boundary_mass(
    shape: &Shape,
    space: &TruncatedSpace,
    level: f64,
    cfg: &Config,
) -> Result<serde_json::Value, CliError> {
    let mut rows = Vec::new();
    for (i, &eps) in cfg.eps.iter().enumerate() {
        let est = mc::density_k(shape, space, level, eps, cfg.samples, cfg.seed + 1 + i as u64)?;
        rows.push(BoundaryRow {
            eps,
            mass: est.value * 2.0 * eps,
            density: est.value,
            density_std_error: est.std_error,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].mass <= w[0].mass);
    let approximately_linear = rows.windows(2).all(|w| {
        let expected = w[0].eps / w[1].eps;
        if w[1].mass <= 0.0 {
            return false;
        }
        let actual = w[0].mass / w[1].mass;
        actual >= expected / 2.5 && actual <= expected * 2.5
    });
    Ok(serde_json::json!({
        "rows": rows,
        "decreasing": decreasing,
        "approximately_linear": approximately_linear,
    }))
}
