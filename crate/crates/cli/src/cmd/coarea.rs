//! Both sides of the coarea identity for one shape: E|∇_H u|_H against the
//! grid aggregate of the divergence-formula perimeter, from one sample set.

use std::path::PathBuf;

use gperim_core::{mc, Shape, Spectrum, TruncatedSpace};
use serde::{Deserialize, Serialize};

use crate::config::{load_file, parse_grid, resolve};
use crate::{output, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Shape text, e.g. "ball", "halfspace:a=1,0"
    #[arg(long)]
    shape: Option<String>,
    /// Spectrum text, e.g. "explicit:1,1"
    #[arg(long)]
    spectrum: Option<String>,
    /// Truncation dimension
    #[arg(long)]
    dim: Option<usize>,
    /// Level grid a:b:steps in u-units covering the essential range
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
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
    spectrum: Option<String>,
    dim: Option<usize>,
    levels: Option<String>,
    samples: Option<u64>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    shape: String,
    spectrum: String,
    dim: usize,
    levels: String,
    samples: u64,
    seed: u64,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = load_file(args.config.as_deref())?;
    let shape_text = resolve(args.shape, file.shape, "ball".into());
    let base_shape: Shape = shape_text.parse()?;
    // default grid: the u-range where the level density lives
    let default_levels = match base_shape {
        Shape::Halfspace { .. } => "-8:8:257",
        _ => "0:16:257",
    };
    let cfg = Config {
        command: "coarea",
        shape: shape_text,
        spectrum: resolve(args.spectrum, file.spectrum, "explicit:1,1".into()),
        dim: resolve(args.dim, file.dim, 2),
        levels: resolve(args.levels, file.levels, default_levels.into()),
        samples: resolve(args.samples, file.samples, 400_000),
        seed: resolve(args.seed, file.seed, 42),
    };
    let spectrum: Spectrum = cfg.spectrum.parse()?;
    let space = TruncatedSpace::new(spectrum, cfg.dim)?;
    let shape = base_shape.expand_to_dim(cfg.dim)?;
    let grid = parse_grid(&cfg.levels)?;
    let config_value = output::config_json(&cfg)?;

    let check = mc::coarea_check(&shape, &space, &grid, cfg.samples, cfg.seed)?;
    let gap = (check.lhs - check.rhs).abs();
    let tolerance = 0.01 * check.lhs.abs().max(check.rhs.abs())
        + 3.0 * check.lhs_std_error.hypot(check.rhs_std_error);
    let results = serde_json::json!({
        "check": check,
        "gap": gap,
        "tolerance": tolerance,
        "verdict": gap <= tolerance,
    });
    let json_text = output::json_document(&config_value, results)?;
    output::emit(args.out.as_deref(), None, &json_text)
}
