//! Perimeter profile of a sublevel-set family over a radius grid. For balls
//! and ellipsoids the grid is in radius units r (the sublevel set {u < r²});
//! for halfspaces it is the level itself.

use std::path::PathBuf;

use gperim_core::mc::{self, ProfileBatches};
use gperim_core::shape::BallThresholds;
use gperim_core::{Profile, Shape, Spectrum, TruncatedSpace};
use serde::{Deserialize, Serialize};

use crate::config::{load_file, parse_grid, resolve};
use crate::{output, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Shape text, e.g. "ball", "ball:center=0.3,-0.2", "halfspace:a=1,0"
    #[arg(long)]
    shape: Option<String>,
    /// Spectrum text, e.g. "explicit:1,1", "power:alpha=2"
    #[arg(long)]
    spectrum: Option<String>,
    /// Truncation dimension
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated dimension sweep; takes precedence over --dim
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Radius grid a:b:steps
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file supplying defaults for the flags above
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output base path; writes <out>.csv and <out>.json
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    shape: Option<String>,
    spectrum: Option<String>,
    dim: Option<usize>,
    dims: Option<Vec<usize>>,
    levels: Option<String>,
    samples: Option<u64>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    shape: String,
    spectrum: String,
    dims: Vec<usize>,
    levels: String,
    samples: u64,
    seed: u64,
}

#[derive(Serialize)]
struct EndPoint {
    r: f64,
    value: f64,
    std_error: f64,
    /// |value| < 5·std_error, the sense in which the profile vanishes there.
    consistent_with_zero: bool,
}

#[derive(Serialize)]
struct MonotoneVerdicts {
    rising_below_r0: bool,
    falling_above_r1: bool,
    violations: usize,
}

#[derive(Serialize)]
struct DimReport {
    dim: usize,
    n_samples: u64,
    n_rejected: u64,
    /// Curvature sign thresholds (balls only).
    thresholds: Option<BallThresholds>,
    vanishing_ends: [EndPoint; 2],
    /// Adjacent-pair monotonicity against the thresholds, with common
    /// random numbers deciding the 3σ slack (balls only).
    monotone: Option<MonotoneVerdicts>,
}

#[derive(Serialize)]
struct SweepPair {
    from_dim: usize,
    to_dim: usize,
    max_abs_gap: f64,
    /// Largest over levels of |gap| / (3·combined SE + 0.01).
    worst_ratio: f64,
    pass: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = load_file(args.config.as_deref())?;
    let dims = match args.dims.or(file.dims) {
        Some(dims) if !dims.is_empty() => dims,
        Some(_) => return Err(CliError::Config("dimension sweep is empty".into())),
        None => vec![resolve(args.dim, file.dim, 2)],
    };
    let cfg = Config {
        command: "profile",
        shape: resolve(args.shape, file.shape, "ball".into()),
        spectrum: resolve(args.spectrum, file.spectrum, "explicit:1,1".into()),
        dims,
        levels: resolve(args.levels, file.levels, "0.05:4:40".into()),
        samples: resolve(args.samples, file.samples, 10_000),
        seed: resolve(args.seed, file.seed, 42),
    };
    let spectrum: Spectrum = cfg.spectrum.parse()?;
    let base_shape: Shape = cfg.shape.parse()?;
    let radii = parse_grid(&cfg.levels)?;
    let config_value = output::config_json(&cfg)?;

    let sweep = cfg.dims.len() > 1;
    let mut csv = String::from(if sweep {
        "dim,r,value,std_error\n"
    } else {
        "r,value,std_error\n"
    });
    let mut reports = Vec::new();
    let mut profiles: Vec<(usize, Profile)> = Vec::new();
    for &dim in &cfg.dims {
        let space = TruncatedSpace::new(spectrum.clone(), dim)?;
        let shape = base_shape.expand_to_dim(dim)?;
        let levels = radius_grid_to_levels(&shape, &radii)?;
        let (profile, batches) =
            mc::perimeter_divergence_profile(&shape, &space, &levels, cfg.samples, cfg.seed)?;
        for (i, est) in profile.estimates().iter().enumerate() {
            if sweep {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    dim, radii[i], est.value, est.std_error
                ));
            } else {
                csv.push_str(&format!("{},{},{}\n", radii[i], est.value, est.std_error));
            }
        }
        reports.push(dim_report(dim, &shape, &space, &radii, &profile, &batches)?);
        profiles.push((dim, profile));
    }
    let sweep_report = sweep.then(|| {
        let pairs = sweep_pairs(&profiles);
        let cauchy = pairs.iter().all(|p| p.pass);
        serde_json::json!({ "pairs": pairs, "cauchy": cauchy })
    });
    let results = serde_json::json!({
        "per_dim": reports,
        "sweep": sweep_report,
    });
    let json_text = output::json_document(&config_value, results)?;
    let csv_text = output::csv_document(&config_value, &csv);
    output::emit(args.out.as_deref(), Some(&csv_text), &json_text)
}

/// Map the input grid onto u-levels: r² for quadratic shapes, r itself for
/// halfspaces.
fn radius_grid_to_levels(shape: &Shape, radii: &[f64]) -> Result<Vec<f64>, CliError> {
    match shape {
        Shape::Halfspace { .. } => Ok(radii.to_vec()),
        _ => {
            if radii.first().is_some_and(|&r| r < 0.0) {
                return Err(CliError::Config(
                    "radius grid must be nonnegative for balls and ellipsoids".into(),
                ));
            }
            Ok(radii.iter().map(|&r| r * r).collect())
        }
    }
}

fn dim_report(
    dim: usize,
    shape: &Shape,
    space: &TruncatedSpace,
    radii: &[f64],
    profile: &Profile,
    batches: &ProfileBatches,
) -> Result<DimReport, CliError> {
    let ests = profile.estimates();
    let end = |i: usize| EndPoint {
        r: radii[i],
        value: ests[i].value,
        std_error: ests[i].std_error,
        consistent_with_zero: ests[i].value.abs() < 5.0 * ests[i].std_error,
    };
    let thresholds = match shape {
        Shape::Ball { .. } => Some(shape.ball_thresholds(space)?),
        _ => None,
    };
    let monotone = thresholds
        .as_ref()
        .map(|t| monotone_verdicts(radii, profile, batches, t));
    Ok(DimReport {
        dim,
        n_samples: ests[0].n_samples,
        n_rejected: ests[0].n_rejected,
        thresholds,
        vanishing_ends: [end(0), end(ests.len() - 1)],
        monotone,
    })
}

fn monotone_verdicts(
    radii: &[f64],
    profile: &Profile,
    batches: &ProfileBatches,
    thresholds: &BallThresholds,
) -> MonotoneVerdicts {
    let ests = profile.estimates();
    let mut rising = true;
    let mut falling = true;
    let mut violations = 0;
    for i in 0..ests.len() - 1 {
        let step = ests[i + 1].value - ests[i].value;
        let slack = 3.0 * batches.diff_std_error(i, i + 1);
        if radii[i + 1] <= thresholds.r0 && step < -slack {
            rising = false;
            violations += 1;
        }
        if radii[i] >= thresholds.r1 && step > slack {
            falling = false;
            violations += 1;
        }
    }
    MonotoneVerdicts {
        rising_below_r0: rising,
        falling_above_r1: falling,
        violations,
    }
}

fn sweep_pairs(profiles: &[(usize, Profile)]) -> Vec<SweepPair> {
    profiles
        .windows(2)
        .map(|w| {
            let (da, pa) = (&w[0].0, &w[0].1);
            let (db, pb) = (&w[1].0, &w[1].1);
            let mut max_abs_gap = 0.0f64;
            let mut worst_ratio = 0.0f64;
            for (ea, eb) in pa.estimates().iter().zip(pb.estimates()) {
                let gap = (eb.value - ea.value).abs();
                let allowed = 3.0 * ea.std_error.hypot(eb.std_error) + 0.01;
                max_abs_gap = max_abs_gap.max(gap);
                worst_ratio = worst_ratio.max(gap / allowed);
            }
            SweepPair {
                from_dim: *da,
                to_dim: *db,
                max_abs_gap,
                worst_ratio,
                pass: worst_ratio <= 1.0,
            }
        })
        .collect()
}
