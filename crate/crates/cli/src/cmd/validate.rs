//! The invariant gate: finite-difference certification of the curvature
//! fields, the ball bracket, zero-mean divergence, sampler moments, and
//! cross-estimator agreement. Any failure exits nonzero.

use std::path::PathBuf;

use gperim_core::checks::{self, CheckOutcome};
use gperim_core::{Shape, Spectrum, TruncatedSpace};
use serde::{Deserialize, Serialize};

use crate::config::{load_file, resolve};
use crate::{output, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Reduced sample counts and shorter grids; the tolerances are the
    /// same, only the statistical resolution drops
    #[arg(long)]
    quick: bool,
    /// Samples for the Monte Carlo invariants
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Deliberately offset the closed-form gradient before checking it;
    /// exercises the failure path of the gate
    #[arg(long, hide = true)]
    inject_gradient_bias: Option<f64>,
    /// TOML file supplying defaults for the flags above
    #[arg(long)]
    config: Option<PathBuf>,
    /// Optional output base path; writes <out>.json
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    quick: Option<bool>,
    samples: Option<u64>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    quick: bool,
    samples: u64,
    agreement_samples: u64,
    agreement_levels: usize,
    seed: u64,
    injected_gradient_bias: f64,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = load_file(args.config.as_deref())?;
    let quick = args.quick || file.quick.unwrap_or(false);
    let cfg = Config {
        command: "validate",
        quick,
        samples: resolve(args.samples, file.samples, if quick { 20_000 } else { 200_000 }),
        agreement_samples: if quick { 20_000 } else { 100_000 },
        agreement_levels: if quick { 5 } else { 8 },
        seed: resolve(args.seed, file.seed, 42),
        injected_gradient_bias: args.inject_gradient_bias.unwrap_or(0.0),
    };
    let config_value = output::config_json(&cfg)?;

    let mut outcomes =
        checks::default_suite(cfg.samples, cfg.seed, cfg.injected_gradient_bias)?;
    outcomes.extend(agreement_outcomes(&cfg)?);

    for outcome in &outcomes {
        println!(
            "{}  {:<36}  {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.name,
            outcome.detail
        );
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name.as_str())
        .collect();
    println!(
        "{} checks, {} passed, {} failed",
        outcomes.len(),
        outcomes.len() - failed.len(),
        failed.len()
    );

    if args.out.is_some() {
        let results = serde_json::json!({
            "outcomes": outcomes,
            "all_passed": failed.is_empty(),
        });
        let json_text = output::json_document(&config_value, results)?;
        output::emit(args.out.as_deref(), None, &json_text)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Checks(format!(
            "failed invariants: {}",
            failed.join(", ")
        )))
    }
}

fn agreement_outcomes(cfg: &Config) -> Result<Vec<CheckOutcome>, CliError> {
    let space = TruncatedSpace::new(Spectrum::explicit(vec![1.0, 1.0])?, 2)?;
    let grid = |a: f64, b: f64| -> Vec<f64> {
        let m = cfg.agreement_levels;
        (0..m)
            .map(|i| a + (b - a) * i as f64 / (m - 1) as f64)
            .collect()
    };
    let cases = [
        ("halfspace", Shape::halfspace(vec![1.0, 0.0])?, grid(-1.2, 1.6)),
        ("ball", Shape::ball(vec![0.0, 0.0])?, grid(0.5, 4.0)),
        (
            "ellipsoid",
            Shape::ellipsoid(vec![0.0, 0.0], vec![1.0, 0.5])?,
            grid(0.5, 4.0),
        ),
    ];
    let mut outcomes = Vec::new();
    for (label, shape, levels) in &cases {
        let report = checks::estimator_agreement(
            shape,
            &space,
            levels,
            0.05,
            cfg.agreement_samples,
            cfg.seed + 11,
        )?;
        let m = levels.len();
        let need = m - 1;
        let passed = report.div_fd_passes >= need
            && report.div_quad_passes >= need
            && report.fd_quad_passes >= need;
        outcomes.push(CheckOutcome {
            name: format!("estimator-agreement[{label}]"),
            passed,
            detail: format!(
                "{}/{m} div-fd, {}/{m} div-quad, {}/{m} fd-quad",
                report.div_fd_passes, report.div_quad_passes, report.fd_quad_passes
            ),
        });
    }
    Ok(outcomes)
}
