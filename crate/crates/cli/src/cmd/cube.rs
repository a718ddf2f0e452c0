//! The box family pipeline: solve the coordinate thresholds, tabulate
//! measures, perimeters and their bounds, bracket the measure limit, and
//! report tail products, threshold crossings, sampling cross-checks, and
//! compactness verdicts.

use std::path::PathBuf;

use gperim_core::cube::CubeFamily;
use gperim_core::num::CompensatedSum;
use gperim_core::quad::interval_perimeter_1d;
use gperim_core::{mc, Spectrum, TruncatedSpace};
use serde::{Deserialize, Serialize};

use crate::config::{load_file, resolve};
use crate::{output, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Largest box index to solve
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    /// Relative residual tolerance of the threshold solver
    #[arg(long)]
    tol: Option<f64>,
    /// Covariance spectrum for the compactness verdict (repeatable)
    #[arg(long = "spectrum")]
    spectra: Vec<String>,
    /// Samples for the product-vs-sampling cross-checks
    #[arg(long = "mc-samples")]
    mc_samples: Option<u64>,
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
    n_max: Option<usize>,
    tol: Option<f64>,
    spectra: Option<Vec<String>>,
    mc_samples: Option<u64>,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Config {
    command: &'static str,
    n_max: usize,
    tol: f64,
    spectra: Vec<String>,
    mc_samples: u64,
    seed: u64,
}

#[derive(Serialize)]
struct Crossing {
    threshold: f64,
    reached: bool,
    n: Option<usize>,
    value_at_n_max: f64,
}

#[derive(Serialize)]
struct AlphaRow {
    m: usize,
    partial: f64,
    limit_lower: f64,
    /// Union-style bound on 1 − α_m.
    gap_bound: f64,
    gap_within_bound: bool,
}

#[derive(Serialize)]
struct McCross {
    n: usize,
    exact: f64,
    estimate: f64,
    std_error: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SummaryRow {
    n: usize,
    measure: f64,
    measure_lower_bound: f64,
    perimeter: f64,
    perimeter_floor: f64,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = load_file(args.config.as_deref())?;
    let spectra = if args.spectra.is_empty() {
        file.spectra.unwrap_or_else(|| {
            vec!["power:alpha=2".to_string(), "log-borderline".to_string()]
        })
    } else {
        args.spectra
    };
    let cfg = Config {
        command: "cube",
        n_max: resolve(args.n_max, file.n_max, 10_000),
        tol: resolve(args.tol, file.tol, 1e-12),
        spectra,
        mc_samples: resolve(args.mc_samples, file.mc_samples, 200_000),
        seed: resolve(args.seed, file.seed, 42),
    };
    let config_value = output::config_json(&cfg)?;

    let family = CubeFamily::build(cfg.n_max, cfg.tol)?;
    let n_max = family.len();
    let max_residual = (1..=n_max)
        .map(|k| family.residual(k))
        .fold(0.0f64, f64::max);
    let enclosure = family.limit_lower_bound();
    let perimeters = family.perimeter_table(n_max);

    // running tables sharing one pass each
    let mut measures = Vec::with_capacity(n_max);
    let mut bounds = Vec::with_capacity(n_max);
    let mut floors = Vec::with_capacity(n_max);
    let mut ln_measure = CompensatedSum::new();
    let mut ln_bound = CompensatedSum::new();
    let mut floor_sum = CompensatedSum::new();
    for k in 0..n_max {
        ln_measure.add(family.coord_masses()[k].ln());
        ln_bound.add((-family.targets()[k]).ln_1p());
        floor_sum.add(family.targets()[k] * family.half_widths()[k]);
        measures.push(ln_measure.value().exp());
        bounds.push(ln_bound.value().exp());
        floors.push(enclosure.lower * floor_sum.value());
    }

    let mut csv =
        String::from("k,half_width,coord_mass,measure,perimeter,measure_lower_bound\n");
    for k in 0..n_max {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            k + 1,
            family.half_widths()[k],
            family.coord_masses()[k],
            measures[k],
            perimeters[k],
            bounds[k],
        ));
    }

    let bound_violations = (0..n_max).filter(|&k| measures[k] < bounds[k]).count();
    let floor_violations = (0..n_max).filter(|&k| perimeters[k] < floors[k]).count();
    let mut worst_step = f64::INFINITY;
    let mut worst_at = 0usize;
    let mut nonincreasing_steps = 0usize;
    for k in 1..n_max {
        let step = perimeters[k] - perimeters[k - 1];
        if step <= 0.0 {
            nonincreasing_steps += 1;
        }
        if step < worst_step {
            worst_step = step;
            worst_at = k + 1;
        }
    }

    let crossings: Vec<Crossing> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&threshold| {
            let n = perimeters.iter().position(|&p| p >= threshold).map(|i| i + 1);
            Crossing {
                threshold,
                reached: n.is_some(),
                n,
                value_at_n_max: perimeters[n_max - 1],
            }
        })
        .collect();

    let alpha: Vec<AlphaRow> = [1usize, 10, 100, 1_000]
        .iter()
        .filter(|&&m| m < n_max)
        .map(|&m| {
            let t = family.tail_product(m);
            let gap_bound = family.tail_union_bound(m);
            AlphaRow {
                m,
                partial: t.partial,
                limit_lower: t.limit_lower,
                gap_bound,
                gap_within_bound: 1.0 - t.partial <= gap_bound,
            }
        })
        .collect();
    let alpha_increasing = alpha.windows(2).all(|w| w[1].partial >= w[0].partial);

    let mut mc_cross = Vec::new();
    for (i, &n) in [1usize, 5, 20].iter().filter(|&&n| n <= n_max).enumerate() {
        let spectrum = Spectrum::explicit(vec![1.0; n])?;
        let space = TruncatedSpace::new(spectrum, n)?;
        let est = mc::measure_mc(&space, cfg.mc_samples, cfg.seed + i as u64, |p| {
            family.contains_standardized(n, p.coords())
        })?;
        let exact = family.measure(n);
        mc_cross.push(McCross {
            n,
            exact,
            estimate: est.value,
            std_error: est.std_error,
            pass: (est.value - exact).abs() <= 3.0 * est.std_error,
        });
    }

    let summary: Vec<SummaryRow> = [1usize, 10, 100, 1_000, n_max]
        .iter()
        .filter(|&&n| n <= n_max)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|&n| SummaryRow {
            n,
            measure: measures[n - 1],
            measure_lower_bound: bounds[n - 1],
            perimeter: perimeters[n - 1],
            perimeter_floor: floors[n - 1],
        })
        .collect();

    let compactness: Vec<serde_json::Value> = cfg
        .spectra
        .iter()
        .map(|text| {
            let spectrum: Spectrum = text.parse()?;
            let report = family.compactness(&spectrum);
            Ok(serde_json::json!({
                "spectrum": text,
                "weighted_partial_sum": report.weighted_partial_sum,
                "verdict": report.verdict,
            }))
        })
        .collect::<Result<_, gperim_core::Error>>()?;

    let quad_one = interval_perimeter_1d(family.half_widths()[0]);
    let results = serde_json::json!({
        "n_max": n_max,
        "solver_tol": family.solver_tol(),
        "max_residual": max_residual,
        "bracket_start": family.bracket_start(),
        "limit_enclosure": {
            "lower": enclosure.lower,
            "upper": enclosure.upper,
            "width": enclosure.width(),
        },
        "summary": summary,
        "measure_bound_violations": bound_violations,
        "perimeter_floor_violations": floor_violations,
        "perimeter_monotonicity": {
            "strictly_increasing": nonincreasing_steps == 0,
            "nonincreasing_steps": nonincreasing_steps,
            "worst_step": worst_step,
            "worst_at": worst_at,
        },
        "crossings": crossings,
        "alpha": { "rows": alpha, "increasing": alpha_increasing },
        "mc_cross": mc_cross,
        "interval_check": {
            "family": family.perimeter(1),
            "quadrature": quad_one,
            "gap": (family.perimeter(1) - quad_one).abs(),
        },
        "compactness": compactness,
    });
    let json_text = output::json_document(&config_value, results)?;
    let csv_text = output::csv_document(&config_value, &csv);
    output::emit(args.out.as_deref(), Some(&csv_text), &json_text)
}
