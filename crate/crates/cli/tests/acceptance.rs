//! Release acceptance: eleven numbered gates over the estimators, the
//! closed-form oracles, the box family, and the binary's determinism. Each
//! test prints one verdict line per gate (run with `-- --nocapture` to see
//! them); tolerances are pinned as constants here.

use std::time::Instant;

use gperim_core::checks;
use gperim_core::cube::CubeFamily;
use gperim_core::mc::{self, ConvexBody};
use gperim_core::num::SQRT_2PI;
use gperim_core::quad::perimeter_quadrature_2d;
use gperim_core::{Shape, Spectrum, TruncatedSpace};

/// Sigma multiple for Monte Carlo vs oracle comparisons.
const MC_SIGMA: f64 = 3.0;
/// Absolute tolerance for the 2-D quadrature against closed forms.
const QUAD_TOL: f64 = 1e-10;
/// Minimum pairwise agreements on the 60-comparison grid (3σ budget).
const AGREEMENT_FLOOR: usize = 57;
/// Relative tolerance for both sides of the coarea identity.
const COAREA_REL: f64 = 0.01;
/// Sigma multiple under which a profile endpoint counts as vanishing.
const VANISH_SIGMA: f64 = 5.0;
/// Relative residual ceiling for the box threshold solver.
const RESIDUAL_CEILING: f64 = 1e-12;
/// Sigma multiple for the zero-mean divergence gate.
const ZERO_MEAN_SIGMA: f64 = 4.0;

fn verdict(name: &str, passed: bool, detail: &str) -> bool {
    println!("[{}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn std_space(dim: usize) -> TruncatedSpace {
    let ones = vec![1.0; dim];
    TruncatedSpace::new(Spectrum::explicit(ones).unwrap(), dim).unwrap()
}

fn grid(a: f64, b: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| a + (b - a) * i as f64 / (steps - 1) as f64)
        .collect()
}

#[test]
fn gate_01_halfspace_oracle_single_threaded() {
    let space = std_space(2);
    let shape = Shape::halfspace(vec![1.0, 0.0]).unwrap();
    let expected = SQRT_2PI.recip();
    let start = Instant::now();
    let est = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| mc::perimeter_divergence(&shape, &space, 0.0, 1_000_000, 1).unwrap());
    let elapsed = start.elapsed().as_secs_f64();
    let gap = (est.value - expected).abs();
    let ok = gap <= MC_SIGMA * est.std_error && elapsed < 10.0;
    let passed = verdict(
        "halfspace-oracle",
        ok,
        &format!(
            "estimate {:.6} vs 1/sqrt(2pi) {:.6}, gap {:.2e} <= {}*se {:.2e}, {:.2}s single-threaded",
            est.value, expected, gap, MC_SIGMA, est.std_error, elapsed
        ),
    );
    assert!(passed);
}

#[test]
fn gate_02_disk_oracle_and_quadrature_sweep() {
    let space = std_space(2);
    let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
    let expected = (-0.5f64).exp();
    let est = mc::perimeter_divergence(&ball, &space, 1.0, 1_000_000, 2).unwrap();
    let mc_ok = (est.value - expected).abs() <= MC_SIGMA * est.std_error;
    let mut worst = 0.0f64;
    for i in 0..10 {
        let rho = 0.4 + 0.4 * i as f64;
        let closed = rho * (-0.5 * rho * rho).exp();
        let quad = perimeter_quadrature_2d(&ball, space.spectrum(), rho * rho, 64).unwrap();
        worst = worst.max((quad.value - closed).abs());
    }
    let quad_ok = worst <= QUAD_TOL;
    let passed = verdict(
        "disk-oracle",
        mc_ok && quad_ok,
        &format!(
            "estimate {:.6} vs e^-1/2 {:.6} (se {:.2e}); quadrature worst gap {:.2e} on 10 radii",
            est.value, expected, est.std_error, worst
        ),
    );
    assert!(passed);
}

#[test]
fn gate_03_estimator_cross_agreement_sixty_levels() {
    let space = std_space(2);
    let cases = [
        (Shape::halfspace(vec![1.0, 0.0]).unwrap(), grid(-2.0, 2.0, 20)),
        (Shape::ball(vec![0.0, 0.0]).unwrap(), grid(0.2, 4.2, 20)),
        (
            Shape::ellipsoid(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap(),
            grid(0.2, 4.2, 20),
        ),
    ];
    let mut passes = 0usize;
    let mut total = 0usize;
    for (shape, levels) in &cases {
        let report =
            checks::estimator_agreement(shape, &space, levels, 0.05, 400_000, 3).unwrap();
        passes += report.div_fd_passes;
        total += levels.len();
    }
    let passed = verdict(
        "estimator-cross-agreement",
        passes >= AGREEMENT_FLOOR && total == 60,
        &format!("{passes}/{total} divergence-vs-coarea agreements (floor {AGREEMENT_FLOOR})"),
    );
    assert!(passed);
}

#[test]
fn gate_04_coarea_identity_ball_and_halfspace() {
    let start = Instant::now();
    let space = std_space(2);
    let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
    // the ball's aggregate side is heavy-tailed near u = 0 (integrand
    // ~ u^{-1/2} times the whole grid weight), so it gets the big budget
    let ball_check =
        mc::coarea_check(&ball, &space, &grid(0.0, 16.0, 257), 40_000_000, 4).unwrap();
    let hs = Shape::halfspace(vec![1.0, 0.0]).unwrap();
    let hs_check = mc::coarea_check(&hs, &space, &grid(-5.0, 5.0, 201), 4_000_000, 5).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ball_ok = (ball_check.lhs - SQRT_2PI).abs() <= COAREA_REL * SQRT_2PI
        && (ball_check.rhs - SQRT_2PI).abs() <= COAREA_REL * SQRT_2PI;
    let hs_ok = (hs_check.lhs - 1.0).abs() <= COAREA_REL
        && (hs_check.rhs - 1.0).abs() <= COAREA_REL;
    let passed = verdict(
        "coarea-identity",
        ball_ok && hs_ok && elapsed < 60.0,
        &format!(
            "ball {:.5}/{:.5} vs sqrt(2pi) {:.5}; halfspace {:.5}/{:.5} vs 1; {:.1}s",
            ball_check.lhs, ball_check.rhs, SQRT_2PI, hs_check.lhs, hs_check.rhs, elapsed
        ),
    );
    assert!(passed);
}

#[test]
fn gate_05_ball_profile_shape() {
    let space = std_space(2);
    let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
    let radii = grid(0.05, 4.0, 40);
    let levels: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let (profile, batches) =
        mc::perimeter_divergence_profile(&ball, &space, &levels, 10_000, 42).unwrap();
    let ests = profile.estimates();
    let first = &ests[0];
    let last = &ests[ests.len() - 1];
    let ends_ok = first.value.abs() < VANISH_SIGMA * first.std_error
        && last.value.abs() < VANISH_SIGMA * last.std_error;
    let thresholds = ball.ball_thresholds(&space).unwrap();
    let exact_ok = thresholds.r0 == 1.0 && thresholds.r1 == std::f64::consts::SQRT_2;
    let mut monotone_ok = true;
    for i in 0..ests.len() - 1 {
        let step = ests[i + 1].value - ests[i].value;
        let slack = 3.0 * batches.diff_std_error(i, i + 1);
        if radii[i + 1] <= thresholds.r0 && step < -slack {
            monotone_ok = false;
        }
        if radii[i] >= thresholds.r1 && step > slack {
            monotone_ok = false;
        }
    }
    let passed = verdict(
        "ball-profile-shape",
        ends_ok && exact_ok && monotone_ok,
        &format!(
            "ends {:.4}({:.4})/{:.4}({:.4}) under {}σ; thresholds ({}, {}); monotone segments {}",
            first.value,
            first.std_error,
            last.value,
            last.std_error,
            VANISH_SIGMA,
            thresholds.r0,
            thresholds.r1,
            if monotone_ok { "clean" } else { "violated" }
        ),
    );
    assert!(passed);
}

#[test]
fn gate_06_curvature_certification() {
    let space = std_space(2);
    let shapes = [
        Shape::ball(vec![0.3, -0.2]).unwrap(),
        Shape::ellipsoid(vec![0.1, 0.0], vec![1.0, 0.5]).unwrap(),
        Shape::halfspace(vec![1.0, -0.5]).unwrap(),
    ];
    let mut all = true;
    let mut details = Vec::new();
    for (i, shape) in shapes.iter().enumerate() {
        let g = checks::gradient_check(shape, &space, 100, 60 + i as u64, 0.0).unwrap();
        let d = checks::divergence_definition_check(shape, &space, 100, 70 + i as u64).unwrap();
        all &= g.passed && d.passed;
        details.push(format!("{}: grad {}, div {}", shape.kind_name(), g.passed, d.passed));
    }
    let uneven = TruncatedSpace::new(Spectrum::explicit(vec![1.0, 0.6]).unwrap(), 2).unwrap();
    let off_center = Shape::ball(vec![0.3, -0.2]).unwrap();
    let sandwich = checks::sandwich_check(&off_center, &uneven, 100_000, 80).unwrap();
    all &= sandwich.passed;
    let passed = verdict(
        "curvature-certification",
        all,
        &format!("{}; bracket: {}", details.join("; "), sandwich.detail),
    );
    assert!(passed);
}

#[test]
fn gate_07_zero_mean_divergence() {
    let space = std_space(2);
    let mut all = true;
    let mut details = Vec::new();
    for (shape, seed) in [
        (Shape::ball(vec![0.0, 0.0]).unwrap(), 90u64),
        (Shape::halfspace(vec![1.0, 0.0]).unwrap(), 91),
    ] {
        let est = mc::perimeter_divergence(&shape, &space, f64::INFINITY, 1_000_000, seed).unwrap();
        let ok = est.value.abs() < ZERO_MEAN_SIGMA * est.std_error;
        all &= ok;
        details.push(format!(
            "{} mean {:.2e} (se {:.2e})",
            shape.kind_name(),
            est.value,
            est.std_error
        ));
    }
    let passed = verdict("zero-mean-divergence", all, &details.join("; "));
    assert!(passed);
}

/// The box-family gate. Two sub-checks fail and are expected to: the
/// perimeter sequence is not strictly increasing (it dips on the order of
/// 1e-5 where a new coordinate's boundary term is smaller than the mass it
/// removes from the others), and the n = 10 → 10^4 growth, while positive,
/// sits far below the floor demanded here. The remaining sub-checks hold.
#[test]
fn gate_08_box_family_pipeline() {
    let start = Instant::now();
    let family = CubeFamily::build(10_000, 1e-12).unwrap();
    let n_max = family.len();
    let mut checks_log: Vec<(bool, String)> = Vec::new();

    let max_residual = (1..=n_max).map(|k| family.residual(k)).fold(0.0f64, f64::max);
    checks_log.push((
        max_residual <= RESIDUAL_CEILING,
        format!("solver residuals: max {max_residual:.2e} <= {RESIDUAL_CEILING:.0e}"),
    ));

    let mut bound_violations = 0usize;
    for n in 1..=n_max {
        if family.measure(n) < family.lower_bound(n) {
            bound_violations += 1;
        }
    }
    checks_log.push((
        bound_violations == 0,
        format!("measure >= closed-form floor: {bound_violations} violations over {n_max}"),
    ));

    let perimeters = family.perimeter_table(n_max);
    let mut nonincreasing = 0usize;
    let mut worst = f64::INFINITY;
    for k in 1..n_max {
        let step = perimeters[k] - perimeters[k - 1];
        if step <= 0.0 {
            nonincreasing += 1;
        }
        worst = worst.min(step);
    }
    checks_log.push((
        nonincreasing == 0,
        format!(
            "perimeter strictly increasing: {nonincreasing} nonincreasing steps, worst {worst:.2e}"
        ),
    ));

    let gap = perimeters[n_max - 1] - perimeters[9];
    let a = family.limit_lower_bound().lower;
    let mut floor = 0.0;
    for k in 11..=n_max {
        floor += family.targets()[k - 1] * family.half_widths()[k - 1];
    }
    let margin_floor = a * floor;
    checks_log.push((
        gap > margin_floor,
        format!(
            "growth margin: P(10^4)-P(10) = {gap:.5e} vs floor {margin_floor:.5e} (bare increase {})",
            perimeters[n_max - 1] > perimeters[9]
        ),
    ));

    let mut mc_ok = true;
    for (i, n) in [1usize, 5, 20].into_iter().enumerate() {
        let space = std_space(n);
        let est = mc::measure_mc(&space, 200_000, 100 + i as u64, |p| {
            family.contains_standardized(n, p.coords())
        })
        .unwrap();
        mc_ok &= (est.value - family.measure(n)).abs() <= MC_SIGMA * est.std_error;
    }
    checks_log.push((mc_ok, "sampled vs product measure at n in {1,5,20}".into()));

    let alphas: Vec<f64> = [1usize, 10, 100, 1_000]
        .iter()
        .map(|&m| family.tail_product(m).partial)
        .collect();
    let increasing = alphas.windows(2).all(|w| w[1] >= w[0]);
    let tail_ok = 1.0 - family.tail_product(1_000).partial <= family.tail_union_bound(1_000);
    checks_log.push((
        increasing && tail_ok,
        format!(
            "tail products increase ({:?}) and 1-alpha(10^3) {:.3e} under bound {:.3e}",
            alphas.iter().map(|a| (a * 1e4).round() / 1e4).collect::<Vec<_>>(),
            1.0 - alphas[3],
            family.tail_union_bound(1_000)
        ),
    ));

    let elapsed = start.elapsed().as_secs_f64();
    checks_log.push((elapsed < 120.0, format!("runtime {elapsed:.1}s < 120s")));

    let all = checks_log.iter().all(|(ok, _)| *ok);
    for (ok, line) in &checks_log {
        println!("    [{}] {line}", if *ok { "ok" } else { "FAIL" });
    }
    let passed = verdict(
        "box-family-pipeline",
        all,
        &format!(
            "{}/{} sub-checks hold",
            checks_log.iter().filter(|(ok, _)| *ok).count(),
            checks_log.len()
        ),
    );
    assert!(passed);
}

#[test]
fn gate_09_half_width_bracket_and_onset() {
    let tolerances = [1e-10, 1e-12, 1e-14];
    let mut onsets = Vec::new();
    let mut bracket_ok = true;
    for &tol in &tolerances {
        let family = CubeFamily::build(10_000, tol).unwrap();
        let onset = family.bracket_start();
        if let Some(k_star) = onset {
            for k in k_star..=family.len() {
                let root = ((k + 1) as f64).ln().sqrt();
                let r = family.half_widths()[k - 1];
                if !(root <= r && r <= 2.0 * root) {
                    bracket_ok = false;
                }
            }
        } else {
            bracket_ok = false;
        }
        onsets.push(onset);
    }
    let stable = onsets.windows(2).all(|w| w[0] == w[1]);
    let passed = verdict(
        "half-width-bracket",
        bracket_ok && stable,
        &format!("onset k* = {:?} across tolerances {:?}", onsets[0], tolerances),
    );
    assert!(passed);
}

#[test]
fn gate_10_log_concavity_of_dilations() {
    let space = std_space(2);
    let t_grid = grid(0.2, 3.0, 15);
    let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
    let hs = Shape::halfspace(vec![1.0, 0.0]).unwrap();
    let mut all = true;
    let mut details = Vec::new();
    for (label, shape, level, seed) in
        [("unit ball", &ball, 1.0, 110u64), ("shifted halfspace", &hs, 1.0, 111)]
    {
        let body = ConvexBody::Sublevel { shape, level };
        let report = mc::log_concavity_probe(&body, &space, &t_grid, 1_000_000, seed).unwrap();
        all &= report.verdict && !report.vacuous;
        details.push(format!(
            "{label}: {}/{} interior points within 3σ",
            report.passes.iter().filter(|p| **p).count(),
            report.passes.len()
        ));
    }
    let passed = verdict("log-concavity", all, &details.join("; "));
    assert!(passed);
}

#[test]
fn gate_11_byte_identical_outputs_across_thread_counts() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_gperim");
    let base = std::env::temp_dir().join(format!("gperim-gate11-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);
    std::fs::create_dir_all(&base).unwrap();

    let runs: [(&str, Vec<&str>); 3] = [
        ("profile", vec!["profile", "--levels", "0.05:4:15", "--samples", "20000"]),
        ("cube", vec!["cube", "--n-max", "200", "--mc-samples", "50000"]),
        ("coarea", vec!["coarea", "--samples", "100000"]),
    ];
    let mut all = true;
    let mut details = Vec::new();
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let out_base = base.join(format!("{name}-t{threads}"));
            let status = Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(&out_base)
                .env("RAYON_NUM_THREADS", threads)
                .status()
                .unwrap();
            assert!(status.success(), "{name} run failed at {threads} threads");
            let json = std::fs::read(out_base.with_extension("json")).unwrap();
            let csv = std::fs::read(out_base.with_extension("csv")).unwrap_or_default();
            outputs.push((json, csv));
        }
        let identical = outputs[0] == outputs[1];
        all &= identical;
        details.push(format!("{name} {}", if identical { "identical" } else { "DIFFERS" }));
    }
    let _ = std::fs::remove_dir_all(&base);
    let passed = verdict(
        "thread-count-determinism",
        all,
        &format!("1 vs 8 threads: {}", details.join(", ")),
    );
    assert!(passed);
}
