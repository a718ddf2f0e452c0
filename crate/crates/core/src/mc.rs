//! Batched Monte Carlo estimators for perimeters, level densities, set
//! measures, the coarea identity, and the log-concavity probe.
//!
//! Every estimator runs over 32 fixed batches with deterministic sample
//! indices, so results are bit-identical across thread counts and reruns
//! with the same seed. Standard errors come from the spread of the batch
//! means; binomial errors are used where the summand is an indicator.
//! Points whose curvature field is degenerate are resampled from the same
//! per-point substream and counted; a rejection rate at or above 10^{-3}
//! invalidates the run.

use crate::cube::CubeFamily;
use crate::error::{Error, Result};
use crate::estimate::{validate_levels, Estimate, Method, Profile};
use crate::num::CompensatedSum;
use crate::shape::{CurvatureSample, Shape};
use crate::space::{Point, PointStream, TruncatedSpace};
use rayon::prelude::*;
use serde::Serialize;

pub const BATCHES: usize = 32;
pub const MIN_SAMPLES: u64 = 1_000;
pub const MAX_REJECT_RATE: f64 = 1e-3;
/// Mass allowed outside a coarea grid before the run is refused.
pub const COVERAGE_LIMIT: f64 = 1e-3;
const MAX_ATTEMPTS_PER_POINT: u32 = 10_000;

fn batch_bounds(n: u64) -> [(u64, u64); BATCHES] {
    let mut out = [(0, 0); BATCHES];
    for (b, slot) in out.iter_mut().enumerate() {
        *slot = (
            (b as u64 * n) / BATCHES as u64,
            ((b as u64 + 1) * n) / BATCHES as u64,
        );
    }
    out
}

fn se_from_batch_means(means: &[f64]) -> f64 {
    let b = means.len() as f64;
    let avg = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - avg) * (m - avg)).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

fn check_dims(shape: &Shape, space: &TruncatedSpace) -> Result<()> {
    if shape.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            context: "shape vs space",
            left: shape.dim(),
            right: space.dim(),
        });
    }
    Ok(())
}

/// Run the 32 batches in parallel and hand back per-batch outputs in batch
/// order, so the caller's combine step is order-deterministic.
fn run_batches<A, F>(n: u64, body: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(u64, u64) -> Result<A> + Sync,
{
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            min: MIN_SAMPLES,
        });
    }
    let bounds = batch_bounds(n);
    bounds
        .into_par_iter()
        .map(|(lo, hi)| body(lo, hi))
        .collect()
}

/// Draw until the curvature field is defined, counting rejections.
fn next_curvature_sample(
    shape: &Shape,
    space: &TruncatedSpace,
    stream: &mut PointStream<'_>,
    rejected: &mut u64,
) -> Result<CurvatureSample> {
    let mut attempts = 0u32;
    loop {
        let point = stream.draw();
        match shape.curvature_sample(space, point) {
            Ok(sample) => return Ok(sample),
            Err(Error::DegenerateGradient) => {
                *rejected += 1;
                attempts += 1;
                if attempts >= MAX_ATTEMPTS_PER_POINT {
                    return Err(Error::ExcessiveRejections { rate: 1.0 });
                }
            }
            Err(other) => return Err(other),
        }
    }
}

fn reject_rate_guard(rejected: u64, n: u64) -> Result<()> {
    let rate = rejected as f64 / n as f64;
    if rate >= MAX_REJECT_RATE {
        return Err(Error::ExcessiveRejections { rate });
    }
    Ok(())
}

struct ScalarBatch {
    sum: f64,
    len: u64,
    rejected: u64,
}

fn combine_scalar(batches: Vec<ScalarBatch>, n: u64, method: Method, seed: u64) -> Result<Estimate> {
    let mut total = CompensatedSum::new();
    let mut rejected = 0u64;
    let mut means = [0.0; BATCHES];
    for (b, batch) in batches.iter().enumerate() {
        total.add(batch.sum);
        rejected += batch.rejected;
        means[b] = batch.sum / batch.len as f64;
    }
    reject_rate_guard(rejected, n)?;
    Ok(Estimate {
        value: total.value() / n as f64,
        std_error: se_from_batch_means(&means),
        n_samples: n,
        n_rejected: rejected,
        method,
        seed,
    })
}

/// Perimeter of {u < level} as the sample mean of div_γ ν_H · 1{u < level}.
pub fn perimeter_divergence(
    shape: &Shape,
    space: &TruncatedSpace,
    level: f64,
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    check_dims(shape, space)?;
    let sampler = space.sampler(seed);
    let batches = run_batches(n, |lo, hi| {
        let mut sum = CompensatedSum::new();
        let mut rejected = 0u64;
        for i in lo..hi {
            let mut stream = sampler.stream(i);
            let s = next_curvature_sample(shape, space, &mut stream, &mut rejected)?;
            if !s.div_nu.is_finite() {
                return Err(Error::NonFinite("divergence summand"));
            }
            if s.u_value < level {
                sum.add(s.div_nu);
            }
        }
        Ok(ScalarBatch {
            sum: sum.value(),
            len: hi - lo,
            rejected,
        })
    })?;
    combine_scalar(batches, n, Method::Divergence, seed)
}

/// Central finite difference of F(ℓ) = E[|∇_H u|_H 1{u < ℓ}], whose
/// derivative is the perimeter, evaluated with paired samples.
pub fn perimeter_coarea_fd(
    shape: &Shape,
    space: &TruncatedSpace,
    level: f64,
    delta: f64,
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    check_dims(shape, space)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidGrid(format!("bandwidth delta {delta} must be positive")));
    }
    let sampler = space.sampler(seed);
    let batches = run_batches(n, |lo, hi| {
        let mut sum = CompensatedSum::new();
        for i in lo..hi {
            let mut stream = sampler.stream(i);
            let point = stream.draw();
            let (u, gn) = shape.value_and_gradient_norm(space, &point)?;
            if !gn.is_finite() || !u.is_finite() {
                return Err(Error::NonFinite("coarea summand"));
            }
            if u >= level - delta && u < level + delta {
                sum.add(gn / (2.0 * delta));
            }
        }
        Ok(ScalarBatch {
            sum: sum.value(),
            len: hi - lo,
            rejected: 0,
        })
    })?;
    combine_scalar(batches, n, Method::CoareaFd, seed)
}

/// Per-level batch means kept alongside a [`Profile`], for standard errors
/// of differences under common random numbers.
#[derive(Clone, Debug)]
pub struct ProfileBatches {
    means: Vec<[f64; BATCHES]>,
}

impl ProfileBatches {
    pub fn std_error(&self, i: usize) -> f64 {
        se_from_batch_means(&self.means[i])
    }

    /// Standard error of estimate(j) − estimate(i) over shared samples.
    pub fn diff_std_error(&self, i: usize, j: usize) -> f64 {
        let diffs: Vec<f64> = (0..BATCHES)
            .map(|b| self.means[j][b] - self.means[i][b])
            .collect();
        se_from_batch_means(&diffs)
    }
}

struct LevelBatch {
    sums: Vec<f64>,
    len: u64,
    rejected: u64,
}

fn combine_levels(
    batches: Vec<LevelBatch>,
    levels: &[f64],
    n: u64,
    method: Method,
    seed: u64,
) -> Result<(Profile, ProfileBatches)> {
    let m = levels.len();
    let mut rejected = 0u64;
    for batch in &batches {
        rejected += batch.rejected;
    }
    reject_rate_guard(rejected, n)?;
    let mut estimates = Vec::with_capacity(m);
    let mut means = Vec::with_capacity(m);
    for i in 0..m {
        let mut total = CompensatedSum::new();
        let mut level_means = [0.0; BATCHES];
        for (b, batch) in batches.iter().enumerate() {
            total.add(batch.sums[i]);
            level_means[b] = batch.sums[i] / batch.len as f64;
        }
        estimates.push(Estimate {
            value: total.value() / n as f64,
            std_error: se_from_batch_means(&level_means),
            n_samples: n,
            n_rejected: rejected,
            method,
            seed,
        });
        means.push(level_means);
    }
    Ok((
        Profile::new(levels.to_vec(), estimates)?,
        ProfileBatches { means },
    ))
}

/// Divergence-formula perimeter over a whole level grid in one pass with
/// common random numbers: each sample contributes to every level above its
/// u-value.
pub fn perimeter_divergence_profile(
    shape: &Shape,
    space: &TruncatedSpace,
    levels: &[f64],
    n: u64,
    seed: u64,
) -> Result<(Profile, ProfileBatches)> {
    check_dims(shape, space)?;
    validate_levels(levels)?;
    let m = levels.len();
    let sampler = space.sampler(seed);
    let batches = run_batches(n, |lo, hi| {
        let mut diff = vec![0.0; m + 1];
        let mut rejected = 0u64;
        for i in lo..hi {
            let mut stream = sampler.stream(i);
            let s = next_curvature_sample(shape, space, &mut stream, &mut rejected)?;
            if !s.div_nu.is_finite() {
                return Err(Error::NonFinite("divergence summand"));
            }
            let idx = levels.partition_point(|&l| l <= s.u_value);
            diff[idx] += s.div_nu;
        }
        let mut sums = vec![0.0; m];
        let mut running = 0.0;
        for i in 0..m {
            running += diff[i];
            sums[i] = running;
        }
        Ok(LevelBatch {
            sums,
            len: hi - lo,
            rejected,
        })
    })?;
    combine_levels(batches, levels, n, Method::Divergence, seed)
}

/// Coarea finite-difference perimeter over a level grid with a shared
/// bandwidth and common random numbers.
pub fn perimeter_coarea_fd_profile(
    shape: &Shape,
    space: &TruncatedSpace,
    levels: &[f64],
    delta: f64,
    n: u64,
    seed: u64,
) -> Result<(Profile, ProfileBatches)> {
    check_dims(shape, space)?;
    validate_levels(levels)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidGrid(format!("bandwidth delta {delta} must be positive")));
    }
    let m = levels.len();
    let sampler = space.sampler(seed);
    let batches = run_batches(n, |lo, hi| {
        let mut diff = vec![0.0; m + 1];
        for i in lo..hi {
            let mut stream = sampler.stream(i);
            let point = stream.draw();
            let (u, gn) = shape.value_and_gradient_norm(space, &point)?;
            if !gn.is_finite() || !u.is_finite() {
                return Err(Error::NonFinite("coarea summand"));
            }
            // contributes to levels ℓ with ℓ−δ ≤ u < ℓ+δ
            let lo_idx = levels.partition_point(|&l| l <= u - delta);
            let hi_idx = levels.partition_point(|&l| l <= u + delta);
            if lo_idx < hi_idx {
                let w = gn / (2.0 * delta);
                diff[lo_idx] += w;
                diff[hi_idx] -= w;
            }
        }
        let mut sums = vec![0.0; m];
        let mut running = 0.0;
        for i in 0..m {
            running += diff[i];
            sums[i] = running;
        }
        Ok(LevelBatch {
            sums,
            len: hi - lo,
            rejected: 0,
        })
    })?;
    combine_levels(batches, levels, n, Method::CoareaFd, seed)
}

/// Density of the image measure γ∘u^{-1} at `level`: slab mass over 2·eps,
/// with binomial standard error.
pub fn density_k(
    shape: &Shape,
    space: &TruncatedSpace,
    level: f64,
    eps: f64,
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    check_dims(shape, space)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidGrid(format!("slab half-width eps {eps} must be positive")));
    }
    let sampler = space.sampler(seed);
    let batches = run_batches(n, |lo, hi| {
        let mut count = 0u64;
        for i in lo..hi {
            let mut stream = sampler.stream(i);
            let point = stream.draw();
            let u = shape.value(&point)?;
            if (u - level).abs() <= eps {
                count += 1;
            }
        }
        Ok(count)
    })?;
    let count: u64 = batches.iter().sum();
    let p = count as f64 / n as f64;
    let binom = (p * (1.0 - p) / n as f64).sqrt();
    Ok(Estimate {
        value: p / (2.0 * eps),
        std_error: binom / (2.0 * eps),
        n_samples: n,
        n_rejected: 0,
        method: Method::McMeasure,
        seed,
    })
}

/// Empirical measure of a region with binomial standard error.
pub fn measure_mc<F>(space: &TruncatedSpace, n: u64, seed: u64, region: F) -> Result<Estimate>
where
    F: Fn(&Point) -> bool + Sync,
{
    let sampler = space.sampler(seed);
    let batches = run_batches(n, |lo, hi| {
        let mut count = 0u64;
        for i in lo..hi {
            let mut stream = sampler.stream(i);
            let point = stream.draw();
            if region(&point) {
                count += 1;
            }
        }
        Ok(count)
    })?;
    let count: u64 = batches.iter().sum();
    let p = count as f64 / n as f64;
    Ok(Estimate {
        value: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        n_samples: n,
        n_rejected: 0,
        method: Method::McMeasure,
        seed,
    })
}

/// Both sides of the coarea identity from one sample set: the expectation
/// of |∇_H u|_H against the trapezoidal aggregate of the divergence-formula
/// perimeter over the grid.
#[derive(Clone, Debug, Serialize)]
pub struct CoareaCheck {
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub rhs: f64,
    pub rhs_std_error: f64,
    /// Sampled mass of u outside the grid range (must stay under
    /// [`COVERAGE_LIMIT`]).
    pub outside_mass: f64,
    pub n_samples: u64,
    pub n_rejected: u64,
    pub seed: u64,
}

struct CoareaBatch {
    lhs_sum: f64,
    rhs_sum: f64,
    outside: u64,
    len: u64,
    rejected: u64,
}

pub fn coarea_check(
    shape: &Shape,
    space: &TruncatedSpace,
    grid: &[f64],
    n: u64,
    seed: u64,
) -> Result<CoareaCheck> {
    check_dims(shape, space)?;
    validate_levels(grid)?;
    let m = grid.len();
    // trapezoid weights, then suffix sums: a sample at u weights the rhs by
    // the total trapezoid mass of levels above u
    let mut weights = vec![0.0; m];
    for i in 0..m - 1 {
        let h = grid[i + 1] - grid[i];
        weights[i] += 0.5 * h;
        weights[i + 1] += 0.5 * h;
    }
    let mut suffix = vec![0.0; m + 1];
    for i in (0..m).rev() {
        suffix[i] = suffix[i + 1] + weights[i];
    }
    let sampler = space.sampler(seed);
    let batches = run_batches(n, |lo, hi| {
        let mut lhs_sum = CompensatedSum::new();
        let mut rhs_sum = CompensatedSum::new();
        let mut outside = 0u64;
        let mut rejected = 0u64;
        for i in lo..hi {
            let mut stream = sampler.stream(i);
            let s = next_curvature_sample(shape, space, &mut stream, &mut rejected)?;
            if !s.div_nu.is_finite() || !s.grad_norm.is_finite() {
                return Err(Error::NonFinite("coarea summand"));
            }
            lhs_sum.add(s.grad_norm);
            let idx = grid.partition_point(|&l| l <= s.u_value);
            rhs_sum.add(s.div_nu * suffix[idx]);
            if s.u_value < grid[0] || s.u_value > grid[m - 1] {
                outside += 1;
            }
        }
        Ok(CoareaBatch {
            lhs_sum: lhs_sum.value(),
            rhs_sum: rhs_sum.value(),
            outside,
            len: hi - lo,
            rejected,
        })
    })?;
    let mut lhs_total = CompensatedSum::new();
    let mut rhs_total = CompensatedSum::new();
    let mut outside = 0u64;
    let mut rejected = 0u64;
    let mut lhs_means = [0.0; BATCHES];
    let mut rhs_means = [0.0; BATCHES];
    for (b, batch) in batches.iter().enumerate() {
        lhs_total.add(batch.lhs_sum);
        rhs_total.add(batch.rhs_sum);
        outside += batch.outside;
        rejected += batch.rejected;
        lhs_means[b] = batch.lhs_sum / batch.len as f64;
        rhs_means[b] = batch.rhs_sum / batch.len as f64;
    }
    reject_rate_guard(rejected, n)?;
    let outside_mass = outside as f64 / n as f64;
    if outside_mass >= COVERAGE_LIMIT {
        return Err(Error::InsufficientCoverage {
            outside: outside_mass,
            limit: COVERAGE_LIMIT,
        });
    }
    Ok(CoareaCheck {
        lhs: lhs_total.value() / n as f64,
        lhs_std_error: se_from_batch_means(&lhs_means),
        rhs: rhs_total.value() / n as f64,
        rhs_std_error: se_from_batch_means(&rhs_means),
        outside_mass,
        n_samples: n,
        n_rejected: rejected,
        seed,
    })
}

/// A convex body containing the origin, to be dilated by the probe.
pub enum ConvexBody<'a> {
    /// {u < level} for a shape's defining function.
    Sublevel { shape: &'a Shape, level: f64 },
    /// The n-th box of a solved family, in standardized coordinates.
    Cube { family: &'a CubeFamily, n: usize },
}

impl ConvexBody<'_> {
    fn validate(&self, space: &TruncatedSpace) -> Result<()> {
        match self {
            ConvexBody::Sublevel { shape, level } => {
                check_dims(shape, space)?;
                let origin = Point::origin(space.dim());
                if !(shape.value(&origin)? < *level) {
                    return Err(Error::InvalidShape(
                        "dilation body must contain the origin".into(),
                    ));
                }
                Ok(())
            }
            ConvexBody::Cube { family, n } => {
                if *n == 0 || *n > family.len() {
                    return Err(Error::InvalidShape(format!(
                        "cube index {n} outside the solved family (1..={})",
                        family.len()
                    )));
                }
                if *n > space.dim() {
                    return Err(Error::DimensionMismatch {
                        context: "cube coordinates vs space",
                        left: *n,
                        right: space.dim(),
                    });
                }
                Ok(())
            }
        }
    }

    /// Whether x ∈ t·B. For bodies with 0 ∈ B this is monotone in t.
    fn contains_scaled(&self, point: &Point, standardized: &[f64], t: f64) -> Result<bool> {
        match self {
            ConvexBody::Sublevel { shape, level } => {
                let scaled = Point::new(point.coords().iter().map(|c| c / t).collect());
                Ok(shape.value(&scaled)? < *level)
            }
            ConvexBody::Cube { family, n } => {
                let r = &family.half_widths()[..*n];
                Ok(standardized[..*n]
                    .iter()
                    .zip(r)
                    .all(|(z, r)| z.abs() <= t * r))
            }
        }
    }
}

/// Dilation measures with concavity verdicts for log γ(tC).
#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    pub t_grid: Vec<f64>,
    pub estimates: Vec<Estimate>,
    /// Second differences of log ĝ at interior grid points.
    pub second_diffs: Vec<f64>,
    /// Propagated errors of those second differences under common random
    /// numbers (delta method over the batch-mean covariance).
    pub second_diff_std_errors: Vec<f64>,
    pub passes: Vec<bool>,
    pub verdict: bool,
    /// True when the grid has no interior point to test.
    pub vacuous: bool,
    pub n_samples: u64,
    pub seed: u64,
}

/// Estimate g(t) = γ(tC) on the grid with one shared sample set and check
/// concavity of log g by second differences within 3·propagated error.
pub fn log_concavity_probe(
    body: &ConvexBody<'_>,
    space: &TruncatedSpace,
    t_grid: &[f64],
    n: u64,
    seed: u64,
) -> Result<ConcavityReport> {
    validate_levels(t_grid)?;
    if t_grid[0] <= 0.0 {
        return Err(Error::InvalidGrid("dilation grid must be positive".into()));
    }
    body.validate(space)?;
    let m = t_grid.len();
    let needs_std = matches!(body, ConvexBody::Cube { .. });
    let sampler = space.sampler(seed);
    let batches = run_batches(n, |lo, hi| {
        let mut diff = vec![0u64; m + 1];
        for i in lo..hi {
            let mut stream = sampler.stream(i);
            let point = stream.draw();
            let standardized = if needs_std {
                point.standardized(space)?
            } else {
                Vec::new()
            };
            // nested events: find the smallest t containing the point
            let mut lo_idx = 0usize;
            let mut hi_idx = m;
            while lo_idx < hi_idx {
                let mid = (lo_idx + hi_idx) / 2;
                if body.contains_scaled(&point, &standardized, t_grid[mid])? {
                    hi_idx = mid;
                } else {
                    lo_idx = mid + 1;
                }
            }
            diff[lo_idx] += 1;
        }
        let mut counts = vec![0u64; m];
        let mut running = 0u64;
        for i in 0..m {
            running += diff[i];
            counts[i] = running;
        }
        Ok((counts, hi - lo))
    })?;
    let mut totals = vec![0u64; m];
    let mut means = vec![[0.0; BATCHES]; m];
    for (b, (counts, len)) in batches.iter().enumerate() {
        for i in 0..m {
            totals[i] += counts[i];
            means[i][b] = counts[i] as f64 / *len as f64;
        }
    }
    let mut estimates = Vec::with_capacity(m);
    for i in 0..m {
        if totals[i] == 0 {
            return Err(Error::ZeroMeasure { t: t_grid[i] });
        }
        let p = totals[i] as f64 / n as f64;
        estimates.push(Estimate {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n_samples: n,
            n_rejected: 0,
            method: Method::McMeasure,
            seed,
        });
    }
    let mut second_diffs = Vec::new();
    let mut second_diff_std_errors = Vec::new();
    let mut passes = Vec::new();
    for i in 1..m.saturating_sub(1) {
        let g = [
            estimates[i - 1].value,
            estimates[i].value,
            estimates[i + 1].value,
        ];
        let d = g[0].ln() - 2.0 * g[1].ln() + g[2].ln();
        let jac = [1.0 / g[0], -2.0 / g[1], 1.0 / g[2]];
        // covariance of the three batch-mean series, scaled down to the
        // variance of the overall means
        let rows = [&means[i - 1], &means[i], &means[i + 1]];
        let avgs: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().sum::<f64>() / BATCHES as f64)
            .collect();
        let mut var = 0.0;
        for u in 0..3 {
            for v in 0..3 {
                let mut cov = 0.0;
                for b in 0..BATCHES {
                    cov += (rows[u][b] - avgs[u]) * (rows[v][b] - avgs[v]);
                }
                cov /= (BATCHES - 1) as f64 * BATCHES as f64;
                var += jac[u] * jac[v] * cov;
            }
        }
        let se = var.max(0.0).sqrt();
        second_diffs.push(d);
        second_diff_std_errors.push(se);
        passes.push(d <= 3.0 * se);
    }
    let vacuous = m < 3;
    Ok(ConcavityReport {
        t_grid: t_grid.to_vec(),
        estimates,
        verdict: passes.iter().all(|&p| p),
        second_diffs,
        second_diff_std_errors,
        passes,
        vacuous,
        n_samples: n,
        seed,
    })
}
