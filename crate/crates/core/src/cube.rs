//! The symmetric box family with measures bounded away from zero while the
//! boundary measure grows without bound.
//!
//! Coordinate k of the family uses the standardized half-width r_k solving
//!
//! ```text
//! √(2/π) · exp(-r²/2) / r  =  1 / ((k+1) · ln^{3/2}(k+1))
//! ```
//!
//! and the n-th box keeps |x̂_k| ≤ r_k in the first n standardized
//! coordinates. Its Gaussian measure is the product of the coordinate
//! masses p_k = P(|Z| ≤ r_k); its boundary measure is
//! Σ_{k≤n} √(2/π) e^{-r_k²/2} ∏_{j≤n, j≠k} p_j. Because the Gaussian tail
//! beyond r is at most e^{-r²/2}/r, each p_k is at least 1 minus the target
//! above, so the measures stay above a positive limit `a` while the
//! boundary sum inherits the divergence of Σ 1/(k ln k).

use crate::error::{Error, Result};
use crate::num::{ln_symmetric_mass, symmetric_mass, CompensatedSum, SQRT_2_OVER_PI};
use crate::spectrum::Spectrum;
use serde::Serialize;

/// Default relative residual tolerance for the half-width solver.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;

/// Terms summed numerically inside [`CubeFamily::limit_lower_bound`]; the
/// remainder is enclosed by closed-form integral bounds.
const LIMIT_TERMS: usize = 1_000_000;

/// Right-hand side of the defining equation for coordinate k (1-based).
pub fn threshold_target(k: usize) -> f64 {
    assert!(k >= 1, "coordinate indices are 1-based");
    let kf = (k + 1) as f64;
    1.0 / (kf * kf.ln().powf(1.5))
}

/// Left-hand side g(r) = √(2/π) e^{-r²/2} / r, strictly decreasing on (0, ∞).
fn half_width_lhs(r: f64) -> f64 {
    SQRT_2_OVER_PI * (-0.5 * r * r).exp() / r
}

/// Solve g(r_k) = target_k by bracketing bisection plus a Newton polish.
/// Accepts only a root whose relative residual is at most `rel_tol`.
pub fn solve_half_width(k: usize, rel_tol: f64) -> Result<f64> {
    if !(rel_tol > 0.0 && rel_tol < 1e-2) {
        return Err(Error::Solver(format!(
            "relative tolerance {rel_tol} outside (0, 1e-2)"
        )));
    }
    let target = threshold_target(k);
    let (mut lo, mut hi) = (1e-8, 16.0);
    if half_width_lhs(lo) < target || half_width_lhs(hi) > target {
        return Err(Error::Solver(format!(
            "initial bracket does not straddle the target for k = {k}"
        )));
    }
    // bisection down to a short bracket; g is monotone so signs are simple
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        if half_width_lhs(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish; the derivative is g'(r) = -g(r) (r + 1/r)
    let mut r = 0.5 * (lo + hi);
    for _ in 0..40 {
        let g = half_width_lhs(r);
        if ((g - target) / target).abs() <= rel_tol {
            return Ok(r);
        }
        let step = (g - target) / (g * (r + 1.0 / r));
        let next = r + step;
        r = if next > lo && next < hi {
            next
        } else {
            // fall back to a bisection step, shrinking the bracket
            let mid = 0.5 * (lo + hi);
            if half_width_lhs(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            0.5 * (lo + hi)
        };
    }
    Err(Error::Solver(format!(
        "half-width iteration for k = {k} did not reach tolerance {rel_tol}"
    )))
}

/// ∏_j P(|Z| ≤ r_j) for arbitrary radii, in log space.
pub fn symmetric_box_log_measure(radii: &[f64]) -> f64 {
    CompensatedSum::sum_iter(radii.iter().map(|&r| ln_symmetric_mass(r)))
}

/// ∏_j P(|Z| ≤ r_j) for arbitrary radii.
pub fn symmetric_box_measure(radii: &[f64]) -> f64 {
    symmetric_box_log_measure(radii).exp()
}

/// Two-sided bracket for a positive limit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Enclosure {
    pub lower: f64,
    pub upper: f64,
}

impl Enclosure {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Product over coordinates beyond m, with a certified limit bracket.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailProduct {
    /// ∏_{j=m+1}^{len} p_j over the solved coordinates.
    pub partial: f64,
    /// Certified lower bound for the infinite product ∏_{j>m} p_j.
    pub limit_lower: f64,
    /// The partial product itself bounds the infinite product from above.
    pub limit_upper: f64,
}

/// Compactness report for the family under a given covariance spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct CubeCompactnessReport {
    /// Σ_{j ≤ len} r_j² λ_j.
    pub weighted_partial_sum: f64,
    /// Verdict inherited from the spectrum's Σ λ_j ln j classification;
    /// valid because r_j² sits between ln(j+1) and 4 ln(j+1) from
    /// `bracket_start` on.
    pub verdict: crate::spectrum::TailVerdict,
}

/// The solved family: half-widths, coordinate masses, and derived series.
#[derive(Clone, Debug)]
pub struct CubeFamily {
    half_widths: Vec<f64>,
    coord_masses: Vec<f64>,
    ln_coord_masses: Vec<f64>,
    /// √(2/π) e^{-r_k²/2}, the boundary weight of coordinate k.
    boundary_weights: Vec<f64>,
    targets: Vec<f64>,
    solver_tol: f64,
}

impl CubeFamily {
    /// Solve the first `len` coordinates.
    pub fn build(len: usize, rel_tol: f64) -> Result<Self> {
        if len == 0 {
            return Err(Error::Solver("family length must be at least 1".into()));
        }
        let mut half_widths = Vec::with_capacity(len);
        let mut coord_masses = Vec::with_capacity(len);
        let mut ln_coord_masses = Vec::with_capacity(len);
        let mut boundary_weights = Vec::with_capacity(len);
        let mut targets = Vec::with_capacity(len);
        for k in 1..=len {
            let r = solve_half_width(k, rel_tol)?;
            half_widths.push(r);
            coord_masses.push(symmetric_mass(r));
            ln_coord_masses.push(ln_symmetric_mass(r));
            boundary_weights.push(SQRT_2_OVER_PI * (-0.5 * r * r).exp());
            targets.push(threshold_target(k));
        }
        Ok(Self {
            half_widths,
            coord_masses,
            ln_coord_masses,
            boundary_weights,
            targets,
            solver_tol: rel_tol,
        })
    }

    pub fn len(&self) -> usize {
        self.half_widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.half_widths.is_empty()
    }

    pub fn solver_tol(&self) -> f64 {
        self.solver_tol
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn coord_masses(&self) -> &[f64] {
        &self.coord_masses
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Relative residual of the solved coordinate k.
    pub fn residual(&self, k: usize) -> f64 {
        let g = half_width_lhs(self.half_widths[k - 1]);
        ((g - self.targets[k - 1]) / self.targets[k - 1]).abs()
    }

    /// ln γ(C_n) = Σ_{k≤n} ln p_k.
    pub fn log_measure(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.len());
        CompensatedSum::sum_iter(self.ln_coord_masses[..n].iter().copied())
    }

    /// γ(C_n), the Gaussian measure of the n-th box.
    pub fn measure(&self, n: usize) -> f64 {
        self.log_measure(n).exp()
    }

    /// ∏_{k≤n} (1 - target_k), the closed-form floor under γ(C_n).
    pub fn lower_bound(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.len());
        CompensatedSum::sum_iter(self.targets[..n].iter().map(|&t| (-t).ln_1p())).exp()
    }

    /// Certified bracket for a = ∏_{k=1}^∞ (1 - target_k), the positive
    /// limit under every γ(C_n). The first `LIMIT_TERMS` factors are summed
    /// in log space; the rest is enclosed through
    /// ∫ dx/((x+1) ln^{3/2}(x+1)) = -2/√ln(x+1) and t ≤ -ln(1-t) ≤ t/(1-t).
    pub fn limit_lower_bound(&self) -> Enclosure {
        let n = LIMIT_TERMS;
        let mut acc = CompensatedSum::new();
        for k in 1..=n {
            acc.add((-threshold_target(k)).ln_1p());
        }
        let finite = acc.value(); // negative
        let t_next = threshold_target(n + 1);
        let tail_low = 2.0 / ((n + 2) as f64).ln().sqrt();
        let tail_high = 2.0 / (((n + 1) as f64).ln().sqrt() * (1.0 - t_next));
        // rounding allowance far above the accumulated f64 error
        let lower = ((finite - tail_high).exp()) * (1.0 - 1e-12);
        let upper = ((finite - tail_low).exp()) * (1.0 + 1e-12);
        Enclosure { lower, upper }
    }

    /// Boundary measure of the n-th box,
    /// Σ_{k≤n} √(2/π) e^{-r_k²/2} ∏_{j≤n, j≠k} p_j.
    pub fn perimeter(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.len());
        let log_measure = self.log_measure(n);
        let mut s = CompensatedSum::new();
        for k in 0..n {
            s.add(self.boundary_weights[k] / self.coord_masses[k]);
        }
        log_measure.exp() * s.value()
    }

    /// Boundary measures of every box up to `n`, sharing one pass.
    pub fn perimeter_table(&self, n: usize) -> Vec<f64> {
        assert!(n >= 1 && n <= self.len());
        let mut out = Vec::with_capacity(n);
        let mut log_measure = CompensatedSum::new();
        let mut s = CompensatedSum::new();
        for k in 0..n {
            log_measure.add(self.ln_coord_masses[k]);
            s.add(self.boundary_weights[k] / self.coord_masses[k]);
            out.push(log_measure.value().exp() * s.value());
        }
        out
    }

    /// Divergent floor under the boundary measure:
    /// perimeter(n) ≥ a · Σ_{k≤n} target_k r_k.
    pub fn perimeter_lower_bound(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.len());
        let a = self.limit_lower_bound().lower;
        let mut s = CompensatedSum::new();
        for k in 0..n {
            s.add(self.targets[k] * self.half_widths[k]);
        }
        a * s.value()
    }

    /// α_m = ∏_{j>m} p_j, through the solved coordinates plus a certified
    /// bound on the unsolved tail (p_j ≥ 1 - target_j).
    pub fn tail_product(&self, m: usize) -> TailProduct {
        assert!(m < self.len());
        let len = self.len();
        let partial =
            CompensatedSum::sum_iter(self.ln_coord_masses[m..len].iter().copied()).exp();
        let t_next = threshold_target(len + 1);
        let tail_log_low = -2.0 / (((len + 1) as f64).ln().sqrt() * (1.0 - t_next));
        TailProduct {
            partial,
            limit_lower: partial * tail_log_low.exp() * (1.0 - 1e-12),
            limit_upper: partial,
        }
    }

    /// Union-style bound: 1 - α_m ≤ Σ_{j>m} target_j ≤ 2/√ln(m+1).
    pub fn tail_union_bound(&self, m: usize) -> f64 {
        2.0 / ((m + 1) as f64).ln().sqrt()
    }

    /// Smallest k from which √ln(j+1) ≤ r_j ≤ 2√ln(j+1) holds for every
    /// solved j ≥ k. `None` if the bracket fails at the last coordinate.
    pub fn bracket_start(&self) -> Option<usize> {
        let mut start = None;
        for j in (1..=self.len()).rev() {
            let root = ((j + 1) as f64).ln().sqrt();
            let r = self.half_widths[j - 1];
            if r >= root && r <= 2.0 * root {
                start = Some(j);
            } else {
                break;
            }
        }
        start
    }

    /// Σ_{j≤len∧dim} r_j² λ_j together with the spectrum's verdict; the two
    /// series converge or diverge together because r_j² is bracketed by
    /// ln(j+1) and 4 ln(j+1) from `bracket_start` on.
    pub fn compactness(&self, spectrum: &Spectrum) -> CubeCompactnessReport {
        let n = match spectrum.max_dim() {
            Some(len) => len.min(self.len()),
            None => self.len(),
        };
        let mut acc = CompensatedSum::new();
        for j in 1..=n {
            let r = self.half_widths[j - 1];
            acc.add(r * r * spectrum.eigenvalue(j));
        }
        CubeCompactnessReport {
            weighted_partial_sum: acc.value(),
            verdict: spectrum.compactness(n).verdict,
        }
    }

    /// Whether standardized coordinates z lie in the n-th box.
    pub fn contains_standardized(&self, n: usize, z: &[f64]) -> bool {
        assert!(n <= self.len() && z.len() >= n);
        z[..n]
            .iter()
            .zip(&self.half_widths[..n])
            .all(|(v, r)| v.abs() <= *r)
    }

    /// Smallest half-width among the first n coordinates; the H-ball of
    /// this radius sits inside every box of the family.
    pub fn min_half_width(&self, n: usize) -> f64 {
        assert!(n >= 1 && n <= self.len());
        self.half_widths[..n].iter().copied().fold(f64::MAX, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::std_normal_pdf;
    use crate::spectrum::TailVerdict;

    #[test]
    fn solver_residuals_meet_tolerance() {
        for k in [1usize, 2, 10, 100, 5000] {
            let r = solve_half_width(k, 1e-13).unwrap();
            let rel = (half_width_lhs(r) - threshold_target(k)).abs() / threshold_target(k);
            assert!(rel <= 1e-13, "k = {k}: residual {rel}");
        }
    }

    #[test]
    fn solver_rejects_bad_tolerances() {
        assert!(solve_half_width(1, 0.0).is_err());
        assert!(solve_half_width(1, 0.5).is_err());
    }

    #[test]
    fn half_widths_increase_with_index() {
        let family = CubeFamily::build(2000, DEFAULT_SOLVER_TOL).unwrap();
        let r = family.half_widths();
        for k in 1..r.len() {
            assert!(r[k] > r[k - 1], "half-widths must increase at k = {k}");
        }
    }

    #[test]
    fn coordinate_masses_obey_tail_sandwich() {
        // 1 - target_k ≤ p_k < 1: the Gaussian tail beyond r is below the
        // target by construction of the defining equation.
        let family = CubeFamily::build(3000, DEFAULT_SOLVER_TOL).unwrap();
        for k in 1..=family.len() {
            let p = family.coord_masses()[k - 1];
            let t = family.targets()[k - 1];
            assert!(p >= 1.0 - t, "k = {k}: p = {p}, 1 - target = {}", 1.0 - t);
            assert!(p < 1.0, "k = {k}");
        }
    }

    #[test]
    fn measures_decrease_and_stay_above_their_floor() {
        let family = CubeFamily::build(2000, DEFAULT_SOLVER_TOL).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=family.len() {
            let m = family.measure(n);
            assert!(m < prev, "measure must strictly decrease at n = {n}");
            assert!(m >= family.lower_bound(n), "floor violated at n = {n}");
            prev = m;
        }
        let a = family.limit_lower_bound();
        assert!(a.lower > 0.0);
        assert!(prev >= a.lower, "measure fell under the limit floor");
    }

    #[test]
    fn limit_floor_enclosure_is_tight() {
        let family = CubeFamily::build(1, DEFAULT_SOLVER_TOL).unwrap();
        let a = family.limit_lower_bound();
        assert!(a.lower > 0.0 && a.upper < 1.0);
        assert!(a.width() < 1e-6, "width {}", a.width());
        assert!(a.width() > 0.0);
    }

    #[test]
    fn single_coordinate_perimeter_is_twice_the_density() {
        let family = CubeFamily::build(1, DEFAULT_SOLVER_TOL).unwrap();
        let r1 = family.half_widths()[0];
        let expect = 2.0 * std_normal_pdf(r1);
        let got = family.perimeter(1);
        assert!((got - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn perimeter_dominates_its_divergent_floor() {
        let family = CubeFamily::build(5000, DEFAULT_SOLVER_TOL).unwrap();
        for n in [1usize, 10, 100, 1000, 5000] {
            assert!(family.perimeter(n) > family.perimeter_lower_bound(n));
        }
    }

    #[test]
    fn perimeter_table_matches_direct_evaluation() {
        let family = CubeFamily::build(300, DEFAULT_SOLVER_TOL).unwrap();
        let table = family.perimeter_table(300);
        for n in [1usize, 7, 100, 300] {
            let direct = family.perimeter(n);
            assert!((table[n - 1] - direct).abs() <= 1e-13 * direct);
        }
    }

    #[test]
    fn tail_products_increase_toward_one() {
        let family = CubeFamily::build(4000, DEFAULT_SOLVER_TOL).unwrap();
        let mut prev = 0.0;
        for m in [0usize, 10, 100, 1000, 3999] {
            let alpha = family.tail_product(m);
            assert!(alpha.partial > prev);
            assert!(alpha.limit_lower <= alpha.partial);
            assert!(alpha.limit_lower > 0.0);
            prev = alpha.partial;
        }
        // 1 - α_m under its union-style bound, using the certified lower
        // bound so the comparison covers the infinite product
        let alpha = family.tail_product(1000);
        assert!(1.0 - alpha.limit_lower <= family.tail_union_bound(1000));
    }

    #[test]
    fn bracket_start_is_small_and_stable_across_tolerances() {
        let mut starts = Vec::new();
        for tol in [1e-10, 1e-12, 1e-14] {
            let family = CubeFamily::build(2000, tol).unwrap();
            starts.push(family.bracket_start().expect("bracket must settle"));
        }
        assert_eq!(starts[0], starts[1]);
        assert_eq!(starts[1], starts[2]);
        assert!(starts[0] <= 10, "bracket start {} unexpectedly large", starts[0]);
    }

    #[test]
    fn compactness_verdicts_split_between_spectra() {
        let family = CubeFamily::build(2000, DEFAULT_SOLVER_TOL).unwrap();
        let converging = family.compactness(&Spectrum::power_law(2.0).unwrap());
        assert_eq!(converging.verdict, TailVerdict::Converging);
        let diverging = family.compactness(&Spectrum::log_borderline());
        assert_eq!(diverging.verdict, TailVerdict::Diverging);
        assert!(diverging.weighted_partial_sum > converging.weighted_partial_sum);
    }

    #[test]
    fn cameron_martin_ball_fits_inside_every_box() {
        let family = CubeFamily::build(50, DEFAULT_SOLVER_TOL).unwrap();
        let r = family.min_half_width(50);
        assert_eq!(r, family.half_widths()[0]);
        // points with H-norm ≤ r have every standardized coordinate ≤ r
        let mut z = vec![0.0; 50];
        z[0] = r;
        assert!(family.contains_standardized(50, &z));
        z[0] = 0.0;
        let spread = r / (50f64).sqrt();
        for v in z.iter_mut() {
            *v = spread;
        }
        assert!(family.contains_standardized(50, &z));
    }

    #[test]
    fn box_measure_of_uniform_radii_is_a_power() {
        // per-coordinate mass 1/2 at the standard quartile radius
        let q = 0.674_489_750_196_081_7;
        assert!((symmetric_mass(q) - 0.5).abs() < 1e-15);
        let radii = vec![q; 3];
        assert!((symmetric_box_measure(&radii) - 0.125).abs() < 1e-14);
    }
}
