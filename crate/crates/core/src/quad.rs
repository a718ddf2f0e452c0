//! Deterministic 2-D boundary quadrature, the ground-truth oracle for the
//! Monte Carlo perimeter estimators.
//!
//! In two dimensions the perimeter of a smooth set E reduces to the line
//! integral ∫_{∂E} ‖Q^{1/2} n(x)‖ ρ(x) dH¹(x) with n the Euclidean unit
//! normal and ρ the Gaussian density. Circles and ellipses use the periodic
//! trapezoid rule (geometric convergence for analytic integrands); lines
//! use the trapezoid rule on a ±12σ window along the line. Panel counts
//! double until successive values agree to near machine precision, and the
//! last doubling gap provides the reported error bound.

use crate::error::{Error, Result};
use crate::estimate::{Estimate, Method};
use crate::num::{std_normal_pdf, CompensatedSum};
use crate::shape::Shape;
use crate::space::TruncatedSpace;
use crate::spectrum::Spectrum;
use std::f64::consts::TAU;

const MAX_NODES: usize = 1 << 21;
const REL_TOL: f64 = 1e-13;

/// Perimeter of the interval [−r, r] under the standard 1-D Gaussian: the
/// two boundary points each weighted by the density.
pub fn interval_perimeter_1d(r: f64) -> f64 {
    2.0 * std_normal_pdf(r)
}

fn gaussian_density_2d(lam: &[f64], x: f64, y: f64) -> f64 {
    let q = x * x / lam[0] + y * y / lam[1];
    (-0.5 * q).exp() / (TAU * (lam[0] * lam[1]).sqrt())
}

/// Equal-weight rule over one period of an analytic periodic integrand.
fn periodic_trapezoid(f: &impl Fn(f64) -> f64, nodes: usize) -> f64 {
    let h = TAU / nodes as f64;
    let mut acc = CompensatedSum::new();
    for k in 0..nodes {
        acc.add(f(k as f64 * h));
    }
    acc.value() * h
}

fn line_trapezoid(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = CompensatedSum::new();
    acc.add(0.5 * (f(a) + f(b)));
    for k in 1..panels {
        acc.add(f(a + k as f64 * h));
    }
    acc.value() * h
}

/// Double the panel count until two successive values agree; the reported
/// error is the last gap over 3 (the trapezoid rule's leading-order
/// Richardson factor).
fn refine(eval: impl Fn(usize) -> f64, start: usize) -> (f64, f64, usize) {
    let mut nodes = start.max(16);
    let mut prev = eval(nodes);
    loop {
        nodes *= 2;
        let cur = eval(nodes);
        let gap = (cur - prev).abs();
        if gap <= REL_TOL * cur.abs().max(f64::MIN_POSITIVE) || nodes >= MAX_NODES {
            return (cur, gap / 3.0, nodes);
        }
        prev = cur;
    }
}

/// Boundary-quadrature perimeter of {u < level} for 2-D shapes.
///
/// Balls and ellipsoids at level ≤ 0 have empty interior and perimeter 0
/// exactly. Ellipsoids need both scales positive, otherwise the boundary is
/// not a closed curve.
pub fn perimeter_quadrature_2d(
    shape: &Shape,
    spectrum: &Spectrum,
    level: f64,
    panels: usize,
) -> Result<Estimate> {
    if shape.dim() != 2 {
        return Err(Error::Quadrature(format!(
            "shape must be 2-dimensional, got {}",
            shape.dim()
        )));
    }
    if !level.is_finite() {
        return Err(Error::Quadrature("level must be finite".into()));
    }
    let space = TruncatedSpace::new(spectrum.clone(), 2)?;
    let lam = space.lambdas().to_vec();
    let exact = |value: f64, se: f64, nodes: usize| Estimate {
        value,
        std_error: se,
        n_samples: nodes as u64,
        n_rejected: 0,
        method: Method::SurfaceQuadrature,
        seed: 0,
    };
    match shape {
        Shape::Ball { center } => {
            if level <= 0.0 {
                return Ok(exact(0.0, 0.0, 0));
            }
            let r = level.sqrt();
            let (cx, cy) = (center[0], center[1]);
            let f = |theta: f64| {
                let (sin, cos) = theta.sin_cos();
                let w = (lam[0] * cos * cos + lam[1] * sin * sin).sqrt();
                w * gaussian_density_2d(&lam, cx + r * cos, cy + r * sin) * r
            };
            let (value, se, nodes) = refine(|n| periodic_trapezoid(&f, n), panels);
            Ok(exact(value, se, nodes))
        }
        Shape::Ellipsoid { center, t } => {
            if t[0] <= 0.0 || t[1] <= 0.0 {
                return Err(Error::Quadrature(
                    "ellipse quadrature needs both scales positive".into(),
                ));
            }
            if level <= 0.0 {
                return Ok(exact(0.0, 0.0, 0));
            }
            // semi-axes of {t₁²x² + t₂²y² = level}
            let a = level.sqrt() / t[0];
            let b = level.sqrt() / t[1];
            let (cx, cy) = (center[0], center[1]);
            let f = |theta: f64| {
                let (sin, cos) = theta.sin_cos();
                let speed = ((a * sin) * (a * sin) + (b * cos) * (b * cos)).sqrt();
                // outward normal ∝ (b cosθ, a sinθ)
                let (nx, ny) = (b * cos / speed, a * sin / speed);
                let w = (lam[0] * nx * nx + lam[1] * ny * ny).sqrt();
                w * gaussian_density_2d(&lam, cx + a * cos, cy + b * sin) * speed
            };
            let (value, se, nodes) = refine(|n| periodic_trapezoid(&f, n), panels);
            Ok(exact(value, se, nodes))
        }
        Shape::Halfspace { a } => {
            // the line ⟨x, a⟩ = level, walked by arclength from its foot
            // point; the Gaussian factor along it is a 1-D bell centered at
            // s* with spread σ = 1/√(τ₁²/λ₁ + τ₂²/λ₂)
            let norm = (a[0] * a[0] + a[1] * a[1]).sqrt();
            let foot = (level * a[0] / (norm * norm), level * a[1] / (norm * norm));
            let tau = (-a[1] / norm, a[0] / norm);
            let w = (lam[0] * a[0] * a[0] + lam[1] * a[1] * a[1]).sqrt() / norm;
            let alpha = tau.0 * tau.0 / lam[0] + tau.1 * tau.1 / lam[1];
            let beta = 2.0 * (foot.0 * tau.0 / lam[0] + foot.1 * tau.1 / lam[1]);
            let s_star = -beta / (2.0 * alpha);
            let sigma = alpha.sqrt().recip();
            let f = |s: f64| {
                w * gaussian_density_2d(&lam, foot.0 + s * tau.0, foot.1 + s * tau.1)
            };
            let (lo, hi) = (s_star - 12.0 * sigma, s_star + 12.0 * sigma);
            let (value, se, nodes) = refine(|n| line_trapezoid(&f, lo, hi, n), panels);
            Ok(exact(value, se, nodes))
        }
    }
}
