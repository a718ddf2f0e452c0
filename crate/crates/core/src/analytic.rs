//! Closed-form reference values for the special cases that admit them.

use crate::error::Result;
use crate::num::{std_normal_cdf, std_normal_pdf};
use crate::shape::Shape;
use crate::space::TruncatedSpace;

/// s = ⟨Qa, a⟩^{1/2}, the standard deviation of ⟨x, a⟩.
fn halfspace_scale(space: &TruncatedSpace, a: &[f64]) -> f64 {
    space
        .lambdas()
        .iter()
        .zip(a)
        .map(|(l, v)| l * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Perimeter of {⟨x, a⟩ < level}: φ(level/s).
pub fn halfspace_perimeter(space: &TruncatedSpace, shape: &Shape, level: f64) -> Result<f64> {
    let Shape::Halfspace { a } = shape else {
        return Err(crate::error::Error::InvalidShape(
            "closed form needs a halfspace".into(),
        ));
    };
    Ok(std_normal_pdf(level / halfspace_scale(space, a)))
}

/// Measure of {⟨x, a⟩ < level}: Φ(level/s).
pub fn halfspace_measure(space: &TruncatedSpace, shape: &Shape, level: f64) -> Result<f64> {
    let Shape::Halfspace { a } = shape else {
        return Err(crate::error::Error::InvalidShape(
            "closed form needs a halfspace".into(),
        ));
    };
    Ok(std_normal_cdf(level / halfspace_scale(space, a)))
}

/// Perimeter of the centered radius-ρ disk under the standard 2-D
/// Gaussian: ρ e^{−ρ²/2}.
pub fn standard_disk_perimeter(radius: f64) -> f64 {
    if radius <= 0.0 {
        return 0.0;
    }
    radius * (-0.5 * radius * radius).exp()
}

/// Measure of the centered radius-ρ disk under the standard 2-D Gaussian:
/// 1 − e^{−ρ²/2}.
pub fn standard_disk_measure(radius: f64) -> f64 {
    if radius <= 0.0 {
        return 0.0;
    }
    -(-0.5 * radius * radius).exp_m1()
}

/// Density of u = ‖x‖² under the standard 2-D Gaussian: e^{−t/2}/2 for
/// t ≥ 0 (u is exponential with rate 1/2).
pub fn standard_disk_level_density(t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    0.5 * (-0.5 * t).exp()
}
