//! Level-set shapes: balls, diagonal ellipsoids, and halfspaces, with their
//! Cameron–Martin gradients and the mean-curvature field div_γ ν_H.
//!
//! Each shape is the data of a defining function u; the set under study at
//! level ℓ is {u < ℓ}. For the ball u(x) = ‖x − x₀‖², for the ellipsoid
//! u(x) = ‖T(x − x₀)‖² with T = diag(t), for the halfspace u(x) = ⟨x, a⟩.
//! Levels are therefore squared radii for balls and ellipsoids.

use crate::error::{Error, Result};
use crate::space::{CMVector, Point, TruncatedSpace};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Points whose gradient quadratic form ⟨Q∇u-ish, ·⟩ falls under this are
/// treated as degenerate and rejected by samplers.
pub const DEGENERACY_FLOOR: f64 = 1e-24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    Ball { center: Vec<f64> },
    Ellipsoid { center: Vec<f64>, t: Vec<f64> },
    Halfspace { a: Vec<f64> },
}

/// Everything the estimators need at one sampled point, computed in a
/// single pass over the coordinates.
#[derive(Clone, Debug)]
pub struct CurvatureSample {
    pub point: Point,
    pub u_value: f64,
    pub grad_h: CMVector,
    pub grad_norm: f64,
    pub div_nu: f64,
}

/// Radii bracketing the sign of the ball's mean curvature: div_γ ν_H ≥ 0
/// inside radius r0 and ≤ 0 outside radius r1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallThresholds {
    pub r0: f64,
    pub r1: f64,
}

fn require_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidShape(format!("{what} must be finite")));
    }
    Ok(())
}

impl Shape {
    pub fn ball(center: Vec<f64>) -> Result<Self> {
        require_finite(&center, "ball center")?;
        Ok(Shape::Ball { center })
    }

    /// Diagonal scales t_k ≥ 0 with at least one positive; zero scales make
    /// the set a cylinder over the active coordinates.
    pub fn ellipsoid(center: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        require_finite(&center, "ellipsoid center")?;
        require_finite(&t, "ellipsoid scales")?;
        if center.len() != t.len() {
            return Err(Error::DimensionMismatch {
                context: "ellipsoid center vs scales",
                left: center.len(),
                right: t.len(),
            });
        }
        if t.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidShape("ellipsoid scales must be ≥ 0".into()));
        }
        if !t.iter().any(|&v| v > 0.0) {
            return Err(Error::InvalidShape(
                "ellipsoid needs at least one positive scale".into(),
            ));
        }
        Ok(Shape::Ellipsoid { center, t })
    }

    pub fn halfspace(a: Vec<f64>) -> Result<Self> {
        require_finite(&a, "halfspace normal")?;
        if a.is_empty() || a.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidShape("halfspace normal must be nonzero".into()));
        }
        Ok(Shape::Halfspace { a })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Shape::Ball { .. } => "ball",
            Shape::Ellipsoid { .. } => "ellipsoid",
            Shape::Halfspace { .. } => "halfspace",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center } => center.len(),
            Shape::Ellipsoid { center, .. } => center.len(),
            Shape::Halfspace { a } => a.len(),
        }
    }

    /// Embed into `dim` coordinates: centers and halfspace normals pad with
    /// zeros, ellipsoid scales pad with zeros too, so the defining function
    /// is unchanged and the set becomes a cylinder over the original one.
    /// A bare halfspace (empty normal) becomes {⟨x, e_1⟩ < ℓ}.
    pub fn expand_to_dim(&self, dim: usize) -> Result<Shape> {
        if self.dim() > dim {
            return Err(Error::DimensionMismatch {
                context: "shape wider than the requested dimension",
                left: self.dim(),
                right: dim,
            });
        }
        let pad = |v: &[f64]| {
            let mut out = v.to_vec();
            out.resize(dim, 0.0);
            out
        };
        match self {
            Shape::Ball { center } => Shape::ball(pad(center)),
            Shape::Ellipsoid { center, t } => Shape::ellipsoid(pad(center), pad(t)),
            Shape::Halfspace { a } => {
                let mut a = pad(a);
                if a.iter().all(|&v| v == 0.0) {
                    a[0] = 1.0;
                }
                Shape::halfspace(a)
            }
        }
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if self.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                context: "shape vs point",
                left: self.dim(),
                right: x.dim(),
            });
        }
        Ok(())
    }

    fn check_space(&self, space: &TruncatedSpace) -> Result<()> {
        if self.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "shape vs space",
                left: self.dim(),
                right: space.dim(),
            });
        }
        Ok(())
    }

    /// The defining function u at x.
    pub fn value(&self, x: &Point) -> Result<f64> {
        self.check_point(x)?;
        let c = x.coords();
        Ok(match self {
            Shape::Ball { center } => {
                let mut s = 0.0;
                for j in 0..c.len() {
                    let d = c[j] - center[j];
                    s += d * d;
                }
                s
            }
            Shape::Ellipsoid { center, t } => {
                let mut s = 0.0;
                for j in 0..c.len() {
                    let d = t[j] * (c[j] - center[j]);
                    s += d * d;
                }
                s
            }
            Shape::Halfspace { a } => {
                let mut s = 0.0;
                for j in 0..c.len() {
                    s += a[j] * c[j];
                }
                s
            }
        })
    }

    /// ∇_H u in h-basis coefficients: coefficient j is √λ_j ∂_j u.
    pub fn gradient_h(&self, space: &TruncatedSpace, x: &Point) -> Result<CMVector> {
        self.check_space(space)?;
        self.check_point(x)?;
        let c = x.coords();
        let sq = space.sqrt_lambdas();
        let coords = match self {
            Shape::Ball { center } => (0..c.len())
                .map(|j| 2.0 * sq[j] * (c[j] - center[j]))
                .collect(),
            Shape::Ellipsoid { center, t } => (0..c.len())
                .map(|j| 2.0 * sq[j] * t[j] * t[j] * (c[j] - center[j]))
                .collect(),
            Shape::Halfspace { a } => (0..c.len()).map(|j| sq[j] * a[j]).collect(),
        };
        Ok(CMVector::new(coords))
    }

    /// |∇_H u|_H at x.
    pub fn gradient_norm(&self, space: &TruncatedSpace, x: &Point) -> Result<f64> {
        Ok(self.gradient_h(space, x)?.norm())
    }

    /// Mean curvature div_γ ν_H at x, where ν_H = ∇_H u/|∇_H u|_H.
    pub fn div_nu(&self, space: &TruncatedSpace, x: &Point) -> Result<f64> {
        Ok(self.curvature_sample(space, x.clone())?.div_nu)
    }

    /// (u(x), |∇_H u(x)|_H) in one pass without building the gradient;
    /// well-defined at degenerate points (the norm is then 0).
    pub fn value_and_gradient_norm(
        &self,
        space: &TruncatedSpace,
        x: &Point,
    ) -> Result<(f64, f64)> {
        self.check_space(space)?;
        self.check_point(x)?;
        let c = x.coords();
        let lam = space.lambdas();
        Ok(match self {
            Shape::Ball { center } => {
                let mut u = 0.0;
                let mut g2 = 0.0;
                for j in 0..c.len() {
                    let d = c[j] - center[j];
                    u += d * d;
                    g2 += lam[j] * d * d;
                }
                (u, 2.0 * g2.sqrt())
            }
            Shape::Ellipsoid { center, t } => {
                let mut u = 0.0;
                let mut g2 = 0.0;
                for j in 0..c.len() {
                    let d = c[j] - center[j];
                    let m = t[j] * t[j] * d;
                    u += t[j] * t[j] * d * d;
                    g2 += lam[j] * m * m;
                }
                (u, 2.0 * g2.sqrt())
            }
            Shape::Halfspace { a } => {
                let mut u = 0.0;
                let mut s2 = 0.0;
                for j in 0..c.len() {
                    u += a[j] * c[j];
                    s2 += lam[j] * a[j] * a[j];
                }
                (u, s2.sqrt())
            }
        })
    }

    /// One-pass evaluation of u, ∇_H u, its norm, and div_γ ν_H.
    ///
    /// Rejects (degenerate gradient) when the quadratic form under the
    /// gradient norm is below [`DEGENERACY_FLOOR`], a γ-null event for balls
    /// and ellipsoids at random points.
    pub fn curvature_sample(&self, space: &TruncatedSpace, x: Point) -> Result<CurvatureSample> {
        self.check_space(space)?;
        self.check_point(&x)?;
        let c = x.coords();
        let lam = space.lambdas();
        let sq = space.sqrt_lambdas();
        match self {
            Shape::Ball { center } => {
                // u = Σ d_j², d = x − x₀;
                // div = (Tr Q − ‖d‖² − ⟨d, x₀⟩)/g − (Σ λ_j² d_j²)/g³
                // with g² = Σ λ_j d_j².
                let mut u = 0.0;
                let mut g2 = 0.0;
                let mut qd2 = 0.0;
                let mut dc = 0.0;
                let mut grad = Vec::with_capacity(c.len());
                for j in 0..c.len() {
                    let d = c[j] - center[j];
                    u += d * d;
                    g2 += lam[j] * d * d;
                    qd2 += lam[j] * lam[j] * d * d;
                    dc += d * center[j];
                    grad.push(2.0 * sq[j] * d);
                }
                if g2 < DEGENERACY_FLOOR {
                    return Err(Error::DegenerateGradient);
                }
                let g = g2.sqrt();
                let div_nu = (space.trace() - u - dc) / g - qd2 / (g2 * g);
                Ok(CurvatureSample {
                    point: x,
                    u_value: u,
                    grad_h: CMVector::new(grad),
                    grad_norm: 2.0 * g,
                    div_nu,
                })
            }
            Shape::Ellipsoid { center, t } => {
                // u = Σ t_j² d_j²; with m_j = t_j² d_j,
                // div = (Σ λ_j t_j² − ⟨x, m⟩)/G − (Σ λ_j² t_j² m_j²)/G³
                // where G² = Σ λ_j m_j² and |∇_H u|_H = 2G.
                let mut u = 0.0;
                let mut g2 = 0.0;
                let mut lt2 = 0.0;
                let mut xm = 0.0;
                let mut curv_num = 0.0;
                let mut grad = Vec::with_capacity(c.len());
                for j in 0..c.len() {
                    let d = c[j] - center[j];
                    let t2 = t[j] * t[j];
                    let m = t2 * d;
                    u += t2 * d * d;
                    g2 += lam[j] * m * m;
                    lt2 += lam[j] * t2;
                    xm += c[j] * m;
                    curv_num += lam[j] * lam[j] * t2 * m * m;
                    grad.push(2.0 * sq[j] * m);
                }
                if g2 < DEGENERACY_FLOOR {
                    return Err(Error::DegenerateGradient);
                }
                let g = g2.sqrt();
                let div_nu = (lt2 - xm) / g - curv_num / (g2 * g);
                Ok(CurvatureSample {
                    point: x,
                    u_value: u,
                    grad_h: CMVector::new(grad),
                    grad_norm: 2.0 * g,
                    div_nu,
                })
            }
            Shape::Halfspace { a } => {
                // ν_H is constant; div_γ ν_H = −⟨x, a⟩/s with s² = Σ λ_j a_j²
                let mut u = 0.0;
                let mut s2 = 0.0;
                let mut grad = Vec::with_capacity(c.len());
                for j in 0..c.len() {
                    u += a[j] * c[j];
                    s2 += lam[j] * a[j] * a[j];
                    grad.push(sq[j] * a[j]);
                }
                if s2 < DEGENERACY_FLOOR {
                    return Err(Error::DegenerateGradient);
                }
                let s = s2.sqrt();
                Ok(CurvatureSample {
                    point: x,
                    u_value: u,
                    grad_h: CMVector::new(grad),
                    grad_norm: s,
                    div_nu: -u / s,
                })
            }
        }
    }

    /// Deterministic pointwise bracket for the ball's mean curvature:
    /// lo = (Tr Q − r² − ‖x₀‖r − λ_1)/g and hi = (Tr Q − r² + ‖x₀‖r)/g with
    /// r = ‖x − x₀‖ and g² = ⟨Q(x−x₀), x−x₀⟩.
    pub fn div_nu_bounds(&self, space: &TruncatedSpace, x: &Point) -> Result<(f64, f64)> {
        let Shape::Ball { center } = self else {
            return Err(Error::NotABall);
        };
        self.check_space(space)?;
        self.check_point(x)?;
        let c = x.coords();
        let lam = space.lambdas();
        let mut r2 = 0.0;
        let mut g2 = 0.0;
        let mut c2 = 0.0;
        for j in 0..c.len() {
            let d = c[j] - center[j];
            r2 += d * d;
            g2 += lam[j] * d * d;
            c2 += center[j] * center[j];
        }
        if g2 < DEGENERACY_FLOOR {
            return Err(Error::DegenerateGradient);
        }
        let g = g2.sqrt();
        let r = r2.sqrt();
        let cn = c2.sqrt();
        let lo = (space.trace() - r2 - cn * r - space.top_eigenvalue()) / g;
        let hi = (space.trace() - r2 + cn * r) / g;
        Ok((lo, hi))
    }

    /// The curvature sign-change radii of a ball:
    /// r0 = (−‖x₀‖ + √(‖x₀‖² + 4(Tr Q − λ_1)))/2,
    /// r1 = (‖x₀‖ + √(‖x₀‖² + 4 Tr Q))/2.
    /// At a 1-dimensional truncation Tr Q = λ_1 and r0 degenerates to 0.
    pub fn ball_thresholds(&self, space: &TruncatedSpace) -> Result<BallThresholds> {
        let Shape::Ball { center } = self else {
            return Err(Error::NotABall);
        };
        self.check_space(space)?;
        let cn = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r0 = (-cn + (cn * cn + 4.0 * (space.trace() - space.top_eigenvalue())).sqrt()) / 2.0;
        let r1 = (cn + (cn * cn + 4.0 * space.trace()).sqrt()) / 2.0;
        Ok(BallThresholds { r0, r1 })
    }
}

/// Text format: `ball`, `ball:center=0.5,0`, `ellipsoid:t=1,0.5;center=0,0`
/// (center optional), `halfspace:a=1,0`, or bare `halfspace` for a = e_1.
impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Shape::Ball { center } => {
                if center.iter().all(|&v| v == 0.0) {
                    write!(f, "ball")
                } else {
                    write!(f, "ball:center={}", join(center))
                }
            }
            Shape::Ellipsoid { center, t } => {
                write!(f, "ellipsoid:t={}", join(t))?;
                if center.iter().any(|&v| v != 0.0) {
                    write!(f, ";center={}", join(center))?;
                }
                Ok(())
            }
            Shape::Halfspace { a } => write!(f, "halfspace:a={}", join(a)),
        }
    }
}

fn parse_vec(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidShape(format!("bad {what} entry {tok:?}")))
        })
        .collect()
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k.trim(), Some(r)),
            None => (s.trim(), None),
        };
        let mut fields = std::collections::BTreeMap::new();
        if let Some(rest) = rest {
            for part in rest.split(';') {
                let (key, val) = part.split_once('=').ok_or_else(|| {
                    Error::InvalidShape(format!("expected key=value in {part:?}"))
                })?;
                fields.insert(key.trim().to_string(), val.trim().to_string());
            }
        }
        let take = |fields: &mut std::collections::BTreeMap<String, String>,
                    key: &str|
         -> Result<Option<Vec<f64>>> {
            fields.remove(key).map(|v| parse_vec(&v, key)).transpose()
        };
        let shape = match kind {
            "ball" => {
                let center = take(&mut fields, "center")?.unwrap_or_default();
                Shape::ball(center)?
            }
            "ellipsoid" => {
                let t = take(&mut fields, "t")?
                    .ok_or_else(|| Error::InvalidShape("ellipsoid needs t=…".into()))?;
                let center = take(&mut fields, "center")?.unwrap_or_else(|| vec![0.0; t.len()]);
                Shape::ellipsoid(center, t)?
            }
            "halfspace" => {
                let a = take(&mut fields, "a")?.unwrap_or_default();
                if a.is_empty() {
                    // dimension settled later by expand_to_dim
                    Shape::Halfspace { a: Vec::new() }
                } else {
                    Shape::halfspace(a)?
                }
            }
            other => {
                return Err(Error::InvalidShape(format!(
                    "unknown shape kind {other:?} (ball, ellipsoid, halfspace)"
                )))
            }
        };
        if let Some(key) = fields.into_keys().next() {
            return Err(Error::InvalidShape(format!("unknown shape field {key:?}")));
        }
        Ok(shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Spectrum;

    fn std_2d() -> TruncatedSpace {
        TruncatedSpace::new(Spectrum::explicit(vec![1.0, 1.0]).unwrap(), 2).unwrap()
    }

    #[test]
    fn ball_value_is_squared_distance() {
        let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
        assert_eq!(ball.value(&Point::new(vec![3.0, 4.0])).unwrap(), 25.0);
        let shifted = Shape::ball(vec![1.0, -2.0]).unwrap();
        assert_eq!(shifted.value(&Point::new(vec![1.0, -2.0])).unwrap(), 0.0);
    }

    #[test]
    fn halfspace_value_is_inner_product() {
        let hs = Shape::halfspace(vec![1.0, 0.0]).unwrap();
        assert_eq!(hs.value(&Point::new(vec![2.0, -7.0])).unwrap(), 2.0);
    }

    #[test]
    fn ellipsoid_value_scales_coordinates() {
        let e = Shape::ellipsoid(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        assert_eq!(e.value(&Point::new(vec![2.0, 2.0])).unwrap(), 5.0);
    }

    #[test]
    fn ball_gradient_matches_closed_form() {
        let space = std_2d();
        let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
        let g = ball
            .gradient_h(&space, &Point::new(vec![1.0, 0.0]))
            .unwrap();
        assert_eq!(g.hcoords(), &[2.0, 0.0]);
        assert_eq!(g.norm(), 2.0);
    }

    #[test]
    fn halfspace_gradient_is_constant() {
        let space =
            TruncatedSpace::new(Spectrum::explicit(vec![0.25, 0.25]).unwrap(), 2).unwrap();
        let hs = Shape::halfspace(vec![1.0, 0.0]).unwrap();
        for x in [[0.0, 0.0], [3.0, -1.0]] {
            let g = hs.gradient_h(&space, &Point::new(x.to_vec())).unwrap();
            assert_eq!(g.hcoords(), &[0.5, 0.0]);
        }
    }

    #[test]
    fn ellipsoid_gradient_norm_is_twice_weighted_form() {
        let space =
            TruncatedSpace::new(Spectrum::explicit(vec![1.0, 0.5]).unwrap(), 2).unwrap();
        let e = Shape::ellipsoid(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let x = Point::new(vec![1.0, 1.0]);
        let g = e.gradient_h(&space, &x).unwrap();
        // m = (1, 4), coefficients 2√λ_j m_j
        assert!((g.hcoords()[0] - 2.0).abs() < 1e-15);
        assert!((g.hcoords()[1] - 8.0 * 0.5f64.sqrt()).abs() < 1e-15);
        // G² = Σ λ_j m_j² = 9, so |∇u| = 6
        assert!((g.norm() - 6.0).abs() < 1e-14);
        assert!((e.gradient_norm(&space, &x).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn standard_ball_curvature_matches_radial_form() {
        // div_γ ν_H = (1 − ρ²)/ρ for the standard 2-D Gaussian
        let space = std_2d();
        let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
        for (x, rho) in [([0.5, 0.0], 0.5), ([0.3, 0.4], 0.5), ([0.0, 2.0], 2.0)] {
            let d = ball.div_nu(&space, &Point::new(x.to_vec())).unwrap();
            let expect = (1.0 - rho * rho) / rho;
            assert!((d - expect).abs() < 1e-12, "x = {x:?}: {d} vs {expect}");
        }
    }

    #[test]
    fn axis_point_curvature_under_uneven_spectrum() {
        // x = ρ e_2: div = (Tr Q − ρ²)/(√λ_2 ρ) − √λ_2/ρ
        let space =
            TruncatedSpace::new(Spectrum::explicit(vec![1.0, 0.5]).unwrap(), 2).unwrap();
        let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
        let rho = 2.0;
        let d = ball.div_nu(&space, &Point::new(vec![0.0, rho])).unwrap();
        let s = 0.5f64.sqrt();
        let expect = (1.5 - rho * rho) / (s * rho) - s / rho;
        assert!((d - expect).abs() < 1e-13, "{d} vs {expect}");
    }

    #[test]
    fn halfspace_curvature_is_minus_first_coordinate() {
        let space = std_2d();
        let hs = Shape::halfspace(vec![1.0, 0.0]).unwrap();
        for x in [[0.7, -3.0], [-1.2, 0.4]] {
            let d = hs.div_nu(&space, &Point::new(x.to_vec())).unwrap();
            assert!((d - (-x[0])).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_scales_ellipsoid_reduces_to_ball() {
        let space =
            TruncatedSpace::new(Spectrum::explicit(vec![1.0, 0.25]).unwrap(), 2).unwrap();
        let ball = Shape::ball(vec![0.3, -0.1]).unwrap();
        let e = Shape::ellipsoid(vec![0.3, -0.1], vec![1.0, 1.0]).unwrap();
        for x in [[1.0, 1.0], [-0.5, 2.0], [0.31, 0.2]] {
            let p = Point::new(x.to_vec());
            let a = ball.curvature_sample(&space, p.clone()).unwrap();
            let b = e.curvature_sample(&space, p).unwrap();
            assert!((a.div_nu - b.div_nu).abs() < 1e-12);
            assert!((a.grad_norm - b.grad_norm).abs() < 1e-14);
            assert_eq!(a.u_value, b.u_value);
        }
    }

    #[test]
    fn curvature_sample_is_internally_consistent() {
        let space =
            TruncatedSpace::new(Spectrum::explicit(vec![1.0, 0.5]).unwrap(), 2).unwrap();
        let e = Shape::ellipsoid(vec![0.2, 0.0], vec![1.0, 0.5]).unwrap();
        let sample = e
            .curvature_sample(&space, Point::new(vec![1.0, -0.7]))
            .unwrap();
        assert!((sample.grad_norm - sample.grad_h.norm()).abs() <= 1e-15);
        assert_eq!(
            sample.u_value,
            e.value(&Point::new(vec![1.0, -0.7])).unwrap()
        );
    }

    #[test]
    fn gradient_at_ball_center_is_degenerate() {
        let space = std_2d();
        let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
        let err = ball
            .curvature_sample(&space, Point::origin(2))
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateGradient));
    }

    #[test]
    fn thresholds_for_the_standard_plane() {
        let space = std_2d();
        let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
        let t = ball.ball_thresholds(&space).unwrap();
        assert_eq!(t.r0, 1.0);
        assert_eq!(t.r1, 2.0f64.sqrt());
    }

    #[test]
    fn centered_thresholds_are_trace_square_roots() {
        let space =
            TruncatedSpace::new(Spectrum::explicit(vec![0.9, 0.4, 0.2]).unwrap(), 3).unwrap();
        let ball = Shape::ball(vec![0.0, 0.0, 0.0]).unwrap();
        let t = ball.ball_thresholds(&space).unwrap();
        assert!((t.r0 - (space.trace() - 0.9).sqrt()).abs() < 1e-15);
        assert!((t.r1 - space.trace().sqrt()).abs() < 1e-15);
    }

    #[test]
    fn threshold_gap_widens_with_center_shift() {
        let space = std_2d();
        let mut prev_gap = -1.0;
        for shift in [0.0, 0.5, 1.0, 2.0] {
            let ball = Shape::ball(vec![shift, 0.0]).unwrap();
            let t = ball.ball_thresholds(&space).unwrap();
            let gap = t.r1 - t.r0;
            assert!(gap > prev_gap, "gap must grow with the shift");
            prev_gap = gap;
        }
    }

    #[test]
    fn degenerate_truncation_puts_inner_threshold_at_zero() {
        let space = TruncatedSpace::new(Spectrum::explicit(vec![1.0]).unwrap(), 1).unwrap();
        let ball = Shape::ball(vec![0.0]).unwrap();
        let t = ball.ball_thresholds(&space).unwrap();
        assert_eq!(t.r0, 0.0);
        assert_eq!(t.r1, 1.0);
    }

    #[test]
    fn curvature_bracket_contains_the_curvature() {
        let space = std_2d();
        let ball = Shape::ball(vec![0.4, -0.2]).unwrap();
        for x in [[1.0, 0.0], [0.0, 1.7], [-2.0, 0.3], [0.41, -0.21]] {
            let p = Point::new(x.to_vec());
            let (lo, hi) = ball.div_nu_bounds(&space, &p).unwrap();
            let d = ball.div_nu(&space, &p).unwrap();
            assert!(lo <= d && d <= hi, "x = {x:?}: {lo} ≤ {d} ≤ {hi}");
        }
    }

    #[test]
    fn standard_axis_bracket_matches_closed_form() {
        let space = std_2d();
        let ball = Shape::ball(vec![0.0, 0.0]).unwrap();
        let rho = 0.8;
        let p = Point::new(vec![rho, 0.0]);
        let (lo, hi) = ball.div_nu_bounds(&space, &p).unwrap();
        assert!((lo - (1.0 - rho * rho) / rho).abs() < 1e-14);
        assert!((hi - (2.0 - rho * rho) / rho).abs() < 1e-14);
        let d = ball.div_nu(&space, &p).unwrap();
        assert!((d - lo).abs() < 1e-14);
    }

    #[test]
    fn bounds_reject_other_shapes() {
        let space = std_2d();
        let hs = Shape::halfspace(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            hs.div_nu_bounds(&space, &Point::origin(2)),
            Err(Error::NotABall)
        ));
        assert!(matches!(hs.ball_thresholds(&space), Err(Error::NotABall)));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let space = std_2d();
        let ball = Shape::ball(vec![0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            ball.value(&Point::origin(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ball.div_nu(&space, &Point::origin(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(Shape::halfspace(vec![0.0, 0.0]).is_err());
        assert!(Shape::ellipsoid(vec![0.0], vec![0.0]).is_err());
        assert!(Shape::ellipsoid(vec![0.0, 0.0], vec![1.0, -0.5]).is_err());
        assert!(Shape::ellipsoid(vec![0.0], vec![1.0, 1.0]).is_err());
        assert!(Shape::ball(vec![f64::NAN]).is_err());
    }

    #[test]
    fn zero_scale_ellipsoid_ignores_that_coordinate() {
        let space = std_2d();
        let e = Shape::ellipsoid(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let sample = e
            .curvature_sample(&space, Point::new(vec![0.5, 9.0]))
            .unwrap();
        assert_eq!(sample.u_value, 0.25);
        assert_eq!(sample.grad_h.hcoords()[1], 0.0);
    }

    #[test]
    fn text_format_round_trips() {
        for s in [
            "ball",
            "ball:center=0.5,0",
            "ellipsoid:t=1,0.5",
            "ellipsoid:t=1,0.5;center=0.25,-1",
            "halfspace:a=1,0",
        ] {
            let shape: Shape = s.parse().unwrap();
            let back: Shape = shape.to_string().parse().unwrap();
            assert_eq!(shape, back, "through {s:?}");
        }
    }

    #[test]
    fn bare_shapes_expand_into_the_requested_dimension() {
        let ball: Shape = "ball".parse().unwrap();
        let ball = ball.expand_to_dim(3).unwrap();
        assert_eq!(ball, Shape::ball(vec![0.0; 3]).unwrap());
        let hs: Shape = "halfspace".parse().unwrap();
        let hs = hs.expand_to_dim(2).unwrap();
        assert_eq!(hs, Shape::halfspace(vec![1.0, 0.0]).unwrap());
        let e: Shape = "ellipsoid:t=1,0.5".parse().unwrap();
        let e = e.expand_to_dim(4).unwrap();
        assert_eq!(
            e,
            Shape::ellipsoid(vec![0.0; 4], vec![1.0, 0.5, 0.0, 0.0]).unwrap()
        );
        assert!(e.expand_to_dim(2).is_err());
    }

    #[test]
    fn malformed_text_is_rejected() {
        for s in [
            "ellipsoid",
            "ellipsoid:t=",
            "ball:center=x",
            "halfspace:a=0,0",
            "cube",
            "ball:radius=1",
            "ball:center",
        ] {
            assert!(s.parse::<Shape>().is_err(), "{s:?} must not parse");
        }
    }

    #[test]
    fn json_uses_kind_tags() {
        let e = Shape::ellipsoid(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let js = serde_json::to_string(&e).unwrap();
        assert!(js.contains("\"kind\":\"ellipsoid\""), "{js}");
        let back: Shape = serde_json::from_str(&js).unwrap();
        assert_eq!(e, back);
    }
}
