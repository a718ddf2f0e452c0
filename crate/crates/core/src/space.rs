//! Truncated Gaussian spaces and their points.
//!
//! A `TruncatedSpace` fixes a spectrum and a dimension n; under it a `Point`
//! holds natural coordinates x_j = ⟨x, e_j⟩ (variance λ_j each), while
//! standardized coordinates x_j/√λ_j are i.i.d. standard normal. Vectors of
//! the Cameron–Martin space are kept in coordinates against the orthonormal
//! frame h_j = √λ_j e_j, so their H-norm is the plain Euclidean norm of the
//! stored slice.
//!
//! Sampling is a pure function of (spectrum, dimension, seed, index): every
//! point index owns its own counter-based substream, so chunked parallel
//! generation reproduces the sequential stream bit for bit, and resampling a
//! rejected point just keeps drawing from that index's substream.

use crate::error::{Error, Result};
use crate::num::CompensatedSum;
use crate::spectrum::Spectrum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A spectrum truncated to its first `dim` coordinates, with the derived
/// quantities the hot loops need.
#[derive(Clone, Debug)]
pub struct TruncatedSpace {
    spectrum: Spectrum,
    dim: usize,
    lambdas: Vec<f64>,
    sqrt_lambdas: Vec<f64>,
    trace: f64,
}

impl TruncatedSpace {
    pub fn new(spectrum: Spectrum, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpectrum(
                "truncation dimension must be at least 1".into(),
            ));
        }
        if let Some(len) = spectrum.max_dim() {
            if dim > len {
                return Err(Error::DimensionMismatch {
                    context: "truncation of explicit spectrum",
                    left: dim,
                    right: len,
                });
            }
        }
        let lambdas: Vec<f64> = (1..=dim).map(|j| spectrum.eigenvalue(j)).collect();
        let sqrt_lambdas: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
        let trace = CompensatedSum::sum_iter(lambdas.iter().copied());
        Ok(Self {
            spectrum,
            dim,
            lambdas,
            sqrt_lambdas,
            trace,
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn sqrt_lambdas(&self) -> &[f64] {
        &self.sqrt_lambdas
    }

    /// Truncated trace Σ_{j ≤ dim} λ_j.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// λ_1, the largest eigenvalue.
    pub fn top_eigenvalue(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn sampler(&self, seed: u64) -> Sampler<'_> {
        Sampler {
            space: self,
            template: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }
}

/// A point of the truncated space in natural coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Standardized coordinates x_j/√λ_j.
    pub fn standardized(&self, space: &TruncatedSpace) -> Result<Vec<f64>> {
        self.check_dim(space)?;
        Ok(self
            .coords
            .iter()
            .zip(&space.sqrt_lambdas)
            .map(|(x, s)| x / s)
            .collect())
    }

    /// Rebuild natural coordinates from standardized ones.
    pub fn from_standardized(space: &TruncatedSpace, z: &[f64]) -> Result<Self> {
        if z.len() != space.dim {
            return Err(Error::DimensionMismatch {
                context: "standardized coordinates",
                left: z.len(),
                right: space.dim,
            });
        }
        Ok(Self {
            coords: z
                .iter()
                .zip(&space.sqrt_lambdas)
                .map(|(v, s)| v * s)
                .collect(),
        })
    }

    /// H-norm of the point viewed as a Cameron–Martin vector,
    /// (Σ x_j²/λ_j)^{1/2}.
    pub fn cm_norm(&self, space: &TruncatedSpace) -> Result<f64> {
        let z = self.standardized(space)?;
        Ok(CompensatedSum::sum_iter(z.iter().map(|v| v * v)).sqrt())
    }

    fn check_dim(&self, space: &TruncatedSpace) -> Result<()> {
        if self.coords.len() != space.dim {
            return Err(Error::DimensionMismatch {
                context: "point in truncated space",
                left: self.coords.len(),
                right: space.dim,
            });
        }
        Ok(())
    }
}

/// A Cameron–Martin vector in h-frame coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CMVector {
    hcoords: Vec<f64>,
}

impl CMVector {
    pub fn new(hcoords: Vec<f64>) -> Self {
        Self { hcoords }
    }

    pub fn hcoords(&self) -> &[f64] {
        &self.hcoords
    }

    /// H-norm, the Euclidean norm of the h-frame coordinates.
    pub fn norm(&self) -> f64 {
        CompensatedSum::sum_iter(self.hcoords.iter().map(|v| v * v)).sqrt()
    }

    /// Natural coordinates of the same vector: x_j = √λ_j · hcoords_j.
    pub fn to_point(&self, space: &TruncatedSpace) -> Result<Point> {
        Point::from_standardized(space, &self.hcoords)
    }
}

/// Deterministic per-index sampler.
#[derive(Clone, Debug)]
pub struct Sampler<'a> {
    space: &'a TruncatedSpace,
    template: ChaCha8Rng,
    seed: u64,
}

impl<'a> Sampler<'a> {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn space(&self) -> &'a TruncatedSpace {
        self.space
    }

    /// Stream of draws belonging to one point index. The first draw is the
    /// point itself; later draws are the deterministic resamples used after
    /// a rejection.
    pub fn stream(&self, index: u64) -> PointStream<'a> {
        let mut rng = self.template.clone();
        rng.set_stream(index);
        PointStream {
            space: self.space,
            rng,
        }
    }

    /// The point at `index` (first draw of its stream).
    pub fn point(&self, index: u64) -> Point {
        self.stream(index).draw()
    }

    /// Convenience: the first `count` points in index order.
    pub fn points(&self, count: u64) -> Vec<Point> {
        (0..count).map(|i| self.point(i)).collect()
    }
}

/// Per-index substream; see [`Sampler::stream`].
pub struct PointStream<'a> {
    space: &'a TruncatedSpace,
    rng: ChaCha8Rng,
}

impl PointStream<'_> {
    pub fn draw(&mut self) -> Point {
        let mut coords = Vec::with_capacity(self.space.dim);
        for s in &self.space.sqrt_lambdas {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            coords.push(z * s);
        }
        Point { coords }
    }

    /// Draw, writing standardized and natural coordinates into buffers.
    pub fn draw_into(&mut self, std_out: &mut [f64], nat_out: &mut [f64]) {
        debug_assert_eq!(std_out.len(), self.space.dim);
        debug_assert_eq!(nat_out.len(), self.space.dim);
        for (j, s) in self.space.sqrt_lambdas.iter().enumerate() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            std_out[j] = z;
            nat_out[j] = z * s;
        }
    }
}
