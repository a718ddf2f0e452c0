//! Gaussian perimeters of convex level sets on truncated Wiener spaces.
//!
//! A centred Gaussian measure with diagonal covariance Q = diag(λ_1, λ_2, …)
//! lives on a truncation to finitely many coordinates. Convex sets are given
//! as sublevel sets {u < r} of balls, ellipsoids, and halfspaces. The
//! boundary measure (Gaussian perimeter) of such a set equals the integral of
//! the Gaussian divergence of the unit Cameron–Martin normal over the set
//! itself, which turns perimeter estimation into a plain Monte Carlo mean.
//!
//! The crate provides:
//!
//! * [`spectrum`]: covariance eigenvalue rules, traces, and the nuclear-tail
//!   classification deciding compactness of limiting sublevel sets;
//! * [`space`]: truncated spaces, points, Cameron–Martin vectors, and a
//!   deterministic per-index sampler safe under chunked parallelism;
//! * [`shape`]: defining functions u, their H-gradients, and the closed-form
//!   divergence of the unit normal, with pointwise bounds for balls;
//! * [`mc`]: batched Monte Carlo estimators for divergence-form perimeter,
//!   coarea finite differences, level densities, set measures, and a
//!   log-concavity probe, all with batch-mean error accounting;
//! * [`quad`]: a two-dimensional boundary-quadrature oracle;
//! * [`cube`]: the symmetric box family whose measures stay bounded away
//!   from zero while perimeter grows without bound;
//! * [`checks`]: named runtime invariant checks shared with the CLI.

pub mod analytic;
pub mod checks;
pub mod cube;
pub mod error;
pub mod estimate;
pub mod mc;
pub mod num;
pub mod quad;
pub mod shape;
pub mod space;
pub mod spectrum;

pub use error::{Error, Result};
pub use estimate::{Estimate, Method, Profile};
pub use shape::Shape;
pub use space::{CMVector, Point, TruncatedSpace};
pub use spectrum::{Spectrum, SpectrumRule};
