//! Estimator results and level profiles.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Divergence,
    CoareaFd,
    SurfaceQuadrature,
    Analytic,
    McMeasure,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Divergence => "divergence",
            Method::CoareaFd => "coarea-fd",
            Method::SurfaceQuadrature => "surface-quadrature",
            Method::Analytic => "analytic",
            Method::McMeasure => "mc-measure",
        };
        f.write_str(name)
    }
}

/// A scalar estimate with its uncertainty and the method that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub n_rejected: u64,
    pub method: Method,
    pub seed: u64,
}

impl Estimate {
    /// A closed-form value carrying no statistical uncertainty.
    pub fn analytic(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
            n_samples: 0,
            n_rejected: 0,
            method: Method::Analytic,
            seed: 0,
        }
    }

    /// |Δ| ≤ k·√(se₁² + se₂²) + extra, the agreement rule used throughout.
    pub fn agrees_with(&self, other: &Estimate, k: f64, extra: f64) -> bool {
        let combined = self.std_error.hypot(other.std_error);
        (self.value - other.value).abs() <= k * combined + extra
    }
}

/// Estimates along a strictly increasing grid of levels.
#[derive(Clone, Debug, Serialize)]
pub struct Profile {
    levels: Vec<f64>,
    estimates: Vec<Estimate>,
}

impl Profile {
    pub fn new(levels: Vec<f64>, estimates: Vec<Estimate>) -> Result<Self> {
        if levels.len() != estimates.len() {
            return Err(Error::InvalidGrid(format!(
                "{} levels vs {} estimates",
                levels.len(),
                estimates.len()
            )));
        }
        validate_levels(&levels)?;
        Ok(Profile { levels, estimates })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn estimates(&self) -> &[Estimate] {
        &self.estimates
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Estimate)> {
        self.levels.iter().copied().zip(self.estimates.iter())
    }

    /// CSV with header `r,value,std_error`; floats print in shortest
    /// round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,value,std_error\n");
        for (r, e) in self.iter() {
            out.push_str(&format!("{},{},{}\n", r, e.value, e.std_error));
        }
        out
    }
}

/// Grids must be finite, nonempty, and strictly increasing.
pub fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidGrid("empty level grid".into()));
    }
    if levels.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid("levels must be finite".into()));
    }
    for w in levels.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidGrid(format!(
                "levels must strictly increase ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}
