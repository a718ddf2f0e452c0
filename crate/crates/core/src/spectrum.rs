//! Covariance spectra. Eigenvalues are always positive, non-increasing,
//! and clamped away from zero so that standardized coordinates stay finite.
//!
//! Besides supplying eigenvalues, each rule knows enough about its own tail
//! to classify the series Σ λ_j ln j: when that series converges the
//! limiting sublevel sets of interest are compact, when it diverges they are
//! not, and a bare finite list cannot decide either way.

use crate::error::{Error, Result};
use crate::num::CompensatedSum;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Eigenvalues are clamped to at least this value. Keeps 1/λ_j and 1/√λ_j
/// finite without visibly perturbing any realistic rule.
pub const EIGENVALUE_FLOOR: f64 = 1e-300;

/// How an eigenvalue sequence is generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumRule {
    /// A finite list λ_1 ≥ λ_2 ≥ … > 0 given outright.
    Explicit { values: Vec<f64> },
    /// λ_j = j^{-alpha} with alpha > 1.
    PowerLaw { alpha: f64 },
    /// λ_j = ratio^j with 0 < ratio < 1.
    Geometric { ratio: f64 },
    /// λ_j = 1/(j ln²j) for j ≥ 2, with the j = 1 entry repeating j = 2 so
    /// the sequence stays defined and non-increasing. The weighted series
    /// Σ λ_j ln j just barely diverges, which is the whole point of it.
    LogBorderline,
}

/// A validated covariance spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spectrum {
    rule: SpectrumRule,
}

/// Outcome of classifying Σ λ_j ln j.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailVerdict {
    Converging,
    Diverging,
    /// Finite explicit lists carry no tail rule, so no verdict is possible.
    Inconclusive,
}

/// Report for the compactness criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CompactnessReport {
    /// Number of terms summed numerically.
    pub truncation: usize,
    /// Σ_{j ≤ truncation} λ_j ln j, compensated.
    pub partial_sum: f64,
    /// Closed-form upper bound on Σ_{j > truncation} λ_j ln j, when the
    /// rule admits one.
    pub tail_upper_bound: Option<f64>,
    pub verdict: TailVerdict,
}

impl Spectrum {
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpectrum("empty eigenvalue list".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalue {} is {v}, must be finite and positive",
                    i + 1
                )));
            }
            if i > 0 && v > values[i - 1] {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalues must be non-increasing, but entry {} exceeds entry {}",
                    i + 1,
                    i
                )));
            }
        }
        Ok(Self {
            rule: SpectrumRule::Explicit { values },
        })
    }

    pub fn power_law(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidSpectrum(format!(
                "power-law exponent must satisfy alpha > 1, got {alpha}"
            )));
        }
        Ok(Self {
            rule: SpectrumRule::PowerLaw { alpha },
        })
    }

    pub fn geometric(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidSpectrum(format!(
                "geometric ratio must lie in (0, 1), got {ratio}"
            )));
        }
        Ok(Self {
            rule: SpectrumRule::Geometric { ratio },
        })
    }

    pub fn log_borderline() -> Self {
        Self {
            rule: SpectrumRule::LogBorderline,
        }
    }

    pub fn rule(&self) -> &SpectrumRule {
        &self.rule
    }

    /// λ_j for 1-based index j. Panics if j = 0 or j exceeds an explicit list.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        assert!(j >= 1, "eigenvalue indices are 1-based");
        let raw = match &self.rule {
            SpectrumRule::Explicit { values } => values[j - 1],
            SpectrumRule::PowerLaw { alpha } => (j as f64).powf(-alpha),
            SpectrumRule::Geometric { ratio } => ratio.powi(j as i32),
            SpectrumRule::LogBorderline => {
                let k = j.max(2) as f64;
                let l = k.ln();
                1.0 / (k * l * l)
            }
        };
        raw.max(EIGENVALUE_FLOOR)
    }

    /// Largest available truncation dimension, if the rule is finite.
    pub fn max_dim(&self) -> Option<usize> {
        match &self.rule {
            SpectrumRule::Explicit { values } => Some(values.len()),
            _ => None,
        }
    }

    /// Σ_{j ≤ n} λ_j by compensated summation.
    pub fn trace(&self, n: usize) -> f64 {
        let mut acc = CompensatedSum::new();
        for j in 1..=n {
            acc.add(self.eigenvalue(j));
        }
        acc.value()
    }

    /// Classify Σ λ_j ln j using `truncation` numeric terms plus the rule's
    /// analytic tail knowledge.
    pub fn compactness(&self, truncation: usize) -> CompactnessReport {
        let n = match self.max_dim() {
            Some(len) => truncation.min(len),
            None => truncation,
        };
        let mut acc = CompensatedSum::new();
        for j in 2..=n {
            acc.add(self.eigenvalue(j) * (j as f64).ln());
        }
        let partial_sum = acc.value();
        let (tail_upper_bound, verdict) = match &self.rule {
            SpectrumRule::Explicit { .. } => (None, TailVerdict::Inconclusive),
            SpectrumRule::PowerLaw { alpha } => {
                // ∫_n^∞ x^{-α} ln x dx dominates the tail for a decreasing
                // integrand; antiderivative: x^{1-α} (ln x/(1-α) - 1/(1-α)²).
                let a = alpha - 1.0;
                let nf = n as f64;
                let tail = nf.powf(-a) * ((nf.ln() / a) + 1.0 / (a * a));
                (Some(tail), TailVerdict::Converging)
            }
            SpectrumRule::Geometric { ratio } => {
                // ln j ≤ j turns the tail into an arithmetico-geometric
                // series: Σ_{j>n} j q^j = q^{n+1}((n+1)(1-q)+q)/(1-q)².
                let q = *ratio;
                let nf = n as f64;
                let tail = q.powf(nf + 1.0) * ((nf + 1.0) * (1.0 - q) + q) / ((1.0 - q) * (1.0 - q));
                (Some(tail), TailVerdict::Converging)
            }
            SpectrumRule::LogBorderline => (None, TailVerdict::Diverging),
        };
        CompactnessReport {
            truncation: n,
            partial_sum,
            tail_upper_bound,
            verdict,
        }
    }

    /// For the diverging rule: a closed-form lower bound on the partial sum
    /// Σ_{2 ≤ j ≤ n} λ_j ln j that is unbounded in n. `None` for rules
    /// without a divergence certificate.
    pub fn divergence_lower_bound(&self, n: usize) -> Option<f64> {
        match &self.rule {
            SpectrumRule::LogBorderline => {
                // terms are 1/(j ln j), decreasing, so the sum from 2 to n
                // dominates ∫_2^{n+1} dx/(x ln x) = ln ln(n+1) - ln ln 2.
                let nf = (n + 1) as f64;
                Some(nf.ln().ln() - 2f64.ln().ln())
            }
            _ => None,
        }
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            SpectrumRule::Explicit { values } => {
                write!(f, "explicit:")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            SpectrumRule::PowerLaw { alpha } => write!(f, "power:alpha={alpha}"),
            SpectrumRule::Geometric { ratio } => write!(f, "geometric:ratio={ratio}"),
            SpectrumRule::LogBorderline => write!(f, "log-borderline"),
        }
    }
}

impl FromStr for Spectrum {
    type Err = Error;

    /// Accepts `explicit:v1,v2,…`, `power:alpha=A`, `geometric:ratio=Q`,
    /// and `log-borderline`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidSpectrum(format!("{msg}: {s:?}"));
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k.trim(), Some(r.trim())),
            None => (s.trim(), None),
        };
        match kind {
            "explicit" => {
                let body = rest.ok_or_else(|| bad("explicit needs eigenvalues"))?;
                let values = body
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("unparseable eigenvalue"))?;
                Spectrum::explicit(values)
            }
            "power" => {
                let body = rest.ok_or_else(|| bad("power needs alpha=A"))?;
                let alpha = body
                    .strip_prefix("alpha=")
                    .and_then(|t| t.trim().parse::<f64>().ok())
                    .ok_or_else(|| bad("power needs alpha=A"))?;
                Spectrum::power_law(alpha)
            }
            "geometric" => {
                let body = rest.ok_or_else(|| bad("geometric needs ratio=Q"))?;
                let ratio = body
                    .strip_prefix("ratio=")
                    .and_then(|t| t.trim().parse::<f64>().ok())
                    .ok_or_else(|| bad("geometric needs ratio=Q"))?;
                Spectrum::geometric(ratio)
            }
            "log-borderline" => {
                if rest.is_some() {
                    return Err(bad("log-borderline takes no parameters"));
                }
                Ok(Spectrum::log_borderline())
            }
            _ => Err(bad("unknown spectrum kind")),
        }
    }
}
