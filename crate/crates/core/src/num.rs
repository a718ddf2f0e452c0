//! Floating-point workhorses: compensated accumulation and the
//! standard-normal function family.

/// (2π)^{1/2}, the normalizing constant of the standard normal density.
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// (2/π)^{1/2}; shows up in folded-normal densities and tail targets.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Neumaier-compensated running sum. The compensation term also covers the
/// case where an incoming term dominates the partial sum, so the order of
/// magnitudes across terms does not matter.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc.value()
    }
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal distribution function, accurate in both tails.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// P(|Z| <= r) for standard normal Z and r >= 0.
#[inline]
pub fn symmetric_mass(r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    libm::erf(r * std::f64::consts::FRAC_1_SQRT_2)
}

/// P(|Z| > r); keeps full relative accuracy where `1 - symmetric_mass`
/// would cancel.
#[inline]
pub fn symmetric_tail(r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    libm::erfc(r * std::f64::consts::FRAC_1_SQRT_2)
}

/// ln P(|Z| <= r), computed through the complement so that values
/// exponentially close to 1 keep their tiny logarithms.
#[inline]
pub fn ln_symmetric_mass(r: f64) -> f64 {
    (-symmetric_tail(r)).ln_1p()
}
