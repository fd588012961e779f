//! Hybrid approximation of `1 / (1 - alpha)` used when the backward pass
//! peels transmittance off back-to-front.
//!
//! Below `alpha = 0.5` the geometric series is truncated after the fourth
//! power. From 0.5 up to the opacity clamp at 0.99, a seed from an 8-entry
//! table is refined by two Newton-Raphson steps `x <- x (2 - (1 - alpha) x)`.
//!
//! Table bins are uniform in `log(1 - alpha)` and each seed is the minimax
//! seed `2 / (a_lo + a_hi)` of its bin, so the Newton error `e0^4` is the same
//! at every bin edge (about 0.33%) and the result is continuous and monotone
//! across bins.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::real::Real;

pub const TAYLOR_LIMIT: f64 = 0.5;
pub const ALPHA_MAX: f64 = 0.99;
pub const LUT_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecipMode {
    #[default]
    Approx,
    Exact,
}

/// Seed table for the Newton-Raphson branch.
#[derive(Debug, Clone, PartialEq)]
pub struct RecipLut {
    /// Lower alpha edge of each bin; bin `j` is `[edges[j], edges[j + 1])`.
    pub edges: [f64; LUT_SIZE + 1],
    pub seeds: [f64; LUT_SIZE],
}

impl RecipLut {
    pub fn new() -> Self {
        let a_top = 1.0 - TAYLOR_LIMIT;
        let a_bottom = 1.0 - ALPHA_MAX;
        let ratio = (a_top / a_bottom).powf(1.0 / LUT_SIZE as f64);
        let mut edges = [0.0; LUT_SIZE + 1];
        let mut seeds = [0.0; LUT_SIZE];
        for j in 0..=LUT_SIZE {
            edges[j] = 1.0 - a_top / ratio.powi(j as i32);
        }
        edges[LUT_SIZE] = ALPHA_MAX;
        for j in 0..LUT_SIZE {
            let a_hi = 1.0 - edges[j];
            let a_lo = 1.0 - edges[j + 1];
            seeds[j] = 2.0 / (a_lo + a_hi);
        }
        Self { edges, seeds }
    }

    /// Bin index for `alpha` in `[0.5, 0.99]`; 0.99 itself lands in the last bin.
    pub fn bin<T: Real>(&self, alpha: T) -> usize {
        let a = alpha.as_f64();
        self.edges[1..LUT_SIZE].iter().take_while(|&&e| a >= e).count()
    }

    pub fn seed<T: Real>(&self, alpha: T) -> T {
        T::lit(self.seeds[self.bin(alpha)])
    }
}

impl Default for RecipLut {
    fn default() -> Self {
        Self::new()
    }
}

pub fn shared_lut() -> &'static RecipLut {
    static LUT: OnceLock<RecipLut> = OnceLock::new();
    LUT.get_or_init(RecipLut::new)
}

/// `1 / (1 - alpha)` for `alpha` in `[0, 0.99]`.
#[inline]
pub fn recip_one_minus<T: Real>(alpha: T, mode: RecipMode) -> Result<T> {
    if !(alpha >= T::zero() && alpha <= T::lit(ALPHA_MAX)) {
        return Err(Error::ReciprocalDomain(alpha.as_f64()));
    }
    Ok(match mode {
        RecipMode::Exact => T::one() / (T::one() - alpha),
        RecipMode::Approx => approx_unchecked(alpha),
    })
}

#[inline]
fn approx_unchecked<T: Real>(alpha: T) -> T {
    let one = T::one();
    if alpha < T::lit(TAYLOR_LIMIT) {
        one + alpha * (one + alpha * (one + alpha * (one + alpha)))
    } else {
        let a = one - alpha;
        let two = T::lit(2.0);
        let mut x = shared_lut().seed(alpha);
        x = x * (two - a * x);
        x * (two - a * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_exact() {
        assert_eq!(recip_one_minus(0.0_f64, RecipMode::Approx).unwrap(), 1.0);
    }

    #[test]
    fn quarter_uses_truncated_series() {
        let v = recip_one_minus(0.25_f64, RecipMode::Approx).unwrap();
        assert_eq!(v, 1.33203125);
        let exact = 1.0 / 0.75;
        let rel = (v - exact).abs() / exact;
        assert!((rel - 0.0009765625).abs() < 1e-12);
    }

    #[test]
    fn three_quarters_within_three_percent() {
        let v = recip_one_minus(0.75_f64, RecipMode::Approx).unwrap();
        assert!((v - 4.0).abs() / 4.0 < 0.03);
    }

    #[test]
    fn domain_is_enforced() {
        for bad in [-1e-9, 0.9900001, 1.0, f64::NAN] {
            assert!(matches!(
                recip_one_minus(bad, RecipMode::Approx),
                Err(Error::ReciprocalDomain(_))
            ));
        }
        assert!(recip_one_minus(0.99_f64, RecipMode::Approx).is_ok());
        assert!(recip_one_minus(0.99_f32, RecipMode::Approx).is_ok());
    }

    #[test]
    fn lut_has_eight_increasing_seeds() {
        let lut = RecipLut::new();
        assert_eq!(lut.seeds.len(), 8);
        assert!(lut.seeds.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(lut.edges[0], 0.5);
        assert_eq!(lut.edges[8], 0.99);
        assert_eq!(lut.bin(0.5_f64), 0);
        assert_eq!(lut.bin(0.99_f64), 7);
    }

    #[test]
    fn exact_mode_divides() {
        assert_eq!(recip_one_minus(0.5_f64, RecipMode::Exact).unwrap(), 2.0);
    }
}
