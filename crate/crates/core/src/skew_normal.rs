//! Skew-normal distribution: density moments, moment matching, CDF through
//! Owen's T function, and quantiles.
//!
//! Parametrized as `SN(location, scale^2, shape)` with density
//! `2/scale * phi(z) * Phi(shape * z)`, `z = (x - location)/scale`. A zero
//! shape recovers the normal distribution.

use crate::dist::{normal_cdf, owens_t};
use crate::error::{LpsError, Result};

/// Moment matching clamps `psi = shape/sqrt(1+shape^2)` to this magnitude
/// when the requested third moment lies outside the attainable region.
const PSI_CLAMP: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewNormal {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
}

impl SkewNormal {
    pub fn new(location: f64, scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && location.is_finite() && shape.is_finite()) {
            return Err(LpsError::Domain(format!(
                "invalid skew-normal parameters ({location}, {scale}, {shape})"
            )));
        }
        Ok(SkewNormal {
            location,
            scale,
            shape,
        })
    }

    fn psi(&self) -> f64 {
        self.shape / (1.0 + self.shape * self.shape).sqrt()
    }

    /// Mean, variance, and third central moment.
    pub fn moments(&self) -> (f64, f64, f64) {
        let psi = self.psi();
        let c = (2.0 / std::f64::consts::PI).sqrt();
        let mean = self.location + self.scale * c * psi;
        let var = self.scale * self.scale * (1.0 - c * c * psi * psi);
        let third = 0.5 * (4.0 - std::f64::consts::PI)
            * self.scale.powi(3)
            * c.powi(3)
            * psi.powi(3);
        (mean, var, third)
    }

    /// `P(X <= x)` via `Phi(z) - 2 T(z, shape)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        (normal_cdf(z) - 2.0 * owens_t(z, self.shape)).clamp(0.0, 1.0)
    }

    /// Quantile by bisection on the CDF (monotone in `prob`).
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(LpsError::Domain(format!(
                "quantile probability must lie in (0,1), got {prob}"
            )));
        }
        let mut lo = self.location - 14.0 * self.scale;
        let mut hi = self.location + 14.0 * self.scale;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * self.scale.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Fits a skew-normal to a (mean, variance, third central moment) triple.
///
/// The shape solves the cubic moment identity with the sign of the third
/// moment; moment triples whose implied skewness exceeds the attainable
/// bound are clamped to the boundary and flagged in the second return value.
pub fn match_moments(m1: f64, m2: f64, m3: f64) -> Result<(SkewNormal, bool)> {
    if !(m2 > 0.0 && m2.is_finite() && m1.is_finite() && m3.is_finite()) {
        return Err(LpsError::Domain(format!(
            "moment matching needs a positive variance; got ({m1}, {m2}, {m3})"
        )));
    }
    let pi = std::f64::consts::PI;
    let kappa = m3.cbrt() * pi.sqrt() / ((4.0 - pi).cbrt() * 2f64.powf(1.0 / 6.0) * m2.sqrt());
    let k2 = kappa * kappa;
    let mut psi = m3.signum() * (4.0 * (k2 + 2.0 * k2 * k2 / pi)).sqrt() / (2.0 + 4.0 * k2 / pi);
    if m3 == 0.0 {
        psi = 0.0;
    }
    let mut clamped = false;
    if psi.abs() >= 1.0 - 1e-10 {
        psi = psi.signum() * PSI_CLAMP;
        clamped = true;
    }
    let shape = psi / (1.0 - psi * psi).sqrt();
    let scale = (m2 / (1.0 - 2.0 * psi * psi / pi)).sqrt();
    let location = m1 - scale * (2.0 / pi).sqrt() * psi;
    Ok((SkewNormal::new(location, scale, shape)?, clamped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::normal_quantile;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_third_moment_reduces_to_the_normal() {
        let (sn, clamped) = match_moments(1.3, 0.49, 0.0).unwrap();
        assert!(!clamped);
        assert_eq!(sn.shape, 0.0);
        assert!((sn.location - 1.3).abs() < 1e-14);
        assert!((sn.scale - 0.7).abs() < 1e-14);
    }

    #[test]
    fn round_trip_through_theoretical_moments() {
        let target = SkewNormal::new(0.0, 1.0, 5.0).unwrap();
        let (m1, m2, m3) = target.moments();
        let (fit, clamped) = match_moments(m1, m2, m3).unwrap();
        assert!(!clamped);
        assert!((fit.location).abs() < 1e-8);
        assert!((fit.scale - 1.0).abs() < 1e-8);
        assert!((fit.shape - 5.0).abs() < 1e-8);

        // Mirrored skewness flips the shape sign.
        let (fit_neg, _) = match_moments(m1, m2, -m3).unwrap();
        assert!((fit_neg.shape + 5.0).abs() < 1e-8);
    }

    #[test]
    fn round_trip_across_the_attainable_region() {
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        for _ in 0..1000 {
            let loc: f64 = rng.random_range(-5.0..5.0);
            let scale: f64 = rng.random_range(0.1..4.0);
            let shape: f64 = rng.random_range(-20.0..20.0);
            let sn = SkewNormal::new(loc, scale, shape).unwrap();
            let (m1, m2, m3) = sn.moments();
            let (fit, clamped) = match_moments(m1, m2, m3).unwrap();
            assert!(!clamped, "clamp at shape {shape}");
            assert!(
                (fit.location - loc).abs() < 1e-6
                    && (fit.scale - scale).abs() < 1e-6
                    && (fit.shape - shape).abs() < 1e-6 * shape.abs().max(1.0),
                "({loc}, {scale}, {shape}) -> ({}, {}, {})",
                fit.location,
                fit.scale,
                fit.shape
            );
        }
    }

    #[test]
    fn unattainable_skewness_is_clamped_and_flagged() {
        // Third moment far beyond the skew-normal bound for this variance.
        let (fit, clamped) = match_moments(0.0, 1.0, 5.0).unwrap();
        assert!(clamped);
        assert!(fit.shape.is_finite() && fit.scale.is_finite());
    }

    #[test]
    fn quantiles_reduce_to_normal_for_zero_shape() {
        let sn = SkewNormal::new(0.0, 1.0, 0.0).unwrap();
        let q = sn.quantile(0.975).unwrap();
        assert!((q - 1.959964).abs() < 1e-6);
        assert!((sn.quantile(0.5).unwrap()).abs() < 1e-9);
        let scaled = SkewNormal::new(2.0, 3.0, 0.0).unwrap();
        let expect = 2.0 + 3.0 * normal_quantile(0.1);
        assert!((scaled.quantile(0.1).unwrap() - expect).abs() < 1e-8);
    }

    #[test]
    fn cdf_inverts_the_quantile() {
        for shape in [-4.0, -0.7, 0.0, 1.3, 8.0] {
            let sn = SkewNormal::new(0.5, 1.7, shape).unwrap();
            for p in [0.025, 0.5, 0.975] {
                let x = sn.quantile(p).unwrap();
                assert!(
                    (sn.cdf(x) - p).abs() < 1e-8,
                    "shape {shape}, p {p}: cdf {}",
                    sn.cdf(x)
                );
            }
        }
    }

    #[test]
    fn cdf_matches_the_squared_normal_identity_at_unit_shape() {
        // For shape = 1 the skew-normal CDF is Phi(z)^2.
        let sn = SkewNormal::new(0.0, 1.0, 1.0).unwrap();
        for z in [-2.0, -0.5, 0.0, 0.8, 2.5] {
            let expect = normal_cdf(z) * normal_cdf(z);
            assert!((sn.cdf(z) - expect).abs() < 1e-12, "z = {z}");
        }
    }
}
