//! Univariate Gaussian mixtures: the marginal posterior of any single
//! latent coordinate (or of a fitted function value) is a weighted mixture
//! of normals, and credible bounds are quantiles of that mixture.

use crate::dist::normal_cdf;
use crate::error::{LpsError, Result};

#[derive(Debug, Clone)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        if weights.len() != means.len() || weights.len() != sds.len() || weights.is_empty() {
            return Err(LpsError::Config(
                "mixture component lists must be nonempty and of equal length".into(),
            ));
        }
        if sds.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(LpsError::Domain(
                "mixture standard deviations must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(LpsError::Domain("mixture weights must sum to a positive value".into()));
        }
        Ok(GaussianMixture {
            weights: weights.iter().map(|w| w / total).collect(),
            means,
            sds,
        })
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for ((w, m), s) in self.weights.iter().zip(&self.means).zip(&self.sds) {
            acc += w * if *s == 0.0 {
                f64::from(x >= *m)
            } else {
                normal_cdf((x - m) / s)
            };
        }
        acc
    }

    /// Quantile by bisection on the monotone CDF, to 1e-10 in the abscissa.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(LpsError::Domain(format!(
                "quantile probability must lie in (0,1), got {prob}"
            )));
        }
        let max_sd = self.sds.iter().cloned().fold(0.0_f64, f64::max).max(1e-300);
        let lo0 = self.means.iter().cloned().fold(f64::INFINITY, f64::min) - 10.0 * max_sd;
        let hi0 = self.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 10.0 * max_sd;
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-10 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Central credible interval at the given level.
    pub fn credible_interval(&self, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(LpsError::Domain(format!(
                "credible level must lie in (0,1), got {level}"
            )));
        }
        let tail = 0.5 * (1.0 - level);
        Ok((self.quantile(tail)?, self.quantile(1.0 - tail)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_component_interval_is_the_normal_interval() {
        let mix = GaussianMixture::new(vec![1.0], vec![2.0], vec![0.5]).unwrap();
        let (lo, hi) = mix.credible_interval(0.95).unwrap();
        assert!((lo - (2.0 - 1.959963984540054 * 0.5)).abs() < 1e-8);
        assert!((hi - (2.0 + 1.959963984540054 * 0.5)).abs() < 1e-8);
    }

    #[test]
    fn symmetric_mixture_yields_a_symmetric_interval() {
        let mix =
            GaussianMixture::new(vec![0.5, 0.5], vec![-1.0, 1.0], vec![0.3, 0.3]).unwrap();
        let (lo, hi) = mix.credible_interval(0.9).unwrap();
        assert!((lo + hi).abs() < 1e-8, "({lo}, {hi})");
    }

    #[test]
    fn cdf_at_returned_endpoints_matches_the_tail_probabilities() {
        let mix = GaussianMixture::new(
            vec![0.2, 0.5, 0.3],
            vec![-0.4, 0.1, 2.0],
            vec![0.2, 0.7, 0.05],
        )
        .unwrap();
        let (lo, hi) = mix.credible_interval(0.95).unwrap();
        assert!((mix.cdf(lo) - 0.025).abs() < 1e-8);
        assert!((mix.cdf(hi) - 0.975).abs() < 1e-8);
    }

    #[test]
    fn intervals_nest_across_levels() {
        let mix = GaussianMixture::new(
            vec![0.6, 0.4],
            vec![0.0, 1.5],
            vec![0.5, 0.2],
        )
        .unwrap();
        let (l90, h90) = mix.credible_interval(0.90).unwrap();
        let (l95, h95) = mix.credible_interval(0.95).unwrap();
        let (l99, h99) = mix.credible_interval(0.99).unwrap();
        assert!(l99 < l95 && l95 < l90);
        assert!(h90 < h95 && h95 < h99);
    }

    #[test]
    fn weights_are_normalized() {
        let mix = GaussianMixture::new(vec![2.0, 2.0], vec![0.0, 4.0], vec![1.0, 1.0]).unwrap();
        assert!((mix.mean() - 2.0).abs() < 1e-12);
    }
}
