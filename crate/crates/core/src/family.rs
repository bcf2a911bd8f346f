//! One-parameter exponential-family response distributions.
//!
//! Each family is described by its cumulant function `s` and the first two
//! derivatives: the mean of the response is `s'(gamma)` and its variance is
//! `dispersion * s''(gamma)`, with `gamma` the natural parameter. Only the
//! canonical links are supported (identity, log, logit), so the natural
//! parameter coincides with the additive predictor. The additive constant
//! `c(y, dispersion)` of the density is dropped throughout: every posterior
//! quantity downstream is used up to a constant or as a ratio, so it never
//! matters. Reported log-likelihood values are therefore "up to a family
//! constant".

use crate::error::{LpsError, Result};
use nalgebra::DVector;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` and Poisson
/// means to `>= PROB_CLAMP` before weight computation, which keeps Newton
/// steps finite on separable data.
pub const PROB_CLAMP: f64 = 1e-10;

/// Cumulant function value together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantValues {
    pub s: f64,
    pub ds: f64,
    pub d2s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseFamily {
    /// Identity link; `dispersion` is the known response variance.
    Gaussian { dispersion: f64 },
    /// Log link, unit dispersion.
    Poisson,
    /// Logit link on the success probability, `trials` draws per observation.
    Binomial { trials: u32 },
    /// Logit link; equivalent to `Binomial { trials: 1 }`.
    Bernoulli,
}

impl ResponseFamily {
    pub fn gaussian(dispersion: f64) -> Result<Self> {
        if !dispersion.is_finite() || dispersion <= 0.0 {
            return Err(LpsError::Config(format!(
                "Gaussian dispersion must be a positive real, got {dispersion}"
            )));
        }
        Ok(ResponseFamily::Gaussian { dispersion })
    }

    pub fn binomial(trials: u32) -> Result<Self> {
        if trials == 0 {
            return Err(LpsError::Config(
                "Binomial trials must be a positive integer".into(),
            ));
        }
        Ok(ResponseFamily::Binomial { trials })
    }

    /// The dispersion parameter (1 except for the Gaussian family).
    pub fn dispersion(&self) -> f64 {
        match self {
            ResponseFamily::Gaussian { dispersion } => *dispersion,
            _ => 1.0,
        }
    }

    fn trials(&self) -> f64 {
        match self {
            ResponseFamily::Binomial { trials } => f64::from(*trials),
            _ => 1.0,
        }
    }

    /// Cumulant function `s(gamma)` with its first two derivatives.
    ///
    /// The binomial/Bernoulli branch evaluates `log(1 + exp(gamma))`
    /// overflow-safely for any real `gamma`.
    pub fn cumulant(&self, gamma: f64) -> Result<CumulantValues> {
        if !gamma.is_finite() {
            return Err(LpsError::Domain(format!(
                "natural parameter must be finite, got {gamma}"
            )));
        }
        Ok(CumulantValues {
            s: self.s(gamma),
            ds: self.s_prime(gamma),
            d2s: self.s_second(gamma),
        })
    }

    /// `s(gamma)`; non-finite inputs propagate as NaN (see [`cumulant`](Self::cumulant)
    /// for the checked variant).
    pub fn s(&self, gamma: f64) -> f64 {
        match self {
            ResponseFamily::Gaussian { .. } => 0.5 * gamma * gamma,
            ResponseFamily::Poisson => gamma.exp(),
            ResponseFamily::Binomial { .. } | ResponseFamily::Bernoulli => {
                self.trials() * log1p_exp(gamma)
            }
        }
    }

    /// First cumulant derivative: the mean response at `gamma`.
    pub fn s_prime(&self, gamma: f64) -> f64 {
        match self {
            ResponseFamily::Gaussian { .. } => gamma,
            ResponseFamily::Poisson => gamma.exp(),
            ResponseFamily::Binomial { .. } | ResponseFamily::Bernoulli => {
                self.trials() * sigmoid(gamma)
            }
        }
    }

    /// Second cumulant derivative; strictly positive everywhere evaluated.
    pub fn s_second(&self, gamma: f64) -> f64 {
        match self {
            ResponseFamily::Gaussian { .. } => 1.0,
            ResponseFamily::Poisson => gamma.exp(),
            ResponseFamily::Binomial { .. } | ResponseFamily::Bernoulli => {
                let p = sigmoid(gamma);
                self.trials() * p * (1.0 - p)
            }
        }
    }

    /// Canonical link `g(mu)` mapping a mean into the predictor scale.
    pub fn link(&self, mu: f64) -> f64 {
        match self {
            ResponseFamily::Gaussian { .. } => mu,
            ResponseFamily::Poisson => mu.max(PROB_CLAMP).ln(),
            ResponseFamily::Binomial { .. } | ResponseFamily::Bernoulli => {
                let p = clamp_prob(mu / self.trials());
                (p / (1.0 - p)).ln()
            }
        }
    }

    /// Inverse link: the mean at predictor value `eta` (canonical, so this
    /// is exactly `s'(eta)`).
    pub fn inv_link(&self, eta: f64) -> f64 {
        self.s_prime(eta)
    }

    /// Newton-Raphson working weight for a single mean value,
    /// `w = 1 / (Var(y) * g'(mu)^2)`, with the mean clamped away from the
    /// boundary of its domain. Returns `(weight, was_clamped)`.
    pub fn weight_at_mean(&self, mu: f64) -> (f64, bool) {
        match self {
            ResponseFamily::Gaussian { dispersion } => (1.0 / dispersion, false),
            ResponseFamily::Poisson => {
                let clamped = mu < PROB_CLAMP;
                (mu.max(PROB_CLAMP), clamped)
            }
            ResponseFamily::Binomial { .. } | ResponseFamily::Bernoulli => {
                let p = mu / self.trials();
                let pc = clamp_prob(p);
                (self.trials() * pc * (1.0 - pc), p != pc)
            }
        }
    }

    /// Working weights for a mean vector; counts how many means were clamped.
    pub fn working_weights(&self, mu: &DVector<f64>) -> (DVector<f64>, usize) {
        let mut clamped = 0;
        let w = DVector::from_iterator(
            mu.len(),
            mu.iter().map(|&m| {
                let (wi, c) = self.weight_at_mean(m);
                if c {
                    clamped += 1;
                }
                wi
            }),
        );
        (w, clamped)
    }
}

/// Numerically safe `log(1 + exp(x))`.
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}
