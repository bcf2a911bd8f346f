//! Model configuration: a JSON file describing the response, family,
//! covariate roles, spline and hyperprior settings, and exploration
//! options. Every validation failure names the offending field.

use crate::data::Dataset;
use lps_core::{ExploreMethod, LpsError, ResponseFamily, Result, SmoothSpec};
use serde::Deserialize;
use std::collections::HashSet;

fn default_basis_size() -> usize {
    15
}
fn default_penalty_order() -> usize {
    3
}
fn default_epsilon() -> f64 {
    1e-6
}
fn default_grid_size() -> usize {
    100
}
fn default_nu() -> f64 {
    3.0
}
fn default_a_delta() -> f64 {
    1e-4
}
fn default_b_delta() -> f64 {
    1e-4
}
fn default_zeta() -> f64 {
    1e-5
}
fn default_alpha() -> f64 {
    0.05
}
fn default_chain_length() -> usize {
    500
}
fn default_proposal_dof() -> f64 {
    3.0
}
fn default_levels() -> Vec<f64> {
    vec![0.90, 0.95]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Response column name.
    pub response: String,
    pub family: FamilyConfig,
    /// Linear covariate column names.
    #[serde(default)]
    pub linear: Vec<String>,
    /// Smooth terms (at least one).
    pub smooth: Vec<SmoothConfig>,
    #[serde(default)]
    pub hyperprior: HyperConfig,
    #[serde(default)]
    pub explorer: ExplorerConfig,
    /// "lps" (default) or "lpsmap".
    #[serde(default)]
    pub variant: Option<String>,
    #[serde(default = "default_levels")]
    pub credible_levels: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// "gaussian", "poisson", "binomial", or "bernoulli".
    pub kind: String,
    /// Gaussian dispersion; defaults to the empirical response variance.
    #[serde(default)]
    pub dispersion: Option<f64>,
    /// Binomial trials per observation.
    #[serde(default)]
    pub trials: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothConfig {
    /// Covariate column name.
    pub name: String,
    #[serde(default = "default_basis_size")]
    pub basis_size: usize,
    #[serde(default = "default_penalty_order")]
    pub penalty_order: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Spline domain; defaults to the observed covariate range.
    #[serde(default)]
    pub domain: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_a_delta")]
    pub a_delta: f64,
    #[serde(default = "default_b_delta")]
    pub b_delta: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            nu: default_nu(),
            a_delta: default_a_delta(),
            b_delta: default_b_delta(),
            zeta: default_zeta(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorerConfig {
    /// "grid" or "imh"; default dispatches on the number of smooths.
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub grid_points: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_chain_length")]
    pub chain_length: usize,
    #[serde(default = "default_proposal_dof")]
    pub proposal_dof: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        ExplorerConfig {
            method: None,
            grid_points: None,
            alpha: default_alpha(),
            chain_length: default_chain_length(),
            proposal_dof: default_proposal_dof(),
            seed: None,
        }
    }
}

pub fn parse_method(name: &str) -> Result<ExploreMethod> {
    match name {
        "grid" => Ok(ExploreMethod::Grid),
        "imh" => Ok(ExploreMethod::Imh),
        "mode-only" => Ok(ExploreMethod::ModeOnly),
        other => Err(LpsError::Config(format!(
            "explorer.method must be \"grid\" or \"imh\", got \"{other}\""
        ))),
    }
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| LpsError::Config(format!("config file does not parse: {e}")))
    }

    /// Structural validation against a dataset: distinct and existing
    /// column names, sane per-field values.
    pub fn validate(&self, data: &Dataset) -> Result<()> {
        if self.smooth.is_empty() {
            return Err(LpsError::Config(
                "field smooth: at least one smooth term is required".into(),
            ));
        }
        let mut seen = HashSet::new();
        let mut all_names = vec![("response", self.response.as_str())];
        for l in &self.linear {
            all_names.push(("linear", l.as_str()));
        }
        for s in &self.smooth {
            all_names.push(("smooth", s.name.as_str()));
        }
        for (field, name) in &all_names {
            if !seen.insert(*name) {
                return Err(LpsError::Config(format!(
                    "field {field}: column \"{name}\" is referenced more than once"
                )));
            }
            if !data.headers.iter().any(|h| h == name) {
                return Err(LpsError::Config(format!(
                    "field {field}: column \"{name}\" does not exist in the dataset \
                     (available: {})",
                    data.headers.join(", ")
                )));
            }
        }
        for s in &self.smooth {
            if s.basis_size <= s.penalty_order + 1 {
                return Err(LpsError::Config(format!(
                    "field smooth.{}: basis_size ({}) must exceed penalty_order ({}) + 1",
                    s.name, s.basis_size, s.penalty_order
                )));
            }
            if s.penalty_order == 0 {
                return Err(LpsError::Config(format!(
                    "field smooth.{}: penalty_order must be at least 1",
                    s.name
                )));
            }
            if s.epsilon <= 0.0 {
                return Err(LpsError::Config(format!(
                    "field smooth.{}: epsilon must be positive",
                    s.name
                )));
            }
            if s.grid_size < 2 {
                return Err(LpsError::Config(format!(
                    "field smooth.{}: grid_size must be at least 2",
                    s.name
                )));
            }
            if let Some((lo, hi)) = s.domain {
                if lo >= hi {
                    return Err(LpsError::Config(format!(
                        "field smooth.{}: domain must satisfy lo < hi",
                        s.name
                    )));
                }
            }
        }
        match self.family.kind.as_str() {
            "gaussian" | "poisson" | "bernoulli" => {}
            "binomial" => {
                if self.family.trials.unwrap_or(0) == 0 {
                    return Err(LpsError::Config(
                        "field family.trials: the binomial family needs a positive \
                         trials count"
                            .into(),
                    ));
                }
            }
            other => {
                return Err(LpsError::Config(format!(
                    "field family.kind: unknown family \"{other}\" (expected gaussian, \
                     poisson, binomial, or bernoulli)"
                )));
            }
        }
        if let Some(d) = self.family.dispersion {
            if d <= 0.0 {
                return Err(LpsError::Config(
                    "field family.dispersion: must be positive".into(),
                ));
            }
        }
        if !(self.hyperprior.nu > 0.0
            && self.hyperprior.a_delta > 0.0
            && self.hyperprior.b_delta > 0.0
            && self.hyperprior.zeta > 0.0)
        {
            return Err(LpsError::Config(
                "field hyperprior: nu, a_delta, b_delta, and zeta must all be positive".into(),
            ));
        }
        if self.explorer.alpha <= 0.0 || self.explorer.alpha >= 1.0 {
            return Err(LpsError::Config(
                "field explorer.alpha: must lie strictly between 0 and 1".into(),
            ));
        }
        if self.explorer.chain_length == 0 {
            return Err(LpsError::Config(
                "field explorer.chain_length: must be positive".into(),
            ));
        }
        if self.explorer.proposal_dof <= 2.0 {
            return Err(LpsError::Config(
                "field explorer.proposal_dof: must exceed 2".into(),
            ));
        }
        if let Some(m) = &self.explorer.method {
            parse_method(m)?;
        }
        if let Some(v) = &self.variant {
            if v != "lps" && v != "lpsmap" {
                return Err(LpsError::Config(format!(
                    "field variant: expected \"lps\" or \"lpsmap\", got \"{v}\""
                )));
            }
        }
        if self.credible_levels.is_empty()
            || self
                .credible_levels
                .iter()
                .any(|l| !(*l > 0.0 && *l < 1.0))
        {
            return Err(LpsError::Config(
                "field credible_levels: every level must lie strictly between 0 and 1".into(),
            ));
        }
        Ok(())
    }

    /// Response family, defaulting the Gaussian dispersion to the empirical
    /// variance of the response values.
    pub fn response_family(&self, y: &[f64]) -> Result<ResponseFamily> {
        match self.family.kind.as_str() {
            "poisson" => Ok(ResponseFamily::Poisson),
            "bernoulli" => Ok(ResponseFamily::Bernoulli),
            "binomial" => ResponseFamily::binomial(self.family.trials.unwrap_or(0)),
            "gaussian" => {
                let dispersion = match self.family.dispersion {
                    Some(d) => d,
                    None => {
                        let n = y.len() as f64;
                        let mean = y.iter().sum::<f64>() / n;
                        y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
                    }
                };
                ResponseFamily::gaussian(dispersion)
            }
            other => Err(LpsError::Config(format!(
                "field family.kind: unknown family \"{other}\""
            ))),
        }
    }

    pub fn smooth_specs(&self) -> Vec<SmoothSpec> {
        self.smooth
            .iter()
            .map(|s| SmoothSpec {
                basis_size: s.basis_size,
                penalty_order: s.penalty_order,
                epsilon: s.epsilon,
                grid_size: s.grid_size,
                domain: s.domain,
            })
            .collect()
    }
}
