//! Laplace-P-spline inference for generalized additive models.
//!
//! Approximate Bayesian estimation of additive models with P-spline
//! smoothers: a Laplace (Gaussian) approximation of the latent-field
//! posterior conditional on the roughness penalties, an analytic-derivative
//! Newton search over the marginal posterior of the log penalties, a hybrid
//! exploration of that posterior (skew-normal calibrated grid in low
//! dimension, independence sampling in high dimension), and pointwise
//! credible estimation of regression coefficients and smooth functions from
//! the resulting Gaussian mixture.

pub mod bspline;
pub mod design;
pub mod dist;
pub mod error;
pub mod explorer;
pub mod family;
pub mod inference;
pub mod laplace;
pub mod mixture;
pub mod penalty_posterior;
pub mod skew_normal;

pub use design::{assemble_design, GamDesign, SmoothSpec};
pub use error::{LpsError, Result};
pub use explorer::{ExploreMethod, ExplorerOptions, PenaltyEnsemble};
pub use family::ResponseFamily;
pub use inference::{fit_lps, fit_lpsmap, FitOptions, GamFit, SmoothPoint, Variant};
pub use laplace::{ConditionalLaplaceFit, NewtonOptions};
pub use penalty_posterior::{ModeSearchOptions, PenaltyHyperPrior, PenaltyPosterior};
