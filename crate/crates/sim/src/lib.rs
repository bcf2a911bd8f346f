//! Simulation harness for the Laplace-P-spline additive model: scenario
//! generators with closed-form smooth truths, replicated fits, and
//! frequentist summary metrics (bias, ESE, RMSE, coverage).

pub mod derivcheck;
pub mod functions;
pub mod metrics;
pub mod scenario;
pub mod study;

pub use derivcheck::{derivative_check, DerivativeCheck};
pub use metrics::{BetaMetrics, MetricsTable, SmoothMetrics, AVG_COVERAGE_LEVELS, COVERAGE_POINTS};
pub use scenario::{Replicate, Scenario, ScenarioKind};
pub use study::{run_study, StudyOptions, StudyResult};
