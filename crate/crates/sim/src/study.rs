//! Replicated simulation studies: generate data, fit both variants, and
//! aggregate frequentist metrics.
//!
//! Replicates are embarrassingly parallel; every replicate derives its own
//! RNG streams from `(seed, replicate)`, and per-replicate results are
//! collected in index order before a deterministic reduction, so parallel
//! and serial runs produce identical tables.

use crate::metrics::{
    aggregate, MetricsTable, VariantRecord, AVG_COVERAGE_LEVELS, AVG_COVERAGE_POINTS,
    COVERAGE_POINTS,
};
use crate::scenario::{stream_seed, Scenario};
use lps_core::error::Result;
use lps_core::{
    assemble_design, fit_lps, ExploreMethod, FitOptions, GamDesign, GamFit, LpsError, SmoothSpec,
};
use rayon::prelude::*;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct StudyOptions {
    /// Forced exploration method (`None` = dimension-based dispatch).
    pub method: Option<ExploreMethod>,
    /// Full Newton refits at every quadrature point instead of fixed-weight
    /// solves.
    pub full_refits: bool,
    pub basis_size: usize,
    pub penalty_order: usize,
    /// Centering / reporting grid size per smooth.
    pub grid_size: usize,
    pub chain_length: usize,
    pub parallel: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            method: None,
            full_refits: false,
            basis_size: 15,
            penalty_order: 3,
            grid_size: 100,
            chain_length: 500,
            parallel: true,
        }
    }
}

/// Aggregated study output for both fit variants.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub lps: MetricsTable,
    pub lpsmap: MetricsTable,
    pub failures: usize,
    /// Mean wall-clock seconds per full fit (model fitting only, data
    /// generation and design assembly excluded).
    pub mean_fit_seconds: f64,
    /// Mean sampler acceptance rate over replicates (independence sampling
    /// runs only).
    pub mean_acceptance: Option<f64>,
}

struct RepOutcome {
    fit_seconds: f64,
    acceptance: Option<f64>,
    lps: VariantRecord,
    lpsmap: VariantRecord,
}

fn smooth_specs(scenario: &Scenario, opts: &StudyOptions) -> Vec<SmoothSpec> {
    vec![
        SmoothSpec {
            basis_size: opts.basis_size,
            penalty_order: opts.penalty_order,
            epsilon: 1e-6,
            grid_size: opts.grid_size,
            domain: Some((-1.0, 1.0)),
        };
        scenario.q()
    ]
}

/// True smooth values centered the same way the fitted functions are: by
/// their mean over the design's centering grid.
fn centered_truth(
    scenario: &Scenario,
    design: &GamDesign,
    j: usize,
    xs: &[f64],
) -> Vec<f64> {
    let f = scenario.smooth_fns()[j];
    let grid = &design.smooths[j].fine_grid;
    let mean = grid.iter().map(|&g| f(g)).sum::<f64>() / grid.len() as f64;
    xs.iter().map(|&x| f(x) - mean).collect()
}

fn variant_record(
    scenario: &Scenario,
    design: &GamDesign,
    fit: &GamFit,
    avg_grid: &[f64],
) -> Result<VariantRecord> {
    let beta = scenario.beta();
    let p = scenario.p();
    let mut beta_est = Vec::with_capacity(p);
    let mut beta_cover90 = Vec::with_capacity(p);
    let mut beta_cover95 = Vec::with_capacity(p);
    for k in 0..p {
        let truth = beta[k + 1];
        let h = k + 1; // latent index (intercept first)
        beta_est.push(fit.xi_mean[h]);
        let (lo90, hi90) = fit.coef_interval(h, 0.90)?;
        let (lo95, hi95) = fit.coef_interval(h, 0.95)?;
        beta_cover90.push(lo90 <= truth && truth <= hi90);
        beta_cover95.push(lo95 <= truth && truth <= hi95);
    }

    let q = scenario.q();
    let mut point_cover90 = Vec::with_capacity(q);
    let mut avg_cover = Vec::with_capacity(q);
    for j in 0..q {
        let truth_pts = centered_truth(scenario, design, j, &COVERAGE_POINTS);
        let posterior = fit.smooth_posterior(design, j, &COVERAGE_POINTS)?;
        point_cover90.push(posterior.covers(&truth_pts, 0.90)?);

        let truth_avg = centered_truth(scenario, design, j, avg_grid);
        let posterior = fit.smooth_posterior(design, j, avg_grid)?;
        let mut per_level = Vec::with_capacity(AVG_COVERAGE_LEVELS.len());
        for &level in &AVG_COVERAGE_LEVELS {
            per_level.push(posterior.covers(&truth_avg, level)?);
        }
        avg_cover.push(per_level);
    }

    Ok(VariantRecord {
        beta_est,
        beta_cover90,
        beta_cover95,
        point_cover90,
        avg_cover,
    })
}

fn run_replicate(
    scenario: &Scenario,
    opts: &StudyOptions,
    avg_grid: &[f64],
    rep: usize,
) -> Result<RepOutcome> {
    let data = scenario.generate(rep);
    let design = assemble_design(&data.z, &data.x, &smooth_specs(scenario, opts))?;
    let family = scenario.family();

    let mut fit_opts = FitOptions::default();
    fit_opts.explorer.method = opts.method;
    fit_opts.explorer.chain_length = opts.chain_length;
    fit_opts.explorer.seed = stream_seed(scenario.seed, rep as u64, 1);
    fit_opts.full_refits = opts.full_refits;

    let start = Instant::now();
    let fit = fit_lps(&design, &family, &data.y, &fit_opts)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let plugin = fit.plugin();

    Ok(RepOutcome {
        fit_seconds,
        acceptance: fit.ensemble.diagnostics.acceptance_rate,
        lps: variant_record(scenario, &design, &fit, avg_grid)?,
        lpsmap: variant_record(scenario, &design, &plugin, avg_grid)?,
    })
}

/// Runs every replicate of the scenario and aggregates metrics for both
/// variants. Individual replicate failures are counted and excluded.
pub fn run_study(scenario: &Scenario, opts: &StudyOptions) -> Result<StudyResult> {
    let avg_grid: Vec<f64> = (0..AVG_COVERAGE_POINTS)
        .map(|i| -1.0 + 2.0 * i as f64 / (AVG_COVERAGE_POINTS - 1) as f64)
        .collect();

    let outcomes: Vec<Result<RepOutcome>> = if opts.parallel {
        (0..scenario.reps)
            .into_par_iter()
            .map(|rep| run_replicate(scenario, opts, &avg_grid, rep))
            .collect()
    } else {
        (0..scenario.reps)
            .map(|rep| run_replicate(scenario, opts, &avg_grid, rep))
            .collect()
    };

    let mut ok = Vec::with_capacity(scenario.reps);
    let mut failures = 0;
    for outcome in outcomes {
        match outcome {
            Ok(o) => ok.push(o),
            Err(_) => failures += 1,
        }
    }
    if ok.is_empty() {
        return Err(LpsError::NoConvergence(format!(
            "all {} replicates failed",
            scenario.reps
        )));
    }

    let beta_truth: Vec<f64> = scenario.beta()[1..].to_vec();
    let lps_records: Vec<&VariantRecord> = ok.iter().map(|o| &o.lps).collect();
    let map_records: Vec<&VariantRecord> = ok.iter().map(|o| &o.lpsmap).collect();
    let mean_fit_seconds = ok.iter().map(|o| o.fit_seconds).sum::<f64>() / ok.len() as f64;
    let accepted: Vec<f64> = ok.iter().filter_map(|o| o.acceptance).collect();
    let mean_acceptance = if accepted.is_empty() {
        None
    } else {
        Some(accepted.iter().sum::<f64>() / accepted.len() as f64)
    };

    Ok(StudyResult {
        lps: aggregate(&lps_records, &beta_truth),
        lpsmap: aggregate(&map_records, &beta_truth),
        failures,
        mean_fit_seconds,
        mean_acceptance,
    })
}
