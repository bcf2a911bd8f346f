//! Fit results in serializable form plus the CSV emitters.
//!
//! Numbers are written with the shortest decimal representation that
//! round-trips to the same float, so re-parsing an output file recovers the
//! in-memory values exactly. Wall-clock timings are deliberately absent
//! from every output file (they go to stdout): repeated runs with the same
//! seed must produce byte-identical files.

use lps_core::{GamDesign, GamFit, ResponseFamily, Result, SmoothPoint};
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub model: ModelSummary,
    pub coefficients: Vec<CoefficientRow>,
    pub smooths: Vec<SmoothReport>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub family: String,
    pub dispersion: f64,
    pub variant: String,
    pub observations: usize,
    pub linear_covariates: usize,
    pub smooth_terms: usize,
    pub latent_dimension: usize,
    pub credible_levels: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub posterior_sd: f64,
    /// One (lower, upper) pair per credible level, in level order.
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct SmoothReport {
    pub name: String,
    pub x: Vec<f64>,
    pub estimate: Vec<f64>,
    /// Per credible level: (lower, upper) band vectors.
    pub bands: Vec<SmoothBand>,
}

#[derive(Debug, Serialize)]
pub struct SmoothBand {
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub method: String,
    pub v_hat: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    pub mode_iterations: usize,
    pub mode_gradient_norm: f64,
    pub mode_clamped: bool,
    pub mode_stalled: bool,
    pub newton_iterations_at_mode: usize,
    pub ensemble_size: usize,
    pub grid_candidates: Option<usize>,
    pub acceptance_rate: Option<f64>,
    pub clamped_means: usize,
    pub warnings: Vec<String>,
}

pub fn build_report(
    design: &GamDesign,
    family: &ResponseFamily,
    fit: &GamFit,
    linear_names: &[String],
    smooth_names: &[String],
    levels: &[f64],
    seed: u64,
) -> Result<FitReport> {
    let mut coefficients = Vec::with_capacity(design.p + 1);
    for h in 0..=design.p {
        let name = if h == 0 {
            "(intercept)".to_string()
        } else {
            linear_names[h - 1].clone()
        };
        let mut intervals = Vec::with_capacity(levels.len());
        for &level in levels {
            intervals.push(fit.coef_interval(h, level)?);
        }
        coefficients.push(CoefficientRow {
            name,
            estimate: fit.xi_mean[h],
            posterior_sd: fit.coef_sd(h),
            intervals,
        });
    }

    let mut smooths = Vec::with_capacity(design.q);
    for (j, name) in smooth_names.iter().enumerate() {
        let xs = design.smooths[j].fine_grid.clone();
        let posterior = fit.smooth_posterior(design, j, &xs)?;
        let mut bands = Vec::with_capacity(levels.len());
        for &level in levels {
            let pts: Vec<SmoothPoint> = posterior.band(level)?;
            bands.push(SmoothBand {
                level,
                lower: pts.iter().map(|p| p.lower).collect(),
                upper: pts.iter().map(|p| p.upper).collect(),
            });
        }
        smooths.push(SmoothReport {
            name: name.clone(),
            x: xs,
            estimate: posterior.estimates().to_vec(),
            bands,
        });
    }

    let d = &fit.ensemble.diagnostics;
    Ok(FitReport {
        model: ModelSummary {
            family: match family {
                ResponseFamily::Gaussian { .. } => "gaussian".into(),
                ResponseFamily::Poisson => "poisson".into(),
                ResponseFamily::Binomial { trials } => format!("binomial({trials})"),
                ResponseFamily::Bernoulli => "bernoulli".into(),
            },
            dispersion: family.dispersion(),
            variant: fit.variant.name().into(),
            observations: design.n,
            linear_covariates: design.p,
            smooth_terms: design.q,
            latent_dimension: design.dim_xi(),
            credible_levels: levels.to_vec(),
            seed,
        },
        coefficients,
        smooths,
        diagnostics: Diagnostics {
            method: fit.ensemble.method.name().into(),
            v_hat: fit.v_hat.iter().copied().collect(),
            lambda_hat: fit.v_hat.iter().map(|v| v.exp()).collect(),
            mode_iterations: fit.mode_iterations,
            mode_gradient_norm: fit.mode_gradient_norm,
            mode_clamped: fit.mode_clamped,
            mode_stalled: fit.mode_stalled,
            newton_iterations_at_mode: fit.mode_fit.iterations,
            ensemble_size: fit.ensemble.points.len(),
            grid_candidates: (d.candidates > 0).then_some(d.candidates),
            acceptance_rate: d.acceptance_rate,
            clamped_means: fit.mode_fit.clamped_means,
            warnings: design.warnings.clone(),
        },
    })
}

fn level_label(level: f64) -> String {
    // 0.95 -> "95", 0.995 -> "99.5"
    let pct = level * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}", pct.round())
    } else {
        format!("{pct}")
    }
}

/// `coefficients.csv`: one row per coefficient, interval columns per level.
pub fn coefficients_csv(report: &FitReport) -> String {
    let mut out = String::from("name,estimate,posterior_sd");
    for level in &report.model.credible_levels {
        let l = level_label(*level);
        let _ = write!(out, ",lo{l},hi{l}");
    }
    out.push('\n');
    for row in &report.coefficients {
        let _ = write!(out, "{},{},{}", row.name, row.estimate, row.posterior_sd);
        for (lo, hi) in &row.intervals {
            let _ = write!(out, ",{lo},{hi}");
        }
        out.push('\n');
    }
    out
}

/// `smooth_<name>.csv`: the fine grid with estimate and per-level bands.
pub fn smooth_csv(smooth: &SmoothReport) -> String {
    let mut out = String::from("x,estimate");
    for band in &smooth.bands {
        let l = level_label(band.level);
        let _ = write!(out, ",lo{l},hi{l}");
    }
    out.push('\n');
    for i in 0..smooth.x.len() {
        let _ = write!(out, "{},{}", smooth.x[i], smooth.estimate[i]);
        for band in &smooth.bands {
            let _ = write!(out, ",{},{}", band.lower[i], band.upper[i]);
        }
        out.push('\n');
    }
    out
}
