//! Exploration of the log-penalty posterior.
//!
//! Two strategies, picked by the number of smooth terms: for `q <= 4` a
//! Cartesian grid whose per-dimension ranges come from skew-normal fits to
//! the conditionals of the posterior (so asymmetry widens the right side of
//! the grid), filtered by the chi-square credible-region rule; for larger
//! `q` an independence Metropolis-Hastings sampler with a multivariate
//! Student-t proposal centered at the posterior mode.

use crate::dist::chi_squared_quantile;
use crate::error::{LpsError, Result};
use crate::penalty_posterior::{PenaltyMode, PenaltyPosterior};
use crate::skew_normal::{match_moments, SkewNormal};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, StandardNormal};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExploreMethod {
    Grid,
    Imh,
    ModeOnly,
}

impl ExploreMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ExploreMethod::Grid => "grid",
            ExploreMethod::Imh => "imh",
            ExploreMethod::ModeOnly => "mode-only",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExplorerOptions {
    /// Forced exploration method; `None` dispatches on the dimension
    /// (grid when `q <= 4`, independence sampling otherwise).
    pub method: Option<ExploreMethod>,
    /// Grid points per dimension; `None` picks 7 for `q <= 2`, 5 for
    /// `q = 3`, 4 for `q = 4`.
    pub grid_points: Option<usize>,
    /// Credible-region level parameter for the grid filter.
    pub alpha: f64,
    pub chain_length: usize,
    pub proposal_dof: f64,
    pub seed: u64,
    /// Quadrature grid size for the conditional moments.
    pub moment_grid_size: usize,
    /// Half-width of the moment grid in posterior standard deviations.
    pub moment_span_sds: f64,
    /// Saturation bound on each log-penalty coordinate (matches the mode
    /// search clamp): beyond it the penalty scale under- or overflows, so
    /// exploration grids are clipped there and mass at a clipped edge is
    /// expected rather than an error. Weakly informative data (e.g. small
    /// binary samples) push the posterior against this bound.
    pub bound: f64,
}

impl Default for ExplorerOptions {
    fn default() -> Self {
        ExplorerOptions {
            method: None,
            grid_points: None,
            alpha: 0.05,
            chain_length: 500,
            proposal_dof: 3.0,
            seed: 1,
            moment_grid_size: 200,
            moment_span_sds: 5.0,
            bound: 15.0,
        }
    }
}

impl ExplorerOptions {
    pub fn points_per_dim(&self, q: usize) -> usize {
        self.grid_points.unwrap_or(match q {
            0..=2 => 7,
            3 => 5,
            _ => 4,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct EnsembleDiagnostics {
    /// Grid candidates before filtering (grid method only).
    pub candidates: usize,
    pub kept: usize,
    pub acceptance_rate: Option<f64>,
    /// Filter threshold on the normalized posterior (grid method only).
    pub threshold: Option<f64>,
    /// Skew-normal fits per dimension (grid method only).
    pub skew_fits: Vec<SkewNormal>,
    /// Whether any moment match was clamped at the attainable boundary.
    pub skew_clamped: bool,
    /// Times a conditional-moment grid had to be widened.
    pub widened_moment_grids: usize,
    /// Grid filtering left nothing, so the ensemble collapsed to the mode.
    pub fallback_mode_only: bool,
}

/// Quadrature points and weights over the penalty posterior.
#[derive(Debug, Clone)]
pub struct PenaltyEnsemble {
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub method: ExploreMethod,
    pub diagnostics: EnsembleDiagnostics,
}

/// Trapezoid quadrature weight for grid point `i` (relative to the step).
fn trapezoid_factor(i: usize, len: usize) -> f64 {
    if i == 0 || i + 1 == len {
        0.5
    } else {
        1.0
    }
}

/// Normalized density values on an equidistant grid from log-density values
/// (trapezoid normalization; the conditionals can carry visible mass at the
/// grid edges, where a plain rectangle sum would bias the moments).
fn normalized_density(xs: &[f64], log_f: &[f64]) -> Vec<f64> {
    let step = xs[1] - xs[0];
    let max = log_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut dens: Vec<f64> = log_f.iter().map(|l| (l - max).exp()).collect();
    let n = dens.len();
    let total: f64 = dens
        .iter()
        .enumerate()
        .map(|(i, d)| d * trapezoid_factor(i, n) * step)
        .sum();
    for d in &mut dens {
        *d /= total;
    }
    dens
}

/// First moment and second/third central moments of a density known through
/// log values on an equidistant grid.
pub fn moments_from_grid(xs: &[f64], log_f: &[f64]) -> (f64, f64, f64) {
    assert!(xs.len() == log_f.len() && xs.len() >= 3);
    let n = xs.len();
    let step = xs[1] - xs[0];
    let dens = normalized_density(xs, log_f);
    let mut m1 = 0.0;
    for (i, (x, d)) in xs.iter().zip(&dens).enumerate() {
        m1 += x * d * trapezoid_factor(i, n) * step;
    }
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for (i, (x, d)) in xs.iter().zip(&dens).enumerate() {
        let c = x - m1;
        let w = trapezoid_factor(i, n) * step;
        m2 += c * c * d * w;
        m3 += c * c * c * d * w;
    }
    (m1, m2, m3)
}

/// Scale of the conditional of `v_j` at the mode, from the inverse negated
/// Hessian when it is positive definite, with per-coordinate curvature
/// fallbacks otherwise (a clamped boundary mode need not be concave). Only
/// used to size the moment grid, which self-corrects by widening.
fn conditional_sd(mode: &PenaltyMode, j: usize) -> f64 {
    let neg_h = -&mode.hessian;
    if let Some(cov) = neg_h.clone().cholesky().map(|c| c.inverse()) {
        let v = cov[(j, j)];
        if v > 0.0 && v.is_finite() {
            return v.sqrt();
        }
    }
    let d = neg_h[(j, j)];
    if d > 0.0 && d.is_finite() {
        (1.0 / d).sqrt()
    } else {
        1.0
    }
}

/// Empirical moments of the conditional posterior of `v_j` given the other
/// coordinates held at the mode, computed on an equidistant grid. The grid
/// is widened (up to three times) when more than 1% of the mass falls into
/// the two outermost cells on either side.
pub fn conditional_moments(
    post: &PenaltyPosterior<'_>,
    j: usize,
    mode: &PenaltyMode,
    opts: &ExplorerOptions,
) -> Result<(f64, f64, f64, usize)> {
    let sd = conditional_sd(mode, j);
    let l = opts.moment_grid_size.max(16);
    let mut span = opts.moment_span_sds * sd;
    let mut widened = 0;
    loop {
        let lo = (mode.v_hat[j] - span).max(-opts.bound);
        let hi = (mode.v_hat[j] + span).min(opts.bound);
        let xs: Vec<f64> = (0..l)
            .map(|i| lo + (hi - lo) * i as f64 / (l - 1) as f64)
            .collect();
        let mut log_f = Vec::with_capacity(l);
        let mut v = mode.v_hat.clone();
        for &x in &xs {
            v[j] = x;
            log_f.push(post.log_density(&v)?);
        }
        let dens = normalized_density(&xs, &log_f);
        let step = xs[1] - xs[0];
        // Boundary window: the outer two cells of a 200-point grid, kept as
        // a fixed fraction of the span so refining the grid does not change
        // the widening decision. Mass against a clipped (saturation) edge
        // does not trigger widening: the domain genuinely ends there.
        let edge = ((l as f64 / 100.0).ceil() as usize).max(2);
        let left_clipped = lo <= -opts.bound;
        let right_clipped = hi >= opts.bound;
        let left: f64 = dens[..edge].iter().sum::<f64>() * step;
        let right: f64 = dens[l - edge..].iter().sum::<f64>() * step;
        if (left_clipped || left <= 0.01) && (right_clipped || right <= 0.01) {
            let (m1, m2, m3) = moments_from_grid(&xs, &log_f);
            return Ok((m1, m2, m3, widened));
        }
        widened += 1;
        if widened > 3 {
            return Err(LpsError::numerical(
                format!(
                    "conditional posterior of v[{j}] keeps significant mass at the \
                     moment-grid boundary after widening"
                ),
                mode.v_hat.as_slice(),
            ));
        }
        span *= 2.0;
    }
}

/// Grid exploration: per-dimension equidistant grids between the 2.5th and
/// 97.5th quantiles of skew-normal fits to the conditionals, a Cartesian
/// product, and the chi-square posterior-ratio filter.
pub fn build_grid(
    post: &PenaltyPosterior<'_>,
    mode: &PenaltyMode,
    opts: &ExplorerOptions,
) -> Result<PenaltyEnsemble> {
    let q = post.dim();
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(LpsError::Config(format!(
            "grid filter alpha must lie in (0,1), got {}",
            opts.alpha
        )));
    }
    let m = opts.points_per_dim(q);
    if m < 2 {
        return Err(LpsError::Config(
            "the grid needs at least two points per dimension".into(),
        ));
    }

    let mut diagnostics = EnsembleDiagnostics::default();
    let mut axes = Vec::with_capacity(q);
    for j in 0..q {
        let (m1, m2, m3, widened) = conditional_moments(post, j, mode, opts)?;
        diagnostics.widened_moment_grids += widened;
        let (sn, clamped) = match_moments(m1, m2, m3)?;
        diagnostics.skew_clamped |= clamped;
        let mut lo = sn.quantile(0.025)?.max(-opts.bound);
        let mut hi = sn.quantile(0.975)?.min(opts.bound);
        if lo >= hi || lo.is_nan() || hi.is_nan() {
            // Degenerate skew fit spilling outside the saturation box; fall
            // back to a unit slab around the mode.
            lo = (mode.v_hat[j] - 1.0).max(-opts.bound);
            hi = (mode.v_hat[j] + 1.0).min(opts.bound);
        }
        diagnostics.skew_fits.push(sn);
        let axis: Vec<f64> = (0..m)
            .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
            .collect();
        axes.push(axis);
    }

    // Cartesian product of the univariate grids.
    let total = m.pow(q as u32);
    let mut candidates = Vec::with_capacity(total);
    for flat in 0..total {
        let mut idx = flat;
        let mut v = DVector::zeros(q);
        for j in 0..q {
            v[j] = axes[j][idx % m];
            idx /= m;
        }
        candidates.push(v);
    }
    diagnostics.candidates = total;

    let log_mode = post.log_density(&mode.v_hat)?;
    let log_vals: Result<Vec<f64>> = candidates
        .par_iter()
        .map(|v| post.log_density(v))
        .collect();
    let log_vals = log_vals?;

    let chi = chi_squared_quantile(q as f64, 1.0 - opts.alpha);
    let log_threshold = -0.5 * chi;
    diagnostics.threshold = Some(log_threshold.exp());

    let mut points = Vec::new();
    let mut log_kept = Vec::new();
    for (v, lv) in candidates.into_iter().zip(log_vals) {
        if lv - log_mode >= log_threshold {
            points.push(v);
            log_kept.push(lv);
        }
    }

    if points.is_empty() {
        // Cannot happen when the mode's own cell survives (its ratio is ~1),
        // but degenerate skew fits could place the whole grid in the tails.
        diagnostics.fallback_mode_only = true;
        diagnostics.kept = 1;
        return Ok(PenaltyEnsemble {
            points: vec![mode.v_hat.clone()],
            weights: vec![1.0],
            method: ExploreMethod::ModeOnly,
            diagnostics,
        });
    }

    let max = log_kept.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = log_kept.iter().map(|l| (l - max).exp()).collect();
    let total_w: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total_w;
    }
    diagnostics.kept = points.len();
    Ok(PenaltyEnsemble {
        points,
        weights,
        method: ExploreMethod::Grid,
        diagnostics,
    })
}

/// Multivariate Student-t proposal `t_dof(mean, scale)`; only the density
/// kernel is kept since proposal constants cancel in acceptance ratios.
pub struct StudentProposal {
    mean: DVector<f64>,
    scale_chol: DMatrix<f64>,
    dof: f64,
}

impl StudentProposal {
    pub fn new(mean: DVector<f64>, scale: &DMatrix<f64>, dof: f64) -> Result<Self> {
        if dof <= 2.0 {
            return Err(LpsError::Config(format!(
                "proposal degrees of freedom must exceed 2, got {dof}"
            )));
        }
        let chol = scale.clone().cholesky().ok_or_else(|| {
            LpsError::numerical(
                "the proposal scale matrix (inverse negated Hessian) is not positive \
                 definite; re-examine the mode search diagnostics",
                mean.as_slice(),
            )
        })?;
        Ok(StudentProposal {
            mean,
            scale_chol: chol.l(),
            dof,
        })
    }

    fn sample(&self, rng: &mut impl Rng) -> DVector<f64> {
        let q = self.mean.len();
        let z = DVector::from_iterator(q, (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let g: f64 = rng.sample(ChiSquared::new(self.dof).unwrap());
        &self.mean + &self.scale_chol * z * (self.dof / g).sqrt()
    }

    /// Log density up to the normalizing constant.
    fn log_kernel(&self, v: &DVector<f64>) -> f64 {
        let diff = v - &self.mean;
        let w = self
            .scale_chol
            .solve_lower_triangular(&diff)
            .expect("proposal scale factor is nonsingular");
        let m2 = w.norm_squared();
        -0.5 * (self.dof + self.mean.len() as f64) * (1.0 + m2 / self.dof).ln()
    }
}

/// Independence Metropolis-Hastings kernel over an arbitrary log target.
/// Returns the `chain_length` post-initialization states and the number of
/// accepted proposals.
fn imh_chain<F>(
    log_target: F,
    proposal: &StudentProposal,
    init: DVector<f64>,
    init_log_target: f64,
    chain_length: usize,
    rng: &mut impl Rng,
) -> (Vec<DVector<f64>>, usize)
where
    F: Fn(&DVector<f64>) -> Option<f64>,
{
    let mut current = init;
    let mut current_lt = init_log_target;
    let mut current_lk = proposal.log_kernel(&current);
    let mut states = Vec::with_capacity(chain_length);
    let mut accepted = 0;
    for _ in 0..chain_length {
        let prop = proposal.sample(rng);
        let prop_lk = proposal.log_kernel(&prop);
        let prop_lt = log_target(&prop);
        let log_alpha = match prop_lt {
            Some(lt) => (lt + current_lk - current_lt - prop_lk).min(0.0),
            None => f64::NEG_INFINITY, // unevaluable proposals are rejected
        };
        let u: f64 = rng.random();
        if log_alpha > f64::NEG_INFINITY && u.ln() <= log_alpha {
            current_lt = prop_lt.expect("accepted proposal has a target value");
            current = prop;
            current_lk = prop_lk;
            accepted += 1;
        }
        states.push(current.clone());
    }
    (states, accepted)
}

/// Independence sampler over the penalty posterior with a Student-t
/// proposal centered at the mode with scale `(-H*)^{-1}`; the chain starts
/// at the mode and is deterministic given the seed.
pub fn imh_sample(
    post: &PenaltyPosterior<'_>,
    mode: &PenaltyMode,
    opts: &ExplorerOptions,
) -> Result<PenaltyEnsemble> {
    if opts.chain_length == 0 {
        return Err(LpsError::Config("chain length must be positive".into()));
    }
    let neg_h = -&mode.hessian;
    let scale = neg_h.cholesky().map(|c| c.inverse()).ok_or_else(|| {
        LpsError::numerical(
            "the negated Hessian at the penalty mode is not positive definite; \
             re-examine the mode search diagnostics",
            mode.v_hat.as_slice(),
        )
    })?;
    let proposal = StudentProposal::new(mode.v_hat.clone(), &scale, opts.proposal_dof)?;
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let init_lt = post.log_density(&mode.v_hat)?;
    let (states, accepted) = imh_chain(
        |v| post.log_density(v).ok(),
        &proposal,
        mode.v_hat.clone(),
        init_lt,
        opts.chain_length,
        &mut rng,
    );
    let m = states.len();
    let diagnostics = EnsembleDiagnostics {
        kept: m,
        acceptance_rate: Some(accepted as f64 / m as f64),
        ..EnsembleDiagnostics::default()
    };
    Ok(PenaltyEnsemble {
        points: states,
        weights: vec![1.0 / m as f64; m],
        method: ExploreMethod::Imh,
        diagnostics,
    })
}

/// Dispatches between the grid and the independence sampler (grid for
/// `q <= 4`), or honors a forced method.
pub fn explore(
    post: &PenaltyPosterior<'_>,
    mode: &PenaltyMode,
    opts: &ExplorerOptions,
) -> Result<PenaltyEnsemble> {
    let method = opts.method.unwrap_or(if post.dim() <= 4 {
        ExploreMethod::Grid
    } else {
        ExploreMethod::Imh
    });
    match method {
        ExploreMethod::Grid => build_grid(post, mode, opts),
        ExploreMethod::Imh => imh_sample(post, mode, opts),
        ExploreMethod::ModeOnly => Ok(PenaltyEnsemble {
            points: vec![mode.v_hat.clone()],
            weights: vec![1.0],
            method: ExploreMethod::ModeOnly,
            diagnostics: EnsembleDiagnostics {
                kept: 1,
                ..EnsembleDiagnostics::default()
            },
        }),
    }
}
