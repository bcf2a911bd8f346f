//! Posterior inference on the latent field: the weighted Gaussian-mixture
//! posterior over penalty quadrature points, point estimates, coefficient
//! credible intervals, and pointwise credible bands for the fitted smooth
//! functions.
//!
//! Two variants are produced by the same pipeline. The full variant keeps
//! the whole penalty ensemble and mixes one conditional Gaussian per
//! quadrature point; the plug-in variant (`MapPlugin`) fixes the penalties
//! at their posterior mode, so the latent posterior is a single Gaussian
//! and the bands use normal quantiles.

use crate::design::GamDesign;
use crate::dist::normal_quantile;
use crate::error::{LpsError, Result};
use crate::explorer::{self, ExplorerOptions, PenaltyEnsemble};
use crate::family::ResponseFamily;
use crate::laplace::{
    fit_conditional, ConditionalLaplaceFit, FixedWeightRefitter, NewtonOptions,
};
use crate::mixture::GaussianMixture;
use crate::penalty_posterior::{
    find_mode, ModeSearchOptions, PenaltyHyperPrior, PenaltyMode, PenaltyPosterior,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Full mixture over the explored penalty ensemble.
    Full,
    /// Penalties plugged in at their posterior mode (no mixture).
    MapPlugin,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "lps",
            Variant::MapPlugin => "lpsmap",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub hyper: PenaltyHyperPrior,
    /// Prior precision of the unpenalized regression coefficients.
    pub zeta: f64,
    pub newton: NewtonOptions,
    pub mode_search: ModeSearchOptions,
    pub explorer: ExplorerOptions,
    /// Run a full Newton refit at every ensemble point instead of the
    /// fixed-weight single-solve shortcut.
    pub full_refits: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            hyper: PenaltyHyperPrior::default(),
            zeta: 1e-5,
            newton: NewtonOptions::default(),
            mode_search: ModeSearchOptions::default(),
            explorer: ExplorerOptions::default(),
            full_refits: false,
        }
    }
}

/// One Gaussian component of the latent-field mixture.
#[derive(Debug, Clone)]
pub struct MixtureComponent {
    pub xi: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

/// A fitted additive model.
#[derive(Debug, Clone)]
pub struct GamFit {
    pub variant: Variant,
    pub ensemble: PenaltyEnsemble,
    pub components: Vec<MixtureComponent>,
    /// Mixture posterior mean of the latent field.
    pub xi_mean: DVector<f64>,
    pub v_hat: DVector<f64>,
    /// Hessian of the log penalty posterior at its mode.
    pub mode_hessian: DMatrix<f64>,
    /// Full conditional fit at the modal penalties.
    pub mode_fit: ConditionalLaplaceFit,
    pub mode_iterations: usize,
    pub mode_gradient_norm: f64,
    pub mode_clamped: bool,
    pub mode_stalled: bool,
}

/// Point of a fitted smooth function with its pointwise credible bounds.
#[derive(Debug, Clone, Copy)]
pub struct SmoothPoint {
    pub x: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// First-occurrence indices of the unique ensemble points plus, per point,
/// the index of its representative. Independence chains repeat accepted
/// states verbatim, so identical penalty points need only one solve.
fn unique_points(points: &[DVector<f64>]) -> (Vec<usize>, Vec<usize>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut reps = Vec::new();
    let mut assignment = Vec::with_capacity(points.len());
    for (i, v) in points.iter().enumerate() {
        let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        let idx = *seen.entry(key).or_insert_with(|| {
            reps.push(i);
            reps.len() - 1
        });
        assignment.push(idx);
    }
    (reps, assignment)
}

fn components_for(
    design: &GamDesign,
    family: &ResponseFamily,
    y: &DVector<f64>,
    ensemble: &PenaltyEnsemble,
    mode: &PenaltyMode,
    opts: &FitOptions,
) -> Result<Vec<MixtureComponent>> {
    let (reps, assignment) = unique_points(&ensemble.points);
    let refitter = if opts.full_refits {
        None
    } else {
        Some(FixedWeightRefitter::new(design, &mode.anchor, opts.zeta))
    };
    let unique: Result<Vec<MixtureComponent>> = reps
        .par_iter()
        .map(|&i| {
            let v = &ensemble.points[i];
            let fit = match &refitter {
                Some(r) => r.fit(v)?,
                None => fit_conditional(design, family, y, v, opts.zeta, &opts.newton)?,
            };
            Ok(MixtureComponent {
                xi: fit.xi_hat,
                sigma: fit.sigma_hat,
            })
        })
        .collect();
    let unique = unique?;
    Ok(assignment
        .into_iter()
        .map(|idx| unique[idx].clone())
        .collect())
}

fn mixture_mean(ensemble: &PenaltyEnsemble, components: &[MixtureComponent]) -> DVector<f64> {
    let dim = components[0].xi.len();
    let mut mean = DVector::zeros(dim);
    for (w, c) in ensemble.weights.iter().zip(components) {
        mean += &c.xi * *w;
    }
    mean
}

fn fit_with_method(
    design: &GamDesign,
    family: &ResponseFamily,
    y: &DVector<f64>,
    opts: &FitOptions,
    variant: Variant,
) -> Result<GamFit> {
    let mode = find_mode(
        design,
        family,
        y,
        opts.hyper,
        opts.zeta,
        &DVector::zeros(design.q),
        &opts.mode_search,
        &opts.newton,
    )
    .map_err(|e| e.in_stage("penalty-mode-search"))?;
    let post = PenaltyPosterior::new(design, *family, y, opts.hyper, opts.zeta, &mode.anchor);
    let ensemble = match variant {
        Variant::Full => explorer::explore(&post, &mode, &opts.explorer),
        Variant::MapPlugin => explorer::explore(
            &post,
            &mode,
            &ExplorerOptions {
                method: Some(explorer::ExploreMethod::ModeOnly),
                ..opts.explorer
            },
        ),
    }
    .map_err(|e| e.in_stage("exploration"))?;
    let components = components_for(design, family, y, &ensemble, &mode, opts)
        .map_err(|e| e.in_stage("conditional-refit"))?;
    let xi_mean = mixture_mean(&ensemble, &components);
    Ok(GamFit {
        variant,
        ensemble,
        components,
        xi_mean,
        v_hat: mode.v_hat,
        mode_hessian: mode.hessian,
        mode_fit: mode.anchor,
        mode_iterations: mode.iterations,
        mode_gradient_norm: mode.gradient_norm,
        mode_clamped: mode.clamped,
        mode_stalled: mode.stalled,
    })
}

/// Full pipeline: penalty mode search, posterior exploration, conditional
/// fits over the ensemble, mixture assembly.
pub fn fit_lps(
    design: &GamDesign,
    family: &ResponseFamily,
    y: &DVector<f64>,
    opts: &FitOptions,
) -> Result<GamFit> {
    fit_with_method(design, family, y, opts, Variant::Full)
}

/// Fast variant plugging the modal penalties in; penalty uncertainty is
/// ignored and the latent posterior is a single Gaussian.
pub fn fit_lpsmap(
    design: &GamDesign,
    family: &ResponseFamily,
    y: &DVector<f64>,
    opts: &FitOptions,
) -> Result<GamFit> {
    fit_with_method(design, family, y, opts, Variant::MapPlugin)
}

impl GamFit {
    /// The plug-in variant derived from an already-fitted model without
    /// re-running the pipeline: the conditional fit at the modal penalties
    /// becomes the single mixture component. Identical to
    /// [`fit_lpsmap`] on the same inputs (same linear solve).
    pub fn plugin(&self) -> GamFit {
        GamFit {
            variant: Variant::MapPlugin,
            ensemble: PenaltyEnsemble {
                points: vec![self.v_hat.clone()],
                weights: vec![1.0],
                method: explorer::ExploreMethod::ModeOnly,
                diagnostics: explorer::EnsembleDiagnostics {
                    kept: 1,
                    ..explorer::EnsembleDiagnostics::default()
                },
            },
            components: vec![MixtureComponent {
                xi: self.mode_fit.xi_hat.clone(),
                sigma: self.mode_fit.sigma_hat.clone(),
            }],
            xi_mean: self.mode_fit.xi_hat.clone(),
            v_hat: self.v_hat.clone(),
            mode_hessian: self.mode_hessian.clone(),
            mode_fit: self.mode_fit.clone(),
            mode_iterations: self.mode_iterations,
            mode_gradient_norm: self.mode_gradient_norm,
            mode_clamped: self.mode_clamped,
            mode_stalled: self.mode_stalled,
        }
    }

    /// Marginal posterior of one latent coordinate as a univariate mixture.
    fn coordinate_mixture(&self, h: usize) -> Result<GaussianMixture> {
        let means = self.components.iter().map(|c| c.xi[h]).collect();
        let sds = self
            .components
            .iter()
            .map(|c| c.sigma[(h, h)].sqrt())
            .collect();
        GaussianMixture::new(self.ensemble.weights.clone(), means, sds)
    }

    /// Posterior standard deviation of one latent coordinate (law of total
    /// variance over the mixture).
    pub fn coef_sd(&self, h: usize) -> f64 {
        let mean = self.xi_mean[h];
        let mut var = 0.0;
        for (w, c) in self.ensemble.weights.iter().zip(&self.components) {
            var += w * (c.sigma[(h, h)] + (c.xi[h] - mean) * (c.xi[h] - mean));
        }
        var.sqrt()
    }

    /// Quantile-based credible interval for latent coordinate `h`.
    pub fn coef_interval(&self, h: usize, level: f64) -> Result<(f64, f64)> {
        if h >= self.xi_mean.len() {
            return Err(LpsError::Config(format!(
                "latent index {h} out of range for dimension {}",
                self.xi_mean.len()
            )));
        }
        self.coordinate_mixture(h)?.credible_interval(level)
    }

    /// Posterior of fitted smooth `j` at the given covariate values, with
    /// exact duplicate ensemble points merged (weights summed) before the
    /// per-point projections.
    pub fn smooth_posterior(
        &self,
        design: &GamDesign,
        j: usize,
        xs: &[f64],
    ) -> Result<SmoothPosterior> {
        if j >= design.q {
            return Err(LpsError::Config(format!(
                "smooth index {j} out of range for {} terms",
                design.q
            )));
        }
        let s = &design.smooths[j];
        let basis = if xs == s.fine_grid.as_slice() {
            s.fine_basis.clone()
        } else {
            design.centered_basis_at(j, xs)?
        };
        let cols = s.cols.clone();
        let k = cols.len();

        let (reps, assignment) = unique_points(&self.ensemble.points);
        let mut weights = vec![0.0; reps.len()];
        for (point_idx, &group) in assignment.iter().enumerate() {
            weights[group] += self.ensemble.weights[point_idx];
        }

        let mut means = Vec::with_capacity(reps.len());
        let mut sds = Vec::with_capacity(reps.len());
        for &i in &reps {
            let c = &self.components[i];
            let theta = c.xi.rows(cols.start, k).into_owned();
            let block = c.sigma.view((cols.start, cols.start), (k, k));
            means.push(&basis * &theta);
            sds.push(DVector::from_iterator(
                xs.len(),
                basis.row_iter().map(|row| {
                    let bt = row.transpose();
                    (block * &bt).dot(&bt).max(0.0).sqrt()
                }),
            ));
        }

        let estimates = (0..xs.len())
            .map(|l| {
                weights
                    .iter()
                    .zip(&means)
                    .map(|(w, m)| w * m[l])
                    .sum::<f64>()
            })
            .collect();

        Ok(SmoothPosterior {
            variant: self.variant,
            xs: xs.to_vec(),
            weights,
            means,
            sds,
            estimates,
        })
    }

    /// Fitted smooth `j` with pointwise bands on the design's fine grid.
    pub fn smooth_estimate(
        &self,
        design: &GamDesign,
        j: usize,
        level: f64,
    ) -> Result<Vec<SmoothPoint>> {
        let xs = design.smooths[j].fine_grid.clone();
        self.smooth_posterior(design, j, &xs)?.band(level)
    }

    /// Fitted smooth `j` with pointwise bands at arbitrary covariate values.
    pub fn smooth_estimate_at(
        &self,
        design: &GamDesign,
        j: usize,
        xs: &[f64],
        level: f64,
    ) -> Result<Vec<SmoothPoint>> {
        self.smooth_posterior(design, j, xs)?.band(level)
    }
}

/// Posterior of one fitted smooth at fixed evaluation points: mixture means
/// and standard deviations of `f_j(x_l)` per (unique) ensemble component.
#[derive(Debug, Clone)]
pub struct SmoothPosterior {
    variant: Variant,
    xs: Vec<f64>,
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    sds: Vec<DVector<f64>>,
    estimates: Vec<f64>,
}

impl SmoothPosterior {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Mixture posterior mean of the function at each evaluation point.
    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    fn check_level(level: f64) -> Result<()> {
        if level > 0.0 && level < 1.0 {
            Ok(())
        } else {
            Err(LpsError::Domain(format!(
                "credible level must lie in (0,1), got {level}"
            )))
        }
    }

    fn mixture_at(&self, l: usize) -> Result<GaussianMixture> {
        GaussianMixture::new(
            self.weights.clone(),
            self.means.iter().map(|m| m[l]).collect(),
            self.sds.iter().map(|s| s[l]).collect(),
        )
    }

    fn cdf_at(&self, l: usize, t: f64) -> f64 {
        let mut acc = 0.0;
        for ((w, m), s) in self.weights.iter().zip(&self.means).zip(&self.sds) {
            acc += w * if s[l] == 0.0 {
                f64::from(t >= m[l])
            } else {
                crate::dist::normal_cdf((t - m[l]) / s[l])
            };
        }
        acc
    }

    /// Pointwise credible band: mixture quantiles for the full variant,
    /// normal quantiles around the single component for the plug-in.
    pub fn band(&self, level: f64) -> Result<Vec<SmoothPoint>> {
        Self::check_level(level)?;
        let z = normal_quantile(0.5 + 0.5 * level);
        let mut out = Vec::with_capacity(self.xs.len());
        for (l, &x) in self.xs.iter().enumerate() {
            let (lower, upper) = match self.variant {
                Variant::MapPlugin => {
                    let (m, s) = (self.means[0][l], self.sds[0][l]);
                    (m - z * s, m + z * s)
                }
                Variant::Full => self.mixture_at(l)?.credible_interval(level)?,
            };
            out.push(SmoothPoint {
                x,
                estimate: self.estimates[l],
                lower,
                upper,
            });
        }
        Ok(out)
    }

    /// Whether the pointwise credible interval at each evaluation point
    /// covers the given values. For the full variant this checks the
    /// mixture CDF of the truth against the tail probabilities, which is
    /// equivalent to comparing against the quantile endpoints.
    pub fn covers(&self, truth: &[f64], level: f64) -> Result<Vec<bool>> {
        Self::check_level(level)?;
        if truth.len() != self.xs.len() {
            return Err(LpsError::Config(format!(
                "{} truth values for {} evaluation points",
                truth.len(),
                self.xs.len()
            )));
        }
        let tail = 0.5 * (1.0 - level);
        let z = normal_quantile(0.5 + 0.5 * level);
        Ok(truth
            .iter()
            .enumerate()
            .map(|(l, &t)| match self.variant {
                Variant::MapPlugin => {
                    let (m, s) = (self.means[0][l], self.sds[0][l]);
                    (t - m).abs() <= z * s
                }
                Variant::Full => {
                    let c = self.cdf_at(l, t);
                    tail <= c && c <= 1.0 - tail
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{assemble_design, SmoothSpec};
    use crate::explorer::ExploreMethod;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::Poisson;

    fn gaussian_problem(
        n: usize,
        seed: u64,
    ) -> (crate::design::GamDesign, DVector<f64>, ResponseFamily) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let x = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let spec = SmoothSpec {
            basis_size: 8,
            ..SmoothSpec::default()
        };
        let design = assemble_design(&z, &x, &[spec]).unwrap();
        let y = DVector::from_fn(n, |i, _| {
            let xi = x[(i, 0)];
            0.3 * z[(i, 0)] + (2.0 * xi).sin() + 0.3 * rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        (design, y, ResponseFamily::gaussian(0.09).unwrap())
    }

    fn poisson_problem(
        n: usize,
        seed: u64,
    ) -> (crate::design::GamDesign, DVector<f64>, ResponseFamily) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let x = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let spec = SmoothSpec {
            basis_size: 8,
            ..SmoothSpec::default()
        };
        let design = assemble_design(&z, &x, &[spec]).unwrap();
        let y = DVector::from_fn(n, |i, _| {
            let eta = 0.5 + 0.4 * z[(i, 0)] + (3.0 * x[(i, 0)]).sin() * 0.5;
            rng.sample(Poisson::new(eta.exp()).unwrap())
        });
        (design, y, ResponseFamily::Poisson)
    }

    #[test]
    fn one_point_ensemble_reproduces_the_plugin_fit_bitwise() {
        let (design, y, family) = poisson_problem(90, 81);
        let mut opts = FitOptions::default();
        opts.explorer.method = Some(ExploreMethod::ModeOnly);
        let lps = fit_lps(&design, &family, &y, &opts).unwrap();
        let map = fit_lpsmap(&design, &family, &y, &FitOptions::default()).unwrap();
        assert_eq!(lps.xi_mean.len(), map.xi_mean.len());
        for i in 0..lps.xi_mean.len() {
            assert_eq!(lps.xi_mean[i].to_bits(), map.xi_mean[i].to_bits());
        }
    }

    #[test]
    fn derived_plugin_matches_a_dedicated_plugin_fit_bitwise() {
        let (design, y, family) = poisson_problem(90, 90);
        let full = fit_lps(&design, &family, &y, &FitOptions::default()).unwrap();
        let derived = full.plugin();
        let dedicated = fit_lpsmap(&design, &family, &y, &FitOptions::default()).unwrap();
        for i in 0..derived.xi_mean.len() {
            assert_eq!(derived.xi_mean[i].to_bits(), dedicated.xi_mean[i].to_bits());
        }
        let a = &derived.components[0].sigma;
        let b = &dedicated.components[0].sigma;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                assert_eq!(a[(i, j)].to_bits(), b[(i, j)].to_bits());
            }
        }
    }

    #[test]
    fn mixture_mean_recomputes_from_weights_and_components() {
        let (design, y, family) = poisson_problem(90, 82);
        let fit = fit_lps(&design, &family, &y, &FitOptions::default()).unwrap();
        assert!(fit.ensemble.points.len() > 1);
        let mut recomputed = DVector::zeros(fit.xi_mean.len());
        for (w, c) in fit.ensemble.weights.iter().zip(&fit.components) {
            recomputed += &c.xi * *w;
        }
        assert!((recomputed - &fit.xi_mean).amax() < 1e-12);
        for c in &fit.components {
            assert!(c.sigma.clone().cholesky().is_some(), "component not PD");
        }
    }

    #[test]
    fn gaussian_three_point_mixture_matches_hand_computed_average() {
        let (design, y, family) = gaussian_problem(60, 83);
        let mut opts = FitOptions::default();
        opts.explorer.grid_points = Some(3);
        opts.explorer.alpha = 0.01;
        let fit = fit_lps(&design, &family, &y, &opts).unwrap();
        assert_eq!(fit.ensemble.points.len(), 3);

        // Hand-computed closed-form conjugate posterior per ensemble point.
        let sigma2 = family.dispersion();
        let mut expect = DVector::zeros(design.dim_xi());
        for (w, v) in fit.ensemble.weights.iter().zip(&fit.ensemble.points) {
            let q = design.prior_precision(v, opts.zeta);
            let a = design.b.transpose() * &design.b / sigma2 + q;
            let xi = a.lu().solve(&(design.b.transpose() * &y / sigma2)).unwrap();
            expect += xi * *w;
        }
        assert!(
            (&expect - &fit.xi_mean).amax() < 1e-8,
            "max diff {}",
            (&expect - &fit.xi_mean).amax()
        );
    }

    #[test]
    fn single_component_interval_is_the_normal_interval() {
        let (design, y, family) = poisson_problem(90, 84);
        let fit = fit_lpsmap(&design, &family, &y, &FitOptions::default()).unwrap();
        let (lo, hi) = fit.coef_interval(1, 0.95).unwrap();
        let z = 1.959963984540054;
        let sd = fit.components[0].sigma[(1, 1)].sqrt();
        let m = fit.components[0].xi[1];
        assert!((lo - (m - z * sd)).abs() < 1e-8);
        assert!((hi - (m + z * sd)).abs() < 1e-8);
    }

    #[test]
    fn coefficient_intervals_nest_and_match_the_mixture_cdf() {
        let (design, y, family) = poisson_problem(90, 85);
        let fit = fit_lps(&design, &family, &y, &FitOptions::default()).unwrap();
        let mix = fit.coordinate_mixture(0).unwrap();
        let (lo, hi) = fit.coef_interval(0, 0.95).unwrap();
        assert!((mix.cdf(lo) - 0.025).abs() < 1e-8);
        assert!((mix.cdf(hi) - 0.975).abs() < 1e-8);
        let (l90, h90) = fit.coef_interval(0, 0.90).unwrap();
        let (l99, h99) = fit.coef_interval(0, 0.99).unwrap();
        assert!(l99 < lo && lo < l90 && h90 < hi && hi < h99);
    }

    #[test]
    fn fitted_smooths_average_to_zero_on_the_fine_grid() {
        let (design, y, family) = poisson_problem(90, 86);
        let fit = fit_lps(&design, &family, &y, &FitOptions::default()).unwrap();
        let pts = fit.smooth_estimate(&design, 0, 0.9).unwrap();
        let mean = pts.iter().map(|p| p.estimate).sum::<f64>() / pts.len() as f64;
        assert!(mean.abs() < 1e-8, "fine-grid mean {mean}");
        for p in &pts {
            assert!(p.lower <= p.estimate && p.estimate <= p.upper);
        }
    }

    #[test]
    fn plugin_band_halfwidth_is_the_normal_quantile_times_sd() {
        let (design, y, family) = poisson_problem(90, 87);
        let fit = fit_lpsmap(&design, &family, &y, &FitOptions::default()).unwrap();
        let pts = fit.smooth_estimate(&design, 0, 0.95).unwrap();
        let s = &design.smooths[0];
        let block = fit.components[0]
            .sigma
            .view((s.cols.start, s.cols.start), (s.cols.len(), s.cols.len()))
            .into_owned();
        for (l, p) in pts.iter().enumerate() {
            let b = s.fine_basis.row(l).transpose();
            let sd = (&block * &b).dot(&b).sqrt();
            let half = 1.959963984540054 * sd;
            assert!(((p.upper - p.lower) * 0.5 - half).abs() < 1e-6);
        }
    }

    #[test]
    fn plugin_bands_are_no_wider_than_full_bands_on_average() {
        let (design, y, family) = poisson_problem(120, 88);
        let full = fit_lps(&design, &family, &y, &FitOptions::default()).unwrap();
        let plugin = fit_lpsmap(&design, &family, &y, &FitOptions::default()).unwrap();
        let width = |pts: &[SmoothPoint]| {
            pts.iter().map(|p| p.upper - p.lower).sum::<f64>() / pts.len() as f64
        };
        let wf = width(&full.smooth_estimate(&design, 0, 0.95).unwrap());
        let wp = width(&plugin.smooth_estimate(&design, 0, 0.95).unwrap());
        assert!(
            wp <= wf * (1.0 + 1e-6),
            "plugin width {wp} vs full width {wf}"
        );
    }

    #[test]
    fn full_refits_stay_close_to_fixed_weight_refits() {
        let (design, y, family) = poisson_problem(90, 89);
        let fixed = fit_lps(&design, &family, &y, &FitOptions::default()).unwrap();
        let full = fit_lps(
            &design,
            &family,
            &y,
            &FitOptions {
                full_refits: true,
                ..FitOptions::default()
            },
        )
        .unwrap();
        assert!((&fixed.xi_mean - &full.xi_mean).amax() < 0.05 * full.xi_mean.amax());
    }
}
