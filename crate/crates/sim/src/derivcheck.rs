//! Numerical verification of the analytic gradient and Hessian of the
//! log-penalty posterior on a synthetic Poisson additive model: the
//! gradient is compared against central finite differences of the value,
//! and the Hessian against central finite differences of the analytic
//! gradient.

use crate::functions::SEXTET;
use lps_core::laplace::{fit_conditional, NewtonOptions};
use lps_core::penalty_posterior::{PenaltyHyperPrior, PenaltyPosterior};
use lps_core::{assemble_design, LpsError, ResponseFamily, Result, SmoothSpec};
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Poisson, StandardNormal};

#[derive(Debug, Clone)]
pub struct DerivativeCheck {
    /// Worst per-entry relative gradient error across all points.
    pub grad_max_rel: f64,
    /// Worst per-entry relative Hessian error across all points.
    pub hess_max_rel: f64,
    /// `(gradient, Hessian)` worst relative error per evaluation point.
    pub per_point: Vec<(f64, f64)>,
}

/// Relative error with a unit floor, so near-zero entries are compared
/// absolutely.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Runs the verification at `points` random log-penalty vectors with
/// coordinates drawn uniformly from `[-4, 8]`, on a Poisson dataset with
/// `q` smooth terms of sample size `n`.
pub fn derivative_check(
    q: usize,
    n: usize,
    points: usize,
    seed: u64,
) -> Result<DerivativeCheck> {
    if q == 0 || q > SEXTET.len() {
        return Err(LpsError::Config(format!(
            "derivative check supports 1 to {} smooth terms, got {q}",
            SEXTET.len()
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let beta = [-1.2, 0.5, -0.4, 0.7];
    let mut z = DMatrix::zeros(n, 3);
    for i in 0..n {
        z[(i, 0)] = f64::from(rng.random_bool(0.5));
        z[(i, 1)] = rng.sample::<f64, _>(StandardNormal);
        z[(i, 2)] = rng.sample::<f64, _>(StandardNormal);
    }
    let x = DMatrix::from_fn(n, q, |_, _| rng.random_range(-1.0..=1.0));
    let y = DVector::from_fn(n, |i, _| {
        let mut eta = beta[0];
        for l in 0..3 {
            eta += beta[l + 1] * z[(i, l)];
        }
        for j in 0..q {
            eta += SEXTET[j](x[(i, j)]);
        }
        rng.sample(Poisson::new(eta.exp()).unwrap())
    });

    let specs = vec![
        SmoothSpec {
            domain: Some((-1.0, 1.0)),
            ..SmoothSpec::default()
        };
        q
    ];
    let design = assemble_design(&z, &x, &specs)?;
    let family = ResponseFamily::Poisson;
    let zeta = 1e-5;
    let anchor = fit_conditional(
        &design,
        &family,
        &y,
        &DVector::zeros(q),
        zeta,
        &NewtonOptions::default(),
    )?;
    let post = PenaltyPosterior::new(
        &design,
        family,
        &y,
        PenaltyHyperPrior::default(),
        zeta,
        &anchor,
    );

    let mut per_point = Vec::with_capacity(points);
    let mut grad_max_rel = 0.0_f64;
    let mut hess_max_rel = 0.0_f64;
    for _ in 0..points {
        let v = DVector::from_fn(q, |_, _| rng.random_range(-4.0..8.0));
        let grad = post.gradient(&v)?;
        let hess = post.hessian(&v)?;
        let mut g_err = 0.0_f64;
        let mut h_err = 0.0_f64;
        for j in 0..q {
            let h = 1e-5 * v[j].abs().max(1.0);
            let mut vp = v.clone();
            vp[j] += h;
            let mut vm = v.clone();
            vm[j] -= h;
            let fd_g = (post.log_density(&vp)? - post.log_density(&vm)?) / (2.0 * h);
            g_err = g_err.max(rel_err(grad[j], fd_g));
            let fd_col = (post.gradient(&vp)? - post.gradient(&vm)?) / (2.0 * h);
            for s in 0..q {
                h_err = h_err.max(rel_err(hess[(s, j)], fd_col[s]));
            }
        }
        grad_max_rel = grad_max_rel.max(g_err);
        hess_max_rel = hess_max_rel.max(h_err);
        per_point.push((g_err, h_err));
    }

    Ok(DerivativeCheck {
        grad_max_rel,
        hess_max_rel,
        per_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_check_passes_the_paper_tolerances() {
        let check = derivative_check(2, 80, 10, 3).unwrap();
        assert!(check.grad_max_rel < 1e-5, "gradient {}", check.grad_max_rel);
        assert!(check.hess_max_rel < 1e-4, "hessian {}", check.hess_max_rel);
        assert_eq!(check.per_point.len(), 10);
    }
}
