//! Model matrices for an additive model: the centered linear design, the
//! identifiability-centered B-spline blocks, the difference penalties, and
//! the block-diagonal prior precision of the latent field.
//!
//! The latent field is ordered as `(beta_0, beta_1, ..., beta_p, theta_1,
//! ..., theta_q)`, with each spline block reduced to `K - 1` coefficients by
//! fixing the last one to zero: the corresponding column is deleted from the
//! basis and from the difference matrix before the penalty product is formed.
//! Every smooth block is additionally centered by the mean basis row over a
//! fine grid on its domain, so the fitted functions average to zero there.

use crate::bspline;
use crate::error::{LpsError, Result};
use nalgebra::{DMatrix, DVector};
use std::ops::Range;

const SPLINE_DEGREE: usize = 3;

/// Configuration of one smooth term.
#[derive(Debug, Clone, Copy)]
pub struct SmoothSpec {
    /// Number of B-spline basis functions (before the identifiability
    /// deletion).
    pub basis_size: usize,
    /// Order of the difference penalty.
    pub penalty_order: usize,
    /// Diagonal perturbation making the penalty block full rank.
    pub epsilon: f64,
    /// Fine-grid size used for centering and for reporting fitted functions.
    pub grid_size: usize,
    /// Spline domain; `None` uses the range of the observed covariate.
    pub domain: Option<(f64, f64)>,
}

impl Default for SmoothSpec {
    fn default() -> Self {
        SmoothSpec {
            basis_size: 15,
            penalty_order: 3,
            epsilon: 1e-6,
            grid_size: 100,
            domain: None,
        }
    }
}

/// One assembled smooth term inside a [`GamDesign`].
#[derive(Debug, Clone)]
pub struct SmoothBlock {
    pub basis_size: usize,
    pub penalty_order: usize,
    /// `(K-1) x (K-1)` penalty block: column-deleted difference product plus
    /// the epsilon ridge.
    pub penalty: DMatrix<f64>,
    pub domain: (f64, f64),
    /// Mean basis row over the fine grid (length `K`, prior to deletion).
    pub centering_row: DVector<f64>,
    /// The fine grid itself.
    pub fine_grid: Vec<f64>,
    /// Centered, column-deleted basis on the fine grid (`L x (K-1)`).
    pub fine_basis: DMatrix<f64>,
    /// Columns of the full design / entries of the latent field occupied by
    /// this block.
    pub cols: Range<usize>,
}

/// Assembled design for one model: `b = [Z : B~_1 : ... : B~_q]`.
#[derive(Debug, Clone)]
pub struct GamDesign {
    /// Centered linear design, `n x (p+1)`, intercept first.
    pub z: DMatrix<f64>,
    /// Full design matrix, `n x dim_xi`.
    pub b: DMatrix<f64>,
    pub smooths: Vec<SmoothBlock>,
    pub n: usize,
    /// Number of linear covariates (excluding the intercept).
    pub p: usize,
    pub q: usize,
    pub warnings: Vec<String>,
}

impl GamDesign {
    pub fn dim_xi(&self) -> usize {
        self.b.ncols()
    }

    /// Centered basis rows for smooth `j` at arbitrary points of its domain
    /// (same centering and column deletion as the training design).
    pub fn centered_basis_at(&self, j: usize, xs: &[f64]) -> Result<DMatrix<f64>> {
        let s = &self.smooths[j];
        let raw = bspline::basis_matrix(xs, s.basis_size, SPLINE_DEGREE, s.domain.0, s.domain.1)?;
        Ok(center_and_delete(&raw, &s.centering_row))
    }

    /// Block-diagonal prior precision `Q(v)` of the latent field.
    pub fn prior_precision(&self, v: &DVector<f64>, zeta: f64) -> DMatrix<f64> {
        let d = self.dim_xi();
        let mut q = DMatrix::zeros(d, d);
        for i in 0..=self.p {
            q[(i, i)] = zeta;
        }
        for (j, s) in self.smooths.iter().enumerate() {
            let lambda = v[j].exp();
            let k = s.penalty.nrows();
            q.view_mut((s.cols.start, s.cols.start), (k, k))
                .copy_from(&(&s.penalty * lambda));
        }
        q
    }

    /// `Q(v) * x` without forming the matrix.
    pub fn apply_prior_precision(
        &self,
        v: &DVector<f64>,
        zeta: f64,
        x: &DVector<f64>,
    ) -> DVector<f64> {
        let mut out = DVector::zeros(x.len());
        for i in 0..=self.p {
            out[i] = zeta * x[i];
        }
        for (j, s) in self.smooths.iter().enumerate() {
            let lambda = v[j].exp();
            let xj = x.rows(s.cols.start, s.cols.len());
            out.rows_mut(s.cols.start, s.cols.len())
                .copy_from(&(&s.penalty * xj * lambda));
        }
        out
    }

    /// `P~_j(v_j) * x`: the derivative of `Q(v)` with respect to `v_j`
    /// applied to a vector (nonzero only on block `j`).
    pub fn apply_penalty_deriv(&self, j: usize, vj: f64, x: &DVector<f64>) -> DVector<f64> {
        let s = &self.smooths[j];
        let mut out = DVector::zeros(x.len());
        let xj = x.rows(s.cols.start, s.cols.len());
        out.rows_mut(s.cols.start, s.cols.len())
            .copy_from(&(&s.penalty * xj * vj.exp()));
        out
    }
}

/// `r`-th order difference matrix of shape `(k - r) x k`.
pub fn difference_matrix(k: usize, order: usize) -> DMatrix<f64> {
    assert!(k > order, "difference order must be below the column count");
    let mut d = DMatrix::zeros(k - 1, k);
    for i in 0..k - 1 {
        d[(i, i)] = -1.0;
        d[(i, i + 1)] = 1.0;
    }
    let mut acc = d;
    for _ in 1..order {
        let k_cur = acc.nrows();
        let mut step = DMatrix::zeros(k_cur - 1, k_cur);
        for i in 0..k_cur - 1 {
            step[(i, i)] = -1.0;
            step[(i, i + 1)] = 1.0;
        }
        acc = step * acc;
    }
    acc
}

/// Difference penalty `D_r' D_r + eps I` built on `k` coefficients.
pub fn penalty_block(k: usize, order: usize, epsilon: f64) -> Result<DMatrix<f64>> {
    if k <= order {
        return Err(LpsError::Config(format!(
            "penalty block needs more than {order} coefficients, got {k}"
        )));
    }
    let d = difference_matrix(k, order);
    let mut p = d.transpose() * d;
    for i in 0..k {
        p[(i, i)] += epsilon;
    }
    Ok(p)
}

/// Penalty block actually used in the assembled design: the difference
/// matrix is built on the full `k` coefficients, its last column is deleted
/// along with the fixed spline coefficient, and only then is the product
/// formed.
fn deleted_penalty_block(k: usize, order: usize, epsilon: f64) -> Result<DMatrix<f64>> {
    if k <= order + 1 {
        return Err(LpsError::Config(format!(
            "basis size {k} must exceed penalty order {order} + 1"
        )));
    }
    let d = difference_matrix(k, order);
    let d_del = d.columns(0, k - 1).into_owned();
    let mut p = d_del.transpose() * d_del;
    for i in 0..k - 1 {
        p[(i, i)] += epsilon;
    }
    Ok(p)
}

/// Equidistant grid with exact endpoints (the naive increment formula can
/// overshoot `hi` by one ulp, which would fall outside the spline domain).
pub(crate) fn linspace(lo: f64, hi: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| {
            if i + 1 == len {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (len - 1) as f64
            }
        })
        .collect()
}

fn center_and_delete(raw: &DMatrix<f64>, centering_row: &DVector<f64>) -> DMatrix<f64> {
    let k = raw.ncols();
    let mut out = DMatrix::zeros(raw.nrows(), k - 1);
    for i in 0..raw.nrows() {
        for j in 0..k - 1 {
            out[(i, j)] = raw[(i, j)] - centering_row[j];
        }
    }
    out
}

/// Builds the full design from raw covariates.
///
/// `z_raw` holds the `p` linear covariates (no intercept column), `x` the
/// `q` smooth covariates; `specs` configures each smooth term.
pub fn assemble_design(
    z_raw: &DMatrix<f64>,
    x: &DMatrix<f64>,
    specs: &[SmoothSpec],
) -> Result<GamDesign> {
    let n = if z_raw.nrows() > 0 {
        z_raw.nrows()
    } else {
        x.nrows()
    };
    if x.nrows() != n && x.ncols() > 0 {
        return Err(LpsError::Config(format!(
            "covariate row mismatch: {} linear rows vs {} smooth rows",
            n,
            x.nrows()
        )));
    }
    let p = z_raw.ncols();
    let q = x.ncols();
    if specs.len() != q {
        return Err(LpsError::Config(format!(
            "{q} smooth covariates but {} smooth specifications",
            specs.len()
        )));
    }
    for v in z_raw.iter().chain(x.iter()) {
        if !v.is_finite() {
            return Err(LpsError::Domain(
                "covariates must be finite with no missing values".into(),
            ));
        }
    }

    // Centered linear part with an intercept column.
    let mut z = DMatrix::zeros(n, p + 1);
    for i in 0..n {
        z[(i, 0)] = 1.0;
    }
    for j in 0..p {
        let col = z_raw.column(j);
        let mean = col.sum() / n as f64;
        for i in 0..n {
            z[(i, j + 1)] = col[i] - mean;
        }
    }

    let mut smooths = Vec::with_capacity(q);
    let mut blocks = Vec::with_capacity(q);
    let mut offset = p + 1;
    for (j, spec) in specs.iter().enumerate() {
        let col = x.column(j);
        let lo_obs = col.min();
        let hi_obs = col.max();
        if lo_obs == hi_obs {
            return Err(LpsError::Config(format!(
                "smooth covariate {j} is constant; its spline domain is degenerate"
            )));
        }
        let (lo, hi) = spec.domain.unwrap_or((lo_obs, hi_obs));
        if lo_obs < lo || hi_obs > hi {
            return Err(LpsError::Domain(format!(
                "smooth covariate {j} has values outside its declared domain [{lo}, {hi}]"
            )));
        }
        let k = spec.basis_size;
        let penalty = deleted_penalty_block(k, spec.penalty_order, spec.epsilon)?;
        if spec.grid_size < 2 {
            return Err(LpsError::Config(
                "centering grid needs at least two points".into(),
            ));
        }

        let xs: Vec<f64> = col.iter().copied().collect();
        let raw = bspline::basis_matrix(&xs, k, SPLINE_DEGREE, lo, hi)?;

        let l = spec.grid_size;
        let fine_grid = linspace(lo, hi, l);
        let fine_raw = bspline::basis_matrix(&fine_grid, k, SPLINE_DEGREE, lo, hi)?;
        let centering_row = DVector::from_iterator(
            k,
            (0..k).map(|c| fine_raw.column(c).sum() / l as f64),
        );

        let centered = center_and_delete(&raw, &centering_row);
        let fine_basis = center_and_delete(&fine_raw, &centering_row);
        let cols = offset..offset + (k - 1);
        offset += k - 1;

        smooths.push(SmoothBlock {
            basis_size: k,
            penalty_order: spec.penalty_order,
            penalty,
            domain: (lo, hi),
            centering_row,
            fine_grid,
            fine_basis,
            cols,
        });
        blocks.push(centered);
    }

    let dim_xi = offset;
    let mut b = DMatrix::zeros(n, dim_xi);
    b.view_mut((0, 0), (n, p + 1)).copy_from(&z);
    for (s, block) in smooths.iter().zip(blocks.iter()) {
        b.view_mut((0, s.cols.start), (n, s.cols.len()))
            .copy_from(block);
    }

    let mut warnings = Vec::new();
    if n < dim_xi {
        warnings.push(format!(
            "sample size {n} is below the latent dimension {dim_xi}; the fit relies on the prior"
        ));
    }

    Ok(GamDesign {
        z,
        b,
        smooths,
        n,
        p,
        q,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn toy_data(n: usize, p: usize, q: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
        let x = DMatrix::from_fn(n, q, |_, _| rng.random_range(-1.0..1.0));
        (z, x)
    }

    #[test]
    fn first_order_penalty_block_is_the_classic_tridiagonal() {
        let p = penalty_block(3, 1, 0.0).unwrap();
        let expect = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0],
        );
        assert_eq!(p, expect);
    }

    #[test]
    fn penalty_block_matches_brute_force_product() {
        for k in 5..=20 {
            for r in 1..=3 {
                let d = difference_matrix(k, r);
                let brute = d.transpose() * &d + DMatrix::identity(k, k) * 1e-6;
                let p = penalty_block(k, r, 1e-6).unwrap();
                let diff = (&p - &brute).abs().max();
                assert!(diff < 1e-14, "k={k} r={r} diff={diff}");
            }
        }
    }

    #[test]
    fn difference_penalty_annihilates_low_degree_polynomials() {
        // r-th differences of a degree-(r-1) polynomial sequence vanish.
        for r in 1..=3 {
            let k = 12;
            let p = penalty_block(k, r, 0.0).unwrap();
            let theta = DVector::from_iterator(
                k,
                (0..k).map(|i| {
                    let t = i as f64;
                    (0..r).map(|d| t.powi(d as i32)).sum::<f64>()
                }),
            );
            let q_form = (theta.transpose() * &p * &theta)[(0, 0)];
            assert!(q_form.abs() < 1e-18 * 10f64.powi(2 * r as i32 + 4), "r={r}: {q_form}");
        }
    }

    #[test]
    fn penalty_block_rejects_too_few_coefficients() {
        assert!(matches!(penalty_block(3, 3, 1e-6), Err(LpsError::Config(_))));
        assert!(matches!(penalty_block(2, 2, 1e-6), Err(LpsError::Config(_))));
        assert!(penalty_block(4, 3, 1e-6).is_ok());
    }

    #[test]
    fn epsilon_bounds_the_smallest_eigenvalue() {
        let p = penalty_block(12, 3, 1e-6).unwrap();
        let eig = p.symmetric_eigen();
        let min = eig.eigenvalues.min();
        assert!(min >= 1e-6 - 1e-12, "min eigenvalue {min}");
    }

    #[test]
    fn design_dimensions() {
        let (_, x1) = toy_data(40, 0, 1, 3);
        let d1 = assemble_design(&DMatrix::zeros(40, 0), &x1, &[SmoothSpec::default()]).unwrap();
        assert_eq!(d1.dim_xi(), 1 + 14);

        let (z, x) = toy_data(80, 3, 2, 4);
        let d2 = assemble_design(&z, &x, &[SmoothSpec::default(); 2]).unwrap();
        assert_eq!(d2.dim_xi(), 2 * 14 + 4);
        assert_eq!(d2.smooths[0].cols, 4..18);
        assert_eq!(d2.smooths[1].cols, 18..32);
    }

    #[test]
    fn linear_columns_are_centered() {
        let (z, x) = toy_data(60, 3, 1, 5);
        let d = assemble_design(&z, &x, &[SmoothSpec::default()]).unwrap();
        for j in 1..=3 {
            let mean = d.z.column(j).sum() / 60.0;
            assert!(mean.abs() < 1e-10, "column {j} mean {mean}");
        }
        assert!(d.z.column(0).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn fine_grid_columns_are_centered() {
        let (z, x) = toy_data(50, 1, 2, 6);
        let d = assemble_design(&z, &x, &[SmoothSpec::default(); 2]).unwrap();
        for s in &d.smooths {
            for c in 0..s.fine_basis.ncols() {
                let mean = s.fine_basis.column(c).sum() / s.fine_grid.len() as f64;
                assert!(mean.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn centered_functions_average_to_zero_on_the_fine_grid() {
        let (z, x) = toy_data(50, 1, 1, 7);
        let d = assemble_design(&z, &x, &[SmoothSpec::default()]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..20 {
            let theta = DVector::from_fn(14, |_, _| rng.random_range(-3.0..3.0));
            let values = &d.smooths[0].fine_basis * &theta;
            let mean = values.sum() / values.len() as f64;
            assert!(mean.abs() < 1e-10, "fine-grid mean {mean}");
        }
    }

    #[test]
    fn constant_smooth_covariate_is_rejected() {
        let z = DMatrix::zeros(20, 0);
        let x = DMatrix::from_element(20, 1, 0.4);
        let err = assemble_design(&z, &x, &[SmoothSpec::default()]).unwrap_err();
        assert!(matches!(err, LpsError::Config(_)));
    }

    #[test]
    fn prior_precision_blocks_scale_with_the_log_penalty() {
        let (z, x) = toy_data(60, 1, 2, 9);
        let d = assemble_design(&z, &x, &[SmoothSpec::default(); 2]).unwrap();
        let zeta = 1e-5;

        let q0 = d.prior_precision(&DVector::zeros(2), zeta);
        let s0 = &d.smooths[0];
        let block0 = q0.view((s0.cols.start, s0.cols.start), (14, 14));
        assert!((block0 - &s0.penalty).abs().max() < 1e-15);
        assert_eq!(q0[(0, 0)], zeta);
        assert_eq!(q0[(1, 1)], zeta);

        let v = DVector::from_vec(vec![1.3, -0.4]);
        let qv = d.prior_precision(&v, zeta);
        for (j, s) in d.smooths.iter().enumerate() {
            let block = qv.view((s.cols.start, s.cols.start), (14, 14));
            let expect = &s.penalty * v[j].exp();
            assert!((block - expect).abs().max() < 1e-12);
        }
    }

    #[test]
    fn prior_precision_assembled_by_hand_for_a_tiny_model() {
        // One smooth with a 3-coefficient block (basis size 4), no linear
        // covariates: a 4x4 matrix with zeta in the top-left corner.
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let z = DMatrix::zeros(30, 0);
        let x = DMatrix::from_fn(30, 1, |_, _| rng.random_range(-1.0..1.0));
        let spec = SmoothSpec {
            basis_size: 4,
            penalty_order: 1,
            epsilon: 0.0,
            ..SmoothSpec::default()
        };
        let d = assemble_design(&z, &x, &[spec]).unwrap();
        let zeta = 1e-5;
        let q = d.prior_precision(&DVector::zeros(1), zeta);
        assert_eq!(q.nrows(), 4);

        // By hand: D_1 on 4 columns, last column deleted, then D'D.
        let d1 = difference_matrix(4, 1);
        let d1_del = d1.columns(0, 3).into_owned();
        let block = d1_del.transpose() * d1_del;
        let mut expect = DMatrix::zeros(4, 4);
        expect[(0, 0)] = zeta;
        expect.view_mut((1, 1), (3, 3)).copy_from(&block);
        assert!((q - expect).abs().max() < 1e-15);
    }

    #[test]
    fn prior_precision_is_spd_across_the_penalty_range() {
        let (z, x) = toy_data(40, 1, 3, 11);
        let d = assemble_design(&z, &x, &[SmoothSpec::default(); 3]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for trial in 0..40 {
            let v = if trial == 0 {
                DVector::from_element(3, -10.0)
            } else if trial == 1 {
                DVector::from_element(3, 10.0)
            } else {
                DVector::from_fn(3, |_, _| rng.random_range(-10.0..10.0))
            };
            let q = d.prior_precision(&v, 1e-5);
            assert!(
                (q.clone() - q.transpose()).abs().max() < 1e-12,
                "asymmetric at {v:?}"
            );
            assert!(q.cholesky().is_some(), "not SPD at {v:?}");
        }
    }

    #[test]
    fn apply_helpers_match_the_dense_matrix() {
        let (z, x) = toy_data(50, 2, 2, 13);
        let d = assemble_design(&z, &x, &[SmoothSpec::default(); 2]).unwrap();
        let v = DVector::from_vec(vec![0.7, -1.1]);
        let zeta = 1e-5;
        let q = d.prior_precision(&v, zeta);
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let xvec = DVector::from_fn(d.dim_xi(), |_, _| rng.random_range(-1.0..1.0));
        let dense = &q * &xvec;
        let fast = d.apply_prior_precision(&v, zeta, &xvec);
        assert!((dense - fast).abs().max() < 1e-12);

        for j in 0..2 {
            let mut qj = DMatrix::zeros(d.dim_xi(), d.dim_xi());
            let s = &d.smooths[j];
            qj.view_mut((s.cols.start, s.cols.start), (14, 14))
                .copy_from(&(&s.penalty * v[j].exp()));
            let dense_j = &qj * &xvec;
            let fast_j = d.apply_penalty_deriv(j, v[j], &xvec);
            assert!((dense_j - fast_j).abs().max() < 1e-12);
        }
    }

    #[test]
    fn warns_when_underdetermined() {
        let (z, x) = toy_data(10, 1, 2, 15);
        let d = assemble_design(&z, &x, &[SmoothSpec::default(); 2]).unwrap();
        assert!(!d.warnings.is_empty());
    }
}
