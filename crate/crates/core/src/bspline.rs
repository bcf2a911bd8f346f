//! B-spline basis evaluation on clamped equidistant knots.
//!
//! The knot vector repeats the domain boundaries `degree + 1` times and
//! places the interior knots equidistantly, so a basis of size `k` spans
//! `k - degree` equal segments of the domain. Evaluation uses the standard
//! knot-span search plus the triangular Cox-de Boor scheme, which touches
//! only the `degree + 1` basis functions that are nonzero at a point.

use crate::error::{LpsError, Result};
use nalgebra::DMatrix;

/// Clamped knot vector for `k` basis functions of the given degree on
/// `[lo, hi]`. Length is `k + degree + 1`.
pub fn clamped_knots(k: usize, degree: usize, lo: f64, hi: f64) -> Vec<f64> {
    let segments = k - degree;
    let step = (hi - lo) / segments as f64;
    let mut knots = Vec::with_capacity(k + degree + 1);
    for _ in 0..=degree {
        knots.push(lo);
    }
    for i in 1..segments {
        knots.push(lo + step * i as f64);
    }
    for _ in 0..=degree {
        knots.push(hi);
    }
    knots
}

/// Index of the knot span containing `x`: `knots[span] <= x < knots[span+1]`,
/// with the last span closed on the right.
fn find_span(knots: &[f64], degree: usize, x: f64) -> usize {
    let n = knots.len() - degree - 2; // index of last basis function
    if x >= knots[n + 1] {
        return n;
    }
    if x <= knots[degree] {
        return degree;
    }
    let (mut lo, mut hi) = (degree, n + 1);
    let mut mid = (lo + hi) / 2;
    while x < knots[mid] || x >= knots[mid + 1] {
        if x < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
        mid = (lo + hi) / 2;
    }
    mid
}

/// Values of the `degree + 1` basis functions that are nonzero at `x`,
/// returned together with the index of the first one.
pub fn nonzero_basis(knots: &[f64], degree: usize, x: f64) -> (usize, Vec<f64>) {
    let span = find_span(knots, degree, x);
    let mut values = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    values[0] = 1.0;
    for j in 1..=degree {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let tmp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        values[j] = saved;
    }
    (span - degree, values)
}

/// Dense `n x k` basis matrix for the points `x`; errors if any point lies
/// outside `[lo, hi]`, naming the offending index.
pub fn basis_matrix(x: &[f64], k: usize, degree: usize, lo: f64, hi: f64) -> Result<DMatrix<f64>> {
    if k <= degree {
        return Err(LpsError::Config(format!(
            "basis size {k} must exceed the spline degree {degree}"
        )));
    }
    if lo >= hi || lo.is_nan() || hi.is_nan() {
        return Err(LpsError::Config(format!(
            "invalid spline domain [{lo}, {hi}]"
        )));
    }
    let knots = clamped_knots(k, degree, lo, hi);
    let mut out = DMatrix::zeros(x.len(), k);
    for (i, &xi) in x.iter().enumerate() {
        if !xi.is_finite() || xi < lo || xi > hi {
            return Err(LpsError::Domain(format!(
                "covariate value {xi} at index {i} lies outside the spline domain [{lo}, {hi}]"
            )));
        }
        let (first, values) = nonzero_basis(&knots, degree, xi);
        for (offset, &b) in values.iter().enumerate() {
            out[(i, first + offset)] = b;
        }
    }
    Ok(out)
}
