//! Scalar distribution helpers: normal CDF/quantile, chi-square quantiles
//! refined to machine precision, and Owen's T function for the skew-normal
//! CDF.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma_lr, ln_gamma};
use std::f64::consts::PI;
use std::sync::OnceLock;

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Inverse standard-normal CDF: rational-approximation start polished with
/// Newton steps against the erfc-based CDF, so quantile and CDF are
/// mutually consistent far below the 1e-9 level.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability out of range: {p}");
    let mut z = Normal::standard().inverse_cdf(p);
    for _ in 0..3 {
        let pdf = normal_pdf(z);
        if pdf <= f64::MIN_POSITIVE {
            break;
        }
        let step = (normal_cdf(z) - p) / pdf;
        z -= step;
        if step.abs() < 1e-15 * z.abs().max(1.0) {
            break;
        }
    }
    z
}

/// Chi-square quantile, polished with Newton steps on the regularized
/// incomplete gamma function so that `exp(-0.5 * q)` style thresholds are
/// reliable to ~1e-14.
pub fn chi_squared_quantile(df: f64, p: f64) -> f64 {
    assert!(df > 0.0 && p > 0.0 && p < 1.0);
    let a = 0.5 * df;
    // Wilson-Hilferty starting point.
    let z = normal_quantile(p);
    let c = 1.0 - 2.0 / (9.0 * df);
    let mut x = (df * (c + z * (2.0 / (9.0 * df)).sqrt()).powi(3)).max(1e-300);
    for _ in 0..60 {
        let f = gamma_lr(a, 0.5 * x) - p;
        // chi-square density at x
        let log_pdf = (a - 1.0) * (0.5 * x).ln() - 0.5 * x - ln_gamma(a) - 2f64.ln();
        let pdf = log_pdf.exp();
        if pdf <= 0.0 {
            break;
        }
        let step = f / pdf;
        let x_new = (x - step).max(x * 0.1);
        if (x_new - x).abs() <= 1e-15 * x.abs() {
            x = x_new;
            break;
        }
        x = x_new;
    }
    x
}

/// Owen's T function `T(h, a)`.
///
/// For `|a| <= 1` the defining integral is evaluated with fixed-order
/// Gauss-Legendre quadrature (the integrand is smooth there); larger `|a|`
/// is reduced with the standard identity
/// `T(h, a) = (Phi(h) + Phi(ah))/2 - Phi(h)Phi(ah) - T(ah, 1/a)`.
pub fn owens_t(h: f64, a: f64) -> f64 {
    if a == 0.0 || !h.is_finite() {
        return 0.0;
    }
    if a < 0.0 {
        return -owens_t(h, -a);
    }
    let h = h.abs(); // T is even in h
    if a <= 1.0 {
        owens_t_integral(h, a)
    } else {
        let pa = normal_cdf(h);
        let pb = normal_cdf(a * h);
        0.5 * (pa + pb) - pa * pb - owens_t_integral(a * h, 1.0 / a)
    }
}

fn owens_t_integral(h: f64, a: f64) -> f64 {
    // (1/2pi) * int_0^a exp(-h^2 (1+x^2)/2) / (1+x^2) dx,  0 <= a <= 1
    let (nodes, weights) = gauss_legendre_01();
    let mut acc = 0.0;
    for (&t, &w) in nodes.iter().zip(weights.iter()) {
        let x = a * t;
        let q = 1.0 + x * x;
        acc += w * (-0.5 * h * h * q).exp() / q;
    }
    a * acc / (2.0 * PI)
}

/// 32-point Gauss-Legendre rule on [0, 1], computed once by Newton iteration
/// on the Legendre polynomial.
fn gauss_legendre_01() -> (&'static [f64; 32], &'static [f64; 32]) {
    static RULE: OnceLock<([f64; 32], [f64; 32])> = OnceLock::new();
    let (n, w) = RULE.get_or_init(|| {
        const N: usize = 32;
        let mut nodes = [0.0_f64; N];
        let mut weights = [0.0_f64; N];
        for i in 0..N {
            // initial guess on [-1, 1]
            let mut x = (PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_N(x) and P'_N(x)
                let (mut p0, mut p1) = (1.0_f64, x);
                for k in 2..=N {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = (N as f64) * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = 0.5 * (1.0 - x); // map to [0, 1], order irrelevant
            weights[i] = 1.0 / ((1.0 - x * x) * dp * dp); // 2/(..)/2 for interval scaling
        }
        (nodes, weights)
    });
    (n, w)
}
