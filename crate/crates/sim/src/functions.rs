//! Closed-form smooth functions used as simulation truths.
//!
//! Two libraries: the three-function set paired with the four-coefficient
//! linear predictor of the main simulation scenarios, and the six-function
//! set used when exercising the independence sampler in higher dimension.

use std::f64::consts::PI;

/// Smooth truths for the three-term scenarios (domain `[-1, 1]`).
pub const TRIO: [fn(f64) -> f64; 3] = [trio_f1, trio_f2, trio_f3];

/// Smooth truths for the six-term scenarios (domain `[-1, 1]`).
pub const SEXTET: [fn(f64) -> f64; 6] = [
    sextet_f1, sextet_f2, sextet_f3, sextet_f4, sextet_f5, sextet_f6,
];

fn trio_f1(x: f64) -> f64 {
    -4.0 * x.powi(6) + 2.0 * x.powi(2) + (2.0 * PI * x).cos() - 0.1
}

fn trio_f2(x: f64) -> f64 {
    3.0 * x.powi(5) + 2.0 * (4.0 * x).sin() + 1.5 * x.powi(2) - 0.5
}

fn trio_f3(x: f64) -> f64 {
    (3.0 * PI * x).sin()
}

fn sextet_f1(x: f64) -> f64 {
    0.5 * (2.0 * x.powi(5) + 3.0 * x.powi(2) + (3.0 * PI * x).cos() - 1.0)
}

fn sextet_f2(x: f64) -> f64 {
    1.3 * x.powi(5) + (4.0 * x).sin() + 0.75 * x.powi(2) - 0.25
}

fn sextet_f3(x: f64) -> f64 {
    (4.0 * PI * x).sin()
}

fn sextet_f4(x: f64) -> f64 {
    (-x.powi(3)).exp() * (2.0 * PI * x * x).sin() - 0.1
}

fn sextet_f5(x: f64) -> f64 {
    0.8 * x * x * (x.powi(3) + 2.0 * (-3.0 * x.powi(4) + (2.0 * x + PI).ln()).exp()) - 0.65
}

fn sextet_f6(x: f64) -> f64 {
    let s = (2.0 * PI * x).sin();
    let c = (2.0 * PI * x).cos();
    1.5 * (0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c.powi(3) + 0.5 * s.powi(3)) - 0.22
}

// Reference constants below keep their full printed precision; some
// coincide with named mathematical constants by construction.
#[allow(clippy::excessive_precision, clippy::approx_constant)]
#[cfg(test)]
mod tests {
    use super::*;

    fn check(f: fn(f64) -> f64, table: &[(f64, f64)]) {
        for &(x, expect) in table {
            let got = f(x);
            assert!(
                (got - expect).abs() < 1e-12 * expect.abs().max(1.0),
                "f({x}) = {got}, expected {expect}"
            );
        }
    }

    // Reference values evaluated independently from the printed formulas.
    #[test]
    fn trio_tabulated_values() {
        check(
            trio_f1,
            &[
                (-0.7, 1.0038700562505240e-01),
                (0.25, 2.4023437500000050e-02),
                (0.8, 4.4044099437494710e-01),
            ],
        );
        check(
            trio_f2,
            &[
                (-0.7, -9.3918630031181016e-01),
                (0.25, 1.2796216571157930e+00),
                (0.8, 1.3262917131448404e+00),
            ],
        );
        check(
            trio_f3,
            &[
                (-0.7, -3.0901699437494717e-01),
                (0.25, 7.0710678118654757e-01),
                (0.8, 9.5105651629515353e-01),
            ],
        );
        // sin(3 pi / 2) = -1 exactly at the domain midpoint of the
        // positive half.
        assert!((trio_f3(0.5) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn sextet_tabulated_values() {
        check(
            sextet_f1,
            &[
                (-0.7, 5.4245825814757676e-01),
                (0.25, -7.5882682809327373e-01),
                (0.8, 9.4218849718747433e-01),
            ],
        );
        check(
            sextet_f2,
            &[
                (-0.7, -4.3597915015590516e-01),
                (0.25, 6.3961551605789646e-01),
                (0.8, 5.9760985657242016e-01),
            ],
        );
        check(
            sextet_f3,
            &[
                (-0.7, -5.8778525229247336e-01),
                (0.25, 1.2246467991473532e-16),
                (0.8, -5.8778525229247280e-01),
            ],
        );
        check(
            sextet_f4,
            &[
                (-0.7, -1.1517561334157933e-02),
                (0.25, 2.7675047566443112e-01),
                (0.8, -5.6176534087473728e-01),
            ],
        );
        check(
            sextet_f5,
            &[
                (-0.7, -1.2003961878714520e-01),
                (0.25, -2.8930206858921570e-01),
                (0.8, 1.0330427710543626e+00),
            ],
        );
        check(
            sextet_f6,
            &[
                (-0.7, 8.6445612977453012e-01),
                (0.25, 1.1300000000000001e+00),
                (0.8, -4.9039848230580430e-01),
            ],
        );
    }
}
