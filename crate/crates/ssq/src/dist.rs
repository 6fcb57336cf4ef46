//! Special functions for F-test p-values.
//!
//! Hand-rolled log-gamma (Lanczos) and regularized incomplete beta (modified
//! Lentz continued fraction, converged to machine precision), which together
//! give the upper tail of the F distribution without pulling in a statistics
//! crate.

/// Lanczos coefficients for g = 7, n = 9, kept at published precision.
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const CF_EPS: f64 = 3e-16;
const CF_TINY: f64 = 1e-300;

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // Use the expansion on the side that converges fast.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Upper tail P(F > f) for an F(df1, df2) statistic.
///
/// Nonpositive `f` gives 1; `df1`/`df2` must be positive.
pub fn f_upper_tail(f: f64, df1: usize, df2: usize) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let d1 = df1 as f64;
    let d2 = df2 as f64;
    let x = d2 / (d2 + d1 * f);
    reg_inc_beta(d2 / 2.0, d1 / 2.0, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(2.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(5.0), (24.0f64).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            ln_gamma(0.5),
            std::f64::consts::PI.sqrt().ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn inc_beta_boundaries_and_symmetry() {
        assert_eq!(reg_inc_beta(2.0, 3.0, 0.0), 0.0);
        assert_eq!(reg_inc_beta(2.0, 3.0, 1.0), 1.0);
        // I_x(1,1) is the identity.
        assert_abs_diff_eq!(reg_inc_beta(1.0, 1.0, 0.37), 0.37, epsilon = 1e-12);
        // I_x(a,b) = 1 - I_{1-x}(b,a).
        let lhs = reg_inc_beta(2.5, 4.0, 0.3);
        let rhs = 1.0 - reg_inc_beta(4.0, 2.5, 0.7);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn f_tail_reference_points() {
        // F(1,1) at 1: p = 0.5 by symmetry.
        assert_abs_diff_eq!(f_upper_tail(1.0, 1, 1), 0.5, epsilon = 1e-10);
        // F(2,4) at 1: p = (4/6)^2 = 4/9 in closed form.
        assert_abs_diff_eq!(f_upper_tail(1.0, 2, 4), 4.0 / 9.0, epsilon = 1e-10);
        // F(3,7) at 2.5.
        assert_abs_diff_eq!(
            f_upper_tail(2.5, 3, 7),
            0.143_509_456_278_939_27,
            epsilon = 1e-10
        );
    }

    #[test]
    fn f_tail_edges() {
        assert_eq!(f_upper_tail(0.0, 2, 5), 1.0);
        assert_eq!(f_upper_tail(-3.0, 2, 5), 1.0);
        assert_eq!(f_upper_tail(f64::INFINITY, 2, 5), 0.0);
        // Monotone decreasing in f.
        let p1 = f_upper_tail(1.0, 3, 9);
        let p2 = f_upper_tail(2.0, 3, 9);
        assert!(p2 < p1);
    }
}
