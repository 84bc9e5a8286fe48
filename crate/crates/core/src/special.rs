//! Scalar special functions: log-gamma, digamma, and the regularized lower
//! incomplete gamma function.
//!
//! Only positive arguments are supported.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
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

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} requires a positive finite argument, got {x}")))
    }
}

/// Natural log of the gamma function for `x > 0`.
///
/// Reflection below 1/2, a Lanczos sum on `[1/2, 10)`, and the Stirling
/// series from 10 upward.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx), sin(πx) > 0 on (0, 1)
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    if x >= 10.0 {
        return stirling_ln_gamma(x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (z + 0.5) * t.ln() - t + acc.ln()
}

fn stirling_ln_gamma(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli terms B_{2j} / (2j (2j-1) x^{2j-1})
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0)))));
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series
}

/// Digamma `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
///
/// Shifts the argument above 12 with `ψ(x) = ψ(x+1) - 1/x`, then applies the
/// asymptotic expansion.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 12.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    shift + x.ln() - 0.5 / x - tail
}

/// Regularized lower incomplete gamma `P(s, x) = γ(s, x) / Γ(s)`.
///
/// Power series for `x < s + 1`, Lentz continued fraction for the upper
/// function otherwise. `x = +inf` gives 1.
pub fn regularized_lower_gamma(s: f64, x: f64) -> Result<f64> {
    check_positive("regularized_lower_gamma shape", s)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!(
            "regularized_lower_gamma requires x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let p = if x < s + 1.0 {
        lower_series(s, x)
    } else {
        1.0 - upper_continued_fraction(s, x)
    };
    Ok(p.clamp(0.0, 1.0))
}

fn log_prefactor(s: f64, x: f64) -> f64 {
    -x + s * x.ln() - ln_gamma_unchecked(s)
}

fn lower_series(s: f64, x: f64) -> f64 {
    let mut denom = s;
    let mut term = 1.0 / s;
    let mut sum = term;
    for _ in 0..10_000 {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * log_prefactor(s, x).exp()
}

fn upper_continued_fraction(s: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    log_prefactor(s, x).exp() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ln Γ(n) for integer n by summing logs; independent of the Lanczos path.
    fn ln_factorial_minus_one(n: u32) -> f64 {
        (1..n).map(|j| (j as f64).ln()).sum()
    }

    /// ψ(1) from the defining series ψ(1) = -γ, with γ computed by
    /// H_N - ln N - 1/(2N) + 1/(12N^2) - 1/(120 N^4).
    fn euler_gamma_oracle() -> f64 {
        let n = 10_000.0_f64;
        let harmonic: f64 = (1..=10_000).rev().map(|j| 1.0 / j as f64).sum();
        harmonic - n.ln() - 0.5 / n + 1.0 / (12.0 * n * n) - 1.0 / (120.0 * n.powi(4))
    }

    #[test]
    fn log_gamma_examples() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
        let half = 0.5 * PI.ln();
        assert!((log_gamma(0.5).unwrap() - half).abs() < 1e-14);
        assert!((log_gamma(0.5).unwrap() - 0.572_364_942_924_700_1).abs() < 1e-14);
    }

    #[test]
    fn log_gamma_matches_factorials() {
        for n in 2..=170u32 {
            let want = ln_factorial_minus_one(n);
            let got = log_gamma(n as f64).unwrap();
            let scale = want.abs().max(1.0);
            assert!(
                (got - want).abs() <= 1e-12 * scale,
                "n={n}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn log_gamma_recurrence_on_grid() {
        let mut x = 1e-3;
        while x < 1e6 {
            let lhs = log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap();
            let scale = log_gamma(x + 1.0).unwrap().abs().max(1.0);
            assert!(
                (lhs - x.ln()).abs() <= 1e-12 * scale,
                "x={x}: {lhs} vs {}",
                x.ln()
            );
            x *= 1.37;
        }
    }

    #[test]
    fn log_gamma_small_argument() {
        // Γ(x) ~ 1/x - γ for tiny x
        let x: f64 = 1e-3;
        let want = (1.0 / x - 0.577_215_664_901_532_9 + 0.989_055_995_327_972_5 * x).ln();
        assert!((log_gamma(x).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn digamma_examples() {
        let gamma = euler_gamma_oracle();
        assert!((gamma - 0.577_215_664_901_532_9).abs() < 1e-14);
        assert!((digamma(1.0).unwrap() + gamma).abs() < 1e-12);
        assert!((digamma(1.0).unwrap() + 0.577_215_664_901_532_9).abs() < 1e-12);
        assert!((digamma(2.0).unwrap() - 0.422_784_335_098_467_1).abs() < 1e-12);
        assert!((digamma(3.0).unwrap() - digamma(2.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn digamma_recurrence_on_grid() {
        let mut x = 1e-3;
        while x < 1e6 {
            let lhs = digamma(x + 1.0).unwrap();
            let rhs = digamma(x).unwrap() + 1.0 / x;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "x={x}");
            x *= 1.29;
        }
    }

    #[test]
    fn digamma_is_derivative_of_log_gamma() {
        let h = 1e-5;
        let mut x = 0.5;
        while x <= 100.0 {
            let fd = (log_gamma(x + h).unwrap() - log_gamma(x - h).unwrap()) / (2.0 * h);
            assert!((digamma(x).unwrap() - fd).abs() < 1e-6, "x={x}");
            x += 0.731;
        }
    }

    #[test]
    fn digamma_tiny_argument() {
        // ψ(x) = -1/x - γ + (π²/6) x + O(x²)
        let x = 1e-3;
        let want = -1.0 / x - 0.577_215_664_901_532_9 + PI * PI / 6.0 * x;
        assert!((digamma(x).unwrap() - want).abs() < 2e-6);
    }

    #[test]
    fn incomplete_gamma_examples() {
        let e = std::f64::consts::E;
        assert!((regularized_lower_gamma(1.0, 1.0).unwrap() - (1.0 - 1.0 / e)).abs() < 1e-15);
        assert!(
            (regularized_lower_gamma(2.0, 2.0).unwrap() - (1.0 - 3.0 * (-2.0f64).exp())).abs()
                < 1e-15
        );
        assert!((regularized_lower_gamma(2.0, 2.0).unwrap() - 0.593_994_150_290_161_6).abs() < 1e-14);
        assert_eq!(regularized_lower_gamma(3.0, 0.0).unwrap(), 0.0);
        assert_eq!(regularized_lower_gamma(3.0, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn incomplete_gamma_matches_poisson_sum() {
        for k in 1..=20u32 {
            let mut x = 0.0;
            while x < 60.0 {
                let mut term = 1.0;
                let mut partial = 0.0;
                for j in 0..k {
                    if j > 0 {
                        term *= x / j as f64;
                    }
                    partial += term;
                }
                let want = 1.0 - (-x).exp() * partial;
                let got = regularized_lower_gamma(k as f64, x).unwrap();
                assert!((got - want).abs() < 1e-12, "k={k} x={x}: {got} vs {want}");
                x += 0.37;
            }
        }
    }

    #[test]
    fn incomplete_gamma_monotone() {
        for &s in &[0.3, 1.0, 2.5, 7.0] {
            let mut prev = 0.0;
            for i in 0..400 {
                let v = regularized_lower_gamma(s, i as f64 * 0.05).unwrap();
                assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(matches!(log_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(digamma(-1.0), Err(Error::Domain(_))));
        assert!(matches!(regularized_lower_gamma(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(regularized_lower_gamma(1.0, -1.0), Err(Error::Domain(_))));
    }
}
