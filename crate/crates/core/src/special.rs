//! Numerically stable special functions and Lp-ball volumes.
//!
//! Everything downstream assembles bounds in log space, since quantities
//! such as `(2 pi sigma^2)^{d/2}` and `(lambda r)^d / d!` overflow f64 well
//! before the dimensions the bounds are evaluated at; this module deals
//! exclusively in natural logarithms. [`LogValue`] is the thin carrier for "log of a
//! non-negative quantity", with `-inf` encoding zero.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Natural log of a non-negative quantity; `-inf` encodes 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogValue {
    pub log_v: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        log_v: f64::NEG_INFINITY,
    };
    pub const ONE: LogValue = LogValue { log_v: 0.0 };

    pub fn from_log(log_v: f64) -> Self {
        Self { log_v }
    }

    /// Log of a non-negative linear value.
    pub fn from_linear(v: f64) -> Self {
        debug_assert!(v >= 0.0, "LogValue encodes non-negative quantities");
        Self { log_v: v.ln() }
    }

    pub fn to_linear(self) -> f64 {
        self.log_v.exp()
    }
}

/// Multiplication in linear space is addition of logs.
#[allow(clippy::suspicious_arithmetic_impl)]
impl std::ops::Mul for LogValue {
    type Output = LogValue;

    fn mul(self, other: LogValue) -> LogValue {
        LogValue {
            log_v: self.log_v + other.log_v,
        }
    }
}

/// Addition in linear space via log-sum-exp.
#[allow(clippy::suspicious_arithmetic_impl)]
impl std::ops::Add for LogValue {
    type Output = LogValue;

    fn add(self, other: LogValue) -> LogValue {
        LogValue {
            log_v: log_sum_exp(&[self.log_v, other.log_v]).unwrap_or(f64::NEG_INFINITY),
        }
    }
}

// Lanczos approximation, g = 7, 9 coefficients (the GSL/Numerical-Recipes
// set). Relative accuracy ~1e-15 on the right half plane, comfortably within
// the 1e-10 absolute contract on [0.5, 1e6].
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)] // published table, kept verbatim
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

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// ln Gamma(x) for x > 0.
///
/// Absolute error below 1e-10 over [0.5, 1e6]; arguments in (0, 0.5) are
/// lifted through the recurrence ln Gamma(x) = ln Gamma(x+1) - ln x.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    if x < 0.5 {
        return Ok(log_gamma(x + 1.0)? - x.ln());
    }
    let z = x - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(LN_SQRT_2PI + (z + 0.5) * t.ln() - t + sum.ln())
}

/// ln C(n, k) for 0 <= k <= n, via the log-gamma representation.
///
/// Boundary cases k = 0 and k = n return exactly 0.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!(
            "log_binomial requires 0 <= k <= n, got n={n}, k={k}"
        )));
    }
    if k == 0 || k == n {
        return Ok(0.0);
    }
    let n = n as f64;
    let k = k as f64;
    Ok(log_gamma(n + 1.0)? - log_gamma(k + 1.0)? - log_gamma(n - k + 1.0)?)
}

/// ln(sum_i exp(v_i)) with the maximum factored out; overflow-free.
///
/// Entries may be `-inf` (zero contributions); an all-`-inf` input yields
/// `-inf`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Streaming log-sum-exp accumulator for grid reductions: keeps a running
/// maximum and a sum rescaled to it, so millions of terms reduce in a fixed
/// order without materializing them.
#[derive(Debug, Clone)]
pub struct LogSumAcc {
    max: f64,
    sum: f64,
}

impl LogSumAcc {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.max {
            self.sum += (log_term - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self::new()
    }
}

/// ln V_p(d, r) for p in {1, 2, inf}: the volume of the Lp ball of radius r
/// in dimension d. Returns `-inf` (log of 0) at r = 0.
pub fn log_ball_volume(p: crate::model::NormOrder, d: usize, r: f64) -> Result<LogValue> {
    use crate::model::NormOrder::*;
    let p_real = match p {
        L1 => 1.0,
        L2 => 2.0,
        LInf => f64::INFINITY,
    };
    log_ball_volume_general(p_real, d, r)
}

/// ln V_p(d, r) for general real p >= 1 (exploration only):
/// V_p(d, r) = 2^d Gamma(1 + 1/p)^d / Gamma(1 + d/p) * r^d.
pub fn log_ball_volume_general(p: f64, d: usize, r: f64) -> Result<LogValue> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!(
            "ball volume requires p >= 1, got {p}"
        )));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "ball volume requires r >= 0, got {r}"
        )));
    }
    if d == 0 {
        return Err(Error::Domain("ball volume requires d >= 1".into()));
    }
    if r == 0.0 {
        return Ok(LogValue::ZERO);
    }
    let df = d as f64;
    let (lg_inner, lg_outer) = if p.is_infinite() {
        (0.0, 0.0)
    } else {
        (log_gamma(1.0 + 1.0 / p)?, log_gamma(1.0 + df / p)?)
    };
    let log_v = df * std::f64::consts::LN_2 + df * lg_inner - lg_outer + df * r.ln();
    Ok(LogValue::from_log(log_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NormOrder;

    const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

    #[test]
    fn log_gamma_known_values() {
        assert!((log_gamma(0.5).unwrap() - LN_SQRT_PI).abs() < 1e-12);
        assert!(log_gamma(1.0).unwrap().abs() < 1e-13);
        assert!((log_gamma(5.0).unwrap() - 24.0f64.ln()).abs() < 1e-12);
        // Half-integer used by the spherical closed form: Gamma(3/2) = sqrt(pi)/2.
        assert!((log_gamma(1.5).unwrap() - (LN_SQRT_PI - std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn log_gamma_rejects_non_positive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
    }

    #[test]
    fn log_gamma_recurrence_over_grid() {
        // ln Gamma(x+1) = ln Gamma(x) + ln x, checked to 1e-9 on [0.5, 100].
        let mut x = 0.5;
        while x <= 100.0 {
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = log_gamma(x).unwrap() + x.ln();
            assert!(
                (lhs - rhs).abs() < 1e-9,
                "recurrence failed at x={x}: {lhs} vs {rhs}"
            );
            x += 0.173;
        }
    }

    #[test]
    fn log_gamma_large_arguments() {
        // Stirling cross-check at x = 1e6: ln Gamma(x) = (x-1/2)ln x - x + ln sqrt(2pi) + 1/(12x) - ...
        let x: f64 = 1e6;
        let stirling =
            (x - 0.5) * x.ln() - x + LN_SQRT_2PI + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3));
        assert!((log_gamma(x).unwrap() - stirling).abs() < 1e-9);
    }

    #[test]
    fn log_binomial_small_and_boundary() {
        assert!((log_binomial(4, 2).unwrap() - 6.0f64.ln()).abs() < 1e-13);
        assert_eq!(log_binomial(17, 0).unwrap(), 0.0);
        assert_eq!(log_binomial(17, 17).unwrap(), 0.0);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn log_binomial_against_big_integer_oracle() {
        use num_bigint::BigUint;
        // Exact C(n, k) via big integers, then compare logs at 1e-12 relative.
        let binom_exact = |n: u64, k: u64| -> BigUint {
            let mut acc = BigUint::from(1u32);
            for i in 0..k {
                acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
            }
            acc
        };
        for (n, k) in [(100u64, 50u64), (100, 3), (1000, 417), (64, 32)] {
            let exact = binom_exact(n, k);
            // ln of a BigUint via its decimal digits: ln(mantissa) + digits*ln(10).
            let s = exact.to_string();
            let digits = s.len() as f64 - 1.0;
            let mantissa: f64 = format!("{}.{}", &s[..1], &s[1..s.len().min(17)])
                .parse()
                .unwrap();
            let ln_exact = mantissa.ln() + digits * std::f64::consts::LN_10;
            let got = log_binomial(n, k).unwrap();
            assert!(
                ((got - ln_exact) / ln_exact).abs() < 1e-12,
                "C({n},{k}): got {got}, oracle {ln_exact}"
            );
        }
    }

    #[test]
    fn log_sum_exp_basics() {
        assert!((log_sum_exp(&[0.0, 0.0]).unwrap() - 2.0f64.ln()).abs() < 1e-14);
        let shifted = log_sum_exp(&[-1e4, -1e4 + 3.0f64.ln()]).unwrap();
        assert!((shifted - (-1e4 + 4.0f64.ln())).abs() < 1e-10);
        let v = log_sum_exp(&[1.0f64.ln(), 2.0f64.ln(), 3.0f64.ln()]).unwrap();
        assert!((v - 6.0f64.ln()).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]).unwrap_err(), Error::EmptyInput);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY]).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn streaming_accumulator_matches_batch() {
        let terms: Vec<f64> = (0..1000).map(|i| -0.037 * i as f64).collect();
        let mut acc = LogSumAcc::new();
        for &t in &terms {
            acc.push(t);
        }
        assert!((acc.value() - log_sum_exp(&terms).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ball_volumes_small_dimensions() {
        // Unit disk: pi.
        let v = log_ball_volume(NormOrder::L2, 2, 1.0).unwrap();
        assert!((v.log_v - std::f64::consts::PI.ln()).abs() < 1e-12);
        // Cross-polytope (2r)^d/d!: d=2, r=1 -> 2.
        let v = log_ball_volume(NormOrder::L1, 2, 1.0).unwrap();
        assert!((v.log_v - 2.0f64.ln()).abs() < 1e-12);
        // Unit cube at half-width 0.5: volume 1.
        let v = log_ball_volume(NormOrder::LInf, 3, 0.5).unwrap();
        assert!(v.log_v.abs() < 1e-12);
        // r = 0 encodes a zero volume.
        assert_eq!(
            log_ball_volume(NormOrder::L2, 4, 0.0).unwrap(),
            LogValue::ZERO
        );
        assert!(log_ball_volume(NormOrder::L2, 4, -1.0).is_err());
    }

    #[test]
    fn ball_volume_nesting_and_scaling() {
        for d in 1..=12 {
            for r in [0.25, 1.0, 3.0] {
                let v1 = log_ball_volume(NormOrder::L1, d, r).unwrap().log_v;
                let v2 = log_ball_volume(NormOrder::L2, d, r).unwrap().log_v;
                let vi = log_ball_volume(NormOrder::LInf, d, r).unwrap().log_v;
                assert!(
                    v1 <= v2 + 1e-12 && v2 <= vi + 1e-12,
                    "nesting failed d={d} r={r}"
                );

                let c = 1.7;
                let scaled = log_ball_volume(NormOrder::L2, d, c * r).unwrap().log_v;
                assert!((scaled - (d as f64 * c.ln() + v2)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn log_value_arithmetic() {
        let a = LogValue::from_linear(3.0);
        let b = LogValue::from_linear(4.0);
        assert!(((a * b).to_linear() - 12.0).abs() < 1e-12);
        assert!(((a + b).to_linear() - 7.0).abs() < 1e-12);
        assert_eq!(LogValue::ZERO + LogValue::ZERO, LogValue::ZERO);
    }
}
