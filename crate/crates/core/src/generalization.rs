//! Generalization guarantees from information bounds, and their inversion
//! for sample-complexity queries.
//!
//! The expected-value bound takes a mutual-information value; since
//! information measures of the Sibson family are non-decreasing in their
//! order, a maximal-leakage bound may always be passed in its place. The
//! tail bounds clamp to 1 for display but always carry their raw exponent;
//! a vacuous bound is data.

use crate::model::GenQuery;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A tail probability bound with its raw, unclamped form:
/// bound = 2 exp(exponent), probability = min(1, bound).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    /// Clamped to [0, 1] for display.
    pub probability: f64,
    /// 2 exp(exponent); may exceed 1 (vacuous) or overflow to infinity.
    pub raw: f64,
    /// The exponent of the raw bound: info_nats - n t^2 / (2 sigma^2),
    /// scaled by (alpha-1)/alpha for finite-order bounds.
    pub exponent: f64,
}

impl TailBound {
    fn from_exponent(exponent: f64) -> Self {
        let raw = 2.0 * exponent.exp();
        TailBound {
            probability: raw.min(1.0),
            raw,
            exponent,
        }
    }

    pub fn is_vacuous(&self) -> bool {
        self.raw >= 1.0
    }
}

/// Expected-generalization bound sqrt(2 sigma^2 I / n).
pub fn expected_gen_bound(mi_nats: f64, q: &GenQuery) -> Result<f64> {
    check_query(q)?;
    if !(mi_nats >= 0.0) {
        return Err(Error::Domain(format!(
            "information bound must be >= 0, got {mi_nats}"
        )));
    }
    Ok((2.0 * q.subgauss_var * mi_nats / q.n as f64).sqrt())
}

/// Maximal-leakage tail bound: 2 exp(-(n t^2/(2 sigma^2) - leak)).
pub fn tail_bound_maxleak(leak_nats: f64, q: &GenQuery) -> Result<TailBound> {
    check_query(q)?;
    if !(leak_nats >= 0.0) {
        return Err(Error::Domain(format!(
            "leakage must be >= 0, got {leak_nats}"
        )));
    }
    let budget = q.n as f64 * q.threshold * q.threshold / (2.0 * q.subgauss_var);
    Ok(TailBound::from_exponent(leak_nats - budget))
}

/// Order-alpha tail bound: 2 exp(-((alpha-1)/alpha)(n t^2/(2 sigma^2) - I)).
///
/// `info_nats` must upper-bound the order-alpha information; a maximal-
/// leakage bound is always valid here. `alpha = inf` reproduces
/// [`tail_bound_maxleak`] exactly.
pub fn tail_bound_alpha(info_nats: f64, alpha: f64, q: &GenQuery) -> Result<TailBound> {
    check_query(q)?;
    if !(info_nats >= 0.0) {
        return Err(Error::Domain(format!(
            "information bound must be >= 0, got {info_nats}"
        )));
    }
    if !(alpha > 1.0) {
        return Err(Error::Domain(format!("alpha must be > 1, got {alpha}")));
    }
    let factor = if alpha.is_infinite() {
        1.0
    } else {
        (alpha - 1.0) / alpha
    };
    let budget = q.n as f64 * q.threshold * q.threshold / (2.0 * q.subgauss_var);
    Ok(TailBound::from_exponent(factor * (info_nats - budget)))
}

/// Smallest n with tail_bound_maxleak <= target_prob:
/// ceil((2 sigma^2 / t^2)(leak + ln(2/target))), nudged to exact minimality
/// against the forward evaluation.
pub fn required_n(
    leak_nats: f64,
    target_prob: f64,
    threshold: f64,
    subgauss_var: f64,
) -> Result<u64> {
    if !(leak_nats >= 0.0) {
        return Err(Error::Domain(format!(
            "leakage must be >= 0, got {leak_nats}"
        )));
    }
    if !(target_prob > 0.0 && target_prob < 1.0) {
        return Err(Error::Domain(format!(
            "target probability must be in (0,1), got {target_prob}"
        )));
    }
    if !(threshold > 0.0) || !(subgauss_var > 0.0) {
        return Err(Error::Domain(
            "threshold and subgauss_var must be > 0".into(),
        ));
    }
    let raw =
        (2.0 * subgauss_var / (threshold * threshold)) * (leak_nats + (2.0 / target_prob).ln());
    let mut n = raw.ceil().max(1.0) as u64;
    let tail = |n: u64| {
        tail_bound_maxleak(
            leak_nats,
            &GenQuery::maxleak(n as usize, subgauss_var, threshold),
        )
        .map(|b| b.probability)
    };
    // Guard the float boundary in both directions.
    while tail(n)? > target_prob {
        n += 1;
    }
    while n > 1 && tail(n - 1)? <= target_prob {
        n -= 1;
    }
    Ok(n)
}

fn check_query(q: &GenQuery) -> Result<()> {
    if q.n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(q.subgauss_var > 0.0) {
        return Err(Error::Domain(format!(
            "subgauss_var must be > 0, got {}",
            q.subgauss_var
        )));
    }
    if !(q.threshold > 0.0) {
        return Err(Error::Domain(format!(
            "threshold must be > 0, got {}",
            q.threshold
        )));
    }
    Ok(())
}
