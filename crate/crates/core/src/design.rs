//! Optimal noise under a variance budget.
//!
//! For an Linf-bounded update the per-step bound depends on the marginal
//! noise density only through its mode f0(0), so designing the noise reduces
//! to minimizing f0(0) subject to the variance constraint. Among symmetric
//! densities that are non-increasing away from 0 with variance at most
//! sigma^2, the mode is floored at 1/(2 sqrt(3) sigma), and the uniform
//! distribution U(-sigma sqrt3, sigma sqrt3) meets the floor.

use crate::model::{NoiseFamily, NoiseSpec};
use crate::noise;
use crate::{Error, Result};

/// The variance-budget minimizer of f0(0): uniform with half-width
/// sqrt(3 * budget).
pub fn optimal_noise(variance_budget: f64) -> Result<NoiseSpec> {
    check_budget(variance_budget)?;
    Ok(NoiseSpec::uniform((3.0 * variance_budget).sqrt()))
}

/// The mode floor 1/(2 sqrt(3 * budget)) that any admissible density obeys.
pub fn f0_floor(variance_budget: f64) -> Result<f64> {
    check_budget(variance_budget)?;
    Ok(1.0 / (2.0 * (3.0 * variance_budget).sqrt()))
}

fn check_budget(variance_budget: f64) -> Result<()> {
    if !(variance_budget > 0.0) || !variance_budget.is_finite() {
        return Err(Error::Domain(format!(
            "variance budget must be > 0, got {variance_budget}"
        )));
    }
    Ok(())
}

/// Per-step Linf bound d ln(1 + 2 eta L f0(0)) for each family at the same
/// per-coordinate variance, sorted ascending. Uniform is always first: the
/// ordering is determined by f0(0) alone.
pub fn rank_families_for_linf(
    d: usize,
    eta: f64,
    l: f64,
    variance_budget: f64,
) -> Result<Vec<(NoiseSpec, f64)>> {
    check_budget(variance_budget)?;
    if d == 0 || !(eta > 0.0) || !(l >= 0.0) {
        return Err(Error::Domain(
            "ranking requires d >= 1, eta > 0, L >= 0".into(),
        ));
    }
    let mut ranked: Vec<(NoiseSpec, f64)> = [
        NoiseFamily::Uniform,
        NoiseFamily::Gaussian,
        NoiseFamily::Laplace,
    ]
    .into_iter()
    .map(|family| {
        let spec = noise::spec_with_variance(family, variance_budget)?;
        let f0 = noise::log_f0_zero(spec).exp();
        Ok((spec, d as f64 * (2.0 * eta * l * f0).ln_1p()))
    })
    .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    Ok(ranked)
}

/// Witness densities for the empirical mode-floor check: all are symmetric,
/// non-increasing on [0, inf), and saturate the variance budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateFamily {
    Uniform,
    Gaussian,
    Laplace,
    /// Symmetric triangular density on [-c, c] with c = sqrt(6 v).
    Triangular,
    /// Equal mixture of two centered uniforms with half-widths
    /// 0.5 sqrt(3 v) and sqrt(5.25 v).
    UniformMixture,
}

impl CandidateFamily {
    pub const ALL: [CandidateFamily; 5] = [
        CandidateFamily::Uniform,
        CandidateFamily::Gaussian,
        CandidateFamily::Laplace,
        CandidateFamily::Triangular,
        CandidateFamily::UniformMixture,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CandidateFamily::Uniform => "uniform",
            CandidateFamily::Gaussian => "gaussian",
            CandidateFamily::Laplace => "laplace",
            CandidateFamily::Triangular => "triangular",
            CandidateFamily::UniformMixture => "uniform-mixture",
        }
    }

    /// f(0) when the candidate is tuned to variance exactly `v`.
    pub fn f0_at_variance(self, v: f64) -> Result<f64> {
        check_budget(v)?;
        Ok(match self {
            CandidateFamily::Uniform => 1.0 / (2.0 * (3.0 * v).sqrt()),
            CandidateFamily::Gaussian => 1.0 / (2.0 * std::f64::consts::PI * v).sqrt(),
            CandidateFamily::Laplace => 1.0 / (2.0 * v).sqrt(),
            CandidateFamily::Triangular => 1.0 / (6.0 * v).sqrt(),
            CandidateFamily::UniformMixture => {
                let a1 = 0.5 * (3.0 * v).sqrt();
                let a2 = (6.0 * v - a1 * a1).sqrt();
                0.5 * (1.0 / (2.0 * a1) + 1.0 / (2.0 * a2))
            }
        })
    }

    /// Variance of the candidate as parameterized by `f0_at_variance`:
    /// identically `v`, verified in tests from the raw parameterization.
    pub fn variance(self, v: f64) -> Result<f64> {
        check_budget(v)?;
        Ok(match self {
            CandidateFamily::Uniform
            | CandidateFamily::Gaussian
            | CandidateFamily::Laplace
            | CandidateFamily::Triangular => v,
            CandidateFamily::UniformMixture => {
                let a1 = 0.5 * (3.0 * v).sqrt();
                let a2 = (6.0 * v - a1 * a1).sqrt();
                0.5 * (a1 * a1 / 3.0) + 0.5 * (a2 * a2 / 3.0)
            }
        })
    }
}
