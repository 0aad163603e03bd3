//! Domain types shared by every module, and validation of experiment specs.
//!
//! All types are immutable values and safe to share across threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Norm order of the update-boundedness constraint. The closed-form bounds
/// are proved only for these three orders; general real p appears solely in
/// exploratory ball-volume computations ([`crate::special::log_ball_volume_general`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormOrder {
    L1,
    L2,
    LInf,
}

impl NormOrder {
    /// Label used in reports and CSV columns.
    pub fn label(self) -> &'static str {
        match self {
            NormOrder::L1 => "1",
            NormOrder::L2 => "2",
            NormOrder::LInf => "inf",
        }
    }
}

impl std::fmt::Display for NormOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for NormOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        match raw.as_str() {
            "1" => Ok(NormOrder::L1),
            "2" => Ok(NormOrder::L2),
            "inf" | "Inf" | "INF" | "infinity" => Ok(NormOrder::LInf),
            other => Err(serde::de::Error::custom(format!(
                "norm order must be \"1\", \"2\" or \"inf\", got {other:?}"
            ))),
        }
    }
}

/// Bound on the update direction: `||F(w, z)||_p <= L` for every (w, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateConstraint {
    pub p: NormOrder,
    /// Non-negative; L = 0 is the degenerate no-update case (zero leakage).
    pub l: f64,
}

impl UpdateConstraint {
    pub fn new(p: NormOrder, l: f64) -> Self {
        Self { p, l }
    }
}

/// The three supported per-step noise families.
///
/// Scale semantics are normalized per family:
/// Gaussian: per-coordinate standard deviation sigma.
/// Laplace: rate lambda with density (lambda/2) exp(-lambda |x|).
/// Uniform: half-width a of U(-a, a).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    #[serde(alias = "gauss", alias = "normal")]
    Gaussian,
    Laplace,
    Uniform,
}

impl NoiseFamily {
    pub fn label(self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Laplace => "laplace",
            NoiseFamily::Uniform => "uniform",
        }
    }
}

impl std::fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A per-step additive-noise distribution: i.i.d. coordinates except that the
/// isotropic Gaussian is also a product of identical marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    /// Strictly positive; meaning depends on the family (see [`NoiseFamily`]).
    pub scale: f64,
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            family: NoiseFamily::Gaussian,
            scale: sigma,
        }
    }

    pub fn laplace(lambda: f64) -> Self {
        Self {
            family: NoiseFamily::Laplace,
            scale: lambda,
        }
    }

    pub fn uniform(half_width: f64) -> Self {
        Self {
            family: NoiseFamily::Uniform,
            scale: half_width,
        }
    }
}

/// One training step: step size and the noise added after the update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub eta: f64,
    pub noise: NoiseSpec,
}

/// Ordered per-step schedule; different steps may use different noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub steps: Vec<Step>,
}

impl StepSchedule {
    /// `t` identical steps.
    pub fn uniform(t: usize, eta: f64, noise: NoiseSpec) -> Self {
        Self {
            steps: vec![Step { eta, noise }; t],
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Full experiment specification for the leakage accountant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSpec {
    /// Hypothesis dimension, >= 1.
    pub d: usize,
    pub constraint: UpdateConstraint,
    pub schedule: StepSchedule,
}

/// Inputs of the generalization bounds (Eqs. of the tail/expected forms).
///
/// `threshold` is the deviation the tail bound is evaluated at; `alpha` may
/// be `f64::INFINITY` for the maximal-leakage limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenQuery {
    pub n: usize,
    pub subgauss_var: f64,
    pub threshold: f64,
    pub alpha: f64,
}

impl GenQuery {
    pub fn maxleak(n: usize, subgauss_var: f64, threshold: f64) -> Self {
        Self {
            n,
            subgauss_var,
            threshold,
            alpha: f64::INFINITY,
        }
    }
}

/// One violated invariant of a [`TrainingSpec`]; each variant names exactly
/// one field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecViolation {
    #[error("d: dimension must be >= 1, got 0")]
    ZeroDimension,

    #[error("schedule.steps: schedule must contain at least one step")]
    EmptySchedule,

    #[error("schedule.steps[{step}].eta: step size must be > 0, got {eta}")]
    NonPositiveEta { step: usize, eta: f64 },

    #[error("schedule.steps[{step}].noise.scale: noise scale must be > 0, got {scale}")]
    NonPositiveScale { step: usize, scale: f64 },

    #[error("constraint.l: update bound must be >= 0 and finite, got {l}")]
    NegativeL { l: f64 },
}

/// Returns the spec unchanged when every type invariant holds, otherwise the
/// full list of violations. Idempotent: validating a validated spec is a
/// no-op.
pub fn validate_spec(spec: &TrainingSpec) -> Result<&TrainingSpec, Vec<SpecViolation>> {
    let mut violations = Vec::new();
    if spec.d == 0 {
        violations.push(SpecViolation::ZeroDimension);
    }
    if !(spec.constraint.l >= 0.0) || !spec.constraint.l.is_finite() {
        violations.push(SpecViolation::NegativeL {
            l: spec.constraint.l,
        });
    }
    if spec.schedule.is_empty() {
        violations.push(SpecViolation::EmptySchedule);
    }
    for (i, step) in spec.schedule.steps.iter().enumerate() {
        if !(step.eta > 0.0) || !step.eta.is_finite() {
            violations.push(SpecViolation::NonPositiveEta {
                step: i,
                eta: step.eta,
            });
        }
        if !(step.noise.scale > 0.0) || !step.noise.scale.is_finite() {
            violations.push(SpecViolation::NonPositiveScale {
                step: i,
                scale: step.noise.scale,
            });
        }
    }
    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(violations)
    }
}
