//! TOML configuration schema and its translation into core types.
//!
//! ```toml
//! [algorithm]        # d, p, L, T
//! [noise]            # family + scale, or variance_budget (auto-optimal)
//! [schedule]         # eta, optional per-step overrides
//! [generalization]   # n, threshold, subgauss_var | loss = "zero-one", alpha
//! [simulation]       # task, trials, data_seed, clip_b
//! ```

use maxleak::design::optimal_noise;
use maxleak::model::{
    GenQuery, NoiseFamily, NoiseSpec, NormOrder, Step, StepSchedule, TrainingSpec, UpdateConstraint,
};
use maxleak::noise::spec_with_variance;
use maxleak::sim::{TaskKind, TaskSpec};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub algorithm: AlgorithmSection,
    pub noise: NoiseSection,
    pub schedule: ScheduleSection,
    pub generalization: Option<GeneralizationSection>,
    pub simulation: Option<SimulationSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub d: usize,
    pub p: NormOrder,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "T")]
    pub t: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub family: Option<NoiseFamily>,
    pub scale: Option<f64>,
    /// With no family: pick the variance-optimal noise (uniform). With a
    /// family: set its scale from the variance.
    pub variance_budget: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub eta: f64,
    /// Optional per-step overrides; steps beyond the list repeat the base
    /// (eta, noise).
    pub steps: Option<Vec<StepOverride>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepOverride {
    pub eta: Option<f64>,
    pub family: Option<NoiseFamily>,
    pub scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralizationSection {
    pub n: usize,
    pub threshold: f64,
    pub subgauss_var: Option<f64>,
    /// `"zero-one"` sets subgauss_var = 0.25.
    pub loss: Option<String>,
    /// A number > 1; omitted or `"inf"` means the maximal-leakage limit.
    pub alpha: Option<toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub task: TaskKind,
    pub trials: u64,
    #[serde(default = "default_data_seed")]
    pub data_seed: u64,
    #[serde(default = "default_clip_b")]
    pub clip_b: f64,
}

fn default_data_seed() -> u64 {
    2024
}

fn default_clip_b() -> f64 {
    0.8
}

/// Everything a command needs, resolved from the file.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: TrainingSpec,
    pub gen_query: Option<GenQuery>,
    pub task: Option<TaskSpec>,
    pub trials: Option<u64>,
}

pub fn load(path: &std::path::Path) -> Result<Resolved, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: ConfigFile =
        toml::from_str(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    resolve(file)
}

pub fn resolve(file: ConfigFile) -> Result<Resolved, CliError> {
    let base_noise = resolve_noise(&file.noise)?;
    let t = file.algorithm.t;
    if t == 0 {
        return Err(CliError::Config("algorithm.T: must be >= 1".into()));
    }
    let mut steps = Vec::with_capacity(t);
    let overrides = file.schedule.steps.as_deref().unwrap_or(&[]);
    for i in 0..t {
        let over = overrides.get(i);
        let eta = over.and_then(|o| o.eta).unwrap_or(file.schedule.eta);
        let noise = match over {
            Some(o) if o.family.is_some() || o.scale.is_some() => NoiseSpec {
                family: o.family.unwrap_or(base_noise.family),
                scale: o.scale.unwrap_or(base_noise.scale),
            },
            _ => base_noise,
        };
        steps.push(Step { eta, noise });
    }
    let spec = TrainingSpec {
        d: file.algorithm.d,
        constraint: UpdateConstraint::new(file.algorithm.p, file.algorithm.l),
        schedule: StepSchedule { steps },
    };
    maxleak::model::validate_spec(&spec).map_err(|errs| {
        CliError::Config(
            errs.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;

    let gen_query = file
        .generalization
        .as_ref()
        .map(resolve_generalization)
        .transpose()?;

    let task =
        file.simulation
            .as_ref()
            .map(|s| -> Result<TaskSpec, CliError> {
                let n = file.generalization.as_ref().map(|g| g.n).ok_or_else(|| {
                    CliError::Config("simulation requires [generalization].n".into())
                })?;
                Ok(TaskSpec {
                    kind: s.task,
                    d: file.algorithm.d,
                    n,
                    data_seed: s.data_seed,
                    clip_b: s.clip_b,
                })
            });
    let task = task.transpose()?;
    let trials = file.simulation.as_ref().map(|s| s.trials);

    Ok(Resolved {
        spec,
        gen_query,
        task,
        trials,
    })
}

fn resolve_noise(section: &NoiseSection) -> Result<NoiseSpec, CliError> {
    match (section.family, section.scale, section.variance_budget) {
        (Some(family), Some(scale), None) => Ok(NoiseSpec { family, scale }),
        (Some(family), None, Some(v)) => spec_with_variance(family, v)
            .map_err(|e| CliError::Config(format!("noise.variance_budget: {e}"))),
        (None, None, Some(v)) => {
            optimal_noise(v).map_err(|e| CliError::Config(format!("noise.variance_budget: {e}")))
        }
        (Some(_), Some(_), Some(_)) => Err(CliError::Config(
            "noise: give either scale or variance_budget, not both".into(),
        )),
        _ => Err(CliError::Config(
            "noise: needs family+scale, family+variance_budget, or variance_budget alone".into(),
        )),
    }
}

fn resolve_generalization(g: &GeneralizationSection) -> Result<GenQuery, CliError> {
    let subgauss_var = match (&g.loss, g.subgauss_var) {
        (Some(name), None) if name == "zero-one" => 0.25,
        (Some(name), None) => {
            return Err(CliError::Config(format!(
                "generalization.loss: unknown preset {name:?} (only \"zero-one\")"
            )))
        }
        (None, Some(v)) => v,
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "generalization: give subgauss_var or loss preset, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "generalization: needs subgauss_var or loss = \"zero-one\"".into(),
            ))
        }
    };
    let alpha = match &g.alpha {
        None => f64::INFINITY,
        Some(toml::Value::String(s)) if s == "inf" => f64::INFINITY,
        Some(toml::Value::Float(v)) => *v,
        Some(toml::Value::Integer(v)) => *v as f64,
        Some(other) => {
            return Err(CliError::Config(format!(
                "generalization.alpha: expected a number > 1 or \"inf\", got {other}"
            )))
        }
    };
    if !(alpha > 1.0) {
        return Err(CliError::Config(format!(
            "generalization.alpha: must be > 1, got {alpha}"
        )));
    }
    Ok(GenQuery {
        n: g.n,
        subgauss_var,
        threshold: g.threshold,
        alpha,
    })
}
