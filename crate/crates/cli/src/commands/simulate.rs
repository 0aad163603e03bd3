//! `maxleak simulate`: the training-tail experiment against the accountant
//! bound. Emits per-trial CSV plus a JSON summary with a verdict.

use crate::config;
use crate::output::{assert_finite, out_path, write_atomic};
use crate::CliError;
use maxleak::bounds::{total_bound, CaseSelector};
use maxleak::generalization::tail_bound_maxleak;
use maxleak::sim::{estimate_gen_tail, trials_to_csv};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct SummaryJson {
    schema_version: u32,
    trials: u64,
    threshold: f64,
    exceed_count: u64,
    empirical_prob: f64,
    wilson_low: f64,
    wilson_high: f64,
    accountant_total_nats: f64,
    bound_probability: f64,
    bound_raw: f64,
    bound_exponent: f64,
    /// VALID: empirical tail consistent with a non-vacuous bound.
    /// VACUOUS: the raw bound is >= 1 (still an upper bound, clamped).
    /// VIOLATION: the Wilson lower limit exceeds the clamped bound (a
    /// statistically significant breach).
    verdict: String,
}

pub fn run(
    config_path: &Path,
    trials_override: Option<u64>,
    seed: u64,
    out_dir: &Option<PathBuf>,
) -> Result<(), CliError> {
    let resolved = config::load(config_path)?;
    let task = resolved
        .task
        .ok_or_else(|| CliError::Config("simulate requires a [simulation] section".into()))?;
    let gen_query = resolved
        .gen_query
        .ok_or_else(|| CliError::Config("simulate requires a [generalization] section".into()))?;
    let trials = trials_override
        .or(resolved.trials)
        .ok_or_else(|| CliError::Config("simulation.trials missing".into()))?;
    if trials < 100 {
        return Err(CliError::Config(format!(
            "trials must be >= 100, got {trials}"
        )));
    }

    // The tail bound uses the task's own sub-Gaussian parameter B^2/4.
    let mut query = gen_query;
    query.subgauss_var = task.subgauss_var();
    let report = total_bound(&resolved.spec, CaseSelector::Auto)?;
    let tail = tail_bound_maxleak(report.total_leakage_nats, &query)?;

    let (estimate, outcomes) =
        estimate_gen_tail(&task, &resolved.spec, query.threshold, trials, seed)?;

    let verdict = if estimate.wilson_low > tail.probability {
        "VIOLATION"
    } else if tail.is_vacuous() {
        "VACUOUS"
    } else {
        "VALID"
    };

    let summary = SummaryJson {
        schema_version: crate::commands::bound::SCHEMA_VERSION,
        trials,
        threshold: query.threshold,
        exceed_count: estimate.exceed_count,
        empirical_prob: estimate.empirical_prob,
        wilson_low: estimate.wilson_low,
        wilson_high: estimate.wilson_high,
        accountant_total_nats: report.total_leakage_nats,
        bound_probability: tail.probability,
        bound_raw: if tail.raw.is_finite() {
            tail.raw
        } else {
            f64::MAX
        },
        bound_exponent: tail.exponent,
        verdict: verdict.to_string(),
    };
    let value = serde_json::to_value(&summary)
        .map_err(|e| CliError::Io(format!("serializing summary: {e}")))?;
    assert_finite(&value, "summary.json")?;
    let rendered = serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::Io(format!("rendering summary: {e}")))?;

    write_atomic(&out_path(out_dir, "trials.csv"), &trials_to_csv(&outcomes))?;
    write_atomic(&out_path(out_dir, "summary.json"), &(rendered + "\n"))?;

    println!(
        "empirical tail {}/{} = {} (Wilson [{}, {}]); bound {}; verdict {verdict}",
        estimate.exceed_count,
        trials,
        estimate.empirical_prob,
        estimate.wilson_low,
        estimate.wilson_high,
        tail.probability
    );
    Ok(())
}
