//! `maxleak optimize-noise`: the variance-optimal noise and the family
//! ranking at the same budget.

use crate::output::{assert_finite, out_path, write_atomic};
use crate::CliError;
use maxleak::design::{f0_floor, optimal_noise, rank_families_for_linf};
use maxleak::noise::log_f0_zero;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Serialize)]
struct RankedJson {
    family: String,
    scale: f64,
    f0: f64,
    per_step_nats: f64,
}

#[derive(Serialize)]
struct OptimizeJson {
    schema_version: u32,
    variance_budget: f64,
    optimal_family: String,
    optimal_scale: f64,
    f0: f64,
    f0_floor: f64,
    d: usize,
    eta: f64,
    #[serde(rename = "L")]
    l: f64,
    ranking: Vec<RankedJson>,
}

pub fn run(
    budget: f64,
    d: usize,
    eta: f64,
    l: f64,
    out_dir: &Option<PathBuf>,
) -> Result<(), CliError> {
    let spec = optimal_noise(budget)?;
    let floor = f0_floor(budget)?;
    let ranking = rank_families_for_linf(d, eta, l, budget)?;

    let json = OptimizeJson {
        schema_version: crate::commands::bound::SCHEMA_VERSION,
        variance_budget: budget,
        optimal_family: spec.family.label().to_string(),
        optimal_scale: spec.scale,
        f0: log_f0_zero(spec).exp(),
        f0_floor: floor,
        d,
        eta,
        l,
        ranking: ranking
            .iter()
            .map(|(noise, nats)| RankedJson {
                family: noise.family.label().to_string(),
                scale: noise.scale,
                f0: log_f0_zero(*noise).exp(),
                per_step_nats: *nats,
            })
            .collect(),
    };
    let value =
        serde_json::to_value(&json).map_err(|e| CliError::Io(format!("serializing: {e}")))?;
    assert_finite(&value, "optimize_noise.json")?;
    let rendered = serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::Io(format!("rendering: {e}")))?
        + "\n";

    if out_dir.is_some() {
        write_atomic(&out_path(out_dir, "optimize_noise.json"), &rendered)?;
    }
    print!("{rendered}");
    Ok(())
}
