//! `maxleak bound`: leakage report (JSON) plus per-step CSV.

use crate::config;
use crate::output::{assert_finite, out_path, write_atomic, Units};
use crate::{CliError, Fallback, LossPreset};
use maxleak::bounds::{total_bound, BoundReport, CaseSelector};
use maxleak::generalization::{
    expected_gen_bound, tail_bound_alpha, tail_bound_maxleak, TailBound,
};
use maxleak::hfunc::NumericMethod;
use maxleak::model::{GenQuery, TrainingSpec};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct TailJson {
    probability: f64,
    /// Raw unclamped value, capped at f64::MAX when the exponent overflows.
    raw: f64,
    exponent: f64,
}

impl From<TailBound> for TailJson {
    fn from(t: TailBound) -> Self {
        TailJson {
            probability: t.probability,
            raw: if t.raw.is_finite() { t.raw } else { f64::MAX },
            exponent: t.exponent,
        }
    }
}

#[derive(Serialize)]
struct GenJson {
    n: usize,
    threshold: f64,
    subgauss_var: f64,
    /// "inf" or the numeric order.
    alpha: String,
    expected_gen_bound_from_leakage: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_gen_bound_from_mi: Option<f64>,
    tail: TailJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_alpha: Option<TailJson>,
}

#[derive(Serialize)]
struct StepJson {
    step: usize,
    eta: f64,
    noise_family: String,
    noise_scale: f64,
    case: String,
    nats: f64,
    is_exact_h: bool,
}

#[derive(Serialize)]
struct ReportJson {
    schema_version: u32,
    units: String,
    total_leakage: f64,
    total_leakage_nats: f64,
    total_leakage_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mi_baseline_nats: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    laplace_limit_nats: Option<f64>,
    per_step: Vec<StepJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generalization: Option<GenJson>,
    spec_echo: TrainingSpec,
}

pub const SCHEMA_VERSION: u32 = 1;

pub fn run(
    config_path: &Path,
    out_dir: &Option<PathBuf>,
    units: Units,
    fallback: Option<Fallback>,
    budget: u64,
    seed: u64,
    loss: Option<LossPreset>,
) -> Result<(), CliError> {
    let resolved = config::load(config_path)?;
    let selector = match fallback {
        Some(Fallback::Numeric) => CaseSelector::AutoNumeric {
            method: NumericMethod::MonteCarlo,
            budget,
            seed,
        },
        None => CaseSelector::Auto,
    };
    let report = total_bound(&resolved.spec, selector)?;

    let mut gen_query = resolved.gen_query;
    if let (Some(LossPreset::ZeroOne), Some(q)) = (loss, gen_query.as_mut()) {
        q.subgauss_var = 0.25;
    }
    let gen_json = gen_query
        .map(|q| generalization_json(&report, &q))
        .transpose()?;

    let json = ReportJson {
        schema_version: SCHEMA_VERSION,
        units: units.label().to_string(),
        total_leakage: units.from_nats(report.total_leakage_nats),
        total_leakage_nats: report.total_leakage_nats,
        total_leakage_bits: Units::Bits.from_nats(report.total_leakage_nats),
        mi_baseline_nats: report.mi_baseline_nats,
        laplace_limit_nats: report.laplace_limit_nats,
        per_step: per_step_json(&report),
        generalization: gen_json,
        spec_echo: report.spec_echo.clone(),
    };
    let value = serde_json::to_value(&json)
        .map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
    assert_finite(&value, "report.json")?;
    let rendered = serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::Io(format!("rendering report: {e}")))?;

    write_atomic(&out_path(out_dir, "report.json"), &(rendered + "\n"))?;
    write_atomic(&out_path(out_dir, "per_step.csv"), &per_step_csv(&report))?;

    println!(
        "total leakage: {} {} over {} step(s)",
        units.from_nats(report.total_leakage_nats),
        units.label(),
        report.per_step.len()
    );
    if let Some(g) = &json.generalization {
        println!(
            "tail bound at threshold {}: {} (raw exponent {})",
            g.threshold, g.tail.probability, g.tail.exponent
        );
    }
    Ok(())
}

fn generalization_json(report: &BoundReport, q: &GenQuery) -> Result<GenJson, CliError> {
    let leak = report.total_leakage_nats;
    let tail = tail_bound_maxleak(leak, q)?;
    let tail_alpha_json = if q.alpha.is_finite() {
        Some(TailJson::from(tail_bound_alpha(leak, q.alpha, q)?))
    } else {
        None
    };
    Ok(GenJson {
        n: q.n,
        threshold: q.threshold,
        subgauss_var: q.subgauss_var,
        alpha: if q.alpha.is_finite() {
            q.alpha.to_string()
        } else {
            "inf".to_string()
        },
        expected_gen_bound_from_leakage: expected_gen_bound(leak, q)?,
        expected_gen_bound_from_mi: report
            .mi_baseline_nats
            .map(|mi| expected_gen_bound(mi, q))
            .transpose()?,
        tail: TailJson::from(tail),
        tail_alpha: tail_alpha_json,
    })
}

fn per_step_json(report: &BoundReport) -> Vec<StepJson> {
    report
        .per_step
        .iter()
        .zip(&report.spec_echo.schedule.steps)
        .map(|(term, step)| StepJson {
            step: term.step_index,
            eta: step.eta,
            noise_family: step.noise.family.label().to_string(),
            noise_scale: step.noise.scale,
            case: term.case.label().to_string(),
            nats: term.nats,
            is_exact_h: term.is_exact_h,
        })
        .collect()
}

pub fn per_step_csv(report: &BoundReport) -> String {
    let mut out = String::from("step,eta,noise_family,noise_scale,case,nats,is_exact_h\n");
    for (term, step) in report.per_step.iter().zip(&report.spec_echo.schedule.steps) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            term.step_index,
            step.eta,
            step.noise.family.label(),
            step.noise.scale,
            term.case.label(),
            term.nats,
            term.is_exact_h
        ));
    }
    out
}
