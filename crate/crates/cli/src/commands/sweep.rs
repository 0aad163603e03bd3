//! `maxleak sweep`: one row per grid point with the total bound, the MI
//! baseline when applicable, and the tail bound.

use crate::config::{self, Resolved};
use crate::output::{out_path, write_atomic};
use crate::{CliError, Fallback, SweepAxis};
use maxleak::bounds::{total_bound, CaseSelector};
use maxleak::generalization::tail_bound_maxleak;
use maxleak::hfunc::NumericMethod;
use maxleak::model::{NormOrder, TrainingSpec};
use std::path::{Path, PathBuf};

fn parse_range(spec: Option<&str>, axis: SweepAxis) -> Result<Vec<f64>, CliError> {
    let default = match axis {
        SweepAxis::D => "1:50:25",
        SweepAxis::Sigma => "0.1:10:25",
        SweepAxis::Eta => "0.01:1:25",
        SweepAxis::P => return Ok(vec![]),
    };
    let spec = spec.unwrap_or(default);
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "bad range {spec:?}; expected lo:hi:steps"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad range lo in {spec:?}")))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad range hi in {spec:?}")))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad range steps in {spec:?}")))?;
    if steps < 2 || !(hi > lo) {
        return Err(CliError::Usage(format!(
            "bad range {spec:?}; need hi > lo and steps >= 2"
        )));
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn spec_at(base: &Resolved, axis: SweepAxis, value: f64) -> TrainingSpec {
    let mut spec = base.spec.clone();
    match axis {
        SweepAxis::D => spec.d = value.round().max(1.0) as usize,
        SweepAxis::Sigma => {
            for step in &mut spec.schedule.steps {
                step.noise.scale = value;
            }
        }
        SweepAxis::Eta => {
            for step in &mut spec.schedule.steps {
                step.eta = value;
            }
        }
        SweepAxis::P => unreachable!("p axis handled separately"),
    }
    spec
}

pub fn run(
    config_path: &Path,
    axis: SweepAxis,
    range: Option<&str>,
    out_dir: &Option<PathBuf>,
    fallback: Option<Fallback>,
    budget: u64,
    seed: u64,
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

    let mut csv =
        String::from("axis,value,total_nats,mi_baseline_nats,tail_probability,tail_exponent\n");
    let mut emit = |axis_label: &str,
                    value_label: &str,
                    spec: &TrainingSpec,
                    sel: CaseSelector|
     -> Result<(), CliError> {
        let report = total_bound(spec, sel)?;
        let (tail_p, tail_e) = match &resolved.gen_query {
            Some(q) => {
                let t = tail_bound_maxleak(report.total_leakage_nats, q)?;
                (t.probability.to_string(), t.exponent.to_string())
            }
            None => (String::new(), String::new()),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            axis_label,
            value_label,
            report.total_leakage_nats,
            report
                .mi_baseline_nats
                .map(|v| v.to_string())
                .unwrap_or_default(),
            tail_p,
            tail_e,
        ));
        Ok(())
    };

    match axis {
        SweepAxis::P => {
            // Cross-norm comparison goes through the numeric route so all
            // three points measure the same object.
            for p in [NormOrder::L1, NormOrder::L2, NormOrder::LInf] {
                let mut spec = resolved.spec.clone();
                spec.constraint.p = p;
                let sel = CaseSelector::Numeric {
                    method: if spec.d <= 2 {
                        NumericMethod::Quadrature
                    } else {
                        NumericMethod::MonteCarlo
                    },
                    budget,
                    seed,
                };
                emit("p", p.label(), &spec, sel)?;
            }
        }
        _ => {
            for value in parse_range(range, axis)? {
                let spec = spec_at(&resolved, axis, value);
                let label = match axis {
                    SweepAxis::D => (value.round() as usize).to_string(),
                    _ => value.to_string(),
                };
                let axis_label = match axis {
                    SweepAxis::D => "d",
                    SweepAxis::Sigma => "sigma",
                    SweepAxis::Eta => "eta",
                    SweepAxis::P => unreachable!(),
                };
                emit(axis_label, &label, &spec, selector)?;
            }
        }
    }

    write_atomic(&out_path(out_dir, "sweep.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}
