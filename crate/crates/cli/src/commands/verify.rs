//! `maxleak verify`: oracle-equivalence, dominance, and noise-design suites.
//! Failures are data: every case becomes a CSV row with a verdict, and the
//! exit code is 2 iff any row fails.

use crate::output::{out_path, write_atomic};
use crate::CliError;
use maxleak::design::{f0_floor, rank_families_for_linf, CandidateFamily};
use maxleak::hfunc::{
    h_closed_l1_laplace, h_closed_l2_gaussian, h_closed_linf_product, h_numeric, HQuery,
    NumericMethod,
};
use maxleak::model::{NoiseFamily, NoiseSpec, NormOrder, UpdateConstraint};
use maxleak::noise::derive_rng;
use maxleak::oracle::{bound_gap_report, StepShiftSet};
use rand::Rng;
use std::path::PathBuf;

struct Row {
    case: String,
    closed_form: f64,
    oracle: f64,
    std_err: f64,
    pass: bool,
}

impl Row {
    fn render(&self) -> String {
        format!(
            "{},{},{},{},{}\n",
            self.case,
            self.closed_form,
            self.oracle,
            self.std_err,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

pub fn run(
    suite: &str,
    d_range: &str,
    dim: usize,
    grid: usize,
    budget: u64,
    seed: u64,
    out_dir: &Option<PathBuf>,
) -> Result<(), CliError> {
    let mut rows = Vec::new();
    match suite {
        "h-closed" => suite_h_closed(d_range, budget, seed, &mut rows)?,
        "dominance" => suite_dominance(dim, grid, seed, &mut rows)?,
        "optimal-noise" => suite_optimal_noise(&mut rows)?,
        "all" => {
            suite_h_closed(d_range, budget, seed, &mut rows)?;
            suite_dominance(dim, grid, seed, &mut rows)?;
            suite_optimal_noise(&mut rows)?;
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown suite {other:?}; expected h-closed, dominance, optimal-noise or all"
            )))
        }
    }

    let mut csv = String::from("case,closed_form,oracle,std_err,verdict\n");
    let mut failures = 0;
    for row in &rows {
        csv.push_str(&row.render());
        if !row.pass {
            failures += 1;
        }
    }
    print!("{csv}");
    if out_dir.is_some() {
        write_atomic(&out_path(out_dir, "verify.csv"), &csv)?;
    }
    println!("{} case(s), {} failure(s)", rows.len(), failures);
    if failures > 0 {
        return Err(CliError::VerifyFailed(failures));
    }
    Ok(())
}

fn parse_d_range(spec: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = spec.split("..").collect();
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("bad d range {spec:?}; expected e.g. 1..3")))
    };
    match parts.as_slice() {
        [single] => {
            let v = parse(single)?;
            Ok((v, v))
        }
        [lo, hi] => Ok((parse(lo)?, parse(hi)?)),
        _ => Err(CliError::Usage(format!("bad d range {spec:?}"))),
    }
}

/// Closed form vs numerical oracle for every exactly solvable pair.
fn suite_h_closed(
    d_range: &str,
    budget: u64,
    seed: u64,
    rows: &mut Vec<Row>,
) -> Result<(), CliError> {
    let (d_lo, d_hi) = parse_d_range(d_range)?;
    if d_lo < 1 || d_hi < d_lo {
        return Err(CliError::Usage(format!("bad d range {d_range:?}")));
    }
    type Closed = fn(&HQuery) -> maxleak::Result<maxleak::special::LogValue>;
    let unit_sigma = 2.0f64.sqrt();
    let cases: Vec<(NormOrder, NoiseSpec, Closed, &str)> = vec![
        (
            NormOrder::L2,
            NoiseSpec::gaussian(1.0),
            h_closed_l2_gaussian,
            "h-closed/l2-gaussian",
        ),
        (
            NormOrder::LInf,
            NoiseSpec::gaussian(1.0),
            h_closed_linf_product,
            "h-closed/linf-gaussian",
        ),
        (
            NormOrder::LInf,
            NoiseSpec::laplace(unit_sigma),
            h_closed_linf_product,
            "h-closed/linf-laplace",
        ),
        (
            NormOrder::LInf,
            NoiseSpec::uniform(3.0f64.sqrt()),
            h_closed_linf_product,
            "h-closed/linf-uniform",
        ),
        (
            NormOrder::L1,
            NoiseSpec::laplace(unit_sigma),
            h_closed_l1_laplace,
            "h-closed/l1-laplace",
        ),
    ];
    for (p, noise, closed, label) in &cases {
        for d in d_lo..=d_hi {
            for r in [0.1, 0.5, 1.0, 2.0] {
                let q = HQuery::new(d, *p, *noise, r);
                let reference = closed(&q).map_err(CliError::from)?.log_v;
                let est = if d <= 2 {
                    h_numeric(&q, NumericMethod::Quadrature, budget, seed)
                } else {
                    h_numeric(&q, NumericMethod::MonteCarlo, budget.max(1_000_000), seed)
                }
                .map_err(CliError::from)?;
                let tol = (3.0 * est.std_err).max(1e-6);
                rows.push(Row {
                    case: format!("{label}/d{d}/r{r}"),
                    closed_form: reference,
                    oracle: est.log_h,
                    std_err: est.std_err,
                    pass: (est.log_h - reference).abs() <= tol,
                });
            }
        }
    }
    Ok(())
}

/// Random shift sets: every closed-form step bound must dominate the exact
/// single-step leakage.
fn suite_dominance(
    dim: usize,
    grid: usize,
    seed: u64,
    rows: &mut Vec<Row>,
) -> Result<(), CliError> {
    if dim == 0 || dim > 2 {
        return Err(CliError::Usage(format!(
            "dominance dim must be 1 or 2, got {dim}"
        )));
    }
    let eta = 0.5;
    let configs = [
        (NormOrder::L2, NoiseSpec::gaussian(1.0)),
        (NormOrder::L1, NoiseSpec::laplace(1.0)),
        (NormOrder::LInf, NoiseSpec::uniform(1.0)),
    ];
    let mut rng = derive_rng(seed, &[0xd0]);
    for (p, noise) in configs {
        for m in [2usize, 5] {
            for i in 0..grid {
                let shifts: Vec<Vec<f64>> = (0..m)
                    .map(|_| sample_in_ball(p, dim, eta, &mut rng))
                    .collect();
                let set = StepShiftSet::new(shifts, noise).map_err(CliError::from)?;
                let report = bound_gap_report(&set, UpdateConstraint::new(p, 1.0), eta)
                    .map_err(CliError::from)?;
                rows.push(Row {
                    case: format!("dominance/{}-p{}/m{m}/{i}", noise.family, p),
                    closed_form: report.bound_nats,
                    oracle: report.exact_nats,
                    std_err: report.std_err,
                    pass: report.gap >= -(3.0 * report.std_err),
                });
            }
        }
    }
    Ok(())
}

fn sample_in_ball<R: Rng>(p: NormOrder, d: usize, r: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d)
            .map(|_| r * 2.0 * (rng.random::<f64>() - 0.5))
            .collect();
        let ok = match p {
            NormOrder::L1 => v.iter().map(|x| x.abs()).sum::<f64>() <= r,
            NormOrder::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt() <= r,
            NormOrder::LInf => true,
        };
        if ok {
            return v;
        }
    }
}

/// The mode floor over the candidate grid, and the family ranking.
fn suite_optimal_noise(rows: &mut Vec<Row>) -> Result<(), CliError> {
    for budget in [0.25, 1.0, 4.0] {
        let floor = f0_floor(budget).map_err(CliError::from)?;
        for family in CandidateFamily::ALL {
            let f0 = family.f0_at_variance(budget).map_err(CliError::from)?;
            let pass = if family == CandidateFamily::Uniform {
                (f0 - floor).abs() < 1e-12
            } else {
                f0 > floor
            };
            rows.push(Row {
                case: format!("optimal-noise/floor/{}/v{budget}", family.label()),
                closed_form: floor,
                oracle: f0,
                std_err: 0.0,
                pass,
            });
        }
        let ranked = rank_families_for_linf(10, 0.1, 1.0, budget).map_err(CliError::from)?;
        rows.push(Row {
            case: format!("optimal-noise/rank-first-uniform/v{budget}"),
            closed_form: ranked[0].1,
            oracle: ranked[1].1.min(ranked[2].1),
            std_err: 0.0,
            pass: ranked[0].0.family == NoiseFamily::Uniform && ranked[0].1 <= ranked[1].1,
        });
    }
    Ok(())
}
