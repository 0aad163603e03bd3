//! Per-step and total maximal-leakage bounds.
//!
//! Each step of a noisy iterative algorithm leaks at most
//! `ln( f_t(0) V_p(d, eta_t L) + h(d, p, f_t, eta_t L) )` nats, and leakage
//! accumulates additively over the schedule through the chain rule. The
//! closed cases:
//!
//! - `l2-gaussian`: isotropic Gaussian noise, update bounded in L2 (valid
//!   for any p <= 2 because the bound is monotone in p);
//! - `linf-product`: any i.i.d. product noise, update bounded in Linf,
//!   where the whole bound collapses to d ln(1 + 2 eta L f0(0));
//! - `l1-laplace`: i.i.d. Laplace noise, update bounded in L1, a truncated
//!   exponential series with a finite large-d limit;
//! - `l1-gaussian-upper`: Gaussian noise, update bounded in L1, via the
//!   projection argument (an upper bound on h, flagged as inexact).
//!
//! A mutual-information baseline for the Gaussian case and the Laplace
//! large-d limit are included for reports.

use crate::hfunc::{
    h_closed_l1_gaussian_upper, h_closed_l2_gaussian, h_numeric, log_exp_series, HQuery,
    NumericMethod,
};
use crate::model::{
    validate_spec, NoiseFamily, NoiseSpec, NormOrder, TrainingSpec, UpdateConstraint,
};
use crate::noise;
use crate::special::{log_ball_volume, log_sum_exp};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which closed form (or fallback) produced a per-step term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundCase {
    L2Gaussian,
    LinfProduct,
    L1Laplace,
    L1GaussianUpper,
    Numeric,
}

impl BoundCase {
    pub fn label(self) -> &'static str {
        match self {
            BoundCase::L2Gaussian => "l2-gaussian",
            BoundCase::LinfProduct => "linf-product",
            BoundCase::L1Laplace => "l1-laplace",
            BoundCase::L1GaussianUpper => "l1-gaussian-upper",
            BoundCase::Numeric => "numeric",
        }
    }
}

impl std::fmt::Display for BoundCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Case selection policy for [`step_bound`] / [`total_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseSelector {
    /// Dispatch on (p, family); when both Gaussian forms apply (p = 1) the
    /// smaller is reported. Errors with [`Error::NoClosedForm`] on uncovered
    /// pairs.
    Auto,
    /// Force one closed form; errors with [`Error::WrongCase`] when the pair
    /// does not satisfy its preconditions.
    Force(BoundCase),
    /// `Auto`, falling back to the general bound with a numerically
    /// estimated h for pairs without a closed form (d <= 8 only).
    AutoNumeric {
        method: NumericMethod,
        budget: u64,
        seed: u64,
    },
    /// Always evaluate the general bound with a numerical h, even when a
    /// closed form exists; this is the route that makes cross-norm sweeps
    /// comparable.
    Numeric {
        method: NumericMethod,
        budget: u64,
        seed: u64,
    },
}

/// One per-step leakage term, in nats. `is_exact_h` is false when the h
/// inside the logarithm is an upper bound rather than the exact functional
/// (the projection-argument Gaussian/L1 case), so slack is not mistaken for
/// evaluation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLeakageTerm {
    pub step_index: usize,
    /// ln[f_t(0) V_p(d, eta L) + h]; equal to `nats` and kept explicit.
    pub log_inside: f64,
    pub nats: f64,
    pub case: BoundCase,
    pub is_exact_h: bool,
}

/// The accountant's output for a full schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub per_step: Vec<StepLeakageTerm>,
    pub total_leakage_nats: f64,
    /// Mutual-information baseline, present when every step is Gaussian and
    /// p <= 2.
    pub mi_baseline_nats: Option<f64>,
    /// Large-d limit of the Laplace/L1 bound, present when every step is
    /// Laplace and p = 1.
    pub laplace_limit_nats: Option<f64>,
    pub spec_echo: TrainingSpec,
}

fn dispatch_auto(p: NormOrder, family: NoiseFamily) -> Result<&'static [BoundCase]> {
    match (p, family) {
        (NormOrder::L2, NoiseFamily::Gaussian) => Ok(&[BoundCase::L2Gaussian]),
        (NormOrder::L1, NoiseFamily::Gaussian) => {
            Ok(&[BoundCase::L2Gaussian, BoundCase::L1GaussianUpper])
        }
        (NormOrder::LInf, _) => Ok(&[BoundCase::LinfProduct]),
        (NormOrder::L1, NoiseFamily::Laplace) => Ok(&[BoundCase::L1Laplace]),
        (p, family) => Err(Error::NoClosedForm {
            family: family.label(),
            p: p.label(),
        }),
    }
}

/// nats of one closed case at radius r = eta * L. The constraint's p only
/// selects the case; the ball the case integrates over is the case's own.
fn case_nats(case: BoundCase, d: usize, r: f64, noise: NoiseSpec) -> Result<f64> {
    if r == 0.0 {
        // Zero-radius ball: V = 0 and h = 1 for every case.
        return Ok(0.0);
    }
    match case {
        BoundCase::L2Gaussian => {
            if noise.family != NoiseFamily::Gaussian {
                return Err(Error::WrongCase(format!(
                    "l2-gaussian requires Gaussian noise, got {}",
                    noise.family
                )));
            }
            let q = HQuery::new(d, NormOrder::L2, noise, r);
            let log_fv = noise::log_density_at_zero(noise::NoiseAtom::new(noise, d))
                + log_ball_volume(NormOrder::L2, d, r)?.log_v;
            let log_h = h_closed_l2_gaussian(&q)?.log_v;
            log_sum_exp(&[log_fv, log_h])
        }
        BoundCase::LinfProduct => {
            // Inside collapses to (1 + 2 r f0(0))^d.
            let c = ((2.0 * r).ln() + noise::log_f0_zero(noise)).exp();
            Ok(d as f64 * c.ln_1p())
        }
        BoundCase::L1Laplace => {
            if noise.family != NoiseFamily::Laplace {
                return Err(Error::WrongCase(format!(
                    "l1-laplace requires Laplace noise, got {}",
                    noise.family
                )));
            }
            // f(0) V_1(d, r) = (lambda r)^d / d!, so the inside is the
            // series through i = d.
            log_exp_series(noise.scale * r, d + 1)
        }
        BoundCase::L1GaussianUpper => {
            if noise.family != NoiseFamily::Gaussian {
                return Err(Error::WrongCase(format!(
                    "l1-gaussian-upper requires Gaussian noise, got {}",
                    noise.family
                )));
            }
            let q = HQuery::new(d, NormOrder::L1, noise, r);
            let log_fv = noise::log_density_at_zero(noise::NoiseAtom::new(noise, d))
                + log_ball_volume(NormOrder::L1, d, r)?.log_v;
            let log_h = h_closed_l1_gaussian_upper(&q)?.log_v;
            log_sum_exp(&[log_fv, log_h])
        }
        BoundCase::Numeric => Err(Error::WrongCase(
            "numeric fallback is selected through CaseSelector::AutoNumeric".into(),
        )),
    }
}

/// The per-step leakage bound for one step of the schedule.
pub fn step_bound(
    d: usize,
    constraint: UpdateConstraint,
    eta: f64,
    noise: NoiseSpec,
    selector: CaseSelector,
) -> Result<StepLeakageTerm> {
    step_bound_indexed(0, d, constraint, eta, noise, selector)
}

fn step_bound_indexed(
    step_index: usize,
    d: usize,
    constraint: UpdateConstraint,
    eta: f64,
    noise: NoiseSpec,
    selector: CaseSelector,
) -> Result<StepLeakageTerm> {
    if d == 0 {
        return Err(Error::Domain("step_bound requires d >= 1".into()));
    }
    if !(eta > 0.0) || !(constraint.l >= 0.0) {
        return Err(Error::Domain(format!(
            "step_bound requires eta > 0 and L >= 0, got eta={eta}, L={}",
            constraint.l
        )));
    }
    let r = eta * constraint.l;
    let term = |nats: f64, case: BoundCase, is_exact_h: bool| StepLeakageTerm {
        step_index,
        log_inside: nats,
        nats,
        case,
        is_exact_h,
    };
    match selector {
        CaseSelector::Numeric {
            method,
            budget,
            seed,
        } => numeric_fallback(step_index, d, constraint, r, noise, method, budget, seed),
        CaseSelector::Auto | CaseSelector::AutoNumeric { .. } => {
            let cases = match dispatch_auto(constraint.p, noise.family) {
                Ok(cases) => cases,
                Err(err) => {
                    if let CaseSelector::AutoNumeric {
                        method,
                        budget,
                        seed,
                    } = selector
                    {
                        return numeric_fallback(
                            step_index, d, constraint, r, noise, method, budget, seed,
                        );
                    }
                    return Err(err);
                }
            };
            // When several forms apply, every one is a valid upper bound:
            // report the smallest.
            let mut best: Option<StepLeakageTerm> = None;
            for &case in cases {
                let nats = case_nats(case, d, r, noise)?;
                let exact = case != BoundCase::L1GaussianUpper;
                if best.is_none_or(|b| nats < b.nats) {
                    best = Some(term(nats, case, exact));
                }
            }
            Ok(best.expect("dispatch returns at least one case"))
        }
        CaseSelector::Force(case) => {
            // Forcing validates that the pair satisfies the case's
            // preconditions; p compatibility is part of that.
            let p_ok = match case {
                BoundCase::L2Gaussian => constraint.p != NormOrder::LInf,
                BoundCase::LinfProduct => constraint.p == NormOrder::LInf,
                BoundCase::L1Laplace | BoundCase::L1GaussianUpper => constraint.p == NormOrder::L1,
                BoundCase::Numeric => true,
            };
            if !p_ok {
                return Err(Error::WrongCase(format!(
                    "case {case} does not apply to p={}",
                    constraint.p
                )));
            }
            let nats = case_nats(case, d, r, noise)?;
            Ok(term(nats, case, case != BoundCase::L1GaussianUpper))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn numeric_fallback(
    step_index: usize,
    d: usize,
    constraint: UpdateConstraint,
    r: f64,
    noise: NoiseSpec,
    method: NumericMethod,
    budget: u64,
    seed: u64,
) -> Result<StepLeakageTerm> {
    if d > 8 {
        return Err(Error::UnsupportedDimension {
            what: "numeric fallback",
            d,
            max: 8,
        });
    }
    if r == 0.0 {
        return Ok(StepLeakageTerm {
            step_index,
            log_inside: 0.0,
            nats: 0.0,
            case: BoundCase::Numeric,
            is_exact_h: true,
        });
    }
    let q = HQuery::new(d, constraint.p, noise, r);
    let est = h_numeric(&q, method, budget, seed)?;
    let log_fv = noise::log_density_at_zero(noise::NoiseAtom::new(noise, d))
        + log_ball_volume(constraint.p, d, r)?.log_v;
    let nats = log_sum_exp(&[log_fv, est.log_h])?;
    Ok(StepLeakageTerm {
        step_index,
        log_inside: nats,
        nats,
        case: BoundCase::Numeric,
        is_exact_h: true,
    })
}

/// Sum the per-step bounds over the schedule and attach the applicable
/// baselines.
pub fn total_bound(spec: &TrainingSpec, selector: CaseSelector) -> Result<BoundReport> {
    validate_spec(spec).map_err(|errs| {
        Error::Domain(
            errs.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    let mut per_step = Vec::with_capacity(spec.schedule.len());
    for (i, step) in spec.schedule.steps.iter().enumerate() {
        per_step.push(step_bound_indexed(
            i,
            spec.d,
            spec.constraint,
            step.eta,
            step.noise,
            selector,
        )?);
    }
    let total_leakage_nats = per_step.iter().map(|t| t.nats).sum();
    let mi_baseline_nats = mi_bound_gaussian(spec).ok();
    let laplace_limit_nats = laplace_limit(spec).ok();
    Ok(BoundReport {
        per_step,
        total_leakage_nats,
        mi_baseline_nats,
        laplace_limit_nats,
        spec_echo: spec.clone(),
    })
}

/// Mutual-information baseline for Gaussian noise with p <= 2:
/// (d/2) sum_t ln(1 + eta_t^2 L^2 / (d sigma_t^2)).
pub fn mi_bound_gaussian(spec: &TrainingSpec) -> Result<f64> {
    if spec.constraint.p == NormOrder::LInf {
        return Err(Error::WrongCase("MI baseline requires p <= 2".into()));
    }
    let d = spec.d as f64;
    let l = spec.constraint.l;
    let mut total = 0.0;
    for step in &spec.schedule.steps {
        if step.noise.family != NoiseFamily::Gaussian {
            return Err(Error::WrongCase(
                "MI baseline requires Gaussian noise".into(),
            ));
        }
        let sigma = step.noise.scale;
        total += 0.5 * d * (step.eta * step.eta * l * l / (d * sigma * sigma)).ln_1p();
    }
    Ok(total)
}

/// Large-d limit of the Laplace/L1 bound: sum_t lambda_t eta_t L.
pub fn laplace_limit(spec: &TrainingSpec) -> Result<f64> {
    if spec.constraint.p != NormOrder::L1 {
        return Err(Error::WrongCase("laplace limit requires p = 1".into()));
    }
    let mut total = 0.0;
    for step in &spec.schedule.steps {
        if step.noise.family != NoiseFamily::Laplace {
            return Err(Error::WrongCase(
                "laplace limit requires Laplace noise".into(),
            ));
        }
        total += step.noise.scale * step.eta * spec.constraint.l;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Step, StepSchedule};

    fn constraint(p: NormOrder) -> UpdateConstraint {
        UpdateConstraint::new(p, 1.0)
    }

    #[test]
    fn gaussian_step_d1() {
        // d=1, eta L = 1, sigma = 1: ln(2/sqrt(2 pi) + 1).
        let t = step_bound(
            1,
            constraint(NormOrder::L2),
            1.0,
            NoiseSpec::gaussian(1.0),
            CaseSelector::Auto,
        )
        .unwrap();
        let expected = (2.0 / (2.0 * std::f64::consts::PI).sqrt() + 1.0).ln();
        assert!((t.nats - expected).abs() < 1e-12);
        assert!((t.nats - 0.58679).abs() < 1e-3);
        assert_eq!(t.case, BoundCase::L2Gaussian);
        assert!(t.is_exact_h);
    }

    #[test]
    fn linf_step_direct_value() {
        let t = step_bound(
            10,
            constraint(NormOrder::LInf),
            0.1,
            NoiseSpec::gaussian(1.0),
            CaseSelector::Auto,
        )
        .unwrap();
        let expected = 10.0 * (0.2 / (2.0 * std::f64::consts::PI).sqrt()).ln_1p();
        assert!((t.nats - expected).abs() < 1e-12);
        assert!((t.nats - 0.76785).abs() < 1e-3);
        assert_eq!(t.case, BoundCase::LinfProduct);
    }

    #[test]
    fn zero_radius_means_zero_nats() {
        for (p, noise) in [
            (NormOrder::L2, NoiseSpec::gaussian(1.0)),
            (NormOrder::LInf, NoiseSpec::uniform(1.0)),
            (NormOrder::L1, NoiseSpec::laplace(1.0)),
        ] {
            let t = step_bound(
                3,
                UpdateConstraint::new(p, 0.0),
                0.5,
                noise,
                CaseSelector::Auto,
            )
            .unwrap();
            assert_eq!(t.nats, 0.0, "p={p}");
        }
    }

    #[test]
    fn laplace_step_series() {
        // d=3, lambda eta L = 1: inside = sum_{i=0}^{3} 1/i! = 8/3.
        let t = step_bound(
            3,
            constraint(NormOrder::L1),
            1.0,
            NoiseSpec::laplace(1.0),
            CaseSelector::Auto,
        )
        .unwrap();
        assert!((t.nats - (8.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((t.nats - 0.98083).abs() < 1e-5);
        assert_eq!(t.case, BoundCase::L1Laplace);
    }

    #[test]
    fn gaussian_l1_reports_best_of_both() {
        // At d=1 the two Gaussian cases agree exactly.
        let a = step_bound(
            1,
            constraint(NormOrder::L1),
            0.7,
            NoiseSpec::gaussian(1.0),
            CaseSelector::Force(BoundCase::L2Gaussian),
        )
        .unwrap();
        let b = step_bound(
            1,
            constraint(NormOrder::L1),
            0.7,
            NoiseSpec::gaussian(1.0),
            CaseSelector::Force(BoundCase::L1GaussianUpper),
        )
        .unwrap();
        assert!((a.nats - b.nats).abs() < 1e-12);
        assert!(!b.is_exact_h);

        let auto = step_bound(
            5,
            constraint(NormOrder::L1),
            0.3,
            NoiseSpec::gaussian(1.0),
            CaseSelector::Auto,
        )
        .unwrap();
        let forced_min = step_bound(
            5,
            constraint(NormOrder::L1),
            0.3,
            NoiseSpec::gaussian(1.0),
            CaseSelector::Force(BoundCase::L2Gaussian),
        )
        .unwrap()
        .nats
        .min(
            step_bound(
                5,
                constraint(NormOrder::L1),
                0.3,
                NoiseSpec::gaussian(1.0),
                CaseSelector::Force(BoundCase::L1GaussianUpper),
            )
            .unwrap()
            .nats,
        );
        assert!((auto.nats - forced_min).abs() < 1e-15);
    }

    #[test]
    fn no_closed_form_pairs() {
        let err = step_bound(
            2,
            constraint(NormOrder::L2),
            0.5,
            NoiseSpec::laplace(1.0),
            CaseSelector::Auto,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoClosedForm { .. }));

        // The numeric fallback covers uniform over L2.
        let t = step_bound(
            2,
            constraint(NormOrder::L2),
            0.5,
            NoiseSpec::uniform(3.0f64.sqrt()),
            CaseSelector::AutoNumeric {
                method: NumericMethod::MonteCarlo,
                budget: 100_000,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(t.case, BoundCase::Numeric);
        assert!(t.nats > 0.0);
    }

    #[test]
    fn totals_are_additive_and_schedule_mixes() {
        let spec = TrainingSpec {
            d: 2,
            constraint: constraint(NormOrder::L2),
            schedule: StepSchedule::uniform(3, 1.0, NoiseSpec::gaussian(1.0)),
        };
        let report = total_bound(&spec, CaseSelector::Auto).unwrap();
        let single = report.per_step[0].nats;
        assert!((report.total_leakage_nats - 3.0 * single).abs() < 1e-12);
        // T=1, d=2, eta L=1, sigma=1: ln(pi/(2 pi) + h) = ln 2.75331.
        assert!((single - 1.01281).abs() < 1e-4);
        assert!(report.mi_baseline_nats.is_some());
        assert!(report.laplace_limit_nats.is_none());

        // Mixed schedule, p=1: Gaussian then Laplace steps sum per-case.
        let spec = TrainingSpec {
            d: 2,
            constraint: constraint(NormOrder::L1),
            schedule: StepSchedule {
                steps: vec![
                    Step {
                        eta: 0.5,
                        noise: NoiseSpec::gaussian(1.0),
                    },
                    Step {
                        eta: 0.5,
                        noise: NoiseSpec::laplace(1.0),
                    },
                ],
            },
        };
        let report = total_bound(&spec, CaseSelector::Auto).unwrap();
        let by_hand: f64 = report.per_step.iter().map(|t| t.nats).sum();
        assert_eq!(report.total_leakage_nats, by_hand);
        assert_eq!(report.per_step[1].case, BoundCase::L1Laplace);
        assert!(report.mi_baseline_nats.is_none());
    }

    #[test]
    fn mi_baseline_values() {
        let spec = TrainingSpec {
            d: 2,
            constraint: constraint(NormOrder::L2),
            schedule: StepSchedule::uniform(1, 1.0, NoiseSpec::gaussian(1.0)),
        };
        let mi = mi_bound_gaussian(&spec).unwrap();
        assert!((mi - 1.5f64.ln()).abs() < 1e-12);
        assert!((mi - 0.405465).abs() < 1e-6);

        // ln(1+x) <= x termwise: large-d ceiling.
        let spec = TrainingSpec {
            d: 10_000,
            constraint: constraint(NormOrder::L2),
            schedule: StepSchedule::uniform(1, 1.0, NoiseSpec::gaussian(1.0)),
        };
        let mi = mi_bound_gaussian(&spec).unwrap();
        assert!(mi <= 1.0 / 2.0 + 1e-12);

        let zero = TrainingSpec {
            d: 4,
            constraint: UpdateConstraint::new(NormOrder::L2, 0.0),
            schedule: StepSchedule::uniform(5, 0.3, NoiseSpec::gaussian(1.0)),
        };
        assert_eq!(mi_bound_gaussian(&zero).unwrap(), 0.0);
    }

    #[test]
    fn laplace_limit_values() {
        // lambda = sqrt(2)/sigma with sigma = sqrt(2) gives lambda = 1.
        let spec = TrainingSpec {
            d: 3,
            constraint: constraint(NormOrder::L1),
            schedule: StepSchedule::uniform(1, 1.0, NoiseSpec::laplace(1.0)),
        };
        assert!((laplace_limit(&spec).unwrap() - 1.0).abs() < 1e-15);

        let spec = TrainingSpec {
            d: 3,
            constraint: UpdateConstraint::new(NormOrder::L1, 0.0),
            schedule: StepSchedule::uniform(4, 1.0, NoiseSpec::laplace(2.0)),
        };
        assert_eq!(laplace_limit(&spec).unwrap(), 0.0);

        let wrong = TrainingSpec {
            d: 3,
            constraint: constraint(NormOrder::L2),
            schedule: StepSchedule::uniform(1, 1.0, NoiseSpec::laplace(1.0)),
        };
        assert!(laplace_limit(&wrong).is_err());
    }

    #[test]
    fn schedule_sum_is_permutation_invariant() {
        let steps = vec![
            Step {
                eta: 0.2,
                noise: NoiseSpec::gaussian(0.7),
            },
            Step {
                eta: 0.9,
                noise: NoiseSpec::gaussian(1.3),
            },
            Step {
                eta: 0.5,
                noise: NoiseSpec::gaussian(2.1),
            },
        ];
        let mut reversed = steps.clone();
        reversed.reverse();
        let spec = |steps: Vec<Step>| TrainingSpec {
            d: 3,
            constraint: constraint(NormOrder::L2),
            schedule: StepSchedule { steps },
        };
        let a = total_bound(&spec(steps), CaseSelector::Auto).unwrap();
        let b = total_bound(&spec(reversed), CaseSelector::Auto).unwrap();
        assert!((a.total_leakage_nats - b.total_leakage_nats).abs() < 1e-12);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let spec = TrainingSpec {
            d: 0,
            constraint: constraint(NormOrder::L2),
            schedule: StepSchedule::uniform(1, 1.0, NoiseSpec::gaussian(1.0)),
        };
        assert!(matches!(
            total_bound(&spec, CaseSelector::Auto),
            Err(Error::Domain(_))
        ));
    }
}
