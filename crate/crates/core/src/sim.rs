//! Desk-scale noisy iterative training with leakage accounting.
//!
//! The update is `w_t = w_{t-1} - eta_t clip_p(grad, L) + xi_t` from
//! `w_0 = 0`, with minibatch size 1. Sample indices are a pure function of
//! (data seed, step index), cyclic passes reshuffled per pass, so the
//! sampling strategy never sees the iterate. Losses are clipped to [0, B],
//! making them (B^2/4)-sub-Gaussian for the tail bound.

use crate::bounds::{total_bound, BoundReport, CaseSelector};
use crate::geometry;
use crate::model::{validate_spec, NormOrder, TrainingSpec};
use crate::noise::{self, NoiseAtom};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Synthetic task families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    /// Quadratic well 0.5 ||w - z||^2 around a shifted sample cloud.
    QuadraticWell,
    /// Logistic loss on a two-component Gaussian mixture.
    LogisticSynthetic,
}

/// A synthetic learning task. The loss is clipped to [0, clip_b], hence
/// (clip_b^2 / 4)-sub-Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub d: usize,
    /// Training-set size.
    pub n: usize,
    pub data_seed: u64,
    /// Loss clip value B > 0.
    pub clip_b: f64,
}

impl TaskSpec {
    pub fn subgauss_var(&self) -> f64 {
        self.clip_b * self.clip_b / 4.0
    }
}

// Sample-cloud geometry: the well's minimizer sits at offset/sqrt(d) per
// coordinate so descent has somewhere to go; spreads keep typical losses
// inside the clip for moderate clip_b.
const WELL_OFFSET: f64 = 1.0;
const WELL_SPREAD: f64 = 0.3;
const LOGISTIC_SPREAD: f64 = 1.0;

#[derive(Debug, Clone)]
struct Sample {
    x: Vec<f64>,
    y: f64,
}

fn std_normal(rng: &mut ChaCha12Rng) -> f64 {
    rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, rng)
}

fn gen_samples(task: &TaskSpec, count: usize, rng: &mut ChaCha12Rng) -> Vec<Sample> {
    let d = task.d;
    let mu = WELL_OFFSET / (d as f64).sqrt();
    (0..count)
        .map(|_| match task.kind {
            TaskKind::QuadraticWell => {
                let x = (0..d).map(|_| mu + WELL_SPREAD * std_normal(rng)).collect();
                Sample { x, y: 0.0 }
            }
            TaskKind::LogisticSynthetic => {
                let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let x = (0..d)
                    .map(|_| y * mu + LOGISTIC_SPREAD * std_normal(rng))
                    .collect();
                Sample { x, y }
            }
        })
        .collect()
}

fn loss(task: &TaskSpec, w: &[f64], s: &Sample) -> f64 {
    let raw = match task.kind {
        TaskKind::QuadraticWell => {
            0.5 * w
                .iter()
                .zip(&s.x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        }
        TaskKind::LogisticSynthetic => {
            let margin: f64 = s.y * w.iter().zip(&s.x).map(|(a, b)| a * b).sum::<f64>();
            (-margin).exp().ln_1p()
        }
    };
    raw.min(task.clip_b)
}

/// Gradient of the unclipped surrogate; Lp clipping is applied afterwards.
fn grad(task: &TaskKind, w: &[f64], s: &Sample, out: &mut [f64]) {
    match task {
        TaskKind::QuadraticWell => {
            for ((o, wi), xi) in out.iter_mut().zip(w).zip(&s.x) {
                *o = wi - xi;
            }
        }
        TaskKind::LogisticSynthetic => {
            let margin: f64 = s.y * w.iter().zip(&s.x).map(|(a, b)| a * b).sum::<f64>();
            let sig = 1.0 / (1.0 + margin.exp());
            for (o, xi) in out.iter_mut().zip(&s.x) {
                *o = -s.y * sig * xi;
            }
        }
    }
}

/// Clip `v` to the Lp ball of radius `l`: radial scaling for p in {1, 2},
/// componentwise clamp for p = inf.
pub fn clip_lp(v: &[f64], p: NormOrder, l: f64) -> Vec<f64> {
    debug_assert!(l >= 0.0);
    match p {
        NormOrder::L1 | NormOrder::L2 => {
            let norm = if p == NormOrder::L1 {
                geometry::norm_l1(v)
            } else {
                geometry::norm_l2(v)
            };
            if norm <= l {
                v.to_vec()
            } else {
                let scale = l / norm;
                v.iter().map(|x| x * scale).collect()
            }
        }
        NormOrder::LInf => v.iter().map(|x| x.clamp(-l, l)).collect(),
    }
}

fn norm_p(v: &[f64], p: NormOrder) -> f64 {
    match p {
        NormOrder::L1 => geometry::norm_l1(v),
        NormOrder::L2 => geometry::norm_l2(v),
        NormOrder::LInf => geometry::norm_linf(v),
    }
}

/// Everything one training run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub final_w: Vec<f64>,
    /// Per-step Lp norm of the clipped update direction.
    pub trajectory_summary: Vec<f64>,
    pub accountant: BoundReport,
    /// Holdout-estimated population risk minus empirical risk at the final
    /// iterate.
    pub empirical_gen: f64,
}

// Stream tags for derived RNGs.
const STREAM_TRAIN_DATA: u64 = 1;
const STREAM_HOLDOUT: u64 = 2;
const STREAM_ORDER: u64 = 3;
const STREAM_NOISE: u64 = 4;
const STREAM_TRIAL: u64 = 5;

const HOLDOUT_FACTOR: usize = 10;

fn check_task(task: &TaskSpec, spec: &TrainingSpec) -> Result<()> {
    validate_spec(spec).map_err(|errs| {
        Error::Domain(
            errs.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    if task.d != spec.d {
        return Err(Error::DimensionMismatch {
            expected: spec.d,
            got: task.d,
        });
    }
    if task.n == 0 {
        return Err(Error::Domain("task.n must be >= 1".into()));
    }
    if !(task.clip_b > 0.0) {
        return Err(Error::Domain(format!(
            "clip_b must be > 0, got {}",
            task.clip_b
        )));
    }
    Ok(())
}

/// The core loop, shared between [`run_training`] and the tail estimator:
/// returns the final iterate, the per-step clipped-direction norms, and the
/// generalization gap measured against a fresh holdout.
fn run_core(
    task: &TaskSpec,
    spec: &TrainingSpec,
    data_seed: u64,
    noise_seed: u64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let d = spec.d;
    let n = task.n;
    let samples = gen_samples(
        task,
        n,
        &mut noise::derive_rng(data_seed, &[STREAM_TRAIN_DATA]),
    );

    let mut w = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut order: Vec<usize> = (0..n).collect();
    let mut traj = Vec::with_capacity(spec.schedule.len());
    for (t, step) in spec.schedule.steps.iter().enumerate() {
        // Cyclic passes, reshuffled per pass from the data seed only
        // (sampling stays agnostic to the iterate).
        let pos = t % n;
        if pos == 0 {
            let pass = (t / n) as u64;
            let mut order_rng = noise::derive_rng(data_seed, &[STREAM_ORDER, pass]);
            order = (0..n).collect();
            order.shuffle(&mut order_rng);
        }
        let z = &samples[order[pos]];

        grad(&task.kind, &w, z, &mut g);
        let direction = clip_lp(&g, spec.constraint.p, spec.constraint.l);
        let dir_norm = norm_p(&direction, spec.constraint.p);
        assert!(
            dir_norm <= spec.constraint.l + 1e-12,
            "clipping invariant violated at step {t}: {dir_norm}"
        );
        traj.push(dir_norm);

        let mut noise_rng = noise::derive_rng(noise_seed, &[STREAM_NOISE, t as u64]);
        let xi = noise::sample_with(NoiseAtom::new(step.noise, d), &mut noise_rng);
        for i in 0..d {
            w[i] = w[i] - step.eta * direction[i] + xi[i];
        }
    }

    let holdout = gen_samples(
        task,
        HOLDOUT_FACTOR * n,
        &mut noise::derive_rng(data_seed, &[STREAM_HOLDOUT]),
    );
    let train_risk: f64 =
        samples.iter().map(|s| loss(task, &w, s)).sum::<f64>() / samples.len() as f64;
    let population_risk: f64 =
        holdout.iter().map(|s| loss(task, &w, s)).sum::<f64>() / holdout.len() as f64;
    Ok((w, traj, population_risk - train_risk))
}

/// One full training run with the accountant attached. Deterministic in
/// (task, spec, seed).
pub fn run_training(task: &TaskSpec, spec: &TrainingSpec, seed: u64) -> Result<RunResult> {
    check_task(task, spec)?;
    let accountant = total_bound(spec, CaseSelector::Auto)?;
    let (final_w, trajectory_summary, empirical_gen) = run_core(task, spec, task.data_seed, seed)?;
    Ok(RunResult {
        final_w,
        trajectory_summary,
        accountant,
        empirical_gen,
    })
}

/// One row of the tail experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub gen_err: f64,
    pub exceeded: bool,
}

/// Empirical tail estimate with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub trials: u64,
    pub exceed_count: u64,
    pub empirical_prob: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

/// Monte-Carlo estimate of Pr(|gen-err| >= threshold) over independent
/// (fresh data, fresh noise) runs. Each trial derives its streams from
/// (seed, trial index); the aggregation is a count, so execution order is
/// irrelevant.
pub fn estimate_gen_tail(
    task: &TaskSpec,
    spec: &TrainingSpec,
    threshold: f64,
    trials: u64,
    seed: u64,
) -> Result<(TailEstimate, Vec<TrialOutcome>)> {
    check_task(task, spec)?;
    if trials < 100 {
        return Err(Error::Domain(format!(
            "trials must be >= 100, got {trials}"
        )));
    }
    if !(threshold >= 0.0) {
        return Err(Error::Domain(format!(
            "threshold must be >= 0, got {threshold}"
        )));
    }
    let mut outcomes = Vec::with_capacity(trials as usize);
    let mut exceed = 0u64;
    for k in 0..trials {
        let data_seed = noise::derive_rng(task.data_seed, &[STREAM_TRIAL, k]).random::<u64>();
        let noise_seed = noise::derive_rng(seed, &[STREAM_TRIAL, k]).random::<u64>();
        let (_, _, gen_err) = run_core(task, spec, data_seed, noise_seed)?;
        let exceeded = gen_err.abs() >= threshold;
        exceed += exceeded as u64;
        outcomes.push(TrialOutcome {
            trial: k,
            gen_err,
            exceeded,
        });
    }
    let (wilson_low, wilson_high) = wilson_interval(exceed, trials, 1.959_963_984_540_054);
    Ok((
        TailEstimate {
            trials,
            exceed_count: exceed,
            empirical_prob: exceed as f64 / trials as f64,
            wilson_low,
            wilson_high,
        },
        outcomes,
    ))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Stable CSV rendering of the per-trial outcomes (`trial,gen_err,exceeded`).
pub fn trials_to_csv(outcomes: &[TrialOutcome]) -> String {
    let mut out = String::with_capacity(outcomes.len() * 24 + 32);
    out.push_str("trial,gen_err,exceeded\n");
    for o in outcomes {
        out.push_str(&format!("{},{},{}\n", o.trial, o.gen_err, o.exceeded));
    }
    out
}
