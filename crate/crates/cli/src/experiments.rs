//! The utility experiments. Each one checks its guarantee's hypotheses,
//! runs independent trials in parallel and reports the measured excess
//! population loss next to the predicted bound and the privacy it certifies.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use pai_core::accountant::{
    default_alpha_grid, gaussian_mechanism_sigma, local_rdp, multitask_dp, multitask_flat_k, per_index_pnsgd_rdp,
    tightest_dp, SgdPrivacyConfig,
};
use pai_core::cni::{derive_seed, run_variant, GradientOracle, Purpose, SgdRunConfig, Variant};
use pai_core::divergence::RenyiOrder;
use pai_core::smoothing::{approximation_gap_bound, lambda_for, smoothing_loss_term, SmoothedLoss};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::population::Population;
use crate::report::{format_per_index, ResultRow, SCHEMA_VERSION};

/// A finished experiment and how long it took. Wall time stays out of the
/// CSV so reruns are byte-identical.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub row: ResultRow,
    pub wall_seconds: f64,
    pub warnings: Vec<String>,
}

/// Mean and standard error of per-trial values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n).sqrt(),
        }
    }

    pub fn within(&self, bound: f64) -> bool {
        self.mean <= bound + 3.0 * self.std_error
    }
}

/// Seed of trial `index`; the trial's data, noise and index draws all
/// derive from it.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    derive_seed(derive_seed(seed, Purpose::Trial as u64) ^ index, Purpose::Trial as u64)
}

fn run_seed(trial: u64, task: u64) -> u64 {
    if task == 0 {
        trial
    } else {
        derive_seed(trial ^ task.rotate_left(32), Purpose::Trial as u64)
    }
}

pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    cfg.validate()?;
    if let Some(v) = cfg.variant {
        if v != experiment.variant() {
            bail!(
                "the {experiment} guarantee is proved for {}-PNSGD; variant `{v}` is not covered",
                experiment.variant()
            );
        }
    }
    let (row, warnings) = match experiment {
        Experiment::Baseline => baseline(cfg)?,
        Experiment::PerPerson => per_person(cfg)?,
        Experiment::PublicPrivate => public_private(cfg)?,
        Experiment::Multitask => multitask(cfg)?,
        Experiment::Smoothing => smoothing(cfg)?,
    };
    Ok(Outcome {
        row,
        wall_seconds: start.elapsed().as_secs_f64(),
        warnings,
    })
}

fn population(cfg: &ExperimentConfig) -> Result<Population> {
    let mut eval = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Purpose::Data as u64));
    Population::new(cfg.task, cfg.d, cfg.radius, cfg.lipschitz, &mut eval)
}

/// Excess loss of every task in every trial: `result[trial][task]`.
fn simulate(
    cfg: &ExperimentConfig,
    pop: &Population,
    oracle: &dyn GradientOracle,
    variant: Variant,
    eta: f64,
    sigma: f64,
    tasks: usize,
) -> Result<Vec<Vec<f64>>> {
    let set = pop.feasible_set();
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(cfg.seed, i);
            let mut data_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Purpose::Data as u64));
            let data = pop.sample(cfg.n, &mut data_rng);
            (0..tasks as u64)
                .map(|j| {
                    let run = SgdRunConfig::new(eta, sigma, vec![0.0; cfg.d], run_seed(seed, j))?;
                    let out = run_variant(variant, &data, oracle, &set, &run)?;
                    Ok(pop.excess(&out.w))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

fn single_task(results: &[Vec<f64>]) -> Summary {
    Summary::of(&results.iter().map(|r| r[0]).collect::<Vec<_>>())
}

fn base_row(experiment: Experiment, cfg: &ExperimentConfig, sigma: f64, eta: f64) -> ResultRow {
    ResultRow {
        schema_version: SCHEMA_VERSION,
        experiment: experiment.as_str().into(),
        task: cfg.task.as_str().into(),
        variant: experiment.variant().to_string(),
        n: cfg.n,
        d: cfg.d,
        k: cfg.k,
        m_public: cfg.m_public,
        radius: cfg.radius,
        lipschitz: cfg.lipschitz,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        trials: cfg.trials,
        seed: cfg.seed,
        sigma,
        eta,
        lambda: None,
        mean_excess: f64::NAN,
        std_error: f64::NAN,
        bound: f64::NAN,
        within_bound: false,
        eps_stated: cfg.epsilon,
        eps_certified: f64::NAN,
        per_index: String::new(),
        notes: String::new(),
    }
}

fn fill(row: &mut ResultRow, summary: Summary, bound: f64) {
    row.mean_excess = summary.mean;
    row.std_error = summary.std_error;
    row.bound = bound;
    row.within_bound = summary.within(bound);
}

/// `2L √(2 ln(1.25/δ)) / ε`, the local-privacy noise scale.
pub fn local_sigma(cfg: &ExperimentConfig) -> Result<f64> {
    Ok(gaussian_mechanism_sigma(2.0 * cfg.lipschitz, cfg.epsilon, cfg.delta)?)
}

/// `√(1 + 8d ln(1.25/δ) / (m ε²))`.
pub fn noise_factor(d: usize, epsilon: f64, delta: f64, m: usize) -> f64 {
    (1.0 + 8.0 * d as f64 * (1.25 / delta).ln() / (m as f64 * epsilon * epsilon)).sqrt()
}

/// `c·R / √(n(L² + dσ²))`.
fn step_size(c: f64, cfg: &ExperimentConfig, sigma: f64) -> f64 {
    c * cfg.radius / (cfg.n as f64 * (cfg.lipschitz.powi(2) + cfg.d as f64 * sigma * sigma)).sqrt()
}

fn certified_local(cfg: &ExperimentConfig, sigma: f64) -> Result<f64> {
    let unit = local_rdp(cfg.lipschitz, sigma, RenyiOrder::new(2.0)?)?.epsilon / 2.0;
    Ok(tightest_dp(|a| a.value() * unit, cfg.delta, &default_alpha_grid())?.0.epsilon)
}

/// Best certified `ε` for the example at `index`; the per-index RDP is
/// linear in `α`, so one evaluation fixes the whole curve.
fn certified_at(privacy: &SgdPrivacyConfig, index: usize, delta: f64) -> Result<f64> {
    let unit = per_index_pnsgd_rdp(privacy, index, RenyiOrder::new(2.0)?)?.epsilon / 2.0;
    Ok(tightest_dp(|a| a.value() * unit, delta, &default_alpha_grid())?.0.epsilon)
}

fn smoothness_of(oracle: &dyn GradientOracle, what: &str) -> Result<f64> {
    oracle
        .smoothness()
        .with_context(|| format!("{what} needs a smooth loss; run the smoothing experiment for non-smooth tasks"))
}

/// Indices `1, n/4, n/2, 3n/4, n`.
pub fn table_indices(n: usize) -> Vec<usize> {
    let mut t: Vec<usize> = [1, n / 4, n / 2, 3 * n / 4, n].into_iter().filter(|&t| t >= 1).collect();
    t.dedup();
    t
}

/// `(t, ε/√(n−t+1), certified)` for each index of the table.
fn per_index_table(privacy: &SgdPrivacyConfig, cfg: &ExperimentConfig) -> Result<Vec<(usize, f64, f64)>> {
    table_indices(cfg.n)
        .into_iter()
        .map(|t| {
            let stated = cfg.epsilon / ((cfg.n - t + 1) as f64).sqrt();
            Ok((t, stated, certified_at(privacy, t, cfg.delta)?))
        })
        .collect()
}

/// Stop-PNSGD with the local calibration; no smoothness needed.
fn baseline(cfg: &ExperimentConfig) -> Result<(ResultRow, Vec<String>)> {
    let pop = population(cfg)?;
    let loss = pop.loss();
    let sigma = local_sigma(cfg)?;
    let eta = step_size(2.0, cfg, sigma);
    let results = simulate(cfg, &pop, &loss, Variant::Stop, eta, sigma, 1)?;
    let bound = 4.0 * cfg.radius * cfg.lipschitz / (cfg.n as f64).sqrt() * noise_factor(cfg.d, cfg.epsilon, cfg.delta, 1);
    let mut row = base_row(Experiment::Baseline, cfg, sigma, eta);
    fill(&mut row, single_task(&results), bound);
    row.eps_certified = certified_local(cfg, sigma)?;
    row.notes = "local".into();
    Ok((row, Vec::new()))
}

/// Skip-PNSGD with per-index guarantees `ε/√(n−t+1)`.
fn per_person(cfg: &ExperimentConfig) -> Result<(ResultRow, Vec<String>)> {
    let pop = population(cfg)?;
    let loss = pop.loss();
    let sigma = local_sigma(cfg)?;
    let eta = step_size(8f64.sqrt(), cfg, sigma);
    let beta = smoothness_of(&loss, "per-index privacy")?;
    let privacy = SgdPrivacyConfig::new(cfg.n, cfg.lipschitz, sigma, eta, beta)?;
    let table = per_index_table(&privacy, cfg)?;
    let results = simulate(cfg, &pop, &loss, Variant::Skip, eta, sigma, 1)?;
    let bound = 4.0 * 2f64.sqrt() * cfg.radius * cfg.lipschitz / (cfg.n as f64).sqrt()
        * noise_factor(cfg.d, cfg.epsilon, cfg.delta, 1);
    let mut row = base_row(Experiment::PerPerson, cfg, sigma, eta);
    fill(&mut row, single_task(&results), bound);
    row.eps_certified = table.last().map(|e| e.2).unwrap_or(f64::NAN);
    row.per_index = format_per_index(&table);
    Ok((row, Vec::new()))
}

/// `2L √(ln(1.25/δ)/m) / ε`, the noise scale when the last `m` examples
/// are public.
pub fn public_sigma(cfg: &ExperimentConfig) -> f64 {
    2.0 * cfg.lipschitz * ((1.25 / cfg.delta).ln() / cfg.m_public as f64).sqrt() / cfg.epsilon
}

/// `⌈8d ln(1.25/δ)/ε²⌉`, the public sample size at which the private
/// bound is within `√2` of the non-private one.
pub fn matching_public_size(d: usize, epsilon: f64, delta: f64) -> usize {
    (8.0 * d as f64 * (1.25 / delta).ln() / (epsilon * epsilon)).ceil() as usize
}

/// Skip-PNSGD with the last `m` examples public and noise reduced by `√m`.
fn public_private(cfg: &ExperimentConfig) -> Result<(ResultRow, Vec<String>)> {
    let m = cfg.m_public;
    if m == 0 {
        bail!("m_public = 0 has no public data; use the per-person experiment");
    }
    if m >= cfg.n {
        bail!("need 1 ≤ m_public < n, got m_public = {m}, n = {}", cfg.n);
    }
    let pop = population(cfg)?;
    let loss = pop.loss();
    let sigma = public_sigma(cfg);
    let eta = step_size(8f64.sqrt(), cfg, sigma);
    let beta = smoothness_of(&loss, "per-index privacy")?;
    let privacy = SgdPrivacyConfig::new(cfg.n, cfg.lipschitz, sigma, eta, beta)?;
    let last_private = cfg.n - m;
    let mut table = Vec::new();
    for t in [1, last_private / 2, last_private] {
        if t >= 1 && table.last().is_none_or(|&(p, _, _)| p < t) {
            table.push((t, cfg.epsilon, certified_at(&privacy, t, cfg.delta)?));
        }
    }
    let worst = table.last().expect("non-empty").2;
    if table.iter().any(|e| e.2 > worst) {
        bail!("index {last_private} does not carry the weakest private guarantee");
    }
    let results = simulate(cfg, &pop, &loss, Variant::Skip, eta, sigma, 1)?;
    let statistical = 4.0 * 2f64.sqrt() * cfg.radius * cfg.lipschitz / (cfg.n as f64).sqrt();
    let bound = statistical * noise_factor(cfg.d, cfg.epsilon, cfg.delta, m);
    let mut row = base_row(Experiment::PublicPrivate, cfg, sigma, eta);
    fill(&mut row, single_task(&results), bound);
    row.eps_certified = worst;
    row.per_index = format_per_index(&table);
    row.notes = format!("nonprivate_term={statistical}");
    Ok((row, Vec::new()))
}

/// `k` independent Stop-PNSGD runs on one dataset with the multi-task
/// calibration.
fn multitask(cfg: &ExperimentConfig) -> Result<(ResultRow, Vec<String>)> {
    let params = multitask_dp(cfg.n, cfg.k, cfg.d, cfg.lipschitz, cfg.radius, cfg.epsilon, cfg.delta)?;
    let pop = population(cfg)?;
    let loss = pop.loss();
    let beta = smoothness_of(&loss, "the multi-task guarantee")?;
    SgdPrivacyConfig::new(cfg.n, cfg.lipschitz, params.sigma, params.eta, beta)?;
    let results = simulate(cfg, &pop, &loss, Variant::Stop, params.eta, params.sigma, cfg.k)?;
    let per_task: Vec<Summary> = (0..cfg.k)
        .map(|j| Summary::of(&results.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();
    let worst = per_task
        .iter()
        .copied()
        .max_by(|a, b| a.mean.total_cmp(&b.mean))
        .expect("k ≥ 1");
    let log_inv_delta = (1.0 / cfg.delta).ln();
    let bound = 4.0 * cfg.radius * cfg.lipschitz / (cfg.n as f64).sqrt()
        * (1.0 + 16.0 * cfg.d as f64 * params.q * log_inv_delta / (cfg.epsilon * cfg.epsilon)).sqrt();
    let mut row = base_row(Experiment::Multitask, cfg, params.sigma, params.eta);
    fill(&mut row, worst, bound);
    row.eps_stated = params.dp_stated.epsilon;
    row.eps_certified = params.dp_certified.epsilon;
    let flat_k = multitask_flat_k(cfg.n, cfg.delta);
    let branch = if cfg.k <= flat_k { "flat" } else { "linear" };
    row.notes = format!("q={};branch={branch};flat_k={flat_k};alpha={}", params.q, params.alpha.value());
    Ok((row, Vec::new()))
}

/// Skip-PNSGD on the Gaussian smoothing of a non-smooth loss.
fn smoothing(cfg: &ExperimentConfig) -> Result<(ResultRow, Vec<String>)> {
    let pop = population(cfg)?;
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => lambda_for(cfg.radius, cfg.epsilon, cfg.n, cfg.delta)?,
    };
    let smoothed = SmoothedLoss::new(pop.loss(), lambda, cfg.mc_samples)?;
    let sigma = local_sigma(cfg)?;
    let eta = step_size(8f64.sqrt(), cfg, sigma);
    let privacy = SgdPrivacyConfig::new(cfg.n, cfg.lipschitz, sigma, eta, smoothed.smooth_beta())
        .context("smoothing radius too small for the step size")?;
    let table = per_index_table(&privacy, cfg)?;
    let results = simulate(cfg, &pop, &smoothed, Variant::Skip, eta, sigma, 1)?;
    let statistical = 4.0 * 2f64.sqrt() * cfg.radius * cfg.lipschitz / (cfg.n as f64).sqrt();
    let noise = noise_factor(cfg.d, cfg.epsilon, cfg.delta, 1);
    let bound = statistical * (noise + smoothing_loss_term(cfg.epsilon, cfg.d, cfg.delta)?);
    let mut warnings = Vec::new();
    let gap = approximation_gap_bound(cfg.lipschitz, lambda, cfg.d)?;
    if gap > statistical * noise {
        warnings.push(format!(
            "smoothing gap Lλ√d = {gap} exceeds the optimisation term {}; expect degraded loss",
            statistical * noise
        ));
    }
    let mut row = base_row(Experiment::Smoothing, cfg, sigma, eta);
    fill(&mut row, single_task(&results), bound);
    row.lambda = Some(lambda);
    row.eps_certified = table.last().map(|e| e.2).unwrap_or(f64::NAN);
    row.per_index = format_per_index(&table);
    row.notes = warnings.join(";");
    Ok((row, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Task;

    fn small(task: Task) -> ExperimentConfig {
        ExperimentConfig {
            task,
            n: 64,
            d: 2,
            trials: 30,
            radius: 2.0,
            ..Default::default()
        }
    }

    #[test]
    fn sigma_formula() {
        let cfg = ExperimentConfig::default();
        let sigma = local_sigma(&cfg).unwrap();
        assert!((sigma - 2.0 * (2.0 * 125f64.ln()).sqrt()).abs() < 1e-12);
        assert!((sigma - 6.215).abs() < 1e-3);
    }

    #[test]
    fn constant_task_has_zero_excess() {
        let out = run(Experiment::Baseline, &small(Task::Constant)).unwrap();
        assert_eq!(out.row.mean_excess, 0.0);
        assert_eq!(out.row.std_error, 0.0);
        assert!(out.row.within_bound);
    }

    #[test]
    fn per_index_table_shape() {
        let out = run(Experiment::PerPerson, &small(Task::Huber)).unwrap();
        let entries: Vec<Vec<f64>> = out
            .row
            .per_index
            .split(';')
            .map(|e| e.split(':').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(entries.iter().map(|e| e[0] as usize).collect::<Vec<_>>(), vec![1, 16, 32, 48, 64]);
        assert!((entries[0][1] - 1.0 / 8.0).abs() < 1e-15);
        assert_eq!(entries[4][1], 1.0);
        for w in entries.windows(2) {
            assert!(w[0][1] < w[1][1] && w[0][2] < w[1][2]);
        }
    }

    #[test]
    fn variant_mismatch_is_rejected() {
        let cfg = ExperimentConfig {
            variant: Some(Variant::Pnsgd),
            ..small(Task::Huber)
        };
        assert!(run(Experiment::Baseline, &cfg).is_err());
    }

    #[test]
    fn public_size_must_be_in_range() {
        let mut cfg = small(Task::Huber);
        assert!(run(Experiment::PublicPrivate, &cfg).is_err());
        cfg.m_public = 64;
        assert!(run(Experiment::PublicPrivate, &cfg).is_err());
        cfg.m_public = 63;
        assert!(run(Experiment::PublicPrivate, &cfg).is_ok());
    }

    #[test]
    fn public_noise_shrinks_with_public_size() {
        let mut one = small(Task::Huber);
        one.m_public = 1;
        let mut many = one.clone();
        many.m_public = 63;
        assert!((public_sigma(&one) / public_sigma(&many) - 63f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn non_smooth_tasks_need_smoothing() {
        assert!(run(Experiment::PerPerson, &small(Task::HingeSmoothed)).is_err());
        let out = run(Experiment::Smoothing, &small(Task::HingeSmoothed)).unwrap();
        assert!(out.row.lambda.unwrap() > 0.0);
    }

    #[test]
    fn large_smoothing_radius_warns() {
        let cfg = ExperimentConfig {
            lambda: Some(50.0),
            ..small(Task::Huber)
        };
        let out = run(Experiment::Smoothing, &cfg).unwrap();
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn multitask_reports_branch() {
        let cfg = ExperimentConfig {
            k: 3,
            epsilon: 0.9,
            ..small(Task::Huber)
        };
        let out = run(Experiment::Multitask, &cfg).unwrap();
        assert!(out.row.notes.contains("branch=flat"));
        assert!(out.row.eps_stated <= 0.9 + 1e-12);
        let bad = ExperimentConfig { epsilon: 1.0, ..cfg };
        assert!(run(Experiment::Multitask, &bad).is_err());
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| trial_seed(5, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
