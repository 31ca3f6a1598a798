//! RDP accountants for the noisy SGD variants.
//!
//! Each accountant that has a schedule-based derivation computes its bound
//! twice: once from the closed form and once by folding the shift schedule
//! through [`pai_bound`]. The two must agree to [`DOUBLE_ENTRY_TOLERANCE`].
//!
//! Noise convention: `sigma` in [`SgdPrivacyConfig`] is the scale of the
//! Gaussian added to the gradient. The iterate itself receives noise of scale
//! `η·σ`, and two neighbouring runs differ by at most `2ηL` in the step that
//! touches the differing example.

use serde::{Deserialize, Serialize};

use crate::divergence::{
    contraction_step, rdp_to_dp, shift_reduction_at, DpParams, GaussianNoise, RenyiBound,
    RenyiOrder, ShiftedBudget, SHIFT_TOLERANCE,
};
use crate::error::{invalid, non_negative, positive, unit_interval_open};
use crate::{Error, Result};

/// Relative agreement required between closed forms and schedule folds.
pub const DOUBLE_ENTRY_TOLERANCE: f64 = 1e-12;

/// Largest `n` for which the `n²`-step multi-epoch schedule is folded
/// explicitly as a cross-check.
pub const MULTIEPOCH_FOLD_LIMIT: usize = 64;

/// Hypotheses shared by the per-index PNSGD bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdPrivacyConfig {
    n: usize,
    lipschitz: f64,
    sigma: f64,
    eta: f64,
    smooth_beta: f64,
}

impl SgdPrivacyConfig {
    /// Rejects `η > 2/β`: the gradient step is then not a contraction and no
    /// amplification statement applies.
    pub fn new(n: usize, lipschitz: f64, sigma: f64, eta: f64, smooth_beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "dataset size must be positive"));
        }
        positive("lipschitz", lipschitz)?;
        positive("sigma", sigma)?;
        positive("eta", eta)?;
        positive("smooth_beta", smooth_beta)?;
        if eta > 2.0 / smooth_beta {
            return Err(Error::Hypothesis(format!(
                "learning rate {eta} exceeds 2/β = {} so gradient steps are not contractive",
                2.0 / smooth_beta
            )));
        }
        Ok(Self {
            n,
            lipschitz,
            sigma,
            eta,
            smooth_beta,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn smooth_beta(&self) -> f64 {
        self.smooth_beta
    }

    /// `2αL²/σ²`: the per-step Gaussian-mechanism cost with sensitivity `2L`.
    fn unit_cost(&self, order: RenyiOrder) -> f64 {
        2.0 * order.value() * self.lipschitz * self.lipschitz / (self.sigma * self.sigma)
    }

    /// Largest map discrepancy between neighbouring runs: `2ηL`.
    fn step_discrepancy(&self) -> f64 {
        2.0 * self.eta * self.lipschitz
    }

    fn iterate_noise(&self) -> f64 {
        self.eta * self.sigma
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index == 0 || index > self.n {
            Err(invalid("index", format!("must lie in 1..={}, got {index}", self.n)))
        } else {
            Ok(())
        }
    }
}

/// Per-step map discrepancies `s_t` and shift allowances `a_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSchedule {
    discrepancies: Vec<f64>,
    allowances: Vec<f64>,
}

impl ShiftSchedule {
    pub fn new(discrepancies: Vec<f64>, allowances: Vec<f64>) -> Result<Self> {
        if discrepancies.len() != allowances.len() {
            return Err(Error::LengthMismatch {
                what: "allowances",
                got: allowances.len(),
                expected: discrepancies.len(),
            });
        }
        for &s in &discrepancies {
            non_negative("discrepancy", s)?;
        }
        for &a in &allowances {
            non_negative("allowance", a)?;
        }
        Ok(Self {
            discrepancies,
            allowances,
        })
    }

    pub fn len(&self) -> usize {
        self.discrepancies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.discrepancies.is_empty()
    }

    pub fn discrepancies(&self) -> &[f64] {
        &self.discrepancies
    }

    pub fn allowances(&self) -> &[f64] {
        &self.allowances
    }

    /// Running shifts `z_t = Σ_{i≤t} s_i − Σ_{i≤t} a_i`.
    pub fn shifts(&self) -> Vec<f64> {
        let mut z = 0.0;
        self.discrepancies
            .iter()
            .zip(&self.allowances)
            .map(|(s, a)| {
                z += s - a;
                z
            })
            .collect()
    }

    /// The schedule used for a single changed step at `index` (1-based) of a
    /// length-`len` run: the whole discrepancy is spread evenly over the
    /// remaining steps.
    pub fn single_change(len: usize, index: usize, discrepancy: f64) -> Result<Self> {
        if index == 0 || index > len {
            return Err(invalid("index", format!("must lie in 1..={len}, got {index}")));
        }
        let mut s = vec![0.0; len];
        s[index - 1] = discrepancy;
        let share = discrepancy / (len - index + 1) as f64;
        let a = (1..=len).map(|i| if i >= index { share } else { 0.0 }).collect();
        Self::new(s, a)
    }

    /// The multi-epoch schedule for a change at data index `index` in an
    /// `n`-epoch pass over `n` points (`n²` steps): allowance `D/n` from the
    /// first touch until the last touch, then `D/(n−i+1)` to the end.
    pub fn multiepoch(n: usize, index: usize, discrepancy: f64) -> Result<Self> {
        if index == 0 || index > n {
            return Err(invalid("index", format!("must lie in 1..={n}, got {index}")));
        }
        let steps = n * n;
        let last_touch = n * (n - 1) + index;
        let mut s = vec![0.0; steps];
        let mut a = vec![0.0; steps];
        for t in 1..=steps {
            if t >= index && (t - index).is_multiple_of(n) {
                s[t - 1] = discrepancy;
            }
            a[t - 1] = if t < index {
                0.0
            } else if t < last_touch {
                discrepancy / n as f64
            } else {
                discrepancy / (n - index + 1) as f64
            };
        }
        Self::new(s, a)
    }
}

/// Folds the CNI recursion over `schedule`: a contraction step with
/// discrepancy `s_t` followed by a Gaussian noise step of scale `σ_t` that
/// spends `a_t`. Returns the final shifted budget `(z_T, Σ R_α(ζ_t, a_t))`.
pub fn pai_budget(schedule: &ShiftSchedule, sigmas: &[f64], order: RenyiOrder) -> Result<ShiftedBudget> {
    if sigmas.len() != schedule.len() {
        return Err(Error::LengthMismatch {
            what: "sigmas",
            got: sigmas.len(),
            expected: schedule.len(),
        });
    }
    let mut budget = ShiftedBudget::zero(order);
    let mut injected = 0.0;
    for (t, ((&s, &a), &sigma)) in schedule
        .discrepancies
        .iter()
        .zip(&schedule.allowances)
        .zip(sigmas)
        .enumerate()
    {
        let noise = GaussianNoise::new(sigma, 1)?;
        budget = contraction_step(budget, s)?;
        injected += s;
        budget = shift_reduction_at(budget, a, &noise, t + 1, injected)?;
    }
    Ok(budget)
}

/// `D_α(X_T ‖ X'_T) ≤ Σ_t α a_t² / (2σ_t²)` for a schedule that ends at zero
/// shift. A schedule with leftover shift yields [`Error::ResidualShift`]; use
/// [`pai_budget`] for the shifted statement.
pub fn pai_bound(schedule: &ShiftSchedule, sigmas: &[f64], order: RenyiOrder) -> Result<RenyiBound> {
    let budget = pai_budget(schedule, sigmas, order)?;
    let scale: f64 = schedule.discrepancies.iter().sum();
    if budget.shift > SHIFT_TOLERANCE * scale {
        return Err(Error::ResidualShift(budget.shift));
    }
    RenyiBound::new(order, budget.epsilon)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn double_entry(what: &'static str, closed_form: f64, schedule: f64) -> Result<()> {
    if relative_gap(closed_form, schedule) > DOUBLE_ENTRY_TOLERANCE {
        return Err(Error::DoubleEntry {
            what,
            closed_form,
            schedule,
        });
    }
    Ok(())
}

/// The per-index bound folded from the proof schedule, without the closed
/// form. Exposed so tests can compare the two routes directly.
pub fn per_index_schedule_bound(cfg: &SgdPrivacyConfig, index: usize, order: RenyiOrder) -> Result<f64> {
    cfg.check_index(index)?;
    let schedule = ShiftSchedule::single_change(cfg.n, index, cfg.step_discrepancy())?;
    let sigmas = vec![cfg.iterate_noise(); cfg.n];
    Ok(pai_bound(&schedule, &sigmas, order)?.epsilon)
}

/// PNSGD privacy for the example at 1-based position `index`:
/// `2αL² / (σ² (n + 1 − index))`.
pub fn per_index_pnsgd_rdp(cfg: &SgdPrivacyConfig, index: usize, order: RenyiOrder) -> Result<RenyiBound> {
    cfg.check_index(index)?;
    let closed = cfg.unit_cost(order) / (cfg.n + 1 - index) as f64;
    let folded = per_index_schedule_bound(cfg, index, order)?;
    double_entry("per-index PNSGD", closed, folded)?;
    RenyiBound::new(order, closed)
}

/// Skip-PNSGD carries the same per-index bound as PNSGD; skipping a random
/// prefix can only improve on it, and no sharper value is claimed here.
pub fn skip_pnsgd_rdp(cfg: &SgdPrivacyConfig, index: usize, order: RenyiOrder) -> Result<RenyiBound> {
    per_index_pnsgd_rdp(cfg, index, order)
}

/// `σ ≥ L √(2(α−1)α)`, the noise floor under which every truncated-run
/// divergence is at most `1/(α−1)`.
pub fn stop_noise_floor(lipschitz: f64, order: RenyiOrder) -> f64 {
    let alpha = order.value();
    lipschitz * (2.0 * (alpha - 1.0) * alpha).sqrt()
}

fn check_stop_precondition(cfg: &SgdPrivacyConfig, order: RenyiOrder) -> Result<()> {
    let floor = stop_noise_floor(cfg.lipschitz, order);
    if cfg.sigma < floor {
        return Err(Error::Hypothesis(format!(
            "Stop-PNSGD needs σ ≥ L√(2(α−1)α) = {floor}, got σ = {}",
            cfg.sigma
        )));
    }
    Ok(())
}

/// `4αL² ln n / (nσ²)`, the Stop-PNSGD bound in its printed form.
///
/// This value is *not* implied by the mixture argument: averaging the
/// truncated-run bounds produces the harmonic number `H_{n−t+1}` and
/// `H_m > ln m` for every `m`. See [`stop_pnsgd_rdp`] for the certified
/// value and [`stop_pnsgd_chain`] for the individual steps.
pub fn stop_pnsgd_rdp_stated(cfg: &SgdPrivacyConfig, order: RenyiOrder) -> Result<RenyiBound> {
    check_stop_precondition(cfg, order)?;
    let n = cfg.n as f64;
    RenyiBound::new(order, 2.0 * cfg.unit_cost(order) * n.ln() / n)
}

/// Certified Stop-PNSGD bound: `4αL² H_n / (nσ²)`, the worst index (`t = 1`)
/// of the mixture bound with `c = 1`.
pub fn stop_pnsgd_rdp(cfg: &SgdPrivacyConfig, order: RenyiOrder) -> Result<RenyiBound> {
    check_stop_precondition(cfg, order)?;
    let n = cfg.n as f64;
    RenyiBound::new(order, 2.0 * cfg.unit_cost(order) * harmonic(cfg.n) / n)
}

/// `H_m = 1 + 1/2 + … + 1/m`, summed from the small end.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).rev().map(|k| 1.0 / k as f64).sum()
}

/// The quantities appearing in the Stop-PNSGD derivation for one index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopChain {
    pub index: usize,
    /// Largest truncated-run bound `2αL²/σ²` (attained at `T = t`).
    pub max_component: f64,
    /// `c/(α−1)` with `c = 1`: the weak-convexity admissibility threshold.
    pub admissible: f64,
    /// `(1+c) · E_T[D_α(X_T ‖ X'_T)]` with `T` uniform on `[n]`.
    pub mixture: f64,
    /// `4αL² ln(n−t+1) / (nσ²)`.
    pub log_bound_at_index: f64,
    /// `4αL² ln n / (nσ²)`.
    pub stated: f64,
}

impl StopChain {
    pub fn components_admissible(&self) -> bool {
        self.max_component <= self.admissible
    }

    pub fn mixture_within_stated(&self) -> bool {
        self.mixture <= self.stated
    }
}

/// Evaluates each displayed step of the Stop-PNSGD argument at `index`.
pub fn stop_pnsgd_chain(cfg: &SgdPrivacyConfig, index: usize, order: RenyiOrder) -> Result<StopChain> {
    check_stop_precondition(cfg, order)?;
    cfg.check_index(index)?;
    let unit = cfg.unit_cost(order);
    let n = cfg.n;
    let components: Vec<f64> = (index..=n).map(|t| unit / (t - index + 1) as f64).collect();
    let weights = vec![1.0 / n as f64; components.len()];
    let mixture = mixture_bound_unchecked(&components, &weights, 1.0);
    Ok(StopChain {
        index,
        max_component: unit,
        admissible: 1.0 / (order.value() - 1.0),
        mixture,
        log_bound_at_index: 2.0 * unit * ((n - index + 1) as f64).ln() / n as f64,
        stated: 2.0 * unit * (n as f64).ln() / n as f64,
    })
}

fn mixture_bound_unchecked(components: &[f64], weights: &[f64], c: f64) -> f64 {
    (1.0 + c) * components.iter().zip(weights).map(|(d, w)| d * w).sum::<f64>()
}

/// Weak convexity of Rényi divergence: when every component satisfies
/// `D_α(μ_i ‖ ν_i) ≤ c/(α−1)` with `c ∈ (0, 1]`, the mixtures satisfy
/// `D_α(μ_ρ ‖ ν_ρ) ≤ (1+c) Σ ρ_i D_α(μ_i ‖ ν_i)`.
///
/// `weights` may sum to less than one; the missing mass is a component with
/// divergence zero.
pub fn mixture_divergence_bound(components: &[f64], weights: &[f64], c: f64, order: RenyiOrder) -> Result<f64> {
    if components.len() != weights.len() {
        return Err(Error::LengthMismatch {
            what: "weights",
            got: weights.len(),
            expected: components.len(),
        });
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(invalid("c", format!("must lie in (0, 1], got {c}")));
    }
    let mut total = 0.0;
    for &w in weights {
        non_negative("weight", w)?;
        total += w;
    }
    if total > 1.0 + 1e-12 {
        return Err(invalid("weights", format!("must sum to at most 1, got {total}")));
    }
    let threshold = c / (order.value() - 1.0);
    for &d in components {
        non_negative("component", d)?;
        if d > threshold {
            return Err(Error::Hypothesis(format!(
                "component divergence {d} exceeds c/(α−1) = {threshold}"
            )));
        }
    }
    Ok(mixture_bound_unchecked(components, weights, c))
}

/// The multi-epoch accountant's two candidate values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiepochBound {
    /// `max_i 2αL²/σ² · (n(n−1)/n² + 1/(n−i+1))`, attained at `i = n`.
    pub exact: f64,
    /// `4αL²/σ²`.
    pub stated: f64,
    pub bound: RenyiBound,
}

/// Exact schedule sum for a change at data index `index` in PNMSGD.
pub fn multiepoch_exact_sum(n: usize, index: usize, unit_cost: f64) -> f64 {
    let nf = n as f64;
    unit_cost * ((nf * (nf - 1.0)) / (nf * nf) + 1.0 / (n - index + 1) as f64)
}

/// PNMSGD (`n` fixed-order passes): reports the tighter of the exact sum and
/// the stated `4αL²/σ²`, which is always the exact sum.
pub fn multiepoch_pnmsgd_rdp(cfg: &SgdPrivacyConfig, order: RenyiOrder) -> Result<MultiepochBound> {
    let unit = cfg.unit_cost(order);
    let exact = multiepoch_exact_sum(cfg.n, cfg.n, unit);
    let stated = 2.0 * unit;
    if exact >= stated {
        return Err(Error::Hypothesis(format!(
            "multi-epoch exact sum {exact} is not below the stated bound {stated}"
        )));
    }
    if cfg.n <= MULTIEPOCH_FOLD_LIMIT {
        let schedule = ShiftSchedule::multiepoch(cfg.n, cfg.n, cfg.step_discrepancy())?;
        let sigmas = vec![cfg.iterate_noise(); schedule.len()];
        let folded = pai_bound(&schedule, &sigmas, order)?.epsilon;
        double_entry("multi-epoch PNMSGD", exact, folded)?;
    }
    Ok(MultiepochBound {
        exact,
        stated,
        bound: RenyiBound::new(order, exact)?,
    })
}

/// Local RDP of every PNSGD variant: each released step is a Gaussian
/// mechanism with sensitivity `2L`. Smoothness is not needed.
pub fn local_rdp(lipschitz: f64, sigma: f64, order: RenyiOrder) -> Result<RenyiBound> {
    positive("lipschitz", lipschitz)?;
    positive("sigma", sigma)?;
    RenyiBound::new(order, 2.0 * order.value() * lipschitz * lipschitz / (sigma * sigma))
}

/// Classical Gaussian-mechanism calibration `Δ √(2 ln(1.25/δ)) / ε`.
pub fn gaussian_mechanism_sigma(sensitivity: f64, epsilon: f64, delta: f64) -> Result<f64> {
    positive("sensitivity", sensitivity)?;
    positive("epsilon", epsilon)?;
    unit_interval_open("delta", delta)?;
    Ok(sensitivity * (2.0 * (1.25 / delta).ln()).sqrt() / epsilon)
}

/// Multi-task calibration and the checks behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultitaskParams {
    pub q: f64,
    pub sigma: f64,
    pub eta: f64,
    pub alpha: RenyiOrder,
    /// Per-task Stop-PNSGD RDP in its printed `ln n` form.
    pub per_task_stated: f64,
    /// Per-task certified Stop-PNSGD RDP (harmonic form).
    pub per_task_certified: f64,
    /// `(ε, δ)` from composing `k` stated per-task bounds.
    pub dp_stated: DpParams,
    /// `(ε, δ)` from composing `k` certified per-task bounds.
    pub dp_certified: DpParams,
}

/// Noise and step size for `k` Stop-PNSGD runs on one dataset:
/// `q = max{2k ln n / n, 2 ln(1/δ)}`, `σ = 4L √(q ln(1/δ)) / ε`,
/// `η = 4R / √(n(L² + dσ²))`, `α = σ√ln(1/δ) / (L√q) = 4 ln(1/δ)/ε`.
///
/// Fails when a step of the inequality chain does not hold for the given
/// parameters.
#[allow(clippy::too_many_arguments)]
pub fn multitask_dp(
    n: usize,
    k: usize,
    dim: usize,
    lipschitz: f64,
    radius: f64,
    epsilon: f64,
    delta: f64,
) -> Result<MultitaskParams> {
    if n < 2 {
        return Err(invalid("n", "need at least two examples"));
    }
    if k == 0 {
        return Err(invalid("k", "need at least one task"));
    }
    if dim == 0 {
        return Err(invalid("dim", "dimension must be positive"));
    }
    positive("lipschitz", lipschitz)?;
    positive("radius", radius)?;
    unit_interval_open("epsilon", epsilon)?;
    unit_interval_open("delta", delta)?;
    if delta >= 0.5 {
        return Err(invalid("delta", format!("must lie in (0, 1/2), got {delta}")));
    }
    let nf = n as f64;
    let log_inv_delta = (1.0 / delta).ln();
    let q = multitask_q(n, k, delta);
    let sigma = 4.0 * lipschitz * (q * log_inv_delta).sqrt() / epsilon;
    let eta = 4.0 * radius / (nf * (lipschitz * lipschitz + dim as f64 * sigma * sigma)).sqrt();
    let alpha_value = sigma * log_inv_delta.sqrt() / (lipschitz * q.sqrt());
    let alpha_closed = 4.0 * log_inv_delta / epsilon;
    if relative_gap(alpha_value, alpha_closed) > 1e-12 {
        return Err(Error::DoubleEntry {
            what: "multi-task order",
            closed_form: alpha_closed,
            schedule: alpha_value,
        });
    }
    if alpha_value <= 2.0 {
        return Err(Error::Hypothesis(format!("order α = {alpha_value} must exceed 2")));
    }
    let alpha = RenyiOrder::new(alpha_value)?;
    let floor = stop_noise_floor(lipschitz, alpha);
    if sigma < floor {
        return Err(Error::Hypothesis(format!(
            "σ = {sigma} is below the Stop-PNSGD floor {floor}"
        )));
    }
    let unit = 2.0 * alpha_value * lipschitz * lipschitz / (sigma * sigma);
    let per_task_stated = 2.0 * unit * nf.ln() / nf;
    let per_task_certified = 2.0 * unit * harmonic(n) / nf;
    let dp_stated = rdp_to_dp(RenyiBound::new(alpha, k as f64 * per_task_stated)?, delta)?;
    let dp_certified = rdp_to_dp(RenyiBound::new(alpha, k as f64 * per_task_certified)?, delta)?;
    if dp_stated.epsilon > epsilon * (1.0 + 1e-12) {
        return Err(Error::Hypothesis(format!(
            "composed guarantee ε = {} exceeds the target {epsilon}",
            dp_stated.epsilon
        )));
    }
    Ok(MultitaskParams {
        q,
        sigma,
        eta,
        alpha,
        per_task_stated,
        per_task_certified,
        dp_stated,
        dp_certified,
    })
}

/// `max{2k ln n / n, 2 ln(1/δ)}`.
pub fn multitask_q(n: usize, k: usize, delta: f64) -> f64 {
    let nf = n as f64;
    (2.0 * k as f64 * nf.ln() / nf).max(2.0 * (1.0 / delta).ln())
}

/// Largest `k` for which `q` stays on its `2 ln(1/δ)` branch:
/// `⌊n ln(1/δ) / ln n⌋`.
pub fn multitask_flat_k(n: usize, delta: f64) -> usize {
    let nf = n as f64;
    let mut k = (nf * (1.0 / delta).ln() / nf.ln()).floor() as usize;
    // guard the floor against rounding on either side
    while k > 0 && 2.0 * k as f64 * nf.ln() / nf > 2.0 * (1.0 / delta).ln() {
        k -= 1;
    }
    while 2.0 * (k + 1) as f64 * nf.ln() / nf <= 2.0 * (1.0 / delta).ln() {
        k += 1;
    }
    k
}

/// Logarithmically spaced orders from `1 + 2⁻⁸` to `2¹⁰` (200 points);
/// `α − 1` is spaced evenly in log scale.
pub fn default_alpha_grid() -> Vec<RenyiOrder> {
    alpha_grid(2f64.powi(-8), 2f64.powi(10) - 1.0, 200)
}

/// `points` orders with `α − 1` log-spaced over `[lo, hi]`.
pub fn alpha_grid(lo: f64, hi: f64, points: usize) -> Vec<RenyiOrder> {
    assert!(lo > 0.0 && hi >= lo && points >= 1);
    if points == 1 {
        return vec![RenyiOrder::new(1.0 + lo).expect("order above one")];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (points - 1) as f64;
            RenyiOrder::new(1.0 + x.exp()).expect("order above one")
        })
        .collect()
}

/// Minimises the RDP→DP conversion of an RDP curve over `grid`. Returns the
/// best `(ε, δ)` and the order that attains it.
pub fn tightest_dp<F>(curve: F, delta: f64, grid: &[RenyiOrder]) -> Result<(DpParams, RenyiOrder)>
where
    F: Fn(RenyiOrder) -> f64,
{
    unit_interval_open("delta", delta)?;
    let mut best: Option<(DpParams, RenyiOrder)> = None;
    for &order in grid {
        let dp = rdp_to_dp(RenyiBound::new(order, curve(order))?, delta)?;
        if best.is_none_or(|(b, _)| dp.epsilon < b.epsilon) {
            best = Some((dp, order));
        }
    }
    best.ok_or_else(|| invalid("alpha_grid", "grid must not be empty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(alpha: f64) -> RenyiOrder {
        RenyiOrder::new(alpha).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        relative_gap(a, b)
    }

    #[test]
    fn pai_bound_examples() {
        let a2 = order(2.0);
        let zero = ShiftSchedule::new(vec![0.0; 5], vec![0.0; 5]).unwrap();
        assert_eq!(pai_bound(&zero, &[1.0; 5], a2).unwrap().epsilon, 0.0);

        let (c, sigma, alpha) = (0.8, 1.3, 3.0);
        let spread = ShiftSchedule::new(vec![c, 0.0, 0.0, 0.0], vec![c / 4.0; 4]).unwrap();
        let eps = pai_bound(&spread, &[sigma; 4], order(alpha)).unwrap().epsilon;
        assert!(rel(eps, alpha * c * c / (8.0 * sigma * sigma)) < 1e-14);

        let single = ShiftSchedule::new(vec![c], vec![c]).unwrap();
        let eps = pai_bound(&single, &[sigma], order(alpha)).unwrap().epsilon;
        assert!(rel(eps, alpha * c * c / (2.0 * sigma * sigma)) < 1e-15);
    }

    #[test]
    fn long_schedules_absorb_rounding() {
        for n in [1000, 4096, 10_007] {
            for eta in [0.0123, 0.035_355_339, 0.1 / 3.0] {
                let cfg = SgdPrivacyConfig::new(n, 2.0, 12.43, eta, 1.0).unwrap();
                for t in [1, n / 2, n - 1, n] {
                    per_index_pnsgd_rdp(&cfg, t, order(3.0)).unwrap();
                }
            }
        }
    }

    #[test]
    fn pai_bound_errors() {
        let a2 = order(2.0);
        let early = ShiftSchedule::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(matches!(pai_bound(&early, &[1.0, 1.0], a2), Err(Error::InfeasibleSchedule { step: 1, .. })));
        let partial = ShiftSchedule::new(vec![1.0, 0.0], vec![0.25, 0.25]).unwrap();
        assert!(matches!(pai_bound(&partial, &[1.0, 1.0], a2), Err(Error::ResidualShift(_))));
        let budget = pai_budget(&partial, &[1.0, 1.0], a2).unwrap();
        assert!((budget.shift - 0.5).abs() < 1e-15);
        assert!(matches!(pai_bound(&partial, &[1.0], a2), Err(Error::LengthMismatch { .. })));
        assert!(ShiftSchedule::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn per_index_examples() {
        let a2 = order(2.0);
        let cfg = SgdPrivacyConfig::new(100, 1.0, 4.0, 0.5, 1.0).unwrap();
        let eps = per_index_pnsgd_rdp(&cfg, 51, a2).unwrap().epsilon;
        assert!(rel(eps, 0.005) < 1e-14);
        let last = per_index_pnsgd_rdp(&cfg, 100, a2).unwrap().epsilon;
        assert!(rel(last, 2.0 * 2.0 / 16.0) < 1e-15);
        let first = per_index_pnsgd_rdp(&cfg, 1, a2).unwrap().epsilon;
        assert!(rel(first, 2.0 * 2.0 / (16.0 * 100.0)) < 1e-15);
        assert_eq!(skip_pnsgd_rdp(&cfg, 51, a2).unwrap().epsilon, eps);
        assert!(per_index_pnsgd_rdp(&cfg, 0, a2).is_err());
        assert!(per_index_pnsgd_rdp(&cfg, 101, a2).is_err());
    }

    #[test]
    fn config_rejects_non_contractive_step() {
        assert!(SgdPrivacyConfig::new(10, 1.0, 1.0, 2.0, 1.0).is_ok());
        assert!(matches!(
            SgdPrivacyConfig::new(10, 1.0, 1.0, 2.0001, 1.0),
            Err(Error::Hypothesis(_))
        ));
        assert!(SgdPrivacyConfig::new(0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn stop_examples() {
        let a2 = order(2.0);
        let cfg = SgdPrivacyConfig::new(1, 1.0, 2.0, 0.1, 1.0).unwrap();
        assert_eq!(stop_pnsgd_rdp_stated(&cfg, a2).unwrap().epsilon, 0.0);
        // n = 7 ≈ e²: 4αL² ln n / (nσ²) with σ = 2√2
        let sigma = 2.0 * 2f64.sqrt();
        let cfg = SgdPrivacyConfig::new(7, 1.0, sigma, 0.1, 1.0).unwrap();
        let eps = stop_pnsgd_rdp_stated(&cfg, a2).unwrap().epsilon;
        assert!(rel(eps, 8.0 * 7f64.ln() / (7.0 * 8.0)) < 1e-14);

        let floor = stop_noise_floor(1.0, a2);
        assert_eq!(floor, 2.0);
        let ok = SgdPrivacyConfig::new(10, 1.0, floor, 0.1, 1.0).unwrap();
        assert!(stop_pnsgd_rdp(&ok, a2).is_ok());
        let below = SgdPrivacyConfig::new(10, 1.0, floor * (1.0 - 1e-12), 0.1, 1.0).unwrap();
        assert!(matches!(stop_pnsgd_rdp(&below, a2), Err(Error::Hypothesis(_))));
        assert!(matches!(stop_pnsgd_rdp_stated(&below, a2), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn stop_certified_covers_every_index() {
        let a3 = order(3.0);
        let cfg = SgdPrivacyConfig::new(500, 0.7, 10.0, 0.1, 1.0).unwrap();
        let certified = stop_pnsgd_rdp(&cfg, a3).unwrap().epsilon;
        for t in [1, 2, 17, 250, 499, 500] {
            let chain = stop_pnsgd_chain(&cfg, t, a3).unwrap();
            assert!(chain.components_admissible());
            assert!(chain.mixture <= certified * (1.0 + 1e-12));
        }
        let first = stop_pnsgd_chain(&cfg, 1, a3).unwrap();
        assert!(rel(first.mixture, certified) < 1e-12);
    }

    #[test]
    fn mixture_examples() {
        let a2 = order(2.0);
        assert_eq!(mixture_divergence_bound(&[0.0; 4], &[0.25; 4], 1.0, a2).unwrap(), 0.0);
        let d = 0.6;
        let value = mixture_divergence_bound(&[0.0, d, d, d], &[0.25; 4], 1.0, a2).unwrap();
        assert!(rel(value, 2.0 * 0.75 * d) < 1e-15);
        let c = 0.5;
        let over = c / (2.0 - 1.0) + 1e-9;
        assert!(matches!(
            mixture_divergence_bound(&[over], &[1.0], c, a2),
            Err(Error::Hypothesis(_))
        ));
        assert!(mixture_divergence_bound(&[0.1], &[1.0], 0.0, a2).is_err());
        assert!(mixture_divergence_bound(&[0.1], &[0.7, 0.3], 1.0, a2).is_err());
    }

    #[test]
    fn multiepoch_examples() {
        let a2 = order(2.0);
        let one = SgdPrivacyConfig::new(1, 1.0, 1.0, 0.1, 1.0).unwrap();
        let b = multiepoch_pnmsgd_rdp(&one, a2).unwrap();
        assert!(rel(b.exact, 2.0 * 2.0) < 1e-15);

        let ten = SgdPrivacyConfig::new(10, 1.0, 1.0, 0.1, 1.0).unwrap();
        let b = multiepoch_pnmsgd_rdp(&ten, a2).unwrap();
        assert!(rel(b.exact, 7.6) < 1e-14);
        assert_eq!(b.stated, 8.0);
        assert_eq!(b.bound.epsilon, b.exact);
    }

    #[test]
    fn multiepoch_schedule_is_feasible_for_every_index() {
        let a2 = order(2.0);
        for n in 1..=12 {
            for i in 1..=n {
                let sched = ShiftSchedule::multiepoch(n, i, 0.3).unwrap();
                assert!(sched.shifts().iter().all(|&z| z >= -1e-12));
                let eps = pai_bound(&sched, &vec![0.2; n * n], a2).unwrap().epsilon;
                let unit = 2.0 * 2.0 * (0.3f64 / 2.0).powi(2) / 0.04;
                assert!(rel(eps, multiepoch_exact_sum(n, i, unit)) < 1e-12, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn local_rdp_examples() {
        let a2 = order(2.0);
        assert_eq!(local_rdp(1.0, 2.0, a2).unwrap().epsilon, 1.0);
        let mut last = f64::INFINITY;
        for sigma in [1.0, 10.0, 100.0, 1e4] {
            let eps = local_rdp(1.0, sigma, a2).unwrap().epsilon;
            assert!(eps < last);
            last = eps;
        }
        assert!(last < 1e-7);
    }

    #[test]
    fn local_rdp_gaussian_calibration_converts_below_target() {
        // holds for ε up to ≈0.45 when δ = 1e-2 and beyond for smaller δ
        let grid = default_alpha_grid();
        for &(target, delta) in &[(0.1, 1e-5), (0.25, 1e-5), (0.4, 1e-2), (0.3, 1e-8)] {
            let sigma = gaussian_mechanism_sigma(2.0, target, delta).unwrap();
            let (dp, _) = tightest_dp(|a| local_rdp(1.0, sigma, a).unwrap().epsilon, delta, &grid).unwrap();
            assert!(dp.epsilon <= target, "target {target}: got {}", dp.epsilon);
        }
    }

    #[test]
    fn multitask_examples() {
        let q = multitask_q(1000, 1000, 0.01);
        assert!(rel(q, 2.0 * 1000f64.ln()) < 1e-15);
        assert!(rel(multitask_q(1_000_000, 1, 0.01), 2.0 * 100f64.ln()) < 1e-15);
        let params = multitask_dp(10_000, 3, 5, 1.0, 1.0, 0.5, 1e-3).unwrap();
        assert!(params.alpha.value() > 2.0);
        assert!(rel(params.alpha.value(), 4.0 * 1000f64.ln() / 0.5) < 1e-12);
        assert!(params.dp_stated.epsilon <= 0.5);
        assert!(multitask_dp(10, 1, 1, 1.0, 1.0, 1.0, 0.01).is_err());
        assert!(multitask_dp(10, 1, 1, 1.0, 1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn flat_k_is_the_branch_crossover() {
        for &(n, delta) in &[(1000usize, 0.01), (4096, 1e-5), (50, 0.3)] {
            let k = multitask_flat_k(n, delta);
            assert_eq!(multitask_q(n, k, delta), multitask_q(n, 1, delta));
            assert!(multitask_q(n, k + 1, delta) > multitask_q(n, 1, delta));
        }
    }

    #[test]
    fn tightest_dp_examples() {
        let delta = 1e-5;
        let grid = default_alpha_grid();
        assert_eq!(grid.len(), 200);
        assert!(rel(grid[0].value(), 1.0 + 2f64.powi(-8)) < 1e-14);
        assert!(rel(grid[199].value(), 1024.0) < 1e-12);

        let (dp, best) = tightest_dp(|_| 0.0, delta, &grid).unwrap();
        assert_eq!(best, grid[199]);
        assert!(rel(dp.epsilon, (1.0f64 / delta).ln() / 1023.0) < 1e-12);

        let (a, sigma) = (1.0, 3.0);
        let (dp, _) = tightest_dp(|o| o.value() * a * a / (2.0 * sigma * sigma), delta, &grid).unwrap();
        let log_inv = (1.0f64 / delta).ln();
        let star = 1.0 + sigma * (2.0 * log_inv).sqrt() / a;
        let analytic = star * a * a / (2.0 * sigma * sigma) + log_inv / (star - 1.0);
        assert!(dp.epsilon >= analytic * (1.0 - 1e-12));
        assert!(dp.epsilon <= analytic * 1.001);

        let single = [order(3.0)];
        let (dp, _) = tightest_dp(|_| 0.2, delta, &single).unwrap();
        assert!(rel(dp.epsilon, 0.2 + log_inv / 2.0) < 1e-15);
        assert!(tightest_dp(|_| 0.2, delta, &[]).is_err());
    }
}
