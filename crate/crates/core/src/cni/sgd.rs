use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::{derive_seed, GaussianStream, Purpose};
use super::{ConvexSet, Example, GradientOracle};
use crate::error::{finite, invalid, non_negative, positive};
use crate::{Error, Result};

/// Run parameters: `eta` is the step size, `sigma` the scale of the Gaussian
/// added to each gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdRunConfig {
    pub eta: f64,
    pub sigma: f64,
    pub w0: Vec<f64>,
    pub seed: u64,
}

impl SgdRunConfig {
    pub fn new(eta: f64, sigma: f64, w0: Vec<f64>, seed: u64) -> Result<Self> {
        positive("eta", eta)?;
        non_negative("sigma", sigma)?;
        if w0.is_empty() {
            return Err(invalid("w0", "dimension must be positive"));
        }
        for &v in &w0 {
            finite("w0", v)?;
        }
        Ok(Self { eta, sigma, w0, seed })
    }
}

/// `η ≤ 2/β`: the gradient step is a contraction and the privacy accountants
/// apply. Non-smooth oracles never qualify.
pub fn amplification_applies<O: GradientOracle + ?Sized>(loss: &O, eta: f64) -> bool {
    match loss.smoothness() {
        Some(beta) => beta == 0.0 || eta <= 2.0 / beta,
        None => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Pnsgd,
    Skip,
    Stop,
    Pnmsgd,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pnsgd" => Ok(Self::Pnsgd),
            "skip" => Ok(Self::Skip),
            "stop" => Ok(Self::Stop),
            "pnmsgd" => Ok(Self::Pnmsgd),
            other => Err(invalid("variant", format!("unknown variant `{other}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pnsgd => "pnsgd",
            Self::Skip => "skip",
            Self::Stop => "stop",
            Self::Pnmsgd => "pnmsgd",
        })
    }
}

/// Final iterate plus the bookkeeping needed for RNG and order audits.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub w: Vec<f64>,
    pub steps: usize,
    pub gaussian_draws: u64,
    pub index_draws: u64,
    /// Examples skipped before the first update (Skip-PNSGD).
    pub skipped: usize,
}

struct Engine<'a, O: ?Sized> {
    loss: &'a O,
    set: &'a ConvexSet,
    cfg: &'a SgdRunConfig,
    noise: GaussianStream,
    aux: ChaCha8Rng,
    w: Vec<f64>,
    grad: Vec<f64>,
    z: Vec<f64>,
    steps: usize,
}

impl<'a, O: GradientOracle + ?Sized> Engine<'a, O> {
    fn new(loss: &'a O, set: &'a ConvexSet, cfg: &'a SgdRunConfig) -> Result<Self> {
        let d = loss.dim();
        for got in [set.dim(), cfg.w0.len()] {
            if got != d {
                return Err(Error::DimensionMismatch { expected: d, got });
            }
        }
        Ok(Self {
            loss,
            set,
            cfg,
            noise: GaussianStream::new(cfg.seed, Purpose::PrivacyNoise),
            aux: ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Purpose::Smoothing as u64)),
            w: set.project(&cfg.w0)?,
            grad: vec![0.0; d],
            z: vec![0.0; d],
            steps: 0,
        })
    }

    /// `w ← Π_K(w − η(∇f(w, x) + Z))` with `Z ~ N(0, σ² I)` from the stream
    /// of the current step.
    fn step(&mut self, x: &Example) -> Result<()> {
        if x.features.len() != self.loss.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.loss.dim(),
                got: x.features.len(),
            });
        }
        self.steps += 1;
        let t = self.steps as u64;
        self.aux.set_stream(t);
        self.aux.set_word_pos(0);
        self.loss.sample_gradient(&self.w, x, &mut self.aux, &mut self.grad);
        self.noise.at_step(t).fill(&mut self.z);
        let (eta, sigma) = (self.cfg.eta, self.cfg.sigma);
        for ((w, g), z) in self.w.iter_mut().zip(&self.grad).zip(&self.z) {
            *w -= eta * (g + sigma * z);
        }
        self.set.project_in_place(&mut self.w)?;
        debug_assert!(self.set.contains(&self.w, 1e-9), "iterate left the feasible set");
        Ok(())
    }

    fn finish(self, index_draws: u64, skipped: usize) -> RunOutcome {
        RunOutcome {
            w: self.w,
            steps: self.steps,
            gaussian_draws: self.noise.draws(),
            index_draws,
            skipped,
        }
    }
}

fn nonempty(data: &[Example]) -> Result<()> {
    if data.is_empty() {
        Err(invalid("data", "need at least one example"))
    } else {
        Ok(())
    }
}

fn run_sequence<'e, O, I>(loss: &O, set: &ConvexSet, cfg: &SgdRunConfig, examples: I, index_draws: u64, skipped: usize) -> Result<RunOutcome>
where
    O: GradientOracle + ?Sized,
    I: IntoIterator<Item = &'e Example>,
{
    let mut engine = Engine::new(loss, set, cfg)?;
    for x in examples {
        engine.step(x)?;
    }
    Ok(engine.finish(index_draws, skipped))
}

/// Projected noisy SGD: one pass over `data` in the given order.
pub fn pnsgd<O: GradientOracle + ?Sized>(data: &[Example], loss: &O, set: &ConvexSet, cfg: &SgdRunConfig) -> Result<RunOutcome> {
    nonempty(data)?;
    run_sequence(loss, set, cfg, data, 0, 0)
}

/// Offset `t₀` uniform on `{0, …, ⌊n/2⌋}` drawn from the index stream.
pub fn skip_offset(seed: u64, n: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Purpose::IndexDraw as u64));
    rng.gen_range(0..=n / 2)
}

/// Stopping time `T` uniform on `{1, …, n}` drawn from the index stream.
pub fn stop_time(seed: u64, n: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Purpose::IndexDraw as u64));
    rng.gen_range(1..=n)
}

/// Skip-PNSGD: skips a uniformly random prefix of length `t₀ ≤ ⌊n/2⌋`.
pub fn skip_pnsgd<O: GradientOracle + ?Sized>(data: &[Example], loss: &O, set: &ConvexSet, cfg: &SgdRunConfig) -> Result<RunOutcome> {
    nonempty(data)?;
    let t0 = skip_offset(cfg.seed, data.len());
    run_sequence(loss, set, cfg, &data[t0..], 1, t0)
}

/// Skip-PNSGD with a caller-chosen offset.
pub fn skip_pnsgd_with_offset<O: GradientOracle + ?Sized>(
    data: &[Example],
    loss: &O,
    set: &ConvexSet,
    cfg: &SgdRunConfig,
    t0: usize,
) -> Result<RunOutcome> {
    nonempty(data)?;
    if t0 > data.len() / 2 {
        return Err(invalid("t0", format!("must be at most ⌊n/2⌋ = {}", data.len() / 2)));
    }
    run_sequence(loss, set, cfg, &data[t0..], 0, t0)
}

/// Stop-PNSGD: runs a uniformly random number `T ∈ [n]` of steps.
pub fn stop_pnsgd<O: GradientOracle + ?Sized>(data: &[Example], loss: &O, set: &ConvexSet, cfg: &SgdRunConfig) -> Result<RunOutcome> {
    nonempty(data)?;
    let t = stop_time(cfg.seed, data.len());
    run_sequence(loss, set, cfg, &data[..t], 1, 0)
}

/// Stop-PNSGD with a caller-chosen stopping time.
pub fn stop_pnsgd_at<O: GradientOracle + ?Sized>(
    data: &[Example],
    loss: &O,
    set: &ConvexSet,
    cfg: &SgdRunConfig,
    stop: usize,
) -> Result<RunOutcome> {
    nonempty(data)?;
    if stop == 0 || stop > data.len() {
        return Err(invalid("stop", format!("must lie in 1..={}", data.len())));
    }
    run_sequence(loss, set, cfg, &data[..stop], 0, 0)
}

/// Multi-epoch PNSGD: `n` passes over the data in fixed order (`n²` steps).
pub fn pnmsgd<O: GradientOracle + ?Sized>(data: &[Example], loss: &O, set: &ConvexSet, cfg: &SgdRunConfig) -> Result<RunOutcome> {
    nonempty(data)?;
    let n = data.len();
    run_sequence(loss, set, cfg, (0..n).flat_map(|_| data.iter()), 0, 0)
}

pub fn run_variant<O: GradientOracle + ?Sized>(
    variant: Variant,
    data: &[Example],
    loss: &O,
    set: &ConvexSet,
    cfg: &SgdRunConfig,
) -> Result<RunOutcome> {
    match variant {
        Variant::Pnsgd => pnsgd(data, loss, set, cfg),
        Variant::Skip => skip_pnsgd(data, loss, set, cfg),
        Variant::Stop => stop_pnsgd(data, loss, set, cfg),
        Variant::Pnmsgd => pnmsgd(data, loss, set, cfg),
    }
}
