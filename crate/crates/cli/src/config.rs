//! Experiment parameters, the key-value config format and sweeps.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use pai_core::cni::Variant;
use serde::Serialize;

/// Environment variable naming the directory for relative output paths.
pub const OUTPUT_DIR_ENV: &str = "PAI_OUTPUT_DIR";

/// Synthetic learning task; each has an analytically known population loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Huber loss of the distance to a point on a sphere shell.
    Huber,
    LeastSquares,
    Logistic,
    /// Distance hinge on a sphere shell, meant to go through smoothing.
    HingeSmoothed,
    /// Constant loss; every output is optimal.
    Constant,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Huber => "huber",
            Task::LeastSquares => "least-squares",
            Task::Logistic => "logistic",
            Task::HingeSmoothed => "hinge-smoothed",
            Task::Constant => "constant",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "huber" => Task::Huber,
            "least-squares" | "ls" => Task::LeastSquares,
            "logistic" => Task::Logistic,
            "hinge-smoothed" | "hinge" => Task::HingeSmoothed,
            "constant" => Task::Constant,
            other => bail!("unknown task `{other}` (huber, least-squares, logistic, hinge-smoothed, constant)"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Baseline,
    PerPerson,
    PublicPrivate,
    Multitask,
    Smoothing,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Baseline => "baseline",
            Experiment::PerPerson => "per-person",
            Experiment::PublicPrivate => "public-private",
            Experiment::Multitask => "multitask",
            Experiment::Smoothing => "smoothing",
        }
    }

    /// The algorithm whose utility guarantee the experiment checks.
    pub fn variant(self) -> Variant {
        match self {
            Experiment::Baseline | Experiment::Multitask => Variant::Stop,
            Experiment::PerPerson | Experiment::PublicPrivate | Experiment::Smoothing => Variant::Skip,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub m_public: usize,
    pub radius: f64,
    pub lipschitz: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    /// Must match the experiment's algorithm when set.
    pub variant: Option<Variant>,
    pub output_path: Option<PathBuf>,
    /// Subgradient samples per smoothed gradient.
    pub mc_samples: usize,
    /// Overrides the smoothing radius of the smoothing experiment.
    pub lambda: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Huber,
            n: 1 << 12,
            d: 8,
            k: 1,
            m_public: 0,
            radius: 10.0,
            lipschitz: 1.0,
            epsilon: 1.0,
            delta: 0.01,
            trials: 100,
            seed: 0,
            variant: None,
            output_path: None,
            mc_samples: 1,
            lambda: None,
        }
    }
}

/// Fewest trials behind any reported mean.
pub const MIN_TRIALS: usize = 30;

impl ExperimentConfig {
    /// Checks ranges that every experiment needs. Analysis-specific
    /// hypotheses are checked by the experiment itself.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            bail!("n must be at least 2, got {}", self.n);
        }
        if self.d == 0 {
            bail!("d must be positive");
        }
        if self.k == 0 {
            bail!("k must be positive");
        }
        for (name, v) in [("R", self.radius), ("L", self.lipschitz), ("epsilon", self.epsilon)] {
            if !(v.is_finite() && v > 0.0) {
                bail!("{name} must be positive and finite, got {v}");
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bail!("delta must lie in (0, 1), got {}", self.delta);
        }
        if self.trials < MIN_TRIALS {
            bail!("need at least {MIN_TRIALS} trials for a standard error, got {}", self.trials);
        }
        if self.mc_samples == 0 {
            bail!("mc_samples must be positive");
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                bail!("lambda must be positive, got {l}");
            }
        }
        Ok(())
    }

    /// Sets one field from its config-file spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let ctx = || format!("bad value `{v}` for `{key}`");
        match normalize_key(key).as_str() {
            "task" => self.task = v.parse()?,
            "n" => self.n = v.parse().with_context(ctx)?,
            "d" => self.d = v.parse().with_context(ctx)?,
            "k" => self.k = v.parse().with_context(ctx)?,
            "m_public" => self.m_public = v.parse().with_context(ctx)?,
            "radius" => self.radius = v.parse().with_context(ctx)?,
            "lipschitz" => self.lipschitz = v.parse().with_context(ctx)?,
            "epsilon" => self.epsilon = v.parse().with_context(ctx)?,
            "delta" => self.delta = v.parse().with_context(ctx)?,
            "trials" => self.trials = v.parse().with_context(ctx)?,
            "seed" => self.seed = v.parse().with_context(ctx)?,
            "variant" => self.variant = Some(v.parse().map_err(|e| anyhow!("{e}"))?),
            "output_path" => self.output_path = Some(PathBuf::from(v)),
            "mc_samples" => self.mc_samples = v.parse().with_context(ctx)?,
            "lambda" => self.lambda = Some(v.parse().with_context(ctx)?),
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Where results go: `output_path`, else `<experiment>.csv`, resolved
    /// against `$PAI_OUTPUT_DIR` when relative.
    pub fn resolved_output(&self, experiment: Experiment) -> PathBuf {
        let path = self
            .output_path
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.as_str())));
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if path.is_relative() => Path::new(&dir).join(path),
            _ => path,
        }
    }
}

fn normalize_key(key: &str) -> String {
    let k = key.trim().replace('-', "_");
    match k.as_str() {
        "R" | "r" => "radius".into(),
        "L" | "l" => "lipschitz".into(),
        "eps" => "epsilon".into(),
        "output" => "output_path".into(),
        "m" => "m_public".into(),
        _ => k.to_ascii_lowercase(),
    }
}

/// A base config plus integer sweeps over `n`, `d`, `k` or `m_public`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub base: ExperimentConfig,
    pub sweeps: Vec<(String, Vec<usize>)>,
}

impl Plan {
    pub fn new(base: ExperimentConfig) -> Self {
        Self { base, sweeps: Vec::new() }
    }

    /// Like [`ExperimentConfig::set`], but a comma-separated value for an
    /// integer size becomes a sweep.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let name = normalize_key(key);
        if value.contains(',') && matches!(name.as_str(), "n" | "d" | "k" | "m_public") {
            let values = value
                .split(',')
                .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad value `{s}` for `{name}`")))
                .collect::<Result<Vec<_>>>()?;
            self.sweeps.retain(|(k, _)| *k != name);
            self.sweeps.push((name, values));
            Ok(())
        } else {
            self.sweeps.retain(|(k, _)| *k != name);
            self.base.set(key, value)
        }
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            self.set(key, value).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_text(&text)
    }

    /// Every combination of the sweeps, in sweep order.
    pub fn configs(&self) -> Result<Vec<ExperimentConfig>> {
        let mut out = vec![self.base.clone()];
        for (key, values) in &self.sweeps {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for cfg in &out {
                for v in values {
                    let mut c = cfg.clone();
                    c.set(key, &v.to_string())?;
                    next.push(c);
                }
            }
            out = next;
        }
        Ok(out)
    }
}
