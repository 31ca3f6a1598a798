//! One-dimensional ground truth for the divergence accounting.
//!
//! Densities live on a uniform grid of cells. A CNI step pushes each cell's
//! mass to the image of its midpoint, shared linearly between the two nearest
//! midpoints, and then convolves with a sampled Gaussian kernel. Rényi divergences between two grid
//! densities are evaluated in log space.
//!
//! Gaussian noise has full support but the sampled kernel is truncated where
//! its weight drops below `1e-300`. Before two densities are compared, both
//! receive the same per-cell floor of [`TAIL_FLOOR`] and are renormalised.
//! That is a common mixture channel, so it can only lower the divergence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accountant::{pai_bound, ShiftSchedule};
use crate::cni::derive_seed;
use crate::divergence::{shifted_gaussian_upper, RenyiOrder};
use crate::error::{finite, invalid, non_negative, positive};
use crate::{Error, Result};

pub const MIN_CELLS: usize = 64;
pub const MAX_CELLS: usize = 1 << 14;
/// Default bound on mass lost off the grid over a whole propagation.
pub const TRUNCATION_BUDGET: f64 = 1e-12;
pub const TAIL_FLOOR: f64 = 1e-300;
/// Relative slack of the bound check.
pub const BOUND_SLACK: f64 = 1e-3;
/// Absolute slack of the bound check.
pub const BOUND_FLOOR: f64 = 1e-6;
/// Required oracle/bound ratio in the identity-map configuration.
pub const TIGHTNESS_RATIO: f64 = 0.99;
/// Tightness is only checked when `α·gap/(σ√T)` is below this; beyond it the
/// dominant part of the Rényi integral lies past the kernel truncation.
pub const RESOLVABLE_TILT: f64 = 30.0;

/// Probability masses on `m` equal cells covering `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    lo: f64,
    hi: f64,
    mass: Vec<f64>,
}

impl GridDensity {
    pub fn new(lo: f64, hi: f64, mass: Vec<f64>) -> Result<Self> {
        check_grid(lo, hi, mass.len())?;
        let mut total = 0.0;
        for &p in &mass {
            non_negative("mass", p)?;
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("mass", format!("must sum to 1, got {total}")));
        }
        Ok(Self { lo, hi, mass })
    }

    /// All mass in the cell containing `x` (clamped to the grid).
    pub fn point_mass(lo: f64, hi: f64, m: usize, x: f64) -> Result<Self> {
        check_grid(lo, hi, m)?;
        let mut mass = vec![0.0; m];
        let h = (hi - lo) / m as f64;
        mass[cell_of(x, lo, h, m)] = 1.0;
        Ok(Self { lo, hi, mass })
    }

    /// `N(mean, σ²)` sampled at cell midpoints and normalised.
    pub fn gaussian(lo: f64, hi: f64, m: usize, mean: f64, sigma: f64) -> Result<Self> {
        check_grid(lo, hi, m)?;
        finite("mean", mean)?;
        positive("sigma", sigma)?;
        let h = (hi - lo) / m as f64;
        let mut mass: Vec<f64> = (0..m)
            .map(|i| {
                let u = (lo + (i as f64 + 0.5) * h - mean) / sigma;
                (-0.5 * u * u).exp()
            })
            .collect();
        let total: f64 = mass.iter().sum();
        if total == 0.0 {
            return Err(invalid("mean", "Gaussian has no representable mass on the grid"));
        }
        mass.iter_mut().for_each(|p| *p /= total);
        Ok(Self { lo, hi, mass })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }
    pub fn cells(&self) -> usize {
        self.mass.len()
    }
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.mass.len() as f64
    }
    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.cell_width()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(i, p)| p * self.center(i)).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.mass
            .iter()
            .enumerate()
            .map(|(i, p)| p * (self.center(i) - mu).powi(2))
            .sum()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.mass.len() == other.mass.len()
    }

    /// Moves each cell's mass to `map(midpoint)`, split linearly between the
    /// two nearest midpoints. Images outside the grid are dropped and their
    /// mass returned.
    pub fn pushforward(&self, map: &Contraction1D) -> (Self, f64) {
        let m = self.cells();
        let h = self.cell_width();
        let mut out = vec![0.0; m];
        let mut lost = 0.0;
        for (i, &p) in self.mass.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let y = map.apply(self.center(i));
            if y < self.lo || y > self.hi {
                lost += p;
                continue;
            }
            let u = (y - self.lo) / h - 0.5;
            if u <= 0.0 {
                out[0] += p;
            } else if u >= (m - 1) as f64 {
                out[m - 1] += p;
            } else {
                let j = u.floor();
                let frac = u - j;
                let j = j as usize;
                out[j] += p * (1.0 - frac);
                out[j + 1] += p * frac;
            }
        }
        (
            Self {
                lo: self.lo,
                hi: self.hi,
                mass: out,
            },
            lost,
        )
    }

    /// Convolves with the sampled `N(0, σ²)` kernel. Mass leaving the grid is
    /// dropped and returned.
    pub fn convolve_gaussian(&self, sigma: f64) -> (Self, f64) {
        let kernel = gaussian_kernel(sigma, self.cell_width());
        let half = kernel.len() / 2;
        let m = self.cells();
        let mut out = vec![0.0; m];
        let mut lost = 0.0;
        for (i, &p) in self.mass.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            // target cells i - half ..= i + half, clipped to the grid
            let k_lo = half.saturating_sub(i);
            let k_hi = kernel.len().min(m + half - i);
            let j_lo = i + k_lo - half;
            let weights = &kernel[k_lo..k_hi];
            let inside: f64 = if k_lo == 0 && k_hi == kernel.len() { 1.0 } else { weights.iter().sum() };
            lost += p * (1.0 - inside).max(0.0);
            for (o, w) in out[j_lo..j_lo + weights.len()].iter_mut().zip(weights) {
                *o += p * w;
            }
        }
        (
            Self {
                lo: self.lo,
                hi: self.hi,
                mass: out,
            },
            lost,
        )
    }

    fn renormalised(mut self) -> Result<Self> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::TruncationExceeded {
                truncated: 1.0,
                budget: TRUNCATION_BUDGET,
            });
        }
        self.mass.iter_mut().for_each(|p| *p /= total);
        Ok(self)
    }

    /// Mixes with the same per-cell floor used before every comparison.
    pub fn with_tail_floor(&self) -> Self {
        let mut mass: Vec<f64> = self.mass.iter().map(|p| p + TAIL_FLOOR).collect();
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|p| *p /= total);
        Self {
            lo: self.lo,
            hi: self.hi,
            mass,
        }
    }
}

fn check_grid(lo: f64, hi: f64, m: usize) -> Result<()> {
    finite("lo", lo)?;
    finite("hi", hi)?;
    if hi <= lo {
        return Err(invalid("hi", "must exceed lo"));
    }
    if m < MIN_CELLS {
        return Err(invalid("cells", format!("need at least {MIN_CELLS}, got {m}")));
    }
    Ok(())
}

fn cell_of(x: f64, lo: f64, h: f64, m: usize) -> usize {
    let i = ((x - lo) / h).floor();
    if i < 0.0 {
        0
    } else {
        (i as usize).min(m - 1)
    }
}

/// Sampled `N(0, σ²)` on cell offsets `−k..=k`, normalised, with `k` the
/// last offset whose weight exceeds `1e-300`.
fn gaussian_kernel(sigma: f64, h: f64) -> Vec<f64> {
    let reach = sigma / h * (2.0 * 300.0 * std::f64::consts::LN_10).sqrt();
    let k = reach.floor() as isize;
    let mut w: Vec<f64> = (-k..=k)
        .map(|j| {
            let u = j as f64 * h / sigma;
            (-0.5 * u * u).exp()
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Scalar convex loss whose gradient step defines a 1-D contraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case")]
pub enum ScalarLoss {
    /// `β(x − c)²/2`.
    Quadratic { center: f64, curvature: f64 },
    /// `huber_δ(x − c)`, 1-smooth.
    Huber { center: f64, threshold: f64 },
    /// `ln(1 + e^{x − c})`, 1/4-smooth.
    Softplus { center: f64 },
}

impl ScalarLoss {
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Quadratic { center, curvature } => curvature * (x - center),
            Self::Huber { center, threshold } => (x - center).clamp(-threshold, threshold),
            Self::Softplus { center } => {
                let z = x - center;
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    pub fn smoothness(&self) -> f64 {
        match *self {
            Self::Quadratic { curvature, .. } => curvature,
            Self::Huber { .. } => 1.0,
            Self::Softplus { .. } => 0.25,
        }
    }
}

/// A 1-Lipschitz map of the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contraction1D {
    Identity,
    /// Projection onto `[lo, hi]`.
    Clamp { lo: f64, hi: f64 },
    /// `x ↦ c·x` with `c ∈ [0, 1]`.
    Scale { c: f64 },
    /// `x ↦ x − η f′(x)` with `η ≤ 2/β`.
    GradStep { eta: f64, loss: ScalarLoss },
}

impl Contraction1D {
    pub fn clamp(lo: f64, hi: f64) -> Result<Self> {
        finite("lo", lo)?;
        finite("hi", hi)?;
        if lo > hi {
            return Err(invalid("clamp", "lo exceeds hi"));
        }
        Ok(Self::Clamp { lo, hi })
    }

    pub fn scale(c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(invalid("c", format!("must lie in [0, 1], got {c}")));
        }
        Ok(Self::Scale { c })
    }

    pub fn grad_step(eta: f64, loss: ScalarLoss) -> Result<Self> {
        positive("eta", eta)?;
        let beta = loss.smoothness();
        if beta > 0.0 && eta > 2.0 / beta {
            return Err(Error::Hypothesis(format!("η = {eta} exceeds 2/β = {}", 2.0 / beta)));
        }
        Ok(Self::GradStep { eta, loss })
    }

    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => x,
            Self::Clamp { lo, hi } => x.clamp(lo, hi),
            Self::Scale { c } => c * x,
            Self::GradStep { eta, loss } => x - eta * loss.derivative(x),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }

    /// Largest `|ψ(x_{i+1}) − ψ(x_i)| / h` over adjacent midpoints.
    pub fn max_grid_slope(&self, lo: f64, hi: f64, m: usize) -> f64 {
        let h = (hi - lo) / m as f64;
        let mut prev = self.apply(lo + 0.5 * h);
        let mut worst: f64 = 0.0;
        for i in 1..m {
            let y = self.apply(lo + (i as f64 + 0.5) * h);
            worst = worst.max((y - prev).abs() / h);
            prev = y;
        }
        worst
    }

    pub fn check_on_grid(&self, lo: f64, hi: f64, m: usize) -> Result<()> {
        let slope = self.max_grid_slope(lo, hi, m);
        if slope > 1.0 + 1e-9 {
            return Err(Error::Hypothesis(format!("map {self:?} has grid slope {slope} > 1")));
        }
        Ok(())
    }
}

/// Result of a propagation: the final density and the mass dropped off the
/// grid along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub density: GridDensity,
    pub truncated: f64,
}

/// Each step applies the map then adds `N(0, σ²)`; the density is
/// renormalised after every step.
pub fn propagate(d0: &GridDensity, maps: &[Contraction1D], sigma: f64) -> Result<Propagated> {
    propagate_with_budget(d0, maps, sigma, TRUNCATION_BUDGET)
}

pub fn propagate_with_budget(d0: &GridDensity, maps: &[Contraction1D], sigma: f64, budget: f64) -> Result<Propagated> {
    positive("sigma", sigma)?;
    let mut density = d0.clone();
    let mut truncated = 0.0;
    for map in maps {
        let (pushed, lost_map) = density.pushforward(map);
        let (convolved, lost_noise) = pushed.convolve_gaussian(sigma);
        truncated += lost_map + lost_noise;
        if truncated > budget {
            return Err(Error::TruncationExceeded { truncated, budget });
        }
        density = convolved.renormalised()?;
    }
    Ok(Propagated { density, truncated })
}

/// Propagation from the point `x0`. The first map is applied to `x0` exactly
/// and the first noise is sampled around the exact image, so no rounding
/// happens before the first convolution.
pub fn propagate_point(lo: f64, hi: f64, m: usize, x0: f64, maps: &[Contraction1D], sigma: f64) -> Result<Propagated> {
    let Some((first, rest)) = maps.split_first() else {
        return Ok(Propagated {
            density: GridDensity::point_mass(lo, hi, m, x0)?,
            truncated: 0.0,
        });
    };
    let centre = first.apply(x0);
    let start = GridDensity::gaussian(lo, hi, m, centre, sigma)?;
    let edge = (centre - lo).min(hi - centre) / sigma;
    let first_loss = if edge > 38.0 { 0.0 } else { 0.5 * erfc(edge / std::f64::consts::SQRT_2) };
    let mut out = propagate(&start, rest, sigma)?;
    out.truncated += first_loss;
    if out.truncated > TRUNCATION_BUDGET {
        return Err(Error::TruncationExceeded {
            truncated: out.truncated,
            budget: TRUNCATION_BUDGET,
        });
    }
    Ok(out)
}

/// Complementary error function (Numerical Recipes `erfcc`, relative error
/// below 1.2e-7), enough for truncation bookkeeping.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// `1/(α−1) · ln Σ p_i^α q_i^{1−α}`, or `+∞` when some cell has `p > 0` and
/// `q = 0`.
pub fn renyi_on_grid(p: &GridDensity, q: &GridDensity, order: RenyiOrder) -> Result<f64> {
    if !p.same_grid(q) {
        return Err(Error::GridMismatch(format!(
            "[{}, {}]×{} vs [{}, {}]×{}",
            p.lo,
            p.hi,
            p.cells(),
            q.lo,
            q.hi,
            q.cells()
        )));
    }
    let alpha = order.value();
    let mut terms = Vec::with_capacity(p.cells());
    for (&pi, &qi) in p.mass.iter().zip(&q.mass) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push(alpha * pi.ln() + (1.0 - alpha) * qi.ln());
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    Ok(((top + sum.ln()) / (alpha - 1.0)).max(0.0))
}

/// A grid fine enough for noise `σ` over `T` steps on `[-support, support]`:
/// the smallest power of two (at least [`MIN_CELLS`], at most
/// [`MAX_CELLS`]) with cell width at most `σ/16`.
pub fn grid_for(support: f64, sigma: f64) -> usize {
    let mut m = MIN_CELLS;
    while m < MAX_CELLS && 2.0 * support / m as f64 > sigma / 16.0 {
        m *= 2;
    }
    m
}

/// Outcome of one oracle-versus-accountant comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaiReport {
    pub oracle: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
    /// `Some(passed)` when the identity-map tightness check applied.
    pub tight: Option<bool>,
    pub truncated: f64,
    pub cells: usize,
}

/// Compares the grid divergence between two CNI runs started at `x0` and
/// `x0p` against the accountant bound for `schedule`.
///
/// The schedule must put the whole discrepancy `|x0 − x0p|` at step one. For
/// all-identity maps with equal allowances the bound is attained and the
/// ratio is also required to reach [`TIGHTNESS_RATIO`] when the configuration
/// is resolvable on the grid.
pub fn verify_pai_1d(
    x0: f64,
    x0p: f64,
    maps: &[Contraction1D],
    sigma: f64,
    order: RenyiOrder,
    schedule: &ShiftSchedule,
) -> Result<PaiReport> {
    verify_pai_1d_scaled(x0, x0p, maps, sigma, order, schedule, 1.0)
}

fn verify_pai_1d_scaled(
    x0: f64,
    x0p: f64,
    maps: &[Contraction1D],
    sigma: f64,
    order: RenyiOrder,
    schedule: &ShiftSchedule,
    bound_scale: f64,
) -> Result<PaiReport> {
    finite("x0", x0)?;
    finite("x0p", x0p)?;
    positive("sigma", sigma)?;
    let steps = maps.len();
    if schedule.len() != steps || steps == 0 {
        return Err(Error::LengthMismatch {
            what: "schedule",
            got: schedule.len(),
            expected: steps,
        });
    }
    let gap = (x0 - x0p).abs();
    let s = schedule.discrepancies();
    if (s[0] - gap).abs() > 1e-12 * gap.max(1.0) || s[1..].iter().any(|&v| v != 0.0) {
        return Err(invalid("schedule", "discrepancy must be |x0 − x0p| at step one and zero after"));
    }
    let bound = pai_bound(schedule, &vec![sigma; steps], order)?.epsilon * bound_scale;

    let alpha = order.value();
    let spread = sigma * (steps as f64).sqrt();
    let support = oracle_support(x0, x0p, steps, sigma, order);
    let m = grid_for(support, sigma);
    let (oracle, truncated) = oracle_on(x0, x0p, maps, sigma, order, support, m)?;

    let pass = oracle <= bound * (1.0 + BOUND_SLACK) + BOUND_FLOOR;
    let ratio = if bound > 0.0 { oracle / bound } else if oracle == 0.0 { 1.0 } else { f64::INFINITY };
    let a = schedule.allowances();
    let equal = a.iter().all(|&v| (v - a[0]).abs() <= 1e-12 * a[0].max(1e-300));
    let resolvable = alpha * gap / spread <= RESOLVABLE_TILT;
    let tight = (maps.iter().all(Contraction1D::is_identity) && equal && gap > 0.0 && resolvable)
        .then_some(ratio >= TIGHTNESS_RATIO);
    Ok(PaiReport {
        oracle,
        bound,
        ratio,
        pass: pass && tight.unwrap_or(true),
        tight,
        truncated,
        cells: m,
    })
}

/// Half-width of the symmetric grid used for two runs from `x0` and `x0p`:
/// room for the tilted region `α·gap` and for the kernel reach.
pub fn oracle_support(x0: f64, x0p: f64, steps: usize, sigma: f64, order: RenyiOrder) -> f64 {
    let gap = (x0 - x0p).abs();
    x0.abs().max(x0p.abs()) + order.value() * gap + 8.0 * sigma * (steps as f64).sqrt() + 40.0 * sigma
}

/// Grid Rényi divergence between the two runs on `[-support, support]` with
/// `m` cells. Returns the divergence and the larger truncated mass.
pub fn oracle_on(
    x0: f64,
    x0p: f64,
    maps: &[Contraction1D],
    sigma: f64,
    order: RenyiOrder,
    support: f64,
    m: usize,
) -> Result<(f64, f64)> {
    for map in maps {
        map.check_on_grid(-support, support, m)?;
    }
    let p = propagate_point(-support, support, m, x0, maps, sigma)?;
    let q = propagate_point(-support, support, m, x0p, maps, sigma)?;
    let d = renyi_on_grid(&p.density.with_tail_floor(), &q.density.with_tail_floor(), order)?;
    Ok((d, p.truncated.max(q.truncated)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftReductionReport {
    pub left: f64,
    pub right: f64,
    pub pass: bool,
}

/// Shift-reduction for two point masses `0` and `gap`: the translation
/// coupling bound on `D^{(z)}` after noise against `D^{(z+a)}` before noise
/// (zero when `gap ≤ z + a`, infinite otherwise) plus `αa²/(2σ²)`.
pub fn verify_shift_reduction_1d(gap: f64, z: f64, a: f64, sigma: f64, order: RenyiOrder) -> Result<ShiftReductionReport> {
    verify_shift_reduction_scaled(gap, z, a, sigma, order, 2.0)
}

fn verify_shift_reduction_scaled(gap: f64, z: f64, a: f64, sigma: f64, order: RenyiOrder, denominator: f64) -> Result<ShiftReductionReport> {
    non_negative("gap", gap)?;
    non_negative("z", z)?;
    non_negative("a", a)?;
    let left = shifted_gaussian_upper(gap, z, sigma, order)?;
    let right = if gap <= (z + a) * (1.0 + 1e-15) {
        order.value() * a * a / (denominator * sigma * sigma)
    } else {
        f64::INFINITY
    };
    Ok(ShiftReductionReport {
        left,
        right,
        pass: right.is_infinite() || left <= right * (1.0 + 1e-12) + 1e-15,
    })
}

/// One randomised oracle configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaiCase {
    pub x0: f64,
    pub x0p: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub maps: Vec<Contraction1D>,
    pub allowances: Vec<f64>,
}

impl PaiCase {
    pub fn schedule(&self) -> Result<ShiftSchedule> {
        let mut s = vec![0.0; self.maps.len()];
        s[0] = (self.x0 - self.x0p).abs();
        ShiftSchedule::new(s, self.allowances.clone())
    }
}

fn random_map(rng: &mut ChaCha8Rng) -> Contraction1D {
    let centre = rng.gen_range(-1.0..=1.0);
    match rng.gen_range(0..6) {
        0 => Contraction1D::Identity,
        1 => {
            let lo = rng.gen_range(-3.0..=0.0);
            let hi = rng.gen_range(0.0..=3.0);
            Contraction1D::Clamp { lo, hi }
        }
        2 => Contraction1D::Scale {
            c: rng.gen_range(0.0..=1.0),
        },
        3 => {
            let curvature = rng.gen_range(0.1..=4.0);
            Contraction1D::GradStep {
                eta: rng.gen_range(0.0..=2.0 / curvature),
                loss: ScalarLoss::Quadratic { center: centre, curvature },
            }
        }
        4 => Contraction1D::GradStep {
            eta: rng.gen_range(0.0..=2.0),
            loss: ScalarLoss::Huber {
                center: centre,
                threshold: rng.gen_range(0.1..=2.0),
            },
        },
        _ => Contraction1D::GradStep {
            eta: rng.gen_range(0.0..=8.0),
            loss: ScalarLoss::Softplus { center: centre },
        },
    }
}

const SUITE_ORDERS: [f64; 4] = [1.5, 2.0, 4.0, 8.0];

/// Draws case `index` of the randomised suite. Every fourth case uses
/// identity maps with equal allowances; the rest mix random contractions with
/// random splits of the gap.
pub fn random_pai_case(seed: u64, index: u64) -> PaiCase {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x0_5EED_0000 + index));
    let steps = rng.gen_range(1..=32usize);
    let sigma = rng.gen_range(0.2..=5.0);
    let gap = if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(0.0..=3.0) };
    let x0 = rng.gen_range(-1.0..=1.0);
    let x0p = if rng.gen::<bool>() { x0 + gap } else { x0 - gap };
    let alpha = *SUITE_ORDERS.choose(&mut rng).expect("nonempty");
    let identity = index.is_multiple_of(4);
    let maps = if identity {
        vec![Contraction1D::Identity; steps]
    } else {
        (0..steps).map(|_| random_map(&mut rng)).collect()
    };
    let allowances = if identity {
        vec![gap / steps as f64; steps]
    } else {
        let weights: Vec<f64> = (0..steps).map(|_| -crate::cni::unit_open(&mut rng).ln()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter().map(|w| gap * w / total).collect()
    };
    PaiCase {
        x0,
        x0p,
        sigma,
        alpha,
        maps,
        allowances,
    }
}

/// Options for the verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SuiteOptions {
    /// Replaces the `2` in `αa²/(2σ²)` by `4` on the accountant side. Used to
    /// check that the suites catch a wrong constant.
    pub wrong_constant: bool,
}

impl SuiteOptions {
    fn denominator(&self) -> f64 {
        if self.wrong_constant {
            4.0
        } else {
            2.0
        }
    }
}

/// One JSON-lines row of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub suite: &'static str,
    pub case: usize,
    pub pass: bool,
    pub oracle: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tight: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `(σ, a, α)` grid for the closed-form check.
pub const GAUSSIAN_SIGMAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const GAUSSIAN_SHIFTS: [f64; 3] = [0.25, 0.5, 1.0];
pub const GAUSSIAN_ORDERS: [f64; 4] = [1.5, 2.0, 4.0, 8.0];
/// Relative tolerance of the closed-form check.
pub const GAUSSIAN_TOLERANCE: f64 = 5e-3;

/// Grid Rényi divergence between `N(0, σ²)` and `N(a, σ²)`.
pub fn gaussian_pair_on_grid(sigma: f64, shift: f64, order: RenyiOrder) -> Result<f64> {
    let support = shift.abs() * (1.0 + order.value()) + 12.0 * sigma;
    let m = grid_for(support, sigma).max(4096);
    let p = GridDensity::gaussian(-support, support, m, 0.0, sigma)?;
    let q = GridDensity::gaussian(-support, support, m, shift, sigma)?;
    renyi_on_grid(&p, &q, order)
}

/// Closed form versus grid quadrature over the `(σ, a, α)` grid.
pub fn gaussian_suite(options: SuiteOptions) -> Vec<SuiteRow> {
    let mut rows = Vec::new();
    for &sigma in &GAUSSIAN_SIGMAS {
        for &shift in &GAUSSIAN_SHIFTS {
            for &alpha in &GAUSSIAN_ORDERS {
                let case = rows.len();
                let order = RenyiOrder::new(alpha).expect("valid order");
                let closed = alpha * shift * shift / (options.denominator() * sigma * sigma);
                rows.push(match gaussian_pair_on_grid(sigma, shift, order) {
                    Ok(oracle) => SuiteRow {
                        suite: "gaussian-closed-form",
                        case,
                        pass: (oracle - closed).abs() <= GAUSSIAN_TOLERANCE * closed,
                        oracle,
                        bound: closed,
                        tight: None,
                        error: None,
                    },
                    Err(e) => error_row("gaussian-closed-form", case, e),
                });
            }
        }
    }
    rows
}

fn error_row(suite: &'static str, case: usize, e: Error) -> SuiteRow {
    SuiteRow {
        suite,
        case,
        pass: false,
        oracle: f64::NAN,
        bound: f64::NAN,
        tight: None,
        error: Some(e.to_string()),
    }
}

/// Runs `count` randomised CNI configurations against the accountant.
pub fn pai_suite(seed: u64, count: usize, options: SuiteOptions) -> Vec<SuiteRow> {
    let scale = 2.0 / options.denominator();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let case = random_pai_case(seed, i as u64);
            let result = RenyiOrder::new(case.alpha).and_then(|order| {
                let schedule = case.schedule()?;
                verify_pai_1d_scaled(case.x0, case.x0p, &case.maps, case.sigma, order, &schedule, scale)
            });
            match result {
                Ok(r) => SuiteRow {
                    suite: "pai-bound",
                    case: i,
                    pass: r.pass,
                    oracle: r.oracle,
                    bound: r.bound,
                    tight: r.tight,
                    error: None,
                },
                Err(e) => error_row("pai-bound", i, e),
            }
        })
        .collect()
}

/// Shift-reduction checks on random point-mass configurations that satisfy
/// `gap ≤ z + a`, plus the boundary case `gap = z + a`.
pub fn shift_reduction_suite(seed: u64, count: usize, options: SuiteOptions) -> Vec<SuiteRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5_41F7));
    (0..count)
        .map(|case| {
            let gap = rng.gen_range(0.0..=3.0);
            let z = rng.gen_range(0.0..=gap);
            let a = if case % 2 == 0 { gap - z } else { gap - z + rng.gen_range(0.0..=1.0) };
            let sigma = rng.gen_range(0.2..=5.0);
            let alpha = *SUITE_ORDERS.choose(&mut rng).expect("nonempty");
            let order = RenyiOrder::new(alpha).expect("valid order");
            match verify_shift_reduction_scaled(gap, z, a, sigma, order, options.denominator()) {
                Ok(r) => SuiteRow {
                    suite: "shift-reduction",
                    case,
                    pass: r.pass,
                    oracle: r.left,
                    bound: r.right,
                    tight: None,
                    error: None,
                },
                Err(e) => error_row("shift-reduction", case, e),
            }
        })
        .collect()
}
