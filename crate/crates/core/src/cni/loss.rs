use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, norm};
use crate::error::{finite, invalid, non_negative, positive};
use crate::Result;

/// One data point: a feature vector and a real label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: f64,
}

impl Example {
    pub fn new(features: Vec<f64>, label: f64) -> Result<Self> {
        for &v in &features {
            finite("feature", v)?;
        }
        finite("label", label)?;
        Ok(Self { features, label })
    }
}

/// Region over which a family's declared `L` and `β` are certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub weight_radius: f64,
    pub feature_radius: f64,
    pub label_bound: f64,
    /// Labels are `±1` rather than drawn from `[-label_bound, label_bound]`.
    pub binary_labels: bool,
}

impl Domain {
    /// Draws a weight vector and an example from the certified region. Half
    /// of the draws land on the boundary spheres, where the constants are
    /// usually attained.
    pub fn sample(&self, dim: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Example) {
        let w = sample_ball(dim, self.weight_radius, rng);
        let features = sample_ball(dim, self.feature_radius, rng);
        let label = if self.binary_labels {
            if rng.gen::<bool>() {
                1.0
            } else {
                -1.0
            }
        } else {
            rng.gen_range(-1.0..=1.0) * self.label_bound
        };
        (w, Example { features, label })
    }
}

fn sample_ball(dim: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim)
        .map(|_| {
            let u1 = super::unit_open(rng);
            let u2 = super::unit_open(rng);
            super::box_muller(u1, u2).0
        })
        .collect();
    let len = norm(&v).max(f64::MIN_POSITIVE);
    let r = if rng.gen::<bool>() {
        radius
    } else {
        radius * rng.gen::<f64>().powf(1.0 / dim as f64)
    };
    v.iter_mut().for_each(|x| *x *= r / len);
    v
}

/// Convex per-example loss with a (sub)gradient oracle and declared
/// constants over its [`Domain`].
pub trait LossFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn lipschitz(&self) -> f64;
    /// `None` for non-smooth families.
    fn smoothness(&self) -> Option<f64>;
    fn domain(&self) -> Domain;
    fn value(&self, w: &[f64], x: &Example) -> f64;
    /// Writes a (sub)gradient in `w` into `out`.
    fn gradient(&self, w: &[f64], x: &Example, out: &mut [f64]);
}

impl<T: LossFamily + ?Sized> LossFamily for Box<T> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn smoothness(&self) -> Option<f64> {
        (**self).smoothness()
    }
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn value(&self, w: &[f64], x: &Example) -> f64 {
        (**self).value(w, x)
    }
    fn gradient(&self, w: &[f64], x: &Example, out: &mut [f64]) {
        (**self).gradient(w, x, out)
    }
}

/// What the SGD loop consumes: a gradient that may use auxiliary randomness
/// (stochastic smoothing). Plain loss families ignore `aux`.
pub trait GradientOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn lipschitz(&self) -> f64;
    fn smoothness(&self) -> Option<f64>;
    fn sample_gradient(&self, w: &[f64], x: &Example, aux: &mut ChaCha8Rng, out: &mut [f64]);
}

impl<T: LossFamily + ?Sized> GradientOracle for T {
    fn dim(&self) -> usize {
        LossFamily::dim(self)
    }
    fn lipschitz(&self) -> f64 {
        LossFamily::lipschitz(self)
    }
    fn smoothness(&self) -> Option<f64> {
        LossFamily::smoothness(self)
    }
    fn sample_gradient(&self, w: &[f64], x: &Example, _aux: &mut ChaCha8Rng, out: &mut [f64]) {
        self.gradient(w, x, out)
    }
}

fn check_dim(dim: usize) -> Result<usize> {
    if dim == 0 {
        Err(invalid("dim", "dimension must be positive"))
    } else {
        Ok(dim)
    }
}

/// `huber_c(r) = r²/2` for `|r| ≤ c`, `c|r| − c²/2` beyond.
pub fn huber(r: f64, c: f64) -> f64 {
    let a = r.abs();
    if a <= c {
        0.5 * r * r
    } else {
        c * a - 0.5 * c * c
    }
}

/// `½‖w − x‖²`. `L = weight_radius + feature_radius`, `β = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    dim: usize,
    domain: Domain,
}

impl Quadratic {
    pub fn new(dim: usize, weight_radius: f64, feature_radius: f64) -> Result<Self> {
        Ok(Self {
            dim: check_dim(dim)?,
            domain: Domain {
                weight_radius: positive("weight_radius", weight_radius)?,
                feature_radius: non_negative("feature_radius", feature_radius)?,
                label_bound: 0.0,
                binary_labels: false,
            },
        })
    }
}

impl LossFamily for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn lipschitz(&self) -> f64 {
        self.domain.weight_radius + self.domain.feature_radius
    }
    fn smoothness(&self) -> Option<f64> {
        Some(1.0)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn value(&self, w: &[f64], x: &Example) -> f64 {
        0.5 * w.iter().zip(&x.features).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }
    fn gradient(&self, w: &[f64], x: &Example, out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(w).zip(&x.features) {
            *o = a - b;
        }
    }
}

/// Least squares `½(⟨w, x⟩ − y)²` with the residual clipped at `c`, i.e.
/// `huber_c(⟨w, x⟩ − y)`. The gradient `clip(r, c)·x` has norm at most
/// `c·B` for `‖x‖ ≤ B`, and the loss is `B²`-smooth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClippedLeastSquares {
    dim: usize,
    clip: f64,
    domain: Domain,
}

impl ClippedLeastSquares {
    pub fn new(dim: usize, clip: f64, weight_radius: f64, feature_radius: f64, label_bound: f64) -> Result<Self> {
        Ok(Self {
            dim: check_dim(dim)?,
            clip: positive("clip", clip)?,
            domain: Domain {
                weight_radius: positive("weight_radius", weight_radius)?,
                feature_radius: positive("feature_radius", feature_radius)?,
                label_bound: non_negative("label_bound", label_bound)?,
                binary_labels: false,
            },
        })
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }
}

impl LossFamily for ClippedLeastSquares {
    fn name(&self) -> &'static str {
        "least-squares"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn lipschitz(&self) -> f64 {
        self.clip * self.domain.feature_radius
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.domain.feature_radius * self.domain.feature_radius)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn value(&self, w: &[f64], x: &Example) -> f64 {
        huber(dot(w, &x.features) - x.label, self.clip)
    }
    fn gradient(&self, w: &[f64], x: &Example, out: &mut [f64]) {
        let r = (dot(w, &x.features) - x.label).clamp(-self.clip, self.clip);
        for (o, f) in out.iter_mut().zip(&x.features) {
            *o = r * f;
        }
    }
}

/// Logistic loss `ln(1 + exp(−y⟨w, x⟩))` with labels `±1`.
/// `L = B`, `β = B²/4` for `‖x‖ ≤ B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    dim: usize,
    domain: Domain,
}

impl Logistic {
    pub fn new(dim: usize, weight_radius: f64, feature_radius: f64) -> Result<Self> {
        Ok(Self {
            dim: check_dim(dim)?,
            domain: Domain {
                weight_radius: positive("weight_radius", weight_radius)?,
                feature_radius: positive("feature_radius", feature_radius)?,
                label_bound: 1.0,
                binary_labels: true,
            },
        })
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LossFamily for Logistic {
    fn name(&self) -> &'static str {
        "logistic"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn lipschitz(&self) -> f64 {
        self.domain.feature_radius
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.domain.feature_radius * self.domain.feature_radius / 4.0)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn value(&self, w: &[f64], x: &Example) -> f64 {
        softplus(-x.label * dot(w, &x.features))
    }
    fn gradient(&self, w: &[f64], x: &Example, out: &mut [f64]) {
        let m = x.label * dot(w, &x.features);
        let scale = -x.label * sigmoid(-m);
        for (o, f) in out.iter_mut().zip(&x.features) {
            *o = scale * f;
        }
    }
}

/// Huber location loss `huber_c(‖w − x‖)`: `L = c`, `β = 1` everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuberLocation {
    dim: usize,
    c: f64,
    domain: Domain,
}

impl HuberLocation {
    pub fn new(dim: usize, c: f64, weight_radius: f64, feature_radius: f64) -> Result<Self> {
        Ok(Self {
            dim: check_dim(dim)?,
            c: positive("c", c)?,
            domain: Domain {
                weight_radius: positive("weight_radius", weight_radius)?,
                feature_radius: non_negative("feature_radius", feature_radius)?,
                label_bound: 0.0,
                binary_labels: false,
            },
        })
    }

    pub fn threshold(&self) -> f64 {
        self.c
    }
}

impl LossFamily for HuberLocation {
    fn name(&self) -> &'static str {
        "huber"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn lipschitz(&self) -> f64 {
        self.c
    }
    fn smoothness(&self) -> Option<f64> {
        Some(1.0)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn value(&self, w: &[f64], x: &Example) -> f64 {
        huber(super::distance(w, &x.features), self.c)
    }
    fn gradient(&self, w: &[f64], x: &Example, out: &mut [f64]) {
        let r = super::distance(w, &x.features);
        let scale = if r > self.c { self.c / r } else { 1.0 };
        for ((o, a), b) in out.iter_mut().zip(w).zip(&x.features) {
            *o = scale * (a - b);
        }
    }
}

/// Non-smooth hinge on the distance: `L · max(0, ‖w − x‖ − κ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormHinge {
    dim: usize,
    lipschitz: f64,
    margin: f64,
    domain: Domain,
}

impl NormHinge {
    pub fn new(dim: usize, lipschitz: f64, margin: f64, weight_radius: f64, feature_radius: f64) -> Result<Self> {
        Ok(Self {
            dim: check_dim(dim)?,
            lipschitz: positive("lipschitz", lipschitz)?,
            margin: non_negative("margin", margin)?,
            domain: Domain {
                weight_radius: positive("weight_radius", weight_radius)?,
                feature_radius: non_negative("feature_radius", feature_radius)?,
                label_bound: 0.0,
                binary_labels: false,
            },
        })
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }
}

impl LossFamily for NormHinge {
    fn name(&self) -> &'static str {
        "hinge"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn smoothness(&self) -> Option<f64> {
        None
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn value(&self, w: &[f64], x: &Example) -> f64 {
        self.lipschitz * (super::distance(w, &x.features) - self.margin).max(0.0)
    }
    fn gradient(&self, w: &[f64], x: &Example, out: &mut [f64]) {
        let r = super::distance(w, &x.features);
        let scale = if r > self.margin && r > 0.0 { self.lipschitz / r } else { 0.0 };
        for ((o, a), b) in out.iter_mut().zip(w).zip(&x.features) {
            *o = scale * (a - b);
        }
    }
}

/// `⟨g, w⟩`, ignoring the example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    direction: Vec<f64>,
    domain: Domain,
}

impl Linear {
    pub fn new(direction: Vec<f64>, weight_radius: f64) -> Result<Self> {
        check_dim(direction.len())?;
        for &g in &direction {
            finite("direction", g)?;
        }
        Ok(Self {
            direction,
            domain: Domain {
                weight_radius: positive("weight_radius", weight_radius)?,
                feature_radius: 0.0,
                label_bound: 0.0,
                binary_labels: false,
            },
        })
    }
}

impl LossFamily for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }
    fn dim(&self) -> usize {
        self.direction.len()
    }
    fn lipschitz(&self) -> f64 {
        norm(&self.direction)
    }
    fn smoothness(&self) -> Option<f64> {
        Some(0.0)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn value(&self, w: &[f64], _x: &Example) -> f64 {
        dot(&self.direction, w)
    }
    fn gradient(&self, _w: &[f64], _x: &Example, out: &mut [f64]) {
        out.copy_from_slice(&self.direction);
    }
}

/// A constant loss with zero gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    dim: usize,
    constant: f64,
    domain: Domain,
}

impl Zero {
    pub fn new(dim: usize, constant: f64, weight_radius: f64) -> Result<Self> {
        Ok(Self {
            dim: check_dim(dim)?,
            constant: finite("constant", constant)?,
            domain: Domain {
                weight_radius: positive("weight_radius", weight_radius)?,
                feature_radius: 0.0,
                label_bound: 0.0,
                binary_labels: false,
            },
        })
    }
}

impl LossFamily for Zero {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn lipschitz(&self) -> f64 {
        0.0
    }
    fn smoothness(&self) -> Option<f64> {
        Some(0.0)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn value(&self, _w: &[f64], _x: &Example) -> f64 {
        self.constant
    }
    fn gradient(&self, _w: &[f64], _x: &Example, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}
