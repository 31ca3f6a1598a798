//! Synthetic data distributions with known population loss `F` and optimum
//! `F*`, so excess loss is measured without a test set.

use anyhow::{bail, Result};
use pai_core::cni::{
    box_muller, dot, norm, unit_open, ClippedLeastSquares, ConvexSet, Example, HuberLocation, Logistic, LossFamily,
    NormHinge, Zero,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::Task;

/// Simpson panels for the angular quadrature on shell populations.
const SHELL_PANELS: usize = 4096;
/// Size of the fixed evaluation sample for the logistic task.
pub const LOGISTIC_EVAL_POINTS: usize = 20_000;

#[derive(Debug, Clone)]
enum Shape {
    /// `x = w* + ρu` with `u` uniform on the unit sphere and loss
    /// `g(‖w − x‖)`. `F(w)` is a 1-D integral over the angle between
    /// `w − w*` and `u`.
    Shell {
        rho: f64,
        profile: Profile,
        cosines: Vec<f64>,
        weights: Vec<f64>,
    },
    /// `x` uniform on the unit sphere, `y = ⟨w*, x⟩ + ξ`, `ξ ~ U[−ν, ν]`.
    Linear { noise: f64 },
    /// `x` uniform on the sphere of radius `L`, `P(y = 1) = σ(⟨w*, x⟩)`;
    /// `F` is the label-averaged loss over a fixed sample.
    Logistic { eval: Vec<(Vec<f64>, f64)> },
    Constant,
}

#[derive(Debug, Clone, Copy)]
enum Profile {
    Huber { threshold: f64 },
    Hinge { lipschitz: f64, margin: f64 },
}

impl Profile {
    fn apply(self, r: f64) -> f64 {
        match self {
            Profile::Huber { threshold } => pai_core::cni::huber(r, threshold),
            Profile::Hinge { lipschitz, margin } => lipschitz * (r - margin).max(0.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    task: Task,
    dim: usize,
    radius: f64,
    lipschitz: f64,
    optimum: Vec<f64>,
    shape: Shape,
}

impl Population {
    /// `eval_rng` is only used by tasks whose `F` needs a fixed sample.
    pub fn new(task: Task, dim: usize, radius: f64, lipschitz: f64, eval_rng: &mut ChaCha8Rng) -> Result<Self> {
        if dim == 0 || !(radius > 0.0) || !(lipschitz > 0.0) {
            bail!("population needs positive d, R and L");
        }
        let optimum = vec![0.5 * radius / (dim as f64).sqrt(); dim];
        let shape = match task {
            Task::Huber => shell(dim, 0.5 * lipschitz, Profile::Huber { threshold: lipschitz }),
            Task::HingeSmoothed => {
                let rho = 0.5 * lipschitz;
                shell(dim, rho, Profile::Hinge { lipschitz, margin: 0.5 * rho })
            }
            Task::LeastSquares => {
                // gradients (⟨w, x⟩ − y)x stay below R + R/2 + ν on the ball,
                // so clipping at L never binds
                if lipschitz <= 1.5 * radius {
                    bail!("least-squares needs L > 1.5·R so the clipped gradient equals the true one on K (L = {lipschitz}, R = {radius})");
                }
                Shape::Linear {
                    noise: (lipschitz - 1.5 * radius).min(0.5 * radius),
                }
            }
            Task::Logistic => {
                let eval = (0..LOGISTIC_EVAL_POINTS)
                    .map(|_| {
                        let x = sphere(dim, lipschitz, eval_rng);
                        let p = sigmoid(dot(&optimum, &x));
                        (x, p)
                    })
                    .collect();
                Shape::Logistic { eval }
            }
            Task::Constant => Shape::Constant,
        };
        Ok(Self {
            task,
            dim,
            radius,
            lipschitz,
            optimum,
            shape,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn optimum(&self) -> &[f64] {
        &self.optimum
    }

    /// `K`, the ball of radius `R` around the origin.
    pub fn feasible_set(&self) -> ConvexSet {
        ConvexSet::origin_ball(self.dim, self.radius).expect("positive radius")
    }

    /// The per-example loss; its Lipschitz constant never exceeds `L`.
    pub fn loss(&self) -> Box<dyn LossFamily> {
        let (d, r, l) = (self.dim, self.radius, self.lipschitz);
        let feature_radius = 0.5 * r + 0.5 * l;
        match &self.shape {
            Shape::Shell {
                profile: Profile::Huber { threshold },
                ..
            } => Box::new(HuberLocation::new(d, *threshold, r, feature_radius).expect("valid huber")),
            Shape::Shell {
                profile: Profile::Hinge { lipschitz, margin },
                ..
            } => Box::new(NormHinge::new(d, *lipschitz, *margin, r, feature_radius).expect("valid hinge")),
            Shape::Linear { noise } => {
                Box::new(ClippedLeastSquares::new(d, l, r, 1.0, 0.5 * r + noise).expect("valid least squares"))
            }
            Shape::Logistic { .. } => Box::new(Logistic::new(d, r, l).expect("valid logistic")),
            Shape::Constant => Box::new(Zero::new(d, 1.0, r).expect("valid constant")),
        }
    }

    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Example> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Example {
        match &self.shape {
            Shape::Shell { rho, .. } => {
                let u = sphere(self.dim, *rho, rng);
                let x = u.iter().zip(&self.optimum).map(|(a, b)| a + b).collect();
                Example { features: x, label: 0.0 }
            }
            Shape::Linear { noise } => {
                let x = sphere(self.dim, 1.0, rng);
                let y = dot(&self.optimum, &x) + noise * rng.gen_range(-1.0..=1.0);
                Example { features: x, label: y }
            }
            Shape::Logistic { .. } => {
                let x = sphere(self.dim, self.lipschitz, rng);
                let y = if rng.gen::<f64>() < sigmoid(dot(&self.optimum, &x)) { 1.0 } else { -1.0 };
                Example { features: x, label: y }
            }
            Shape::Constant => Example {
                features: vec![0.0; self.dim],
                label: 0.0,
            },
        }
    }

    /// Population loss `F(w)`.
    pub fn loss_at(&self, w: &[f64]) -> f64 {
        match &self.shape {
            Shape::Shell {
                rho,
                profile,
                cosines,
                weights,
            } => {
                let s = w.iter().zip(&self.optimum).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                cosines
                    .iter()
                    .zip(weights)
                    .map(|(c, wt)| wt * profile.apply((s * s + rho * rho - 2.0 * rho * s * c).max(0.0).sqrt()))
                    .sum()
            }
            Shape::Linear { noise } => {
                let gap: f64 = w.iter().zip(&self.optimum).map(|(a, b)| (a - b) * (a - b)).sum();
                0.5 * (gap / self.dim as f64 + noise * noise / 3.0)
            }
            Shape::Logistic { eval } => {
                let total: f64 = eval
                    .iter()
                    .map(|(x, p)| {
                        let z = dot(w, x);
                        p * softplus(-z) + (1.0 - p) * softplus(z)
                    })
                    .sum();
                total / eval.len() as f64
            }
            Shape::Constant => 1.0,
        }
    }

    /// `F* = min_K F`, attained at [`Population::optimum`].
    pub fn optimal_loss(&self) -> f64 {
        self.loss_at(&self.optimum)
    }

    pub fn excess(&self, w: &[f64]) -> f64 {
        self.loss_at(w) - self.optimal_loss()
    }
}

fn shell(dim: usize, rho: f64, profile: Profile) -> Shape {
    let (cosines, weights) = if dim == 1 {
        (vec![1.0, -1.0], vec![0.5, 0.5])
    } else {
        // Simpson's rule in θ with the sphere's sin^{d−2}θ angular density
        let m = SHELL_PANELS;
        let h = std::f64::consts::PI / m as f64;
        let mut cos = Vec::with_capacity(m + 1);
        let mut wts = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let theta = i as f64 * h;
            let simpson = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            cos.push(theta.cos());
            wts.push(simpson * theta.sin().powi(dim as i32 - 2));
        }
        let total: f64 = wts.iter().sum();
        wts.iter_mut().for_each(|w| *w /= total);
        (cos, wts)
    };
    Shape::Shell {
        rho,
        profile,
        cosines,
        weights,
    }
}

/// Uniform on the sphere of the given radius.
pub fn sphere(dim: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| box_muller(unit_open(rng), unit_open(rng)).0).collect();
        let len = norm(&v);
        if len > 0.0 {
            v.iter_mut().for_each(|x| *x *= radius / len);
            return v;
        }
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

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}
