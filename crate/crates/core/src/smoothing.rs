//! Gaussian-convolution smoothing of Lipschitz losses.
//!
//! `f̂(w) = E_Z[h(w + Z)]` with `Z ~ N(0, λ² I)` is convex, `L`-Lipschitz and
//! `L/λ`-smooth whenever `h` is a convex `L`-Lipschitz function on all of
//! `ℝ^d`, and `|f̂ − h| ≤ Lλ√d`. Every shipped family other than
//! [`Quadratic`](crate::cni::Quadratic) is globally Lipschitz with its
//! declared constant, so `h` is the base loss itself; it agrees with `f` on
//! the feasible set, which is all the smoothing argument needs.
//!
//! The gradient oracle is stochastic: each call averages `mc_samples`
//! subgradients `∂h(w + Z)` drawn from the auxiliary stream the SGD loop
//! passes in, which is independent of the privacy noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cni::{box_muller, unit_open, Example, GradientOracle, LossFamily};
use crate::error::{non_negative, positive, unit_interval_open};
use crate::{Error, Result};

/// Families whose declared Lipschitz constant only holds on their domain.
const LOCALLY_LIPSCHITZ: &[&str] = &["quadratic"];

#[derive(Debug, Clone)]
pub struct SmoothedLoss<B> {
    base: B,
    lambda: f64,
    mc_samples: usize,
}

impl<B: LossFamily> SmoothedLoss<B> {
    /// Rejects bases whose Lipschitz constant does not hold globally: the
    /// perturbed points `w + Z` leave any bounded domain.
    pub fn new(base: B, lambda: f64, mc_samples: usize) -> Result<Self> {
        if LOCALLY_LIPSCHITZ.contains(&base.name()) {
            return Err(Error::Hypothesis(format!(
                "`{}` is only Lipschitz on a bounded domain; smoothing needs a global constant",
                base.name()
            )));
        }
        Self::new_local(base, lambda, mc_samples)
    }

    /// Accepts any base. The declared `L` and `L/λ` then hold only while
    /// `w + Z` stays inside the base's domain.
    pub fn new_local(base: B, lambda: f64, mc_samples: usize) -> Result<Self> {
        positive("lambda", lambda)?;
        if mc_samples == 0 {
            return Err(crate::error::invalid("mc_samples", "need at least one sample"));
        }
        Ok(Self {
            base,
            lambda,
            mc_samples,
        })
    }

    pub fn base(&self) -> &B {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mc_samples(&self) -> usize {
        self.mc_samples
    }

    /// `L/λ`.
    pub fn smooth_beta(&self) -> f64 {
        self.base.lipschitz() / self.lambda
    }

    fn perturb(&self, w: &[f64], rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (o, wi) in out.iter_mut().zip(w) {
            *o = wi + self.lambda * box_muller(unit_open(rng), unit_open(rng)).0;
        }
    }

    /// Average of `samples` subgradients `∂h(w + Z)`; `out` receives the mean.
    pub fn averaged_gradient(&self, w: &[f64], x: &Example, samples: usize, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let d = w.len();
        let mut u = vec![0.0; d];
        let mut g = vec![0.0; d];
        out.iter_mut().for_each(|o| *o = 0.0);
        for _ in 0..samples {
            self.perturb(w, rng, &mut u);
            self.base.gradient(&u, x, &mut g);
            for (o, gi) in out.iter_mut().zip(&g) {
                *o += gi;
            }
        }
        out.iter_mut().for_each(|o| *o /= samples as f64);
    }

    /// Averaged gradient with common random numbers: the same `seed` gives
    /// the same perturbations for every `w`.
    pub fn common_gradient(&self, w: &[f64], x: &Example, samples: usize, seed: u64, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.averaged_gradient(w, x, samples, &mut rng, out);
    }

    /// Monte Carlo estimate of `f̂(w)` and its standard error.
    pub fn value_mc(&self, w: &[f64], x: &Example, samples: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let mut u = vec![0.0; w.len()];
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..samples {
            self.perturb(w, rng, &mut u);
            let v = self.base.value(&u, x);
            sum += v;
            sum_sq += v * v;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = if samples > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        (mean, (var / n).sqrt())
    }
}

impl<B: LossFamily> GradientOracle for SmoothedLoss<B> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn lipschitz(&self) -> f64 {
        self.base.lipschitz()
    }
    fn smoothness(&self) -> Option<f64> {
        Some(self.smooth_beta())
    }
    fn sample_gradient(&self, w: &[f64], x: &Example, aux: &mut ChaCha8Rng, out: &mut [f64]) {
        self.averaged_gradient(w, x, self.mc_samples, aux, out);
    }
}

/// `λ = Rε / (2√(n ln(1/δ)))`.
pub fn lambda_for(radius: f64, epsilon: f64, n: usize, delta: f64) -> Result<f64> {
    positive("radius", radius)?;
    positive("epsilon", epsilon)?;
    unit_interval_open("delta", delta)?;
    if n == 0 {
        return Err(crate::error::invalid("n", "must be positive"));
    }
    Ok(radius * epsilon / (2.0 * (n as f64 * (1.0 / delta).ln()).sqrt()))
}

/// `Lλ√d`, the uniform gap between a loss and its smoothing.
pub fn approximation_gap_bound(lipschitz: f64, lambda: f64, dim: usize) -> Result<f64> {
    non_negative("lipschitz", lipschitz)?;
    non_negative("lambda", lambda)?;
    Ok(lipschitz * lambda * (dim as f64).sqrt())
}

/// `ε√d / (2 ln(1.25/δ))`, the extra excess-loss term paid for smoothing with
/// [`lambda_for`] (in units of `RL/√n`).
pub fn smoothing_loss_term(epsilon: f64, dim: usize, delta: f64) -> Result<f64> {
    positive("epsilon", epsilon)?;
    unit_interval_open("delta", delta)?;
    Ok(epsilon * (dim as f64).sqrt() / (2.0 * (1.25 / delta).ln()))
}
