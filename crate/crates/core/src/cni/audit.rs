use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{distance, norm, Domain, Example, LossFamily};

/// Absolute slack allowed in the contraction inequality.
pub const CONTRACTION_SLACK: f64 = 1e-10;

/// A pair of points and the example whose gradient step is tested on them.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
    pub example: Example,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractivityReport {
    pub eta: f64,
    pub trials: usize,
    pub violation_count: usize,
    /// Up to the first 16 violations.
    pub violations: Vec<Violation>,
    /// Largest `‖ψ(w) − ψ(w′)‖ / ‖w − w′‖` observed.
    pub max_ratio: f64,
}

impl ContractivityReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Checks `‖ψ(w) − ψ(w′)‖ ≤ ‖w − w′‖` for `ψ(w) = w − η g(w, x)` on the
/// given probes.
pub fn check_contractivity_on<G, I>(gradient: G, eta: f64, probes: I) -> ContractivityReport
where
    G: Fn(&[f64], &Example, &mut [f64]),
    I: IntoIterator<Item = Probe>,
{
    let mut report = ContractivityReport {
        eta,
        trials: 0,
        violation_count: 0,
        violations: Vec::new(),
        max_ratio: 0.0,
    };
    let mut g = Vec::new();
    let mut g_prime = Vec::new();
    for probe in probes {
        let d = probe.w.len();
        g.resize(d, 0.0);
        g_prime.resize(d, 0.0);
        gradient(&probe.w, &probe.example, &mut g);
        gradient(&probe.w_prime, &probe.example, &mut g_prime);
        let before = distance(&probe.w, &probe.w_prime);
        let after = probe
            .w
            .iter()
            .zip(&probe.w_prime)
            .zip(g.iter().zip(&g_prime))
            .map(|((a, b), (ga, gb))| {
                let diff = (a - eta * ga) - (b - eta * gb);
                diff * diff
            })
            .sum::<f64>()
            .sqrt();
        report.trials += 1;
        if before > 0.0 {
            report.max_ratio = report.max_ratio.max(after / before);
        }
        if after > before + CONTRACTION_SLACK {
            report.violation_count += 1;
            if report.violations.len() < 16 {
                report.violations.push(Violation { before, after });
            }
        }
    }
    report
}

/// Random probes drawn from `domain`, both points sharing the example.
pub fn check_contractivity_with<G>(gradient: G, domain: &Domain, dim: usize, eta: f64, trials: usize, rng: &mut ChaCha8Rng) -> ContractivityReport
where
    G: Fn(&[f64], &Example, &mut [f64]),
{
    let probes: Vec<Probe> = (0..trials)
        .map(|_| {
            let (w, example) = domain.sample(dim, rng);
            let (w_prime, _) = domain.sample(dim, rng);
            Probe { w, w_prime, example }
        })
        .collect();
    check_contractivity_on(gradient, eta, probes)
}

/// Samples `trials` probes from the family's domain and checks that the
/// gradient step with step size `eta` is 1-Lipschitz on each.
pub fn check_contractivity<L: LossFamily + ?Sized>(loss: &L, eta: f64, trials: usize, rng: &mut ChaCha8Rng) -> ContractivityReport {
    check_contractivity_with(|w, x, out| loss.gradient(w, x, out), &loss.domain(), loss.dim(), eta, trials, rng)
}

/// Largest sampled gradient norm over `draws` points of the domain.
pub fn audit_lipschitz<L: LossFamily + ?Sized>(loss: &L, draws: usize, rng: &mut ChaCha8Rng) -> f64 {
    let domain = loss.domain();
    let mut g = vec![0.0; loss.dim()];
    (0..draws)
        .map(|_| {
            let (w, x) = domain.sample(loss.dim(), rng);
            loss.gradient(&w, &x, &mut g);
            norm(&g)
        })
        .fold(0.0, f64::max)
}

/// Largest sampled difference quotient `‖∇f(w) − ∇f(w′)‖ / ‖w − w′‖`.
pub fn audit_smoothness<L: LossFamily + ?Sized>(loss: &L, draws: usize, rng: &mut ChaCha8Rng) -> f64 {
    let domain = loss.domain();
    let d = loss.dim();
    let (mut g, mut h) = (vec![0.0; d], vec![0.0; d]);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let (w, x) = domain.sample(d, rng);
        let (w_prime, _) = domain.sample(d, rng);
        let gap = distance(&w, &w_prime);
        if gap == 0.0 {
            continue;
        }
        loss.gradient(&w, &x, &mut g);
        loss.gradient(&w_prime, &x, &mut h);
        worst = worst.max(distance(&g, &h) / gap);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cni::{Quadratic, Zero};
    use rand::SeedableRng;

    #[test]
    fn quadratic_boundary_step_is_contractive() {
        let loss = Quadratic::new(3, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = check_contractivity(&loss, 2.0, 2000, &mut rng);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn quadratic_overlong_step_expands() {
        let loss = Quadratic::new(2, 1.0, 1.0).unwrap();
        let probe = Probe {
            w: vec![0.0, 0.0],
            w_prime: vec![1.0, 0.0],
            example: Example::new(vec![0.2, 0.1], 0.0).unwrap(),
        };
        let report = check_contractivity_on(|w, x, o| loss.gradient(w, x, o), 2.5, [probe]);
        assert_eq!(report.violation_count, 1);
        assert!((report.violations[0].after - 1.5).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_an_isometry() {
        let loss = Zero::new(4, 1.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for eta in [0.1, 10.0, 1e6] {
            let report = check_contractivity(&loss, eta, 500, &mut rng);
            assert!(report.passed());
            assert!((report.max_ratio - 1.0).abs() < 1e-12);
        }
    }
}
