use pai_core::cni::{check_contractivity_with, norm, Example, GradientOracle, Logistic, LossFamily, NormHinge};
use pai_core::smoothing::{approximation_gap_bound, SmoothedLoss};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn smoothed_subgradients_respect_the_lipschitz_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let hinge = SmoothedLoss::new(NormHinge::new(4, 1.5, 0.2, 2.0, 1.0).unwrap(), 0.1, 8).unwrap();
    let logistic = SmoothedLoss::new(Logistic::new(4, 2.0, 1.0).unwrap(), 0.1, 8).unwrap();
    let mut g = [0.0; 4];
    for _ in 0..1_000 {
        let (w, x) = hinge.base().domain().sample(4, &mut rng);
        hinge.sample_gradient(&w, &x, &mut rng, &mut g);
        assert!(norm(&g) <= 1.5 * (1.0 + 1e-12));
        let (w, x) = logistic.base().domain().sample(4, &mut rng);
        logistic.sample_gradient(&w, &x, &mut rng, &mut g);
        assert!(norm(&g) <= 1.0 + 1e-12);
    }
}

#[test]
fn smoothed_value_stays_within_the_gap_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (dim, lambda) in [(1, 0.3), (3, 0.1), (10, 0.05)] {
        let sl = SmoothedLoss::new(NormHinge::new(dim, 2.0, 0.1, 2.0, 1.0).unwrap(), lambda, 1).unwrap();
        let gap = approximation_gap_bound(2.0, lambda, dim).unwrap();
        for _ in 0..20 {
            let (w, x) = sl.base().domain().sample(dim, &mut rng);
            let (mean, se) = sl.value_mc(&w, &x, 10_000, &mut rng);
            let exact = sl.base().value(&w, &x);
            assert!((mean - exact).abs() <= gap + 3.0 * se, "d={dim}: {mean} vs {exact}");
        }
    }
}

#[test]
fn common_random_numbers_expose_the_smoothness_constant() {
    let lambda = 0.2;
    let sl = SmoothedLoss::new(NormHinge::new(2, 1.0, 0.0, 2.0, 0.0).unwrap(), lambda, 1).unwrap();
    let x = Example::new(vec![0.0, 0.0], 0.0).unwrap();
    let samples = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut ga, mut gb) = ([0.0; 2], [0.0; 2]);
    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let w: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let w2: Vec<f64> = w.iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect();
        sl.common_gradient(&w, &x, samples, k, &mut ga);
        sl.common_gradient(&w2, &x, samples, k, &mut gb);
        let diff = [ga[0] - gb[0], ga[1] - gb[1]];
        let step = [w[0] - w2[0], w[1] - w2[1]];
        worst = worst.max(norm(&diff) / norm(&step));
    }
    // near the kink the ratio should approach but not exceed L/λ
    assert!(worst <= sl.smooth_beta() * 1.05, "{worst}");
    assert!(worst >= 0.3 * sl.smooth_beta(), "{worst}");
}

#[test]
fn smoothed_step_is_contractive_at_two_over_beta() {
    let lambda = 0.25;
    let sl = SmoothedLoss::new(NormHinge::new(3, 1.0, 0.1, 1.0, 1.0).unwrap(), lambda, 1).unwrap();
    let eta = 2.0 / sl.smooth_beta();
    let samples = 2_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let report = check_contractivity_with(
        |w, x, out| sl.common_gradient(w, x, samples, 99, out),
        &sl.base().domain(),
        3,
        eta,
        500,
        &mut rng,
    );
    // Monte Carlo error in the averaged gradient is the only source of slack
    assert!(report.max_ratio <= 1.02, "{}", report.max_ratio);
}
