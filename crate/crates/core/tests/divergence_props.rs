use pai_core::accountant::{pai_bound, pai_budget, ShiftSchedule};
use pai_core::divergence::{
    compose_rdp, contraction_step, gaussian_renyi, rdp_to_dp, shift_reduction_step, GaussianNoise, RenyiBound,
    RenyiOrder, ShiftedBudget,
};
use proptest::prelude::*;

fn order() -> impl Strategy<Value = RenyiOrder> {
    (1.0001f64..200.0).prop_map(|a| RenyiOrder::new(a).unwrap())
}

proptest! {
    #[test]
    fn gaussian_cost_is_monotone_and_quadratic(sigma in 0.01f64..50.0, a in 0.0f64..20.0, alpha in 1.01f64..100.0, d in 1usize..64) {
        let noise = GaussianNoise::new(sigma, d).unwrap();
        let o = RenyiOrder::new(alpha).unwrap();
        let base = gaussian_renyi(&noise, a, o).unwrap();
        let doubled = gaussian_renyi(&noise, 2.0 * a, o).unwrap();
        if base > 0.0 {
            prop_assert!((doubled / base - 4.0).abs() <= 1e-12);
        }
        prop_assert!(gaussian_renyi(&noise, a * 1.1, o).unwrap() >= base);
        prop_assert!(gaussian_renyi(&noise, a, RenyiOrder::new(alpha * 1.1).unwrap()).unwrap() >= base);
        let wider = GaussianNoise::new(sigma * 1.1, d).unwrap();
        prop_assert!(gaussian_renyi(&wider, a, o).unwrap() <= base);
        let one_dim = GaussianNoise::new(sigma, 1).unwrap();
        prop_assert_eq!(gaussian_renyi(&one_dim, a, o).unwrap(), base);
    }

    #[test]
    fn composition_is_order_free(o in order(), eps in proptest::collection::vec(0.0f64..5.0, 0..12), split in 0usize..12) {
        let bounds: Vec<RenyiBound> = eps.iter().map(|&e| RenyiBound::new(o, e).unwrap()).collect();
        let whole = compose_rdp(o, &bounds).unwrap().epsilon;
        let k = split.min(bounds.len());
        let left = compose_rdp(o, &bounds[..k]).unwrap();
        let right = compose_rdp(o, &bounds[k..]).unwrap();
        let nested = compose_rdp(o, &[right, left]).unwrap().epsilon;
        prop_assert!((whole - nested).abs() <= 1e-12 * whole.max(1.0));
        let mut reversed = bounds.clone();
        reversed.reverse();
        let rev = compose_rdp(o, &reversed).unwrap().epsilon;
        prop_assert!((whole - rev).abs() <= 1e-12 * whole.max(1.0));
    }

    #[test]
    fn zero_rdp_converts_to_the_log_term(o in order(), delta in 1e-12f64..0.999) {
        let dp = rdp_to_dp(RenyiBound::new(o, 0.0).unwrap(), delta).unwrap();
        prop_assert_eq!(dp.epsilon, (1.0 / delta).ln() / (o.value() - 1.0));
    }

    #[test]
    fn balanced_schedules_end_at_zero_shift(
        steps in proptest::collection::vec((0.0f64..2.0, 0.05f64..3.0, 0.0f64..1.0), 1..40),
        o in order(),
    ) {
        // discrepancies front-loaded so every partial shift stays nonnegative
        let total: f64 = steps.iter().map(|s| s.0).sum();
        let weights: f64 = steps.iter().map(|s| s.2).sum::<f64>().max(1e-12);
        let mut s = vec![0.0; steps.len()];
        s[0] = total;
        let a: Vec<f64> = if weights <= 1e-12 {
            let mut a = vec![0.0; steps.len()];
            a[0] = total;
            a
        } else {
            steps.iter().map(|st| total * st.2 / weights).collect()
        };
        let sigmas: Vec<f64> = steps.iter().map(|st| st.1).collect();
        let schedule = ShiftSchedule::new(s, a.clone()).unwrap();
        let budget = pai_budget(&schedule, &sigmas, o).unwrap();
        prop_assert!(budget.shift.abs() <= 1e-10 * total.max(1.0));
        let expected: f64 = a.iter().zip(&sigmas).map(|(ai, si)| o.value() * ai * ai / (2.0 * si * si)).sum();
        let eps = pai_bound(&schedule, &sigmas, o).unwrap().epsilon;
        prop_assert!((eps - expected).abs() <= 1e-12 * expected.max(1e-300));
    }

    #[test]
    fn contraction_then_reduction_is_additive(z in 0.0f64..5.0, s in 0.0f64..5.0, frac in 0.0f64..1.0, sigma in 0.1f64..4.0, o in order()) {
        let b = ShiftedBudget::new(z, 0.0, o).unwrap();
        let grown = contraction_step(b, s).unwrap();
        prop_assert!((grown.shift - (z + s)).abs() <= 1e-15 * (z + s).max(1.0));
        let a = frac * grown.shift;
        let reduced = shift_reduction_step(grown, a, &GaussianNoise::new(sigma, 1).unwrap()).unwrap();
        prop_assert!(reduced.shift >= 0.0);
        prop_assert!((reduced.epsilon - o.value() * a * a / (2.0 * sigma * sigma)).abs() <= 1e-12 * reduced.epsilon.max(1e-300));
    }
}
