use pai_core::accountant::{
    multiepoch_exact_sum, multitask_dp, per_index_pnsgd_rdp, per_index_schedule_bound, stop_noise_floor,
    stop_pnsgd_chain, stop_pnsgd_rdp, SgdPrivacyConfig,
};
use pai_core::divergence::RenyiOrder;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn per_index_scaling(n in 1usize..300, l in 0.1f64..5.0, sigma in 0.1f64..20.0, alpha in 1.01f64..64.0, eta in 0.001f64..1.0) {
        let o = RenyiOrder::new(alpha).unwrap();
        let cfg = SgdPrivacyConfig::new(n, l, sigma, eta, 1.0).unwrap();
        let mut last = 0.0;
        for t in 1..=n {
            let eps = per_index_pnsgd_rdp(&cfg, t, o).unwrap().epsilon;
            prop_assert!(eps >= last);
            last = eps;
        }
        let t = n.div_ceil(2);
        let eps = per_index_pnsgd_rdp(&cfg, t, o).unwrap().epsilon;
        let double_alpha = per_index_pnsgd_rdp(&cfg, t, RenyiOrder::new(2.0 * alpha).unwrap()).unwrap().epsilon;
        prop_assert!((double_alpha / eps - 2.0).abs() < 1e-12);
        let double_l = SgdPrivacyConfig::new(n, 2.0 * l, sigma, eta, 1.0).unwrap();
        prop_assert!((per_index_pnsgd_rdp(&double_l, t, o).unwrap().epsilon / eps - 4.0).abs() < 1e-12);
        let double_sigma = SgdPrivacyConfig::new(n, l, 2.0 * sigma, eta, 1.0).unwrap();
        prop_assert!((per_index_pnsgd_rdp(&double_sigma, t, o).unwrap().epsilon / eps - 0.25).abs() < 1e-12);
    }

    #[test]
    fn schedule_route_matches_closed_form(n in 1usize..200, t_frac in 0.0f64..1.0, eta in 0.01f64..2.0) {
        let cfg = SgdPrivacyConfig::new(n, 1.3, 2.7, eta, 1.0).unwrap();
        let o = RenyiOrder::new(3.0).unwrap();
        let t = 1 + ((n - 1) as f64 * t_frac) as usize;
        let closed = per_index_pnsgd_rdp(&cfg, t, o).unwrap().epsilon;
        let folded = per_index_schedule_bound(&cfg, t, o).unwrap();
        prop_assert!((closed - folded).abs() <= 1e-12 * closed);
    }

    #[test]
    fn stop_certified_bound_dominates_every_index(n in 2usize..2000, alpha in 1.1f64..32.0, extra in 1.0f64..4.0) {
        let o = RenyiOrder::new(alpha).unwrap();
        let cfg = SgdPrivacyConfig::new(n, 1.0, stop_noise_floor(1.0, o) * extra, 0.1, 1.0).unwrap();
        let certified = stop_pnsgd_rdp(&cfg, o).unwrap().epsilon;
        for t in [1, 2, n / 2, n] {
            let chain = stop_pnsgd_chain(&cfg, t.max(1), o).unwrap();
            prop_assert!(chain.components_admissible());
            prop_assert!(chain.mixture <= certified * (1.0 + 1e-12));
        }
    }

    #[test]
    fn multitask_chain_holds_in_range(n in 10usize..100_000, k in 1usize..50, eps in 0.05f64..0.99, delta in 1e-9f64..0.49, d in 1usize..64) {
        let p = multitask_dp(n, k, d, 1.0, 1.0, eps, delta).unwrap();
        prop_assert!(p.alpha.value() > 2.0);
        prop_assert!(p.dp_stated.epsilon <= eps * (1.0 + 1e-12));
        prop_assert!(p.sigma >= stop_noise_floor(1.0, p.alpha));
    }
}

#[test]
fn multiepoch_sum_stays_below_stated_bound() {
    for n in 1..=2000usize {
        for i in 1..=n {
            assert!(multiepoch_exact_sum(n, i, 1.0) < 2.0);
        }
    }
}
