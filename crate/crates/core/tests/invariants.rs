use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use steep_core::channel::sample_channel_batch;
use steep_core::digital::{self, transcript, Bits, BscParams, ToeplitzHash};
use steep_core::mmse;
use steep_core::rates;
use steep_core::{ChannelRealization, SystemParams};

fn positive() -> impl Strategy<Value = f64> {
    (-2.0f64..2.0).prop_map(|e| 10f64.powf(e))
}

fn params() -> impl Strategy<Value = SystemParams> {
    (
        (positive(), positive(), positive(), positive(), positive(), positive(), positive()),
        (0.0f64..0.99, 1usize..4, 1usize..32, 0usize..32),
    )
        .prop_map(|((p_a, p_b, sigma_b2, sigma_a2, sigma_ea2, sigma_eb2, sigma_s2), (rho, n_e, m_a, m_b))| SystemParams {
            p_a,
            p_b,
            sigma_b2,
            sigma_a2,
            sigma_ea2,
            sigma_eb2,
            sigma_s2,
            eps_a: 1e-4 * sigma_b2,
            eps_e: 1e-4 * sigma_b2,
            rho,
            rho_phase: 0.0,
            n_e,
            m_a,
            m_b,
        })
}

fn realization(n_e: usize) -> impl Strategy<Value = ChannelRealization> {
    let c = || (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| Complex64::new(re, im));
    (c(), c(), prop::collection::vec(c(), n_e), prop::collection::vec(c(), n_e)).prop_map(|(h_ab, h_ba, g_a, g_b)| {
        ChannelRealization { h_ab, h_ba, g_a, g_b }
    })
}

fn point() -> impl Strategy<Value = (SystemParams, ChannelRealization)> {
    params().prop_flat_map(|p| {
        let n_e = p.n_e;
        (Just(p), realization(n_e))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn secrecy_terms_are_ordered((p, c) in point()) {
        let r = rates::per_realization(&p, &c);
        let bar = rates::xi_bar_term(&p, &c);
        prop_assert!(r.xi_tilde >= 0.0);
        prop_assert!(r.xi_tilde <= bar + 1e-12);
        prop_assert!(bar <= r.xi_ba + 1e-12);
        prop_assert!(r.gamma_ba <= r.xi_ba + 1e-12);
        prop_assert!(r.gamma_ab <= r.xi_ab + 1e-12);
        let (snr_a, snr_e) = rates::effective_snrs(&p, &c);
        prop_assert!(snr_e <= snr_a);
    }

    #[test]
    fn bounds_sandwich_on_every_draw((p, c) in point()) {
        let r = rates::theorem1_bounds_on(&p, std::slice::from_ref(&c));
        let (c_a, c_b, c_e, i_ab) = (r.value("C_A"), r.value("C_B"), r.value("C_E"), r.value("I_AB"));
        let tol = 1e-9 * (1.0 + i_ab.abs());
        prop_assert!(c_a <= c_e + tol && c_b <= c_e + tol);
        prop_assert!(c_a <= i_ab + tol && c_b <= i_ab + tol);
        prop_assert!(r.value("C_L") <= r.value("C_U") + tol);
    }

    #[test]
    fn swapping_roles_swaps_directions((p, c) in point()) {
        let r = rates::per_realization(&p, &c);
        let s = rates::per_realization(&p.swapped(), &c.swapped());
        prop_assert!((r.xi_ba - s.xi_ab).abs() < 1e-12);
        prop_assert!((r.xi_ab - s.xi_ba).abs() < 1e-12);
        prop_assert!((r.gamma_ba - s.gamma_ab).abs() < 1e-12);
    }

    #[test]
    fn mse_ratio_is_at_most_one((p, c) in point()) {
        let eta = mmse::mse_ratio_eta(&p, &c);
        prop_assert!(eta > 0.0 && eta <= 1.0 + 1e-12);
        let ratio = mmse::alice_mse_limit(&p) / mmse::eve_mse_limit(&p, &c);
        prop_assert!((ratio - eta).abs() < 1e-9);
    }

    #[test]
    fn post_echo_bounds_stay_below_capacity(p in params(), seed in any::<u64>()) {
        let p = SystemParams { m_b: 0, ..p };
        let c_b = rates::theorem1_bounds(&p, 200, seed).unwrap().value("C_B");
        let lb = rates::theorem3_lower_bound(&p, 200, seed).unwrap().value("C_B_pruned_lb");
        prop_assert!(lb <= c_b + 1e-9);
        let draws = sample_channel_batch(&p, 200, seed).unwrap();
        prop_assert_eq!(rates::corollary1_on(&p, &draws).mean, c_b);
    }

    #[test]
    fn digital_rate_is_a_valid_rate(
        p_ba in 0.0f64..0.5,
        p_ea in 0.0f64..0.5,
        p_ab in prop_oneof![Just(0.0), 0.0f64..0.05],
        p_eb in prop_oneof![Just(0.0), 0.0f64..0.05],
    ) {
        let b = BscParams { p_ba, p_ea, p_ab, p_eb, m_a: 1 };
        if let Ok(xi) = digital::xi_digital(&b) {
            prop_assert!((-1.0..=1.0).contains(&xi));
            if p_ab == 0.0 && p_eb == 0.0 {
                prop_assert!(xi >= 0.0);
            }
            let oracle = steep_core::verify::xi_digital_oracle(&b).unwrap();
            prop_assert!((xi - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn toeplitz_hash_is_linear(seed in any::<u64>(), n in 1usize..300, k in 1usize..64) {
        let k = k.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Bits::random(&mut rng, n);
        let b = Bits::random(&mut rng, n);
        let h = ToeplitzHash::new(n, k, seed);
        prop_assert_eq!(h.hash(&a.xor(&b)), h.hash(&a).xor(&h.hash(&b)));
        prop_assert_eq!(h.hash(&Bits::zeros(n)).weight(), 0);
    }

    #[test]
    fn transcripts_round_trip(seed in any::<u64>(), m_a in 1usize..200, p_ba in 0.0f64..0.5) {
        let b = BscParams { p_ba, m_a, ..Default::default() };
        let ep = digital::run_digital_episode(&b, seed).unwrap();
        let bytes = transcript::to_bytes(&ep);
        prop_assert_eq!(transcript::from_bytes(&bytes).unwrap(), ep);
        prop_assert!(transcript::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn reordering_is_a_permutation_of_received_bits(seed in any::<u64>(), n in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = Bits::random(&mut rng, n);
        let perm = digital::permutation(n, seed);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        let out = digital::reorder_bits(&bits, &vec![false; n], seed, seed ^ 1).unwrap();
        prop_assert_eq!(out.weight(), bits.weight());
    }
}
