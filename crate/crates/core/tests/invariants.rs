use proptest::prelude::*;
use rcmimo_core::{
    arrays::{upa_response, ArrayGeometry},
    dual::SolverOptions,
    geometry::{BoundarySample, CharacteristicMatrix, ConstraintSet, RegionConstraint},
    linalg::{frob2, waterfill},
    mu::{backoff_scale, mmse_decoder, mmse_decoder_lemma, solve_bd, solve_mu_sumrate, sum_rate, OuterOptions},
    rng::{complex_gaussian, derive, stream},
    su::{capacity, modify_entry, random_codebook, solve_su_optimal, waterfill_power_only},
    CMat, Error, PrecoderSet, C64,
};

fn gauss(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut rng = stream(seed);
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng))
}

/// `n` boundary-like constraints on a 2x3 array, thresholds a fraction of
/// the load a full-power isotropic input would put there.
fn constraints(n: usize, seed: u64, tightness: f64) -> ConstraintSet {
    let g = ArrayGeometry::new(2, 3, 0.5).unwrap();
    let mut rng = stream(seed);
    let items = (0..n)
        .map(|l| {
            let u = |rng: &mut _| rcmimo_core::rng::uniform(rng, 0.0, 1.0);
            let point = BoundarySample { d: 1.0 + u(&mut rng), theta: 0.3 + 1.2 * u(&mut rng), phi: 3.0 * u(&mut rng) };
            let matrix = CharacteristicMatrix::new(&g, &point, 2.0);
            let threshold = tightness * matrix.trace();
            RegionConstraint { region: 0, sample: l, threshold, point, matrix }
        })
        .collect();
    ConstraintSet::from_items(6, items)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn waterfill_spends_budget_on_a_common_level(
        gains in prop::collection::vec(0.0f64..10.0, 1..8),
        noise in 0.1f64..2.0,
        budget in 0.01f64..50.0,
    ) {
        let p = waterfill(&gains, noise, budget);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        if gains.iter().any(|&g| g > 0.0) {
            prop_assert!((p.iter().sum::<f64>() - budget).abs() <= 1e-9 * budget);
            // Active streams share one level; inactive floors sit above it.
            let levels: Vec<f64> = (0..gains.len()).filter(|&i| p[i] > 0.0).map(|i| p[i] + noise / gains[i]).collect();
            let level = levels[0];
            prop_assert!(levels.iter().all(|l| (l - level).abs() <= 1e-9 * level));
            for i in 0..gains.len() {
                if p[i] == 0.0 && gains[i] > 0.0 {
                    prop_assert!(noise / gains[i] >= level - 1e-9 * level);
                }
            }
        }
    }

    #[test]
    fn capacity_ignores_right_unitary(seed in any::<u64>(), angle in 0.0f64..6.28) {
        let h = gauss(2, 5, seed);
        let f = gauss(5, 2, derive(seed, 1));
        let (c, s) = (angle.cos(), angle.sin());
        let u = CMat::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(c, 0.0)]);
        let a = capacity(&h, &f, 1.0);
        let b = capacity(&h, &(&f * u), 1.0);
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn steering_vectors_have_unit_modulus(theta in 0.0f64..3.14, phi in -3.14f64..3.14, m1 in 1usize..6, m2 in 1usize..6) {
        let g = ArrayGeometry::new(m1, m2, 0.5).unwrap();
        let a = upa_response(&g, theta, phi);
        prop_assert_eq!(a.len(), m1 * m2);
        prop_assert!(a.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn decoder_forms_agree(seed in any::<u64>(), k in 1usize..4) {
        let hs: Vec<CMat> = (0..k).map(|i| gauss(2, 8, derive(seed, i as u64))).collect();
        let fs: Vec<CMat> = (0..k).map(|i| gauss(8, 2, derive(seed, 100 + i as u64))).collect();
        for u in 0..k {
            let a = mmse_decoder(&hs[u], &fs, u, 0.7).unwrap();
            let b = mmse_decoder_lemma(&hs[u], &fs, u, 0.7).unwrap();
            prop_assert!((&a - &b).norm() <= 1e-10 * a.norm().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn su_optimum_is_feasible_and_beats_power_only_scaling(seed in any::<u64>(), tight in 0.001f64..0.5) {
        let cons = constraints(5, seed, tight);
        let h = gauss(2, 6, derive(seed, 7));
        let p = 4.0;
        let opts = SolverOptions::default();
        let (f, st) = solve_su_optimal(&h, p, &cons, 1.0, 2, &opts, None).unwrap();
        prop_assert!(frob2(&f) <= p * (1.0 + 1e-6));
        prop_assert!(cons.worst_ratio(std::slice::from_ref(&f)) <= 1.0 + 1e-6);
        prop_assert!(st.chi <= opts.epsilon);
        prop_assert!(st.lambda.iter().all(|&l| l >= 0.0) && st.mu >= 0.0);
        // Scaling the free waterfilling design down until it is feasible is
        // one feasible point; the optimum can only do better.
        let free = waterfill_power_only(&h, p, 1.0, 2);
        let (scaled, _) = backoff_scale(PrecoderSet::new(vec![free]), &cons);
        let base = capacity(&h, &scaled.per_user[0], 1.0);
        prop_assert!(capacity(&h, &f, 1.0) >= base - 1e-6 * base.max(1.0));
    }

    #[test]
    fn modified_entries_keep_power_and_meet_caps(seed in any::<u64>(), tight in 0.01f64..0.5) {
        let cons = constraints(4, seed, tight);
        let cb = random_codebook(1, 6, 2, seed).unwrap();
        for e in &cb.entries {
            let (m, _) = modify_entry(e, 2.0, &cons, &SolverOptions::default()).unwrap();
            prop_assert!((frob2(&m) - 2.0).abs() <= 1e-12 * 2.0);
            prop_assert!(cons.worst_ratio(std::slice::from_ref(&m)) <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn backoff_lands_on_the_worst_sample(seed in any::<u64>(), tight in 0.001f64..2.0) {
        let cons = constraints(6, seed, tight);
        let f = gauss(6, 2, seed);
        let (set, alpha) = backoff_scale(PrecoderSet::new(vec![f.clone()]), &cons);
        let ratio = cons.worst_ratio(&set.per_user);
        prop_assert!(alpha > 0.0 && alpha <= 1.0);
        if alpha < 1.0 {
            prop_assert!((ratio - 1.0).abs() <= 1e-9);
        } else {
            prop_assert_eq!(&set.per_user[0], &f);
        }
    }

    #[test]
    fn bd_zero_forces_and_meets_caps(seed in any::<u64>(), k in 2usize..4, tight in 0.005f64..0.5) {
        let cons = constraints(4, seed, tight);
        let hs: Vec<CMat> = (0..k).map(|i| gauss(1, 6, derive(seed, i as u64))).collect();
        let set = solve_bd(&hs, 3.0, &cons, 1.0, 1, &SolverOptions::default(), None).unwrap();
        for (u, f) in set.per_user.iter().enumerate() {
            for (j, h) in hs.iter().enumerate() {
                if j != u && f.norm() > 0.0 {
                    prop_assert!((h * f).norm() <= 1e-8 * h.norm() * f.norm());
                }
            }
        }
        prop_assert!(cons.worst_ratio(&set.per_user) <= 1.0 + 1e-6);
        prop_assert!(set.power() <= 3.0 * (1.0 + 1e-6));
    }

    #[test]
    fn sumrate_trace_never_drops(seed in any::<u64>(), tight in 0.01f64..0.5) {
        let cons = constraints(3, seed, tight);
        let hs: Vec<CMat> = (0..2).map(|i| gauss(1, 6, derive(seed, i as u64))).collect();
        let outer = OuterOptions { epsilon: 1e-6, max_outer: 40 };
        let sol = match solve_mu_sumrate(&hs, 2.0, &cons, 1.0, &SolverOptions::default(), &outer) {
            Ok(s) => s,
            Err(Error::OuterNonConvergence { last, .. }) => *last,
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        prop_assert!(sol.rate_trace.windows(2).all(|w| w[1] >= w[0] - 1e-8));
        prop_assert!(cons.worst_ratio(&sol.precoders.per_user) <= 1.0 + 1e-6);
        let last = *sol.rate_trace.last().unwrap();
        prop_assert!((sum_rate(&hs, &sol.precoders.per_user, 1.0).unwrap() - last).abs() <= 1e-9 * last.max(1.0));
    }
}

#[test]
fn same_seed_same_channels() {
    let a = rcmimo_core::channels::rayleigh(42, 3, 2, 36).unwrap();
    let b = rcmimo_core::channels::rayleigh(42, 3, 2, 36).unwrap();
    assert_eq!(a, b);
    let c = rcmimo_core::channels::rayleigh(43, 3, 2, 36).unwrap();
    assert_ne!(a.per_user[0], c.per_user[0]);
}
