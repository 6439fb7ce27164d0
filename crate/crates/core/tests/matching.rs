use d2dsim::oracle::random_gain_table;
use d2dsim::{
    brute_force_match, build_weights, hungarian_match, reuse_candidates, Assignment, PowerLimits,
    QosSpec, WeightMatrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_weights<R: Rng>(rng: &mut R, n_cu: usize, n_d2d: usize, density: f64) -> WeightMatrix {
    let mut w = WeightMatrix::new(n_cu, n_d2d);
    for i in 0..n_cu {
        for j in 0..n_d2d {
            if rng.random_bool(density) {
                w.set(i, j, rng.random_range(-3.0..10.0));
            }
        }
    }
    w
}

/// (served, total weight) compared lexicographically.
fn lex_ge(a: &Assignment, b: &Assignment) -> bool {
    a.served() > b.served()
        || (a.served() == b.served() && a.total_weight_bpshz >= b.total_weight_bpshz - 1e-9)
}

#[test]
fn two_by_two_example() {
    let w = WeightMatrix::from_rows(&[vec![Some(1.0), Some(3.0)], vec![Some(2.0), Some(1.0)]]);
    let a = hungarian_match(&w);
    assert_eq!(a.d2d_to_cu, vec![Some(1), Some(0)]);
    assert!((a.total_weight_bpshz - 5.0).abs() < 1e-12);
    assert_eq!(a, brute_force_match(&w).unwrap());
}

#[test]
fn degenerate_shapes() {
    let empty = WeightMatrix::new(3, 0);
    let a = hungarian_match(&empty);
    assert!(a.d2d_to_cu.is_empty());
    assert_eq!(a.total_weight_bpshz, 0.0);

    let masked = WeightMatrix::new(3, 2);
    assert_eq!(hungarian_match(&masked).d2d_to_cu, vec![None, None]);
    assert_eq!(
        brute_force_match(&masked).unwrap().d2d_to_cu,
        vec![None, None]
    );

    let single = WeightMatrix::from_rows(&[vec![Some(0.75)]]);
    let a = hungarian_match(&single);
    assert_eq!(a.d2d_to_cu, vec![Some(0)]);
    assert_eq!(a.total_weight_bpshz, 0.75);
}

#[test]
fn hungarian_equals_exhaustive_on_channel_instances() {
    let limits = PowerLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2023);
    let mut nontrivial = 0;
    for k in 0..150 {
        let n_cu = rng.random_range(1..=8);
        let n_d2d = rng.random_range(0..=n_cu.min(6));
        let gains = random_gain_table(&mut rng, n_cu, n_d2d).unwrap();
        let eps = rng.random_range(0.5..20.0);
        let qos = QosSpec::with_thresholds(eps, eps);
        let cands = reuse_candidates(&gains, &qos, &limits).unwrap();
        let w = build_weights(&cands, &gains, &limits, true);
        let fast = hungarian_match(&w);
        let slow = brute_force_match(&w).unwrap();
        assert!(fast.is_valid_for(&w));
        assert_eq!(fast.d2d_to_cu, slow.d2d_to_cu, "instance {k}");
        assert!((fast.total_weight_bpshz - slow.total_weight_bpshz).abs() < 1e-9);
        if fast.served() > 1 {
            nontrivial += 1;
        }
    }
    assert!(
        nontrivial > 20,
        "only {nontrivial} instances matched more than one pair"
    );
}

#[test]
fn ties_resolve_identically_in_both_solvers() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n_cu = rng.random_range(1..=8);
        let n_d2d = rng.random_range(0..=n_cu);
        let mut w = WeightMatrix::new(n_cu, n_d2d);
        for i in 0..n_cu {
            for j in 0..n_d2d {
                if rng.random_bool(0.6) {
                    w.set(i, j, rng.random_range(-1..=2) as f64);
                }
            }
        }
        assert_eq!(hungarian_match(&w), brute_force_match(&w).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_exhaustive_search(seed in any::<u64>(), n_cu in 1usize..=8, m in 0usize..=6, density in 0.1f64..1.0) {
        let n_d2d = m.min(n_cu);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_weights(&mut rng, n_cu, n_d2d, density);
        let fast = hungarian_match(&w);
        let slow = brute_force_match(&w).unwrap();
        prop_assert!(fast.is_valid_for(&w));
        prop_assert_eq!(&fast.d2d_to_cu, &slow.d2d_to_cu);
        prop_assert!((fast.total_weight_bpshz - slow.total_weight_bpshz).abs() < 1e-9);
    }

    #[test]
    fn extra_edge_never_hurts(seed in any::<u64>(), n_cu in 1usize..=7, m in 1usize..=6) {
        let n_d2d = m.min(n_cu);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = random_weights(&mut rng, n_cu, n_d2d, 0.4);
        let before = hungarian_match(&w);
        let (i, j) = (rng.random_range(0..n_cu), rng.random_range(0..n_d2d));
        if !w.is_candidate(i, j) {
            w.set(i, j, rng.random_range(-3.0..10.0));
        }
        let after = hungarian_match(&w);
        prop_assert!(lex_ge(&after, &before), "{:?} then {:?}", before, after);
    }

    #[test]
    fn cu_relabeling_permutes_the_match(seed in any::<u64>(), n_cu in 1usize..=8, m in 0usize..=6) {
        let n_d2d = m.min(n_cu);
        let limits = PowerLimits::default();
        let qos = QosSpec::with_thresholds(2.886, 2.886);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gains = random_gain_table(&mut rng, n_cu, n_d2d).unwrap();
        let mut order: Vec<usize> = (0..n_cu).collect();
        for k in (1..n_cu).rev() {
            order.swap(k, rng.random_range(0..=k));
        }
        let permuted = gains.permute_cus(&order);
        let match_of = |g: &d2dsim::GainTable| {
            let cands = reuse_candidates(g, &qos, &limits).unwrap();
            hungarian_match(&build_weights(&cands, g, &limits, true))
        };
        let a = match_of(&gains);
        let b = match_of(&permuted);
        prop_assert!((a.total_weight_bpshz - b.total_weight_bpshz).abs() < 1e-9);
        let mapped: Vec<Option<usize>> = b.d2d_to_cu.iter().map(|c| c.map(|k| order[k])).collect();
        prop_assert_eq!(mapped, a.d2d_to_cu);
    }
}
