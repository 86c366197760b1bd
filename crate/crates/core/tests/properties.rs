use std::sync::Arc;

use proptest::prelude::*;

use lpstab_core::format::{read_matrix_str, write_matrix_string};
use lpstab_core::opmat::check_disjoint_supports;
use lpstab_core::space::{covering, cutoff};
use lpstab_core::stability::{lambda_estimate, lambda_exact_2, ratio, sequence_tail_bound, Budget};
use lpstab_core::zoo::{random_banded, random_thin_sparse};
use lpstab_core::{lp_norm, Exponent, MetricSpace};

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        (1.0f64..8.0).prop_map(|p| Exponent::new(p).unwrap()),
        Just(Exponent::INFINITY),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonical_files_round_trip(n in 1usize..40, r in 0usize..4, seed in any::<u64>()) {
        let a = random_banded(n, r, None, seed).unwrap();
        let text = write_matrix_string(&a).unwrap();
        let b = read_matrix_str(&text).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(write_matrix_string(&b).unwrap(), text);
    }

    #[test]
    fn tail_of_a_normalized_sequence_obeys_the_bound(
        raw in prop::collection::vec(0.0f64..1.0, 1..60),
        p in 1.0f64..4.0,
        gap in 0.05f64..6.0,
        infinite_q in any::<bool>(),
        m in 1usize..20,
    ) {
        let p = Exponent::new(p).unwrap();
        let q = if infinite_q { Exponent::INFINITY } else { Exponent::new(p.value() + gap).unwrap() };
        let mut a = raw;
        a.sort_by(|x, y| y.total_cmp(x));
        let norm = lp_norm(&a, p);
        prop_assume!(norm > 0.0);
        a.iter_mut().for_each(|x| *x /= norm);
        let tail = if m < a.len() { lp_norm(&a[m..], q) } else { 0.0 };
        let bound = sequence_tail_bound(p, q, m).unwrap();
        prop_assert!(tail <= bound * (1.0 + 1e-12), "tail {} > bound {}", tail, bound);
    }

    #[test]
    fn coverings_and_cutoffs_on_windows(n in 1usize..300, l in 1.0f64..40.0) {
        let space = MetricSpace::z_interval(n).unwrap();
        let cov = covering(&space, l, 6.0).unwrap();
        prop_assert!(cov.verify(&space).passed());
        for color in 0..cov.num_colors {
            let profile = cutoff(&cov.class(color), l, &space).unwrap();
            prop_assert!(profile.verify(&space).passed());
        }
    }

    #[test]
    fn separated_inputs_have_orthogonal_images(
        n in 20usize..120,
        r in 0.0f64..4.0,
        v in 1usize..4,
        seed in any::<u64>(),
        split in 0.2f64..0.8,
    ) {
        let space = Arc::new(MetricSpace::z_interval(n).unwrap());
        let a = random_thin_sparse(space, r, v, 0.7, seed).unwrap();
        let cut = (n as f64 * split) as usize;
        let gap = 2 * a.stats().thickness.unwrap_or(0.0).ceil() as usize + 1;
        let u: Vec<f64> = (0..n).map(|i| if i < cut { 1.0 + i as f64 } else { 0.0 }).collect();
        let w: Vec<f64> = (0..n).map(|i| if i >= cut + gap { -1.0 - i as f64 } else { 0.0 }).collect();
        let check = check_disjoint_supports(&a, &u, &w).unwrap();
        prop_assert!(check.holds());
        let au = a.apply(&u).unwrap();
        let aw = a.apply(&w).unwrap();
        prop_assert!(au.iter().zip(&aw).all(|(x, y)| *x == 0.0 || *y == 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimates_are_attained_ratios(n in 4usize..24, r in 0usize..3, seed in any::<u64>(), p in exponent()) {
        let a = random_banded(n, r, None, seed).unwrap();
        let est = lambda_estimate(&a, p, Budget { starts: 3, iters: 40, ..Budget::default() }, seed).unwrap();
        prop_assert!((ratio(&a, &est.witness, p) - est.value).abs() <= 1e-12 * est.value.max(1.0));
        if p == Exponent::TWO {
            prop_assert!(lambda_exact_2(&a).unwrap().value <= est.value + 1e-9);
        }
    }
}
