use nalgebra::DMatrix;
use proptest::prelude::*;
use serde_json::Value;
use soslift_core::instances::{sample_gaussian_matrix, sample_goe, sample_regular_graph};
use soslift_core::moments::TOL_PSD;
use soslift_core::seeds::{default_sk_k, seed_boolean_vector, seed_maxcut, seed_sk};
use soslift_core::{check_sos2_feasible, check_sos4_feasible, lift, Degree2Solution, Mode};

fn unit_gram(n: usize, seed: u64) -> Degree2Solution {
    let v = sample_gaussian_matrix(n, 1 + (seed as usize % n), seed).unwrap().mg;
    let norms: Vec<f64> = (0..n).map(|i| v.row(i).norm()).collect();
    let g = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let (a, b) = (i.min(j), i.max(j));
            v.row(a).dot(&v.row(b)) / (norms[a] * norms[b])
        }
    });
    Degree2Solution::new(g, Value::Null).unwrap()
}

fn seed_for(family: u8, n: usize, seed: u64) -> Degree2Solution {
    match family {
        0 => seed_sk(&sample_goe(n, seed).unwrap(), default_sk_k(n), None).unwrap().0,
        1 => {
            let n = n + n % 2;
            seed_maxcut(&sample_regular_graph(n, 3, seed).unwrap(), 0.5).unwrap().0
        }
        2 => seed_boolean_vector(&sample_gaussian_matrix(n, n / 2, seed).unwrap(), None).unwrap().0,
        _ => unit_gram(n, seed),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn lifted_seeds_are_feasible(family in 0u8..4, n in 8usize..=64, seed in any::<u64>()) {
        let x = seed_for(family, n, seed);
        prop_assert!(check_sos2_feasible(&x.x, TOL_PSD).unwrap().ok);
        let (m, _) = lift(&x, Mode::Certified).unwrap();
        let r = check_sos4_feasible(&m, TOL_PSD).unwrap();
        prop_assert!(r.ok, "{r:?}");
        prop_assert_eq!(r.max_odd_entry, 0.0);
        prop_assert_eq!(r.max_symmetry_violation, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn same_seed_same_instance(n in 4usize..30, seed in any::<u64>()) {
        prop_assert_eq!(sample_goe(n, seed).unwrap().g, sample_goe(n, seed).unwrap().g);
        let n2 = n + n % 2;
        prop_assert_eq!(sample_regular_graph(n2, 3, seed).unwrap().adj, sample_regular_graph(n2, 3, seed).unwrap().adj);
        prop_assert_eq!(sample_gaussian_matrix(n, 3, seed).unwrap().mg, sample_gaussian_matrix(n, 3, seed).unwrap().mg);
    }
}
