use equivoc::hashing::{all_functions_family, collision_probability, toeplitz_family, verify_epsilon, HashFamily};
use proptest::prelude::*;

#[test]
fn binning_collides_at_exactly_one_over_m() {
    for a in 2..=5 {
        for m in 2..=3 {
            let fam = all_functions_family(a, m).unwrap();
            for a1 in 0..a {
                for a2 in a1 + 1..a {
                    let p = collision_probability(&fam, a1, a2);
                    assert!((p - 1.0 / m as f64).abs() <= 1e-15, "a={a} m={m}: {p}");
                }
            }
        }
    }
}

#[test]
fn full_toeplitz_families_are_universal() {
    for in_bits in 1..=4 {
        for out_bits in 1..=in_bits {
            let fam = toeplitz_family(in_bits, out_bits, 0, None).unwrap();
            let eps = fam.certified_epsilon().unwrap();
            assert!(eps <= 1.0 + 1e-15, "{in_bits}->{out_bits}: ε = {eps}");
            assert_eq!(fam.len(), 1 << (in_bits + out_bits - 1));
        }
    }
}

#[test]
fn sampled_toeplitz_is_uncertified() {
    let fam = toeplitz_family(6, 2, 3, Some(16)).unwrap();
    assert_eq!(fam.certified_epsilon(), None);
    assert_eq!(fam.len(), 16);
    let check = verify_epsilon(&fam);
    assert!(check.exact && check.epsilon >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn members_are_total_functions(in_bits in 1u32..=6, out in 1u32..=6, seed in any::<u64>()) {
        prop_assume!(out <= in_bits);
        let fam = toeplitz_family(in_bits, out, seed, Some(8)).unwrap();
        for k in 0..fam.len() {
            prop_assert_eq!(fam.members()[k].len(), fam.a_size());
            for a in 0..fam.a_size() {
                let y = fam.apply(k, a);
                prop_assert!(y < fam.m_size());
                prop_assert_eq!(y, fam.apply(k, a));
            }
        }
    }

    #[test]
    fn json_round_trip(a in 1usize..=4, m in 1usize..=3) {
        let fam = all_functions_family(a, m).unwrap();
        let back = HashFamily::from_json_str(&fam.to_json_string()).unwrap();
        prop_assert_eq!(back.members(), fam.members());
        prop_assert_eq!(back.weights(), fam.weights());
        prop_assert_eq!(back.m_size(), fam.m_size());
    }

    #[test]
    fn weights_form_a_distribution(a in 1usize..=5, m in 1usize..=3) {
        let fam = all_functions_family(a, m).unwrap();
        prop_assert!((fam.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn invalid_families_are_rejected() {
    assert!(HashFamily::new(2, vec![vec![0, 2]], vec![1.0]).is_err());
    assert!(HashFamily::new(2, vec![vec![0, 1], vec![0]], vec![0.5, 0.5]).is_err());
    assert!(HashFamily::new(2, vec![vec![0, 1]], vec![0.5]).is_err());
    assert!(toeplitz_family(2, 3, 0, None).is_err());
}
