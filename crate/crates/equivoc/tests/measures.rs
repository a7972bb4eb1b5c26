mod common;

use common::{canon, grid, source};
use equivoc::measures::{
    cond_renyi_h, cond_renyi_h_up, renyi_divergence, scaled_cond_renyi, scaled_cond_renyi_up,
    security_measure, tilted_qe, two_param_h, varentropies,
};
use equivoc::{condition, random_joint, tensor_power, Form, JointSource};
use proptest::prelude::*;

fn h(src: &JointSource, s: f64, form: Form) -> f64 {
    match form {
        Form::Std => cond_renyi_h(src, s, None).unwrap(),
        Form::Up => cond_renyi_h_up(src, s).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn entropies_nonincreasing_in_s(src in source(5)) {
        for form in [Form::Std, Form::Up] {
            let hs: Vec<f64> = grid(-0.9, 3.0, 50).into_iter().map(|s| h(&src, s, form)).collect();
            for w in hs.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-10, "{form:?}: {} then {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn scaled_entropies_concave(src in source(5)) {
        let s = grid(-0.9, 3.0, 50);
        let std: Vec<f64> = s.iter().map(|&t| scaled_cond_renyi(&src, t)).collect();
        let up: Vec<f64> = s.iter().map(|&t| scaled_cond_renyi_up(&src, t)).collect();
        for ys in [std, up] {
            for w in ys.windows(3) {
                prop_assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-9);
            }
        }
    }

    #[test]
    fn scaled_forms_match_entropies(src in source(4), s in prop_oneof![-0.9f64..-0.01, 0.01f64..3.0]) {
        prop_assert!((scaled_cond_renyi(&src, s) - s * h(&src, s, Form::Std)).abs() < 1e-10);
        prop_assert!((scaled_cond_renyi_up(&src, s) - s * h(&src, s, Form::Up)).abs() < 1e-10);
    }

    #[test]
    fn tilted_reference_maximizes(src in source(5), s in -0.9f64..3.0, seed in any::<u64>()) {
        let up = h(&src, s, Form::Up);
        let q = tilted_qe(&src, s).unwrap();
        prop_assert!((cond_renyi_h(&src, s, Some(&q)).unwrap() - up).abs() <= 1e-10);
        for k in 0..100u64 {
            let other = random_joint(seed.wrapping_add(k), src.e_size(), 1).marginal_a();
            prop_assert!(cond_renyi_h(&src, s, Some(&other)).unwrap() <= up + 1e-10);
        }
    }

    #[test]
    fn diagonal_of_two_parameter_entropy(src in source(5), s in prop_oneof![-0.9f64..-0.01, 0.01f64..3.0]) {
        prop_assert!((two_param_h(&src, s, s).unwrap() - h(&src, s, Form::Up)).abs() <= 1e-12);
    }

    #[test]
    fn additive_over_tensor_powers(src in source(3), n in 2u32..=3, s in -0.9f64..3.0) {
        let big = tensor_power(&src, n).unwrap();
        for form in [Form::Std, Form::Up] {
            let one = h(&src, s, form);
            prop_assert!((h(&big, s, form) - n as f64 * one).abs() <= 1e-9);
        }
        let (v, vn) = (varentropies(&src), varentropies(&big));
        prop_assert!((vn.v - n as f64 * v.v).abs() <= 1e-9);
    }

    #[test]
    fn merging_symbols_cannot_raise_entropy(
        src in source(5),
        labels in prop::collection::vec(0usize..4, 5),
        s in -0.99f64..3.0,
    ) {
        // Relabel to a surjection onto 0..m.
        let mut seen: Vec<usize> = Vec::new();
        let f: Vec<usize> = labels[..src.a_size()]
            .iter()
            .map(|l| match seen.iter().position(|x| x == l) {
                Some(i) => i,
                None => {
                    seen.push(*l);
                    seen.len() - 1
                }
            })
            .collect();
        let merged = src.map_a(&f, seen.len()).unwrap();
        for form in [Form::Std, Form::Up] {
            prop_assert!(h(&merged, s, form) <= h(&src, s, form) + 1e-12);
        }
    }

    #[test]
    fn continuous_at_shannon_point(src in source(5)) {
        let h0 = h(&src, 0.0, Form::Std);
        for s in [-1e-4, 1e-4] {
            prop_assert!((h(&src, s, Form::Std) - h0).abs() <= 1e-3);
            prop_assert!((h(&src, s, Form::Up) - h0).abs() <= 1e-3);
        }
    }

    #[test]
    fn entropy_bounded_by_alphabet(src in source(5), s in -0.9f64..3.0) {
        let log_a = (src.a_size() as f64).ln();
        for form in [Form::Std, Form::Up] {
            let v = h(&src, s, form);
            prop_assert!(v >= -1e-12 && v <= log_a + 1e-12);
        }
    }

    #[test]
    fn gallager_measure_below_standard(src in source(5), s in 0.01f64..1.0) {
        let c = security_measure(&src, s, Form::Std).unwrap();
        let c_up = security_measure(&src, s, Form::Up).unwrap();
        prop_assert!(c_up <= c + 1e-12);
        prop_assert!(c_up >= -1e-12);
    }

    #[test]
    fn divergence_nonnegative_and_zero_on_diagonal(a in source(4), b in source(4), s in -0.5f64..2.0) {
        let (p, q) = (a.marginal_a(), b.marginal_a());
        prop_assume!(p.len() == q.len() && q.iter().all(|&x| x > 0.0));
        prop_assert!(renyi_divergence(&p, &q, s).unwrap() >= -1e-12);
        prop_assert!(renyi_divergence(&p, &p, s).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn varentropy_split(src in source(5)) {
        let v = varentropies(&src);
        prop_assert!((v.v - v.v1 - v.v2).abs() <= 1e-12);
        prop_assert!(v.v >= 0.0 && v.v1 >= 0.0 && v.v2 >= 0.0);
    }

    #[test]
    fn conditioning_round_trip(src in source(5)) {
        let view = condition(&src);
        for a in 0..src.a_size() {
            for e in 0..src.e_size() {
                prop_assert!((view.cond(a, e) * view.p_e()[e] - src.prob(a, e)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn tensor_power_keeps_unit_mass(src in source(2), n in 1u32..=8) {
        let big = tensor_power(&src, n).unwrap();
        prop_assert!((big.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn json_round_trip(src in source(5)) {
        // Loading renormalizes, which may move entries by an ulp.
        let back = JointSource::from_json_str(&src.to_json_string()).unwrap();
        prop_assert_eq!((back.a_size(), back.e_size()), (src.a_size(), src.e_size()));
        for (x, y) in back.probs().iter().zip(src.probs()) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
    }

    #[test]
    fn random_sources_pass_validation(seed in any::<u64>(), a in 1usize..6, e in 1usize..6) {
        let src = random_joint(seed, a, e);
        prop_assert!(equivoc::load_joint(&src.rows()).is_ok());
    }
}

#[test]
fn canon_reference_values() {
    let src = canon();
    assert!((h(&src, 0.0, Form::Std) - 0.44004556511713849).abs() < 1e-12);
    assert!((h(&src, 1.0, Form::Std) - 0.32158362412746228).abs() < 1e-12);
    assert!((h(&src, 1.0, Form::Up) - 0.32850406697203606).abs() < 1e-12);
    assert!((two_param_h(&src, 1.0, 1.0).unwrap() - 0.328504).abs() < 1e-6);
    let v = varentropies(&src);
    assert!((v.v - 0.34733965890213089).abs() < 1e-12);
    assert!((v.v1 - 0.016015106934939617).abs() < 1e-12);
}

#[test]
fn csv_and_json_inputs_agree() {
    let csv = JointSource::from_csv_str("e0,e1\n0.7,0.1\n0.1,0.1\n").unwrap();
    let json = JointSource::from_json_str(r#"{"p": [[0.7, 0.1], [0.1, 0.1]]}"#).unwrap();
    assert_eq!(csv, json);
    assert_eq!(csv, canon());
}
