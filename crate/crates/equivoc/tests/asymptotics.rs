mod common;

use common::{canon, grid, source};
use equivoc::asymptotics::{
    critical_rate, equiv_limit, exponent, key_rate, maximize_concave, Sign, HALF_OPEN_EDGE,
};
use equivoc::measures::{
    cond_renyi_h, cond_renyi_h_up, scaled_cond_renyi, scaled_cond_renyi_up, scaled_two_param_h,
};
use equivoc::{Form, JointSource};
use proptest::prelude::*;

/// Smallest r where the exponent drops to (numerical) zero.
fn crossing(src: &JointSource, s: f64, sign: Sign, form: Form) -> f64 {
    let positive = |r: f64| exponent(src, s, r, sign, form).unwrap().value > 1e-14;
    let (mut lo, mut hi) = (0.0, (src.a_size() as f64).ln() + 1.0);
    if !positive(lo) {
        return 0.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if positive(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Dense grid scan of the same objective the optimizer sees.
fn scan_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    grid(lo, hi, 20_001).into_iter().map(f).fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plus_limit_nondecreasing_lipschitz(src in source(4), s in 0.0f64..=1.0) {
        for form in [Form::Std, Form::Up] {
            let thr = match form {
                Form::Std => cond_renyi_h(&src, s, None).unwrap(),
                Form::Up => cond_renyi_h_up(&src, s).unwrap(),
            };
            let rs = grid(0.0, 2.0, 201);
            let ys: Vec<f64> = rs.iter().map(|&r| equiv_limit(&src, s, r, Sign::Plus, form).unwrap()).collect();
            for i in 1..rs.len() {
                let (dr, dy) = (rs[i] - rs[i - 1], ys[i] - ys[i - 1]);
                prop_assert!(dy >= -1e-12 && dy <= dr + 1e-9);
                if rs[i - 1] >= thr {
                    prop_assert!((dy - dr).abs() <= 1e-9);
                    prop_assert!((ys[i] - (rs[i] - thr)).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn exponents_nonincreasing_in_rate(src in source(4), s in 0.0f64..0.99) {
        for sign in [Sign::Plus, Sign::Minus] {
            for form in [Form::Std, Form::Up] {
                let ys: Vec<f64> = grid(0.0, 2.0, 81)
                    .into_iter()
                    .map(|r| exponent(&src, s, r, sign, form).unwrap().value)
                    .collect();
                for w in ys.windows(2) {
                    prop_assert!(w[1] <= w[0] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn minus_exponent_dominates_plus(src in source(4), s in 0.0f64..=1.0, r in 0.0f64..2.0) {
        for form in [Form::Std, Form::Up] {
            let plus = exponent(&src, s, r, Sign::Plus, form).unwrap().value;
            let minus = exponent(&src, s, r, Sign::Minus, form).unwrap().value;
            prop_assert!(minus >= plus - 1e-12);
        }
    }

    #[test]
    fn std_exponent_vanishes_at_key_rate(src in source(4)) {
        for s in [0.0, 0.5, 0.75] {
            let root = crossing(&src, s, Sign::Plus, Form::Std);
            let key = key_rate(&src, s, Form::Std).unwrap();
            prop_assert!((root - key).abs() <= 1e-6, "s={s}: {root} vs {key}");
        }
    }

    /// The Gallager-form exponent uses the same objective as the standard
    /// one, so it vanishes at H_{1+s} rather than at the Gallager key rate.
    #[test]
    fn up_exponent_vanishes_at_standard_entropy(src in source(4)) {
        for s in [0.0, 0.5, 0.75] {
            let root = crossing(&src, s, Sign::Plus, Form::Up);
            let h = cond_renyi_h(&src, s, None).unwrap();
            prop_assert!((root - h).abs() <= 1e-6, "s={s}: {root} vs {h}");
        }
    }

    #[test]
    fn minus_clauses_join_at_critical_rate(src in source(4), s in 0.02f64..0.98) {
        // Standard form.
        let r = critical_rate(&src, -s, Form::Std).unwrap();
        let linear = r - cond_renyi_h(&src, -s, None).unwrap();
        let curved = maximize_concave(|t| (t * r + scaled_cond_renyi(&src, -t)) / s, 0.0, s, 1e-12).unwrap().value;
        prop_assert!((linear - curved).abs() <= 1e-8, "{linear} vs {curved}");
        let below = equiv_limit(&src, s, (r - 1e-10).max(0.0), Sign::Minus, Form::Std).unwrap();
        prop_assert!((below - linear).abs() <= 1e-8);
        // Gallager form, through t·H_{1−t|1−s}.
        let r = critical_rate(&src, -s, Form::Up).unwrap();
        let linear = r - cond_renyi_h_up(&src, -s).unwrap();
        let curved = maximize_concave(|t| (t * r + scaled_two_param_h(&src, -t, -s)) / s, 0.0, s, 1e-12)
            .unwrap()
            .value;
        prop_assert!((linear - curved).abs() <= 1e-8, "{linear} vs {curved}");
    }

    #[test]
    fn minus_limit_positive_above_entropy(src in source(4), s in 0.05f64..=1.0, dr in 0.01f64..0.5) {
        let h = cond_renyi_h(&src, 0.0, None).unwrap();
        let v = equiv_limit(&src, s, h + dr, Sign::Minus, Form::Std).unwrap();
        prop_assert!(v > 0.0);
        prop_assert!(equiv_limit(&src, s, (h - dr).max(0.0), Sign::Minus, Form::Std).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn critical_rate_matches_richardson(src in source(4), t in -0.8f64..0.9) {
        for form in [Form::Std, Form::Up] {
            let f = |x: f64| match form {
                Form::Std => scaled_cond_renyi(&src, x),
                Form::Up => scaled_cond_renyi_up(&src, x),
            };
            let d = |h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
            let h = 1e-3;
            let rich = (4.0 * d(h / 2.0) - d(h)) / 3.0;
            let exact = critical_rate(&src, t, form).unwrap();
            prop_assert!((exact - rich).abs() <= 1e-7 * (1.0 + exact.abs()), "{form:?}: {exact} vs {rich}");
        }
    }

    #[test]
    fn optimizer_beats_endpoints(a in -2.0f64..2.0, b in 0.01f64..5.0, lo in -1.0f64..0.5, w in 0.01f64..2.0) {
        let hi = lo + w;
        let f = |t: f64| -b * (t - a) * (t - a);
        let r = maximize_concave(f, lo, hi, 1e-10).unwrap();
        prop_assert!(r.argmax_t >= lo && r.argmax_t <= hi);
        prop_assert!(r.value >= f(lo) - 1e-12 && r.value >= f(hi) - 1e-12);
        let best = a.clamp(lo, hi);
        prop_assert!((r.value - f(best)).abs() <= 1e-9);
    }

    #[test]
    fn exponent_agrees_with_grid_scan(src in source(3), s in 0.0f64..0.95, r in 0.0f64..1.5) {
        let obj = |t: f64| scaled_cond_renyi(&src, t) - t * r;
        let plus = exponent(&src, s, r, Sign::Plus, Form::Std).unwrap().value;
        let scanned = scan_max(obj, s, HALF_OPEN_EDGE).max(0.0);
        prop_assert!(plus >= scanned - 1e-12 && plus <= scanned + 1e-7);
        let minus = exponent(&src, s, r, Sign::Minus, Form::Std).unwrap().value;
        let scanned = scan_max(obj, 0.0, 1.0);
        prop_assert!(minus >= scanned - 1e-12 && minus <= scanned + 1e-7);
    }
}

#[test]
fn canon_limits() {
    let src = canon();
    let v = equiv_limit(&src, 1.0, 0.5, Sign::Plus, Form::Std).unwrap();
    assert!((v - 0.178416).abs() < 1e-6);
    assert_eq!(equiv_limit(&src, 1.0, 0.2, Sign::Plus, Form::Std).unwrap(), 0.0);
    let h = cond_renyi_h(&src, 0.0, None).unwrap();
    assert!(equiv_limit(&src, 1.0, h, Sign::Minus, Form::Std).unwrap().abs() <= 1e-9);
    assert!((key_rate(&src, 1.0, Form::Std).unwrap() - 0.321584).abs() < 1e-6);
    assert!((key_rate(&src, -0.5, Form::Up).unwrap() - 0.440045).abs() < 1e-6);
}

#[test]
fn canon_exponent_oracle() {
    // Grid-scan oracle of max_{t∈[0,1]} t·H_{1+t} − 0.4 t.
    let src = canon();
    let e = exponent(&src, 0.0, 0.4, Sign::Minus, Form::Std).unwrap();
    let scanned = scan_max(|t| scaled_cond_renyi(&src, t) - 0.4 * t, 0.0, 1.0);
    assert!((e.value - scanned).abs() < 1e-9);
    assert!((e.value - 0.0024263).abs() < 1e-6);
    assert!(e.hypothesis_holds);
    assert!(!exponent(&src, 0.0, 0.2, Sign::Minus, Form::Std).unwrap().hypothesis_holds);
}

#[test]
fn critical_rates_of_canon() {
    let src = canon();
    assert!((critical_rate(&src, 1.0, Form::Std).unwrap() - 0.24426995215105).abs() < 1e-11);
    assert!((critical_rate(&src, 1.0, Form::Up).unwrap() - 0.26286392906590).abs() < 1e-11);
    let r0 = critical_rate(&src, 0.0, Form::Std).unwrap();
    let r_half = critical_rate(&src, 0.5, Form::Std).unwrap();
    assert!((r0 - 0.44004556511713849).abs() < 1e-12);
    assert!(r_half < r0 && r_half > 0.24426995215105);
}
