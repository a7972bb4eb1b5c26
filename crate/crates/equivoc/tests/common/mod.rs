#![allow(dead_code)]

use equivoc::{load_joint, JointSource};
use proptest::prelude::*;

pub fn canon() -> JointSource {
    load_joint(&[vec![0.7, 0.1], vec![0.1, 0.1]]).unwrap()
}

/// Joint sources up to `max` × `max`, with some exact zeros.
pub fn source(max: usize) -> impl Strategy<Value = JointSource> {
    (1..=max, 1..=max)
        .prop_flat_map(|(a, e)| {
            let weight = prop_oneof![4 => 0.01f64..1.0, 1 => Just(0.0)];
            (Just(a), prop::collection::vec(weight, a * e))
        })
        .prop_filter("needs mass", |(_, w)| w.iter().sum::<f64>() > 0.0)
        .prop_map(|(a, w)| {
            let total: f64 = w.iter().sum();
            let rows: Vec<Vec<f64>> = w.chunks(w.len() / a).map(|r| r.iter().map(|x| x / total).collect()).collect();
            load_joint(&rows).unwrap()
        })
}

/// Evenly spaced grid with `n` points on [lo, hi].
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
