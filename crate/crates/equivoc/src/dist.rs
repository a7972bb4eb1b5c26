//! Finite joint sources P_AE: validation, conditioning, tensor powers and
//! seeded random generation.
//!
//! Probabilities are stored dense and row-major, `p[a * e_size + e]`. Rows
//! index the secret A, columns the side information E. E-columns with zero
//! marginal are stripped on construction so every conditional is defined.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Below this magnitude an offset s is treated as the Shannon limit.
pub const S_EPS: f64 = 1e-7;

const MASS_WINDOW: f64 = 1e-9;
const TENSOR_LIMIT: f64 = 16_777_216.0;

#[derive(Clone, Debug, PartialEq)]
pub struct JointSource {
    a_size: usize,
    e_size: usize,
    p: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SourceFile {
    p: Vec<Vec<f64>>,
}

impl JointSource {
    /// Builds from a flat row-major array known to be a pmf. Zero columns are
    /// dropped.
    pub(crate) fn from_flat(a_size: usize, e_size: usize, p: Vec<f64>) -> Self {
        debug_assert_eq!(p.len(), a_size * e_size);
        let keep: Vec<usize> = (0..e_size)
            .filter(|&e| (0..a_size).any(|a| p[a * e_size + e] > 0.0))
            .collect();
        if keep.len() == e_size {
            return JointSource { a_size, e_size, p };
        }
        let ne = keep.len().max(1);
        let mut q = vec![0.0; a_size * ne];
        for a in 0..a_size {
            for (j, &e) in keep.iter().enumerate() {
                q[a * ne + j] = p[a * e_size + e];
            }
        }
        JointSource { a_size, e_size: ne, p: q }
    }

    /// A source with trivial side information (|E| = 1).
    pub fn from_marginal(p_a: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = p_a.iter().map(|&x| vec![x]).collect();
        load_joint(&rows)
    }

    /// Product source P_A × P_E.
    pub fn product(p_a: &[f64], p_e: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = p_a
            .iter()
            .map(|&x| p_e.iter().map(|&y| x * y).collect())
            .collect();
        load_joint(&rows)
    }

    pub fn a_size(&self) -> usize {
        self.a_size
    }

    pub fn e_size(&self) -> usize {
        self.e_size
    }

    #[inline]
    pub fn prob(&self, a: usize, e: usize) -> f64 {
        self.p[a * self.e_size + e]
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.e_size).map(|r| r.to_vec()).collect()
    }

    pub fn marginal_a(&self) -> Vec<f64> {
        self.p.chunks(self.e_size).map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_e(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.e_size];
        for row in self.p.chunks(self.e_size) {
            for (acc, x) in m.iter_mut().zip(row) {
                *acc += x;
            }
        }
        m
    }

    /// Joint law of (f(A), E) for a map f: A → {0..m}.
    pub fn map_a(&self, f: &[usize], m: usize) -> Result<Self> {
        if f.len() != self.a_size {
            return Err(domain(format!(
                "map has {} entries for an alphabet of size {}",
                f.len(),
                self.a_size
            )));
        }
        if let Some(&bad) = f.iter().find(|&&i| i >= m) {
            return Err(domain(format!("map value {bad} outside 0..{m}")));
        }
        let mut q = vec![0.0; m * self.e_size];
        for (a, &i) in f.iter().enumerate() {
            for e in 0..self.e_size {
                q[i * self.e_size + e] += self.prob(a, e);
            }
        }
        Ok(JointSource { a_size: m, e_size: self.e_size, p: q })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: SourceFile = serde_json::from_str(s)?;
        load_joint(&f.p)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&SourceFile { p: self.rows() }).expect("plain f64 rows serialize")
    }

    /// Headerless CSV, one row per A-symbol. A non-numeric first row is
    /// skipped as a header.
    pub fn from_csv_str(s: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(s.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|x| x.parse::<f64>()).collect();
            match parsed {
                Ok(r) => rows.push(r),
                Err(_) if i == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("csv row {i}: {e}"))),
            }
        }
        load_joint(&rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let is_csv = path
            .extension()
            .map(|x| x.eq_ignore_ascii_case("csv"))
            .unwrap_or(false);
        if is_csv {
            Self::from_csv_str(&text)
        } else {
            Self::from_json_str(&text)
        }
    }
}

/// Validates a matrix of rows (A) by columns (E) and renormalizes it.
pub fn load_joint(rows: &[Vec<f64>]) -> Result<JointSource> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let e_size = rows[0].len();
    let mut p = Vec::with_capacity(rows.len() * e_size);
    for (a, row) in rows.iter().enumerate() {
        if row.len() != e_size {
            return Err(Error::RaggedMatrix { row: a, len: row.len(), expected: e_size });
        }
        for (e, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite { row: a, col: e });
            }
            if x < 0.0 {
                return Err(Error::NegativeEntry { row: a, col: e, value: x });
            }
            p.push(x);
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > MASS_WINDOW {
        return Err(Error::MassNotOne(total));
    }
    p.iter_mut().for_each(|x| *x /= total);
    Ok(JointSource::from_flat(rows.len(), e_size, p))
}

/// The factorization P_AE = P_{A|E} · P_E.
#[derive(Clone, Debug, PartialEq)]
pub struct CondView {
    a_size: usize,
    e_size: usize,
    p_e: Vec<f64>,
    p_a_given_e: Vec<f64>,
}

impl CondView {
    pub fn a_size(&self) -> usize {
        self.a_size
    }

    pub fn e_size(&self) -> usize {
        self.e_size
    }

    pub fn p_e(&self) -> &[f64] {
        &self.p_e
    }

    #[inline]
    pub fn cond(&self, a: usize, e: usize) -> f64 {
        self.p_a_given_e[a * self.e_size + e]
    }

    pub fn column(&self, e: usize) -> Vec<f64> {
        (0..self.a_size).map(|a| self.cond(a, e)).collect()
    }
}

pub fn condition(source: &JointSource) -> CondView {
    let p_e = source.marginal_e();
    let mut pc = source.p.clone();
    for row in pc.chunks_mut(source.e_size) {
        for (x, pe) in row.iter_mut().zip(&p_e) {
            *x /= pe;
        }
    }
    CondView { a_size: source.a_size, e_size: source.e_size, p_e, p_a_given_e: pc }
}

/// The i.i.d. extension P_AE^n over A^n × E^n, tuples flattened row-major.
pub fn tensor_power(source: &JointSource, n: u32) -> Result<JointSource> {
    if n == 0 {
        return Err(domain("tensor power needs n ≥ 1"));
    }
    let size = (source.a_size as f64 * source.e_size as f64).powi(n as i32);
    if size > TENSOR_LIMIT {
        return Err(Error::SizeOverflow { what: "tensor power", size, limit: TENSOR_LIMIT });
    }
    let mut cur = source.clone();
    for _ in 1..n {
        let (a1, e1) = (cur.a_size, cur.e_size);
        let (a2, e2) = (source.a_size, source.e_size);
        let (na, ne) = (a1 * a2, e1 * e2);
        let mut p = vec![0.0; na * ne];
        for x1 in 0..a1 {
            for x2 in 0..a2 {
                let row = (x1 * a2 + x2) * ne;
                for y1 in 0..e1 {
                    let p1 = cur.prob(x1, y1);
                    for y2 in 0..e2 {
                        p[row + y1 * e2 + y2] = p1 * source.prob(x2, y2);
                    }
                }
            }
        }
        cur = JointSource { a_size: na, e_size: ne, p };
    }
    Ok(cur)
}

/// Normalized i.i.d. exponentials, i.e. a flat Dirichlet draw.
pub fn random_joint(seed: u64, a_size: usize, e_size: usize) -> JointSource {
    assert!(a_size >= 1 && e_size >= 1, "alphabet sizes must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: Vec<f64> = (0..a_size * e_size)
        .map(|_| {
            let x: f64 = Exp1.sample(&mut rng);
            x.max(f64::MIN_POSITIVE)
        })
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    JointSource { a_size, e_size, p }
}

/// The Rényi offset s of the order 1+s.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SParameter(f64);

impl SParameter {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() || s < -1.0 {
            return Err(domain(format!("s = {s} outside [-1, inf)")));
        }
        Ok(SParameter(s))
    }

    /// Checks `s` against an interval; `open_lo`/`open_hi` exclude endpoints.
    pub fn within(s: f64, lo: f64, open_lo: bool, hi: f64, open_hi: bool) -> Result<Self> {
        let ok_lo = if open_lo { s > lo } else { s >= lo };
        let ok_hi = if open_hi { s < hi } else { s <= hi };
        if !s.is_finite() || !ok_lo || !ok_hi {
            let l = if open_lo { '(' } else { '[' };
            let r = if open_hi { ')' } else { ']' };
            return Err(domain(format!("s = {s} outside {l}{lo}, {hi}{r}")));
        }
        Ok(SParameter(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_shannon(self) -> bool {
        self.0.abs() < S_EPS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon() -> JointSource {
        load_joint(&[vec![0.7, 0.1], vec![0.1, 0.1]]).unwrap()
    }

    #[test]
    fn canon_loads() {
        let c = canon();
        assert_eq!((c.a_size(), c.e_size()), (2, 2));
        assert!(load_joint(&[vec![1.0]]).is_ok());
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(
            load_joint(&[vec![0.5, -0.1], vec![0.3, 0.3]]),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(load_joint(&[]), Err(Error::EmptyMatrix)));
        assert!(matches!(load_joint(&[vec![0.5, 0.4]]), Err(Error::MassNotOne(_))));
        assert!(matches!(
            load_joint(&[vec![0.5, 0.25], vec![0.25]]),
            Err(Error::RaggedMatrix { .. })
        ));
    }

    #[test]
    fn renormalizes_inside_window() {
        let s = load_joint(&[vec![0.5 + 4e-10, 0.5]]).unwrap();
        assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn strips_zero_columns() {
        let s = load_joint(&[vec![0.5, 0.0, 0.25], vec![0.25, 0.0, 0.0]]).unwrap();
        assert_eq!(s.e_size(), 2);
        assert_eq!(s.prob(0, 1), 0.25);
    }

    #[test]
    fn conditions_canon() {
        let cv = condition(&canon());
        assert!((cv.p_e()[0] - 0.8).abs() < 1e-15 && (cv.p_e()[1] - 0.2).abs() < 1e-15);
        assert!((cv.cond(0, 0) - 0.875).abs() < 1e-15);
        assert!((cv.cond(1, 0) - 0.125).abs() < 1e-15);
        assert!((cv.cond(0, 1) - 0.5).abs() < 1e-15);
        let point = condition(&load_joint(&[vec![1.0]]).unwrap());
        assert_eq!((point.p_e()[0], point.cond(0, 0)), (1.0, 1.0));
    }

    #[test]
    fn tensor_entries_and_guard() {
        let c = canon();
        assert_eq!(tensor_power(&c, 1).unwrap(), c);
        let t = tensor_power(&c, 2).unwrap();
        assert!((t.prob(0, 0) - 0.49).abs() < 1e-15);
        // ((0,1),(1,0)): P(0,1) P(1,0) = 0.1 * 0.1
        assert!((t.prob(1, 2) - 0.01).abs() < 1e-15);
        assert!(matches!(tensor_power(&c, 13), Err(Error::SizeOverflow { .. })));
    }

    #[test]
    fn random_is_deterministic() {
        assert_eq!(random_joint(1, 2, 2), random_joint(1, 2, 2));
        assert_ne!(random_joint(1, 2, 2), random_joint(2, 2, 2));
        let r = random_joint(7, 3, 4);
        assert!(load_joint(&r.rows()).is_ok());
    }

    #[test]
    fn file_formats() {
        let j = JointSource::from_json_str(r#"{"p": [[0.7, 0.1], [0.1, 0.1]]}"#).unwrap();
        let c = JointSource::from_csv_str("e0,e1\n0.7,0.1\n0.1,0.1\n").unwrap();
        assert_eq!(j, canon());
        assert_eq!(c, canon());
        assert_eq!(JointSource::from_json_str(&j.to_json_string()).unwrap(), j);
    }

    #[test]
    fn map_merges_rows() {
        let m = canon().map_a(&[0, 0], 1).unwrap();
        assert_eq!(m.a_size(), 1);
        assert!((m.prob(0, 0) - 0.8).abs() < 1e-15);
        assert!(canon().map_a(&[0, 2], 2).is_err());
    }

    #[test]
    fn s_parameter_ranges() {
        assert!(SParameter::new(-1.5).is_err());
        assert!(SParameter::new(1e-8).unwrap().is_shannon());
        assert!(SParameter::within(1.0, 0.0, true, 1.0, true).is_err());
        assert!(SParameter::within(1.0, 0.0, true, 1.0, false).is_ok());
    }
}
