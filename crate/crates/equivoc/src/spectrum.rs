//! Exact finite-n information-spectrum quantities by type enumeration.
//!
//! The law of the entropy density Σ_j h(a_j|e_j) under P_AE^n depends only
//! on the joint type of (a^n, e^n), so tails are sums of multinomial masses
//! over compositions of n. Compositions are streamed, never stored.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{maximize_concave, OPT_TOL};
use crate::dist::{condition, JointSource};
use crate::error::{domain, Error, Result};
use crate::measures::{log_sum_exp, scaled_cond_renyi};

const COMPOSITION_LIMIT: f64 = 1e8;
const TIE_TOL: f64 = 1e-12;
/// Cap on t in the Cramér maximization.
pub const CRAMER_T_MAX: f64 = 50.0;

/// Running log Σ exp(x).
#[derive(Clone, Copy, Debug)]
struct LogAcc {
    max: f64,
    sum: f64,
}

impl LogAcc {
    fn new() -> Self {
        LogAcc { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    fn merge(mut self, o: LogAcc) -> Self {
        if o.max == f64::NEG_INFINITY {
            return self;
        }
        if o.max > self.max {
            self.sum = self.sum * (self.max - o.max).exp() + o.sum;
            self.max = o.max;
        } else {
            self.sum += o.sum * (o.max - self.max).exp();
        }
        self
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// ln k! for k = 0..=n.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n + 1);
    t.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        t.push(acc);
    }
    t
}

/// C(n+k−1, k−1) in floating point.
fn composition_count(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 1..k {
        c = c * (n + i) as f64 / i as f64;
    }
    c
}

/// One joint type: occupation counts over the support atoms of P_AE.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeAtom {
    pub counts: Vec<usize>,
    pub log_prob: f64,
    pub sum_density: f64,
}

struct Atoms {
    log_p: Vec<f64>,
    density: Vec<f64>,
}

fn atoms(source: &JointSource) -> Atoms {
    let cv = condition(source);
    let mut log_p = Vec::new();
    let mut density = Vec::new();
    for a in 0..source.a_size() {
        for e in 0..source.e_size() {
            let p = source.prob(a, e);
            if p > 0.0 {
                log_p.push(p.ln());
                density.push(-cv.cond(a, e).ln());
            }
        }
    }
    Atoms { log_p, density }
}

/// Calls `visit` for every composition of `n` into `k` parts, with the
/// first count fixed to `first`.
fn for_each_type<F: FnMut(&[usize], f64, f64)>(
    at: &Atoms,
    lf: &[f64],
    n: usize,
    first: usize,
    mut visit: F,
) {
    let k = at.log_p.len();
    let mut counts = vec![0usize; k];
    counts[0] = first;
    let base_lp = lf[n] - lf[first] + first as f64 * at.log_p[0];
    let base_d = first as f64 * at.density[0];
    if k == 1 {
        if first == n {
            visit(&counts, base_lp, base_d);
        }
        return;
    }
    recurse(at, lf, &mut counts, 1, n - first, base_lp, base_d, &mut visit);
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(&[usize], f64, f64)>(
    at: &Atoms,
    lf: &[f64],
    counts: &mut [usize],
    j: usize,
    left: usize,
    lp: f64,
    d: f64,
    visit: &mut F,
) {
    let k = counts.len();
    if j == k - 1 {
        counts[j] = left;
        let lp = lp - lf[left] + left as f64 * at.log_p[j];
        visit(counts, lp, d + left as f64 * at.density[j]);
        return;
    }
    for c in 0..=left {
        counts[j] = c;
        let lp2 = lp - lf[c] + c as f64 * at.log_p[j];
        recurse(at, lf, counts, j + 1, left - c, lp2, d + c as f64 * at.density[j], visit);
    }
}

fn check_size(n: usize, k: usize) -> Result<()> {
    let count = composition_count(n, k);
    if count > COMPOSITION_LIMIT {
        return Err(Error::SizeOverflow { what: "type enumeration", size: count, limit: COMPOSITION_LIMIT });
    }
    Ok(())
}

/// Every joint type with its mass and summed entropy density. Intended for
/// small n; `exact_tail` streams instead.
pub fn enumerate_types(source: &JointSource, n: usize) -> Result<Vec<TypeAtom>> {
    let at = atoms(source);
    check_size(n, at.log_p.len())?;
    let lf = log_factorials(n);
    let mut out = Vec::new();
    for first in 0..=n {
        for_each_type(&at, &lf, n, first, |c, lp, d| {
            out.push(TypeAtom { counts: c.to_vec(), log_prob: lp, sum_density: d })
        });
    }
    Ok(out)
}

/// ln P^n{ −log P_{A|E}^n(A^n|E^n) ≥ n r }, boundary ties included.
pub fn log_exact_tail(source: &JointSource, n: usize, r: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("n must be ≥ 1"));
    }
    if !r.is_finite() {
        return Err(domain(format!("rate must be finite, got {r}")));
    }
    let at = atoms(source);
    check_size(n, at.log_p.len())?;
    let lf = log_factorials(n);
    let target = n as f64 * r;
    let slack = TIE_TOL * target.abs().max(1.0);
    let acc = (0..=n)
        .into_par_iter()
        .map(|first| {
            let mut acc = LogAcc::new();
            for_each_type(&at, &lf, n, first, |_, lp, d| {
                if d >= target - slack {
                    acc.add(lp);
                }
            });
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(LogAcc::new(), LogAcc::merge);
    Ok(acc.value().min(0.0))
}

pub fn exact_tail(source: &JointSource, n: usize, r: f64) -> Result<f64> {
    Ok(log_exact_tail(source, n, r)?.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CramerExponent {
    pub value: f64,
    pub argmax_t: f64,
    /// The maximizer sits on the cap, so the true supremum may be larger.
    pub capped: bool,
}

/// max_{t ∈ [0, 50]} t (r − H_{1−t}(A|E)).
pub fn cramer_exponent(source: &JointSource, r: f64) -> Result<CramerExponent> {
    if !(r >= 0.0) {
        return Err(domain(format!("rate must be ≥ 0, got {r}")));
    }
    let obj = |t: f64| t * r + scaled_cond_renyi(source, -t);
    let opt = maximize_concave(obj, 0.0, CRAMER_T_MAX, OPT_TOL)?;
    let capped = opt.argmax_t >= CRAMER_T_MAX - 1e-6;
    if capped {
        log::warn!("Cramér maximizer for r = {r} reached the cap t = {CRAMER_T_MAX}");
    }
    Ok(CramerExponent { value: opt.value, argmax_t: opt.argmax_t, capped })
}

/// Σ_a P_{A|E}(a|e)² per e.
fn column_collisions(source: &JointSource) -> Vec<f64> {
    let cv = condition(source);
    (0..cv.e_size())
        .map(|e| (0..cv.a_size()).map(|a| cv.cond(a, e).powi(2)).sum())
        .collect()
}

const TYPE_AGGREGATION_LIMIT: f64 = 1e6;

/// Expected conditional collision probability of the binned key under
/// uniform random binning into M bins, for n i.i.d. copies:
/// Σ_{e^n} P_E^n(e^n) [π(e^n) + (1 − π(e^n))/M].
pub fn collision_sum_exact(source: &JointSource, n: usize, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(domain("M must be ≥ 1"));
    }
    if n > 1_000_000 {
        return Err(Error::SizeOverflow { what: "blocklength", size: n as f64, limit: 1e6 });
    }
    let pe = source.marginal_e();
    let pi1 = column_collisions(source);
    let inv_m = 1.0 / m as f64;
    let k = pe.len();
    // E-types carry everything: P_E^n and π factor over letters.
    let log_mean_pi = if composition_count(n, k) <= TYPE_AGGREGATION_LIMIT {
        let log_w: Vec<f64> = pe.iter().zip(&pi1).map(|(p, c)| p.ln() + c.ln()).collect();
        let lf = log_factorials(n);
        let mut acc = LogAcc::new();
        let mut counts = vec![0usize; k];
        e_types(&mut counts, 0, n, &mut |c| {
            let lp = lf[n] + c.iter().zip(&log_w).map(|(&ci, lw)| -lf[ci] + ci as f64 * lw).sum::<f64>();
            acc.add(lp);
        });
        acc.value()
    } else {
        n as f64 * log_sum_exp(pe.iter().zip(&pi1).map(|(p, c)| p.ln() + c.ln()))
    };
    Ok(inv_m + (1.0 - inv_m) * log_mean_pi.exp())
}

fn e_types<F: FnMut(&[usize])>(counts: &mut [usize], j: usize, left: usize, visit: &mut F) {
    if j == counts.len() - 1 {
        counts[j] = left;
        visit(counts);
        return;
    }
    for c in 0..=left {
        counts[j] = c;
        e_types(counts, j + 1, left - c, visit);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub n: usize,
    pub r: f64,
    pub exact_tail: f64,
    pub chernoff_bound: f64,
    /// chernoff_bound − exact_tail, ≥ 0 by the Chernoff inequality.
    pub gap: f64,
}

pub fn tail_table(source: &JointSource, ns: &[usize], rs: &[f64]) -> Result<Vec<TailRow>> {
    let mut rows = Vec::with_capacity(ns.len() * rs.len());
    for &n in ns {
        for &r in rs {
            let exact = exact_tail(source, n, r)?;
            let bound = (-(n as f64) * cramer_exponent(source, r)?.value).exp();
            rows.push(TailRow { n, r, exact_tail: exact, chernoff_bound: bound, gap: bound - exact });
        }
    }
    Ok(rows)
}

pub fn write_tail_csv<W: Write>(rows: &[TailRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "r", "exact_tail", "chernoff_bound", "gap"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.r.to_string(),
            r.exact_tail.to_string(),
            r.chernoff_bound.to_string(),
            r.gap.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
