//! One-shot security bounds for hashed keys, checked against exact values.
//!
//! The left-hand sides are exact criteria e^{±λ C} of the hashed key
//! computed by materializing the joint law of (f_X(A), E, X). The right-hand
//! sides are the direct bounds for ε-almost universal₂ ensembles and the
//! converse bounds for a single deterministic map. `verify` runs both and
//! records a signed slack per (kind, s, c, member).
//!
//! Threshold events such as P_{A|E} ≥ c/M are evaluated with a relative
//! tolerance of 1e-12 so that exact ties (uniform sources) land on the side
//! the inequality names, despite rounding in P_AE / P_E.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{condition, CondView, JointSource, SParameter};
use crate::error::{domain, Error, Result};
use crate::hashing::HashFamily;
use crate::measures::{
    cond_renyi_h_up, log_gallager_norm, renyi_divergence, scaled_cond_renyi, Form,
};

const TIE_TOL: f64 = 1e-12;
const JOINT_LIMIT: f64 = 16_777_216.0;
/// Additive slack tolerance, scaled by max(1, |rhs|).
pub const SLACK_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LemmaKind {
    L1Plus,
    L1PlusUp,
    L1Minus,
    L1MinusUp,
    L2ExpUp,
    L3SecondStd,
    L3SecondUp,
    L4Equiv,
    L4EquivUp,
    /// Not a published bound: the plain L4 bound plus ½, the unit the
    /// derivation chain loses. Reported for comparison only.
    L4EquivCorrected,
    L5MinusA,
    L5MinusB,
    L5MinusUp,
    L5PlusA,
    L5PlusB,
    L5PlusUp,
    L6Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// The criterion is bounded from above: lhs ≤ rhs.
    Upper,
    /// lhs ≥ rhs.
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Violated,
    Reported,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "holds",
            Status::Violated => "violated",
            Status::Reported => "reported",
        })
    }
}

impl LemmaKind {
    pub const DIRECT: [LemmaKind; 7] = [
        LemmaKind::L1Plus,
        LemmaKind::L1PlusUp,
        LemmaKind::L1Minus,
        LemmaKind::L1MinusUp,
        LemmaKind::L2ExpUp,
        LemmaKind::L3SecondStd,
        LemmaKind::L3SecondUp,
    ];

    pub const CONVERSE: [LemmaKind; 10] = [
        LemmaKind::L4Equiv,
        LemmaKind::L4EquivUp,
        LemmaKind::L4EquivCorrected,
        LemmaKind::L5MinusA,
        LemmaKind::L5MinusB,
        LemmaKind::L5MinusUp,
        LemmaKind::L5PlusA,
        LemmaKind::L5PlusB,
        LemmaKind::L5PlusUp,
        LemmaKind::L6Second,
    ];

    pub fn name(self) -> &'static str {
        use LemmaKind::*;
        match self {
            L1Plus => "L1_plus",
            L1PlusUp => "L1_plus_up",
            L1Minus => "L1_minus",
            L1MinusUp => "L1_minus_up",
            L2ExpUp => "L2_exp_up",
            L3SecondStd => "L3_second_std",
            L3SecondUp => "L3_second_up",
            L4Equiv => "L4_equiv",
            L4EquivUp => "L4_equiv_up",
            L4EquivCorrected => "L4_equiv_corrected",
            L5MinusA => "L5_minus_a",
            L5MinusB => "L5_minus_b",
            L5MinusUp => "L5_minus_up",
            L5PlusA => "L5_plus_a",
            L5PlusB => "L5_plus_b",
            L5PlusUp => "L5_plus_up",
            L6Second => "L6_second",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::DIRECT
            .iter()
            .chain(Self::CONVERSE.iter())
            .copied()
            .find(|k| k.name() == s)
    }

    pub fn lemma(self) -> u8 {
        use LemmaKind::*;
        match self {
            L1Plus | L1PlusUp | L1Minus | L1MinusUp => 1,
            L2ExpUp => 2,
            L3SecondStd | L3SecondUp => 3,
            L4Equiv | L4EquivUp | L4EquivCorrected => 4,
            L5MinusA | L5MinusB | L5MinusUp | L5PlusA | L5PlusB | L5PlusUp => 5,
            L6Second => 6,
        }
    }

    pub fn is_direct(self) -> bool {
        self.lemma() <= 3
    }

    pub fn orientation(self) -> Orientation {
        use LemmaKind::*;
        match self {
            L1Minus | L1MinusUp | L3SecondStd | L3SecondUp | L5PlusA | L5PlusB | L5PlusUp => {
                Orientation::Lower
            }
            _ => Orientation::Upper,
        }
    }

    /// Failures of report-mode kinds are recorded, not asserted.
    pub fn report_mode(self) -> bool {
        matches!(self.lemma(), 4 | 6)
    }

    /// The criterion on the left: exp(λ C_{1+u}) with u = ±s.
    fn lhs_form(self) -> (Form, bool) {
        use LemmaKind::*;
        match self {
            L1Plus | L5PlusA | L5PlusB => (Form::Std, true),
            L1PlusUp | L2ExpUp | L5PlusUp => (Form::Up, true),
            L1Minus | L3SecondStd | L4Equiv | L4EquivCorrected | L5MinusA | L5MinusB
            | L6Second => (Form::Std, false),
            L1MinusUp | L3SecondUp | L4EquivUp | L5MinusUp => (Form::Up, false),
        }
    }

    fn needs_s_below_one(self) -> bool {
        use LemmaKind::*;
        matches!(
            self,
            L1MinusUp | L3SecondUp | L4Equiv | L4EquivUp | L4EquivCorrected | L5MinusUp | L6Second
        )
    }

    fn uses_c(self) -> bool {
        !matches!(self.lemma(), 1 | 2)
    }

    /// Whether the kind is defined at this s.
    pub fn accepts_s(self, s: f64) -> bool {
        (0.0..=1.0).contains(&s) && !(self.needs_s_below_one() && s >= 1.0)
    }
}

/// x^q with 0^q = 0, the continuous extension from q > 0.
fn pow0(x: f64, q: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.powf(q)
    }
}

fn at_least(q: f64, theta: f64) -> bool {
    q >= theta * (1.0 - TIE_TOL)
}

fn at_most(q: f64, theta: f64) -> bool {
    q <= theta * (1.0 + TIE_TOL)
}

/// Per-column threshold aggregates of P_{A|E}.
struct Split {
    /// Σ_{a: q ≥ θ} q
    hi: Vec<f64>,
    /// Σ_{a: q < θ} q
    lo: Vec<f64>,
    /// Σ_{a: q ≤ θ} q
    le: Vec<f64>,
}

fn split(cv: &CondView, theta: f64) -> Split {
    let ne = cv.e_size();
    let mut sp = Split { hi: vec![0.0; ne], lo: vec![0.0; ne], le: vec![0.0; ne] };
    for e in 0..ne {
        for a in 0..cv.a_size() {
            let q = cv.cond(a, e);
            if q <= 0.0 {
                continue;
            }
            if at_least(q, theta) {
                sp.hi[e] += q;
            } else {
                sp.lo[e] += q;
            }
            if at_most(q, theta) {
                sp.le[e] += q;
            }
        }
    }
    sp
}

/// Σ_e P_E Σ_{a: q ≥ θ} q^pow.
fn hi_power_sum(cv: &CondView, theta: f64, pow: f64) -> Vec<f64> {
    (0..cv.e_size())
        .map(|e| {
            (0..cv.a_size())
                .map(|a| cv.cond(a, e))
                .filter(|&q| q > 0.0 && at_least(q, theta))
                .map(|q| q.powf(pow))
                .sum()
        })
        .collect()
}

fn weighted(pe: &[f64], xs: impl IntoIterator<Item = f64>) -> f64 {
    pe.iter().zip(xs).map(|(p, x)| p * x).sum()
}

/// ln of 2^{s/(1−s)} s^{s/(1−s)}.
fn log_k6(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    s / (1.0 - s) * (2.0 * s).ln()
}

fn check_s(kind: LemmaKind, s: f64) -> Result<()> {
    SParameter::within(s, 0.0, false, 1.0, false)?;
    if !kind.accepts_s(s) {
        return Err(domain(format!("{} needs s < 1", kind.name())));
    }
    Ok(())
}

/// Right-hand side of a direct (hash ensemble) bound, on the scale of its
/// criterion.
pub fn direct_rhs(
    source: &JointSource,
    s: f64,
    m: usize,
    epsilon: f64,
    c: Option<f64>,
    kind: LemmaKind,
) -> Result<f64> {
    use LemmaKind::*;
    if !kind.is_direct() {
        return Err(domain(format!("{} is not a direct bound", kind.name())));
    }
    check_s(kind, s)?;
    if m == 0 {
        return Err(domain("M must be ≥ 1"));
    }
    let mf = m as f64;
    match kind {
        L1Plus | L1PlusUp | L1Minus | L1MinusUp if !(epsilon >= 1.0) => {
            return Err(domain(format!("lemma 1 needs ε ≥ 1, got {epsilon}")))
        }
        L2ExpUp if (epsilon - 1.0).abs() > 1e-12 => {
            return Err(domain(format!("lemma 2 needs ε = 1, got {epsilon}")))
        }
        L3SecondStd | L3SecondUp if !(epsilon >= 0.0) => {
            return Err(domain(format!("ε must be ≥ 0, got {epsilon}")))
        }
        _ => {}
    }
    let cv = condition(source);
    let pe = cv.p_e().to_vec();
    Ok(match kind {
        L1Plus => epsilon.powf(s) + (s * mf.ln() - scaled_cond_renyi(source, s)).exp(),
        L1PlusUp => {
            let l = s / (1.0 + s);
            epsilon.powf(l) + (l * mf.ln() + log_gallager_norm(source, s)).exp()
        }
        L2ExpUp => 1.0 + (s * mf.ln() - scaled_cond_renyi(source, s)).exp() / (1.0 + s),
        L1Minus => {
            let theta = epsilon / mf;
            let mut hi = 0.0;
            let mut lo = 0.0;
            for e in 0..cv.e_size() {
                for a in 0..cv.a_size() {
                    let q = cv.cond(a, e);
                    if q <= 0.0 {
                        continue;
                    }
                    let p = q * pe[e];
                    if at_least(q, theta) {
                        hi += p * (q * mf).powf(-s);
                    } else {
                        lo += p;
                    }
                }
            }
            2f64.powf(-s) * (hi + lo * epsilon.powf(-s))
        }
        L1MinusUp => {
            let theta = epsilon / mf;
            let p = 1.0 / (1.0 - s);
            let hi = hi_power_sum(&cv, theta, 1.0 - s);
            let sp = split(&cv, theta);
            weighted(&pe, hi.iter().map(|h| pow0(*h, p))) / (2.0 * mf.powf(s * p))
                + (2.0 * epsilon).powf(-s * p) * weighted(&pe, sp.lo.iter().map(|x| pow0(*x, p)))
        }
        L3SecondStd | L3SecondUp => {
            let c = c.ok_or_else(|| domain("lemma 3 needs c"))?;
            if !(c > 0.0) {
                return Err(domain(format!("lemma 3 needs c > 0, got {c}")));
            }
            let sp = split(&cv, c / mf);
            if kind == L3SecondStd {
                weighted(&pe, sp.le.iter().copied()) * (c + epsilon).powf(-s)
            } else {
                let p = 1.0 / (1.0 - s);
                (c + epsilon).powf(-s * p) * weighted(&pe, sp.le.iter().map(|x| pow0(*x, p)))
            }
        }
        _ => unreachable!(),
    })
}

/// Right-hand side of a converse (single map) bound. The bound depends on
/// the source, M, s and c only.
pub fn converse_rhs(source: &JointSource, s: f64, m: usize, c: f64, kind: LemmaKind) -> Result<f64> {
    use LemmaKind::*;
    if kind.is_direct() {
        return Err(domain(format!("{} is not a converse bound", kind.name())));
    }
    check_s(kind, s)?;
    if !(c > 1.0) {
        return Err(domain(format!("converse bounds need c > 1, got {c}")));
    }
    if m == 0 {
        return Err(domain("M must be ≥ 1"));
    }
    let mf = m as f64;
    let cv = condition(source);
    let pe = cv.p_e().to_vec();
    let theta = c / mf;
    let sp = split(&cv, theta);
    let p_hi = weighted(&pe, sp.hi.iter().copied());
    let p_lo = weighted(&pe, sp.lo.iter().copied());
    let p_le = weighted(&pe, sp.le.iter().copied());
    Ok(match kind {
        L4Equiv | L4EquivCorrected => {
            let hi = weighted(&pe, hi_power_sum(&cv, theta, 1.0 - s));
            let k = (log_k6(s) + (1.0 - s).ln()).exp();
            let base = c.powf(-s) * hi * mf.powf(-s) + k * p_le;
            if kind == L4EquivCorrected {
                base + 0.5
            } else {
                base
            }
        }
        L4EquivUp => {
            let p = 1.0 / (1.0 - s);
            let hi = hi_power_sum(&cv, theta, 1.0 - s);
            let k = (log_k6(s) + (1.0 - s).ln()).exp();
            let inner = (0..cv.e_size()).map(|e| {
                pow0(c.powf(-s) * hi[e] * mf.powf(-s), p) + pow0(k * sp.lo[e], p)
            });
            2f64.powf(s * p) * weighted(&pe, inner)
        }
        L5MinusA => {
            let hi = hi_power_sum(&cv, theta, 1.0 - s);
            weighted(&pe, hi.iter().map(|h| h * mf.powf(-s)))
                + weighted(&pe, sp.lo.iter().map(|x| pow0(*x, 1.0 - s)))
        }
        L5MinusB => p_hi * c.powf(-s) + pow0(p_lo, 1.0 - s),
        L5MinusUp => {
            let p = 1.0 / (1.0 - s);
            let inner = (0..cv.e_size()).map(|e| pow0(sp.hi[e] * c.powf(-s) + pow0(sp.lo[e], 1.0 - s), p));
            weighted(&pe, inner)
        }
        L5PlusA => {
            let hi = hi_power_sum(&cv, theta, 1.0 + s);
            weighted(&pe, hi.iter().map(|h| h * mf.powf(s)))
                + weighted(&pe, sp.lo.iter().map(|x| pow0(*x, 1.0 + s)))
        }
        L5PlusB => p_hi * c.powf(s) + pow0(p_lo, 1.0 + s),
        L5PlusUp => {
            let p = 1.0 / (1.0 + s);
            let inner = (0..cv.e_size()).map(|e| pow0(sp.hi[e] * c.powf(s) + pow0(sp.lo[e], 1.0 + s), p));
            weighted(&pe, inner)
        }
        L6Second => c.powf(-s) * p_hi + log_k6(s).exp() * p_le,
        _ => unreachable!(),
    })
}

/// Joint law of (f_X(A), (E, X)) with the hash output as the secret and
/// (e, x) flattened as e · |X| + x.
pub fn hashed_joint(source: &JointSource, family: &HashFamily) -> Result<JointSource> {
    if family.a_size() != source.a_size() {
        return Err(domain(format!(
            "family acts on {} symbols, source has {}",
            family.a_size(),
            source.a_size()
        )));
    }
    let (m, ne, nx) = (family.m_size(), source.e_size(), family.len());
    let size = m as f64 * ne as f64 * nx as f64;
    if size > JOINT_LIMIT {
        return Err(Error::SizeOverflow { what: "hashed joint", size, limit: JOINT_LIMIT });
    }
    let cols = ne * nx;
    let mut p = vec![0.0; m * cols];
    for (x, w) in family.weights().iter().enumerate() {
        for a in 0..source.a_size() {
            let i = family.apply(x, a);
            for e in 0..ne {
                p[i * cols + e * nx + x] += w * source.prob(a, e);
            }
        }
    }
    Ok(JointSource::from_flat(m, cols, p))
}

/// C_{1+s}(f_X(A)|E X) or its Gallager version, computed exactly.
pub fn exact_security(source: &JointSource, family: &HashFamily, s: f64, kind: Form) -> Result<f64> {
    SParameter::within(s, -1.0, true, f64::INFINITY, true)?;
    let joint = hashed_joint(source, family)?;
    let m = joint.a_size();
    match kind {
        Form::Std => {
            let pex = joint.marginal_e();
            let q: Vec<f64> = (0..m).flat_map(|_| pex.iter().map(|x| x / m as f64)).collect();
            renyi_divergence(joint.probs(), &q, s)
        }
        Form::Up => Ok((m as f64).ln() - cond_renyi_h_up(&joint, s)?),
    }
}

/// exp(λ C_{1+u}) for a materialized joint whose secret side has size M,
/// with λ = u (std) or u/(1+u) (Gallager form).
fn criterion_exp(joint: &JointSource, u: f64, form: Form) -> f64 {
    let log_m = (joint.a_size() as f64).ln();
    match form {
        Form::Std => (u * log_m - scaled_cond_renyi(joint, u)).exp(),
        Form::Up => (u / (1.0 + u) * log_m + log_gallager_norm(joint, u)).exp(),
    }
}

/// Exact left-hand side of a bound for a (hashed) joint.
pub fn lemma_lhs(joint: &JointSource, s: f64, kind: LemmaKind) -> f64 {
    let (form, plus) = kind.lhs_form();
    criterion_exp(joint, if plus { s } else { -s }, form)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lemma: String,
    pub kind: LemmaKind,
    pub s: f64,
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub m: usize,
    /// Index of the deterministic member for converse kinds.
    pub member: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    /// Signed so that ≥ 0 means the inequality holds.
    pub slack: f64,
    pub status: Status,
}

impl BoundReport {
    fn new(
        kind: LemmaKind,
        s: f64,
        c: Option<f64>,
        epsilon: Option<f64>,
        m: usize,
        member: Option<usize>,
        lhs: f64,
        rhs: f64,
    ) -> Self {
        let slack = match kind.orientation() {
            Orientation::Upper => rhs - lhs,
            Orientation::Lower => lhs - rhs,
        };
        let status = if slack >= -SLACK_TOL * rhs.abs().max(1.0) {
            Status::Holds
        } else if kind.report_mode() {
            Status::Reported
        } else {
            Status::Violated
        };
        BoundReport {
            lemma: format!("lemma{}", kind.lemma()),
            kind,
            s,
            c,
            epsilon,
            m,
            member,
            lhs,
            rhs,
            slack,
            status,
        }
    }
}

/// Runs every direct bound on the family and every converse bound on each
/// member as a deterministic map. Direct and Lemma 5 kinds are asserted
/// (failures are `Violated`); Lemma 4 and 6 kinds are `Reported`.
pub fn verify(
    source: &JointSource,
    family: &HashFamily,
    s_grid: &[f64],
    c_grid: &[f64],
    epsilon: f64,
) -> Result<Vec<BoundReport>> {
    let certified = family.certified_epsilon().ok_or(Error::UncertifiedFamily)?;
    if epsilon < certified - 1e-12 {
        return Err(domain(format!(
            "ε = {epsilon} is below the family's certified value {certified}"
        )));
    }
    if family.a_size() != source.a_size() {
        return Err(domain(format!(
            "family acts on {} symbols, source has {}",
            family.a_size(),
            source.a_size()
        )));
    }
    for &s in s_grid {
        SParameter::within(s, 0.0, false, 1.0, false)?;
    }
    let m = family.m_size();
    let mut out = Vec::new();
    if s_grid.is_empty() {
        return Ok(out);
    }

    let joint = hashed_joint(source, family)?;
    for &s in s_grid {
        for kind in LemmaKind::DIRECT {
            if !kind.accepts_s(s) {
                continue;
            }
            if kind == LemmaKind::L2ExpUp && (epsilon - 1.0).abs() > 1e-12 {
                continue;
            }
            if (kind.lemma() == 1) && epsilon < 1.0 {
                continue;
            }
            let lhs = lemma_lhs(&joint, s, kind);
            let cs: Vec<Option<f64>> = if kind.uses_c() {
                c_grid.iter().filter(|&&c| c > 0.0).map(|&c| Some(c)).collect()
            } else {
                vec![None]
            };
            for c in cs {
                let rhs = direct_rhs(source, s, m, epsilon, c, kind)?;
                out.push(BoundReport::new(kind, s, c, Some(epsilon), m, None, lhs, rhs));
            }
        }
    }

    let converse: Result<Vec<Vec<BoundReport>>> = (0..family.len())
        .into_par_iter()
        .map(|x| {
            let f: Vec<usize> = family.members()[x].iter().map(|&y| y as usize).collect();
            let mapped = source.map_a(&f, m)?;
            let mut rows = Vec::new();
            for &s in s_grid {
                for kind in LemmaKind::CONVERSE {
                    if !kind.accepts_s(s) {
                        continue;
                    }
                    let lhs = lemma_lhs(&mapped, s, kind);
                    for &c in c_grid.iter().filter(|&&c| c > 1.0) {
                        let rhs = converse_rhs(source, s, m, c, kind)?;
                        rows.push(BoundReport::new(kind, s, Some(c), None, m, Some(x), lhs, rhs));
                    }
                }
            }
            Ok(rows)
        })
        .collect();
    out.extend(converse?.into_iter().flatten());
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub holds: usize,
    pub violated: usize,
    pub reported: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub per_kind: BTreeMap<String, StatusCounts>,
    pub violations: Vec<BoundReport>,
}

impl Summary {
    pub fn of(reports: &[BoundReport]) -> Self {
        let mut per_kind: BTreeMap<String, StatusCounts> = BTreeMap::new();
        let mut violations = Vec::new();
        for r in reports {
            let e = per_kind.entry(r.kind.name().to_string()).or_default();
            match r.status {
                Status::Holds => e.holds += 1,
                Status::Violated => e.violated += 1,
                Status::Reported => e.reported += 1,
            }
            if r.status != Status::Holds {
                violations.push(r.clone());
            }
        }
        Summary { per_kind, violations }
    }

    pub fn asserted_failures(&self) -> usize {
        self.per_kind.values().map(|c| c.violated).sum()
    }

    pub fn reported(&self) -> usize {
        self.per_kind.values().map(|c| c.reported).sum()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// CSV with columns lemma, kind, s, c, epsilon, M, lhs, rhs, slack, status,
/// member.
pub fn write_reports_csv<W: Write>(reports: &[BoundReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lemma", "kind", "s", "c", "epsilon", "M", "lhs", "rhs", "slack", "status", "member"])?;
    for r in reports {
        w.write_record([
            r.lemma.clone(),
            r.kind.name().to_string(),
            r.s.to_string(),
            opt(r.c),
            opt(r.epsilon),
            r.m.to_string(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.slack.to_string(),
            r.status.to_string(),
            r.member.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
