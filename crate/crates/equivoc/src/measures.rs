//! Rényi information measures of a finite joint source, in nats.
//!
//! Every power sum is evaluated in the log domain. Atoms with zero mass are
//! skipped, which is the 0·log 0 = 0 convention. Offsets with |s| < `S_EPS`
//! switch to the Shannon formulas instead of the ill-conditioned (1/s)·log
//! form.
//!
//! Values that can diverge (a divergence with a support violation) come back
//! as `f64::INFINITY`.

use serde::{Deserialize, Serialize};

use crate::dist::{condition, CondView, JointSource, SParameter};
use crate::error::{domain, Error, Result};

/// Which conditional entropy a quantity is built from: the plain conditional
/// Rényi entropy or its Gallager (maximized over Q_E) form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Std,
    Up,
}

/// Conditional varentropy and its law-of-total-variance split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Varentropies {
    pub v: f64,
    pub v1: f64,
    pub v2: f64,
}

/// log Σ exp(x), −∞ for an empty sum.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// D_{1+s}(p‖q) = (1/s) log Σ p^{1+s} q^{−s}; q may be unnormalized.
pub fn renyi_divergence(p: &[f64], q: &[f64], s: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(domain(format!("lengths differ: {} vs {}", p.len(), q.len())));
    }
    let sp = SParameter::new(s)?;
    if sp.is_shannon() {
        let mut d = 0.0;
        for (&pi, &qi) in p.iter().zip(q) {
            if pi > 0.0 {
                if qi <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                d += pi * (pi / qi).ln();
            }
        }
        return Ok(d);
    }
    let mut terms = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            if s > 0.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        terms.push((1.0 + s) * pi.ln() - s * qi.ln());
    }
    let l = log_sum_exp(terms);
    if l == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(l / s)
}

/// Rényi entropy H_{1+s}(P) of a single pmf.
pub fn renyi_entropy(p: &[f64], s: f64) -> Result<f64> {
    let sp = SParameter::new(s)?;
    if sp.is_shannon() {
        return Ok(-p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>());
    }
    let l = log_sum_exp(p.iter().filter(|&&x| x > 0.0).map(|&x| (1.0 + s) * x.ln()));
    Ok(-l / s)
}

/// H_{1+s}(A|E) relative to a reference Q_E (default P_E), i.e.
/// −D_{1+s}(P_AE ‖ I_A × Q_E).
pub fn cond_renyi_h(source: &JointSource, s: f64, q_e: Option<&[f64]>) -> Result<f64> {
    SParameter::new(s)?;
    let p_e;
    let q_e = match q_e {
        Some(q) => {
            if q.len() != source.e_size() {
                return Err(domain(format!(
                    "reference has {} entries, |E| = {}",
                    q.len(),
                    source.e_size()
                )));
            }
            q
        }
        None => {
            p_e = source.marginal_e();
            &p_e
        }
    };
    let q: Vec<f64> = (0..source.a_size())
        .flat_map(|_| q_e.iter().copied())
        .collect();
    Ok(-renyi_divergence(source.probs(), &q, s)?)
}

/// t·H_{1+t}(A|E) = −log Σ P_AE P_{A|E}^t, smooth through t = 0.
pub fn scaled_cond_renyi(source: &JointSource, t: f64) -> f64 {
    let cv = condition(source);
    -log_sum_exp(nonzero(source).map(|(a, e, p)| p.ln() + t * cv.cond(a, e).ln()))
}

fn nonzero(source: &JointSource) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let ne = source.e_size();
    source
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(move |(i, &p)| (i / ne, i % ne, p))
}

fn shannon_cond(source: &JointSource) -> f64 {
    let cv = condition(source);
    -nonzero(source).map(|(a, e, p)| p * cv.cond(a, e).ln()).sum::<f64>()
}

/// log Σ_a P_AE(a,e)^{1+s} for each e.
fn column_log_power(source: &JointSource, s: f64) -> Vec<f64> {
    (0..source.e_size())
        .map(|e| {
            log_sum_exp(
                (0..source.a_size())
                    .map(|a| source.prob(a, e))
                    .filter(|&p| p > 0.0)
                    .map(|p| (1.0 + s) * p.ln()),
            )
        })
        .collect()
}

/// log Z(s) = log Σ_e (Σ_a P_AE^{1+s})^{1/(1+s)}.
pub(crate) fn log_gallager_norm(source: &JointSource, s: f64) -> f64 {
    log_sum_exp(column_log_power(source, s).into_iter().map(|l| l / (1.0 + s)))
}

/// Gallager form H^↑_{1+s}(A|E) = −((1+s)/s) log Σ_e (Σ_a P_AE^{1+s})^{1/(1+s)}.
pub fn cond_renyi_h_up(source: &JointSource, s: f64) -> Result<f64> {
    let sp = SParameter::within(s, -1.0, true, f64::INFINITY, true)?;
    if sp.is_shannon() {
        return Ok(shannon_cond(source));
    }
    Ok(-(1.0 + s) / s * log_gallager_norm(source, s))
}

/// t·H^↑_{1+t}(A|E) = −(1+t) log Z(t), smooth through t = 0.
pub fn scaled_cond_renyi_up(source: &JointSource, t: f64) -> f64 {
    -(1.0 + t) * log_gallager_norm(source, t)
}

/// s·H_{1+s|1+t}(A|E) = −(1+t) log Σ_e P_E (Σ_a P_{A|E}^{1+s})^{1/(1+t)}.
pub fn scaled_two_param_h(source: &JointSource, s: f64, t: f64) -> f64 {
    let cv = condition(source);
    let terms = (0..cv.e_size()).map(|e| {
        let inner = log_sum_exp(
            (0..cv.a_size())
                .map(|a| cv.cond(a, e))
                .filter(|&c| c > 0.0)
                .map(|c| (1.0 + s) * c.ln()),
        );
        cv.p_e()[e].ln() + inner / (1.0 + t)
    });
    -(1.0 + t) * log_sum_exp(terms)
}

/// Two-parameter conditional entropy H_{1+s|1+t}(A|E).
pub fn two_param_h(source: &JointSource, s: f64, t: f64) -> Result<f64> {
    let sp = SParameter::new(s)?;
    if sp.is_shannon() {
        return Err(domain("two-parameter entropy needs s ≠ 0"));
    }
    SParameter::within(t, -1.0, true, f64::INFINITY, true)?;
    Ok(scaled_two_param_h(source, s, t) / s)
}

/// Gallager's function φ(s) = log Σ_e (Σ_a P_AE^{1/(1−s)})^{1−s}.
pub fn gallager_phi(source: &JointSource, s: f64) -> Result<f64> {
    if !s.is_finite() || s >= 1.0 {
        return Err(domain(format!("gallager function needs s < 1, got {s}")));
    }
    let u = 1.0 / (1.0 - s);
    Ok(log_sum_exp(
        column_log_power(source, u - 1.0).into_iter().map(|l| (1.0 - s) * l),
    ))
}

/// The reference Q_E attaining the Gallager form; Q_E ∝ (Σ_a P_AE^{1+s})^{1/(1+s)}.
pub fn tilted_qe(source: &JointSource, s: f64) -> Result<Vec<f64>> {
    SParameter::within(s, -1.0, true, f64::INFINITY, true)?;
    let w: Vec<f64> = column_log_power(source, s)
        .into_iter()
        .map(|l| l / (1.0 + s))
        .collect();
    Ok(softmax(&w))
}

fn softmax(logw: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(logw.iter().copied());
    logw.iter().map(|l| (l - z).exp()).collect()
}

fn shannon_mi(source: &JointSource) -> f64 {
    let pa = source.marginal_a();
    let pe = source.marginal_e();
    nonzero(source)
        .map(|(a, e, p)| p * (p / (pa[a] * pe[e])).ln())
        .sum()
}

/// log g_s(a) with g_s(a) = Σ_e P_AE^{1+s} P_E^{−s}.
fn sibson_log_g(source: &JointSource, s: f64) -> Vec<f64> {
    let pe = source.marginal_e();
    (0..source.a_size())
        .map(|a| {
            log_sum_exp(
                (0..source.e_size())
                    .filter(|&e| source.prob(a, e) > 0.0)
                    .map(|e| (1.0 + s) * source.prob(a, e).ln() - s * pe[e].ln()),
            )
        })
        .collect()
}

/// Sibson's mutual information of order 1+s.
pub fn sibson_mi(source: &JointSource, s: f64) -> Result<f64> {
    let sp = SParameter::within(s, -1.0, true, f64::INFINITY, true)?;
    if sp.is_shannon() {
        return Ok(shannon_mi(source));
    }
    let lg = sibson_log_g(source, s);
    Ok((1.0 + s) / s * log_sum_exp(lg.into_iter().map(|l| l / (1.0 + s))))
}

/// The normalized g_s^{1/(1+s)} over A that appears in the Sibson
/// decomposition of D_{1+s}(P_AE ‖ P_mix × P_E).
pub fn sibson_tilted_a(source: &JointSource, s: f64) -> Result<Vec<f64>> {
    SParameter::within(s, -1.0, true, f64::INFINITY, true)?;
    let lg: Vec<f64> = sibson_log_g(source, s)
        .into_iter()
        .map(|l| l / (1.0 + s))
        .collect();
    Ok(softmax(&lg))
}

/// Arimoto's mutual information H_{1+s}(A) − H^↑_{1+s}(A|E).
pub fn arimoto_mi(source: &JointSource, s: f64) -> Result<f64> {
    let sp = SParameter::within(s, -1.0, true, f64::INFINITY, true)?;
    if sp.is_shannon() {
        return Ok(shannon_mi(source));
    }
    Ok(renyi_entropy(&source.marginal_a(), s)? - cond_renyi_h_up(source, s)?)
}

/// Modified mutual information C_{1+s} = log|A| − H_{1+s}(A|E), or the
/// Gallager version C^↑_{1+s}.
pub fn security_measure(source: &JointSource, s: f64, kind: Form) -> Result<f64> {
    let log_a = (source.a_size() as f64).ln();
    let h = match kind {
        Form::Std => {
            SParameter::within(s, -1.0, true, f64::INFINITY, true)?;
            cond_renyi_h(source, s, None)?
        }
        Form::Up => cond_renyi_h_up(source, s)?,
    };
    Ok(log_a - h)
}

pub fn varentropies(source: &JointSource) -> Varentropies {
    let cv = condition(source);
    let h = shannon_cond(source);
    let h_e: Vec<f64> = (0..cv.e_size())
        .map(|e| {
            -(0..cv.a_size())
                .map(|a| cv.cond(a, e))
                .filter(|&c| c > 0.0)
                .map(|c| c * c.ln())
                .sum::<f64>()
        })
        .collect();
    let mut v = 0.0;
    let mut v2 = 0.0;
    for (a, e, p) in nonzero(source) {
        let d = -cv.cond(a, e).ln();
        v += p * (d - h).powi(2);
        v2 += p * (d - h_e[e]).powi(2);
    }
    let v1 = cv.p_e().iter().zip(&h_e).map(|(pe, he)| pe * (he - h).powi(2)).sum();
    Varentropies { v, v1, v2 }
}

/// h(a|e) = −log P_{A|E}(a|e).
pub fn entropy_density(cond: &CondView, a: usize, e: usize) -> Result<f64> {
    if a >= cond.a_size() || e >= cond.e_size() {
        return Err(domain(format!("symbol ({a}, {e}) out of range")));
    }
    let c = cond.cond(a, e);
    if c <= 0.0 {
        return Err(Error::ZeroAtom { a, e });
    }
    Ok(-c.ln())
}
