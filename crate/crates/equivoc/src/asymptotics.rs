//! Asymptotic equivocation limits, optimal key rates, exponents and critical
//! rates, plus the one-dimensional concave maximizer they all share.
//!
//! Every max over t uses the scaled form t·H_{1+t} = −log Σ P_AE P_{A|E}^t,
//! which is concave and smooth through t = 0, so the objectives stay
//! well-conditioned near the Shannon point.

use serde::{Deserialize, Serialize};

use crate::dist::{JointSource, SParameter};
use crate::error::{domain, Error, Result};
use crate::measures::{
    cond_renyi_h, cond_renyi_h_up, log_sum_exp, scaled_cond_renyi,
    scaled_two_param_h, Form,
};

pub const OPT_TOL: f64 = 1e-10;
/// Upper end of the half-open interval [s, 1) in the plus/std exponent.
pub const HALF_OPEN_EDGE: f64 = 1.0 - 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

/// First-order rate r (nats/symbol), second-order rate l (nats/√symbol) and
/// an optional explicit hash range size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub r: f64,
    pub l: f64,
    pub m: Option<u64>,
}

impl RateSpec {
    pub fn new(r: f64, l: f64, m: Option<u64>) -> Result<Self> {
        if !(r >= 0.0) || !l.is_finite() {
            return Err(domain(format!("rate spec needs r ≥ 0 and finite l, got ({r}, {l})")));
        }
        Ok(RateSpec { r, l, m })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptResult {
    pub argmax_t: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of a concave function on [lo, hi].
/// The endpoints are compared against the interior optimum, so boundary
/// maxima come out exact.
pub fn maximize_concave<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<OptResult> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::IntervalError { lo, hi });
    }
    if cfg!(debug_assertions) {
        concavity_spot_check(&f, lo, hi);
    }
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = OptResult { argmax_t: mid, value: f(mid) };
    for t in [lo, hi] {
        let v = f(t);
        if v > best.value {
            best = OptResult { argmax_t: t, value: v };
        }
    }
    Ok(best)
}

fn concavity_spot_check<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) {
    let h = (hi - lo) / 63.0;
    let ys: Vec<f64> = (0..64).map(|i| f(lo + h * i as f64)).collect();
    let scale = ys.iter().fold(1.0f64, |m, y| m.max(y.abs()));
    if ys.windows(3).any(|w| w[0] - 2.0 * w[1] + w[2] > 1e-8 * scale) {
        log::warn!("objective on [{lo}, {hi}] failed the concavity spot check");
    }
}

/// f(t) = Σ P_AE P_{A|E}^t and f′(t), both divided by their common scale.
/// Returns −f′(t)/f(t), the derivative of t·H_{1+t}.
fn std_scaled_derivative(source: &JointSource, t: f64) -> f64 {
    let pe = source.marginal_e();
    let mut logs = Vec::new();
    let mut dens = Vec::new();
    for a in 0..source.a_size() {
        for e in 0..source.e_size() {
            let p = source.prob(a, e);
            if p > 0.0 {
                let lc = (p / pe[e]).ln();
                logs.push(p.ln() + t * lc);
                dens.push(lc);
            }
        }
    }
    let z = log_sum_exp(logs.iter().copied());
    -logs
        .iter()
        .zip(&dens)
        .map(|(l, lc)| (l - z).exp() * lc)
        .sum::<f64>()
}

/// Derivative of t·H^↑_{1+t} = −(1+t) log Z(t).
fn up_scaled_derivative(source: &JointSource, t: f64) -> f64 {
    let u = 1.0 + t;
    let mut col_log_n = Vec::with_capacity(source.e_size());
    let mut col_dlog_n = Vec::with_capacity(source.e_size());
    for e in 0..source.e_size() {
        let ps: Vec<f64> = (0..source.a_size())
            .map(|a| source.prob(a, e))
            .filter(|&p| p > 0.0)
            .collect();
        let ln_n = log_sum_exp(ps.iter().map(|p| u * p.ln()));
        let dln_n: f64 = ps.iter().map(|p| (u * p.ln() - ln_n).exp() * p.ln()).sum();
        col_log_n.push(ln_n);
        col_dlog_n.push(dln_n);
    }
    let log_z = log_sum_exp(col_log_n.iter().map(|l| l / u));
    let dlog_z: f64 = col_log_n
        .iter()
        .zip(&col_dlog_n)
        .map(|(ln_n, dln_n)| (ln_n / u - log_z).exp() * (dln_n / u - ln_n / (u * u)))
        .sum();
    -log_z - u * dlog_z
}

/// Critical rate: the derivative of t·H_{1+t} (or t·H^↑_{1+t}) at t.
/// Negative t gives the minus-branch rates R̂_{−s}.
pub fn critical_rate(source: &JointSource, t: f64, form: Form) -> Result<f64> {
    // The std scaled form is defined at t = −1 (support counting); the
    // Gallager norm needs 1 + t > 0.
    SParameter::within(t, -1.0, form == Form::Up, 1.0, false)?;
    Ok(match form {
        Form::Std => std_scaled_derivative(source, t),
        Form::Up => up_scaled_derivative(source, t),
    })
}

/// t·H_{1−t|1−s}, smooth in t through 0.
fn scaled_minus_two_param(source: &JointSource, t: f64, s: f64) -> f64 {
    -scaled_two_param_h(source, -t, -s)
}

/// Limit of the normalized equivocation criterion at rate r.
pub fn equiv_limit(source: &JointSource, s: f64, r: f64, sign: Sign, form: Form) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(domain(format!("rate must be ≥ 0, got {r}")));
    }
    match (sign, form) {
        (Sign::Plus, Form::Std) => {
            SParameter::within(s, 0.0, false, 1.0, false)?;
            Ok((r - cond_renyi_h(source, s, None)?).max(0.0))
        }
        (Sign::Plus, Form::Up) => {
            SParameter::within(s, 0.0, false, 1.0, false)?;
            Ok((r - cond_renyi_h_up(source, s)?).max(0.0))
        }
        (Sign::Minus, Form::Std) => {
            SParameter::within(s, 0.0, true, 1.0, false)?;
            if r >= critical_rate(source, -s, Form::Std)? {
                return Ok(r - cond_renyi_h(source, -s, None)?);
            }
            let obj = |t: f64| (t * r + scaled_cond_renyi(source, -t)) / s;
            Ok(maximize_concave(obj, 0.0, s, OPT_TOL)?.value)
        }
        (Sign::Minus, Form::Up) => {
            SParameter::within(s, 0.0, true, 1.0, true)?;
            if r >= critical_rate(source, -s, Form::Up)? {
                return Ok(r - cond_renyi_h_up(source, -s)?);
            }
            let obj = |t: f64| (t * r - scaled_minus_two_param(source, t, s)) / s;
            Ok(maximize_concave(obj, 0.0, s, OPT_TOL)?.value)
        }
    }
}

/// Optimal key generation rate under the criterion of order 1+s.
pub fn key_rate(source: &JointSource, s: f64, form: Form) -> Result<f64> {
    let sp = SParameter::within(s, -1.0, false, 1.0, false)?;
    if s <= 0.0 || sp.is_shannon() {
        return cond_renyi_h(source, 0.0, None);
    }
    match form {
        Form::Std => cond_renyi_h(source, s, None),
        Form::Up => cond_renyi_h_up(source, s),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentValue {
    pub value: f64,
    /// The theorem's hypothesis r ≥ R̂_1 (or R̂^↑_1) was satisfied.
    pub hypothesis_holds: bool,
}

/// Exponential decay rate of the equivocation criterion at rate r.
pub fn exponent(source: &JointSource, s: f64, r: f64, sign: Sign, form: Form) -> Result<ExponentValue> {
    SParameter::within(s, 0.0, false, 1.0, false)?;
    if !(r >= 0.0) {
        return Err(domain(format!("rate must be ≥ 0, got {r}")));
    }
    let obj = |t: f64| scaled_cond_renyi(source, t) - t * r;
    let value = match (sign, form) {
        (Sign::Plus, Form::Std) => max_on(obj, s.min(HALF_OPEN_EDGE), HALF_OPEN_EDGE)?.max(0.0),
        (Sign::Plus, Form::Up) => max_on(obj, s, 1.0)?.max(0.0),
        (Sign::Minus, _) => max_on(obj, 0.0, 1.0)?,
    };
    let crit = critical_rate(source, 1.0, form)?;
    let hypothesis_holds = r >= crit;
    if !hypothesis_holds {
        log::debug!("rate {r} is below the critical rate {crit}; exponent formula outside its hypothesis");
    }
    Ok(ExponentValue { value, hypothesis_holds })
}

fn max_on<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    if hi - lo <= 0.0 {
        return Ok(f(lo));
    }
    Ok(maximize_concave(f, lo, hi, OPT_TOL)?.value)
}
