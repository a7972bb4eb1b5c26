//! Second-order (√n-scale) behaviour of the security criteria.
//!
//! Case A is linear in L, Case B has a closed Gaussian form, and Case C is a
//! sandwich between the Γ quantities (plain conditional entropy) or the Ψ
//! quantities (Gallager form). Everything touching Φ far in the tails goes
//! through `log_gaussian_cdf` so L = ±50 does not underflow.

use serde::{Deserialize, Serialize};

use crate::asymptotics::maximize_concave;
use crate::dist::{JointSource, SParameter};
use crate::error::{domain, Error, Result};
use crate::measures::{varentropies, Form, Varentropies};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const DEGENERATE_VAR: f64 = 1e-14;
/// Below this argument ln Φ switches from erfc to its asymptotic series.
const TAIL_SWITCH: f64 = -37.0;

pub fn gaussian_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

pub fn gaussian_pdf(t: f64) -> f64 {
    (-0.5 * t * t - 0.5 * LN_2PI).exp()
}

/// ln Φ(t), accurate for all t.
pub fn log_gaussian_cdf(t: f64) -> f64 {
    if t > 0.0 {
        return (-gaussian_cdf(-t)).ln_1p();
    }
    if t > TAIL_SWITCH {
        return gaussian_cdf(t).ln();
    }
    // Mills-ratio series: Φ(t) = φ(t)/|t| · (1 − 1/t² + 3/t⁴ − 15/t⁶ + 105/t⁸ − …)
    let z = 1.0 / (t * t);
    let series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z * (1.0 - 9.0 * z))));
    -0.5 * t * t - (-t).ln() - 0.5 * LN_2PI + series.ln()
}

/// ln(−ln Φ(t)), finite even when Φ(t) rounds to 1.
pub fn log_neg_log_gaussian_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        return (-log_gaussian_cdf(t)).ln();
    }
    let q = gaussian_cdf(-t);
    if q > 1e-200 {
        (-(-q).ln_1p()).ln()
    } else {
        // −ln(1−q) = q(1 + q/2 + …) and q/2 is far below rounding here.
        log_gaussian_cdf(-t)
    }
}

const MAX_DEPTH: u32 = 30;

/// Adaptive Simpson rule with Richardson correction, started on `panels`
/// equal sub-intervals.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let ptol = tol / panels as f64;
    (0..panels)
        .map(|i| {
            let (x0, x1) = (a + h * i as f64, a + h * (i + 1) as f64);
            let xm = 0.5 * (x0 + x1);
            let (f0, fm, f1) = (f(x0), f(xm), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_step(f, x0, x1, f0, fm, f1, whole, ptol, MAX_DEPTH)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Variances consumed by the Γ/Ψ quantities, in nats².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub v: f64,
    pub v1: f64,
    pub v2: f64,
}

impl From<Varentropies> for GaussianSpec {
    fn from(x: Varentropies) -> Self {
        GaussianSpec { v: x.v, v1: x.v1, v2: x.v2 }
    }
}

impl GaussianSpec {
    pub fn of(source: &JointSource) -> Self {
        varentropies(source).into()
    }
}

/// A lower and an upper bound on a limit. The bounds are stored as computed;
/// `is_ordered` reports whether they actually sandwich anything.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
}

impl BoundPair {
    pub fn is_ordered(&self) -> bool {
        self.lower <= self.upper + 1e-9
    }
}

/// ln of 2^{s/(1−s)} s^{s/(1−s)} (1−s); +∞ at s = 1.
fn log_const_gamma(s: f64) -> f64 {
    if s >= 1.0 {
        return f64::INFINITY;
    }
    s / (1.0 - s) * (2.0 * s).ln() + (1.0 - s).ln()
}

/// ln of 2^{s+s/(1−s)} s^{s/(1−s)} (1−s).
fn log_const_psi(s: f64) -> f64 {
    s * 2f64.ln() + log_const_gamma(s)
}

/// ln of 2^{s+1/(1−s)} s^{s/(1−s)} (1−s), the additive constant of the
/// Gallager-form upper bound.
fn log_const_psi_upper(s: f64) -> f64 {
    (s + 1.0 / (1.0 - s)) * 2f64.ln() + s / (1.0 - s) * s.ln() + (1.0 - s).ln()
}

fn check_v(g: &GaussianSpec) -> Result<()> {
    if !(g.v > 0.0) {
        return Err(domain(format!("second-order quantities need V > 0, got {}", g.v)));
    }
    Ok(())
}

/// (Γ₁, Γ₂). Γ₁ is −∞ at s = 1, the limit of its constant.
pub fn gamma_bounds(s: f64, l: f64, g: &GaussianSpec) -> Result<(f64, f64)> {
    SParameter::within(s, 0.0, true, 1.0, false)?;
    check_v(g)?;
    let lphi = log_gaussian_cdf(-l / g.v.sqrt());
    let g1 = -(log_const_gamma(s) + lphi) / s;
    let g2 = -(1.0 - s) / s * lphi;
    Ok((g1, g2))
}

/// ln Γ₂ (equal to ln Ψ₂), usable where Γ₂ itself underflows.
pub fn log_gamma2(s: f64, l: f64, g: &GaussianSpec) -> Result<f64> {
    SParameter::within(s, 0.0, true, 1.0, true)?;
    check_v(g)?;
    Ok(((1.0 - s) / s).ln() + log_neg_log_gaussian_cdf(-l / g.v.sqrt()))
}

/// ln ∫ Φ(−(l+x)/√v2)^p N(x; 0, v1) dx.
pub fn log_smoothed_tail(l: f64, v1: f64, v2: f64, p: f64) -> Result<f64> {
    if v1 < DEGENERATE_VAR && v2 < DEGENERATE_VAR {
        return Err(domain("both split variances vanish"));
    }
    if v1 < DEGENERATE_VAR {
        return Ok(p * log_gaussian_cdf(-l / v2.sqrt()));
    }
    if v2 < DEGENERATE_VAR {
        return Ok(log_gaussian_cdf(-l / v1.sqrt()));
    }
    let (sd1, sd2) = (v1.sqrt(), v2.sqrt());
    let log_integrand = |x: f64| p * log_gaussian_cdf(-(l + x) / sd2) - 0.5 * x * x / v1;
    // The log-integrand is (1/v1)-strongly concave with its mode in [−|l| − …, 0].
    let lo = -l.abs() - 20.0 * (sd1 + sd2) - 1.0;
    let hi = 1.0;
    let mode = maximize_concave(log_integrand, lo, hi, 1e-12 * (1.0 + l.abs()))?;
    let peak = mode.value;
    let half = 12.0 * sd1;
    let f = |x: f64| (log_integrand(x) - peak).exp();
    // Relative roundoff in the log-integrand grows with its magnitude.
    let tol = 1e-13 * (1.0 + peak.abs()) * half;
    let j = adaptive_simpson(&f, mode.argmax_t - half, mode.argmax_t + half, tol, 64);
    Ok(peak + j.ln() - 0.5 * (LN_2PI + v1.ln()))
}

/// (Ψ₁, Ψ₂) for the Gallager-form criterion.
pub fn psi_bounds(s: f64, l: f64, g: &GaussianSpec) -> Result<(f64, f64)> {
    SParameter::within(s, 0.0, true, 1.0, true)?;
    check_v(g)?;
    let log_i = log_smoothed_tail(l, g.v1, g.v2, 1.0 / (1.0 - s))?;
    let psi1 = -log_const_psi(s) / s - (1.0 - s) / s * log_i;
    let psi2 = -(1.0 - s) / s * log_gaussian_cdf(-l / g.v.sqrt());
    Ok((psi1, psi2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SecondOrderCase {
    /// Rates above the entropy, L ≥ 0: the criterion grows like L.
    APos,
    /// L ≤ 0 with s > 0: the criterion vanishes with exponent −sL.
    ANeg,
    /// Shannon criterion (s = 0).
    B,
    /// Normalized criterion at s > 0: only bounds are known.
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SecondOrderValue {
    Exact(f64),
    Bounds(BoundPair),
}

/// L Φ(L/√V) + √V φ(L/√V).
pub fn case_b_closed_form(l: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return l.max(0.0);
    }
    let sd = v.sqrt();
    l * gaussian_cdf(l / sd) + sd * gaussian_pdf(l / sd)
}

/// Case C sandwich from precomputed variances.
pub fn case_c_bounds(s: f64, l: f64, g: &GaussianSpec, form: Form) -> Result<BoundPair> {
    match form {
        Form::Std => {
            let (g1, g2) = gamma_bounds(s, l, g)?;
            let upper = -log_gaussian_cdf(-l / g.v.sqrt()) / s;
            Ok(BoundPair { lower: g1.max(g2), upper })
        }
        Form::Up => {
            let (p1, p2) = psi_bounds(s, l, g)?;
            let upper = p1 + log_const_psi_upper(s) / s;
            Ok(BoundPair { lower: p1.max(p2), upper })
        }
    }
}

pub fn second_order_limit(
    source: &JointSource,
    s: f64,
    l: f64,
    case: SecondOrderCase,
    form: Form,
) -> Result<SecondOrderValue> {
    let mismatch = |msg: String| Err(Error::CaseMismatch(msg));
    match case {
        SecondOrderCase::APos | SecondOrderCase::ANeg => {
            if !(s > 0.0 && s <= 1.0) {
                return mismatch(format!("case A needs s in (0, 1], got {s}"));
            }
            match case {
                SecondOrderCase::APos if l >= 0.0 => Ok(SecondOrderValue::Exact(l)),
                SecondOrderCase::ANeg if l <= 0.0 => Ok(SecondOrderValue::Exact(-s * l)),
                _ => mismatch(format!("sign of L = {l} does not match {case:?}")),
            }
        }
        SecondOrderCase::B => {
            if s.abs() >= crate::dist::S_EPS {
                return mismatch(format!("case B needs s = 0, got {s}"));
            }
            let v = varentropies(source).v;
            Ok(SecondOrderValue::Exact(case_b_closed_form(l, v)))
        }
        SecondOrderCase::C => {
            let ok = match form {
                Form::Std => s > 0.0 && s <= 1.0,
                Form::Up => s > 0.0 && s < 1.0,
            };
            if !ok {
                return mismatch(format!("case C ({form:?}) does not accept s = {s}"));
            }
            let g = GaussianSpec::of(source);
            Ok(SecondOrderValue::Bounds(case_c_bounds(s, l, &g, form)?))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Pos,
    Neg,
}

/// Leading quadratic term for |L| → ∞. `remainder` names the order of the
/// omitted correction; it is never added to `value`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticApprox {
    /// For `Neg` this is the approximation of the log of the limit.
    pub value: f64,
    pub remainder: &'static str,
}

pub fn large_l_approx(
    source: &JointSource,
    s: f64,
    l: f64,
    form: Form,
    direction: Direction,
) -> Result<QuadraticApprox> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::CaseMismatch(format!("large-L regime needs s in (0, 1], got {s}")));
    }
    let g = GaussianSpec::of(source);
    check_v(&g)?;
    let value = match direction {
        Direction::Pos if l > 0.0 => match form {
            Form::Std => l * l / (2.0 * s * g.v),
            Form::Up => (1.0 - s) / (2.0 * s) * l * l / (g.v1 + g.v2 * (1.0 - s)),
        },
        Direction::Neg if l < 0.0 => -l * l / (2.0 * g.v),
        _ => {
            return Err(Error::CaseMismatch(format!(
                "L = {l} does not match direction {direction:?}"
            )))
        }
    };
    Ok(QuadraticApprox { value, remainder: "O(log |L|)" })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::load_joint;

    fn canon() -> JointSource {
        load_joint(&[vec![0.7, 0.1], vec![0.1, 0.1]]).unwrap()
    }

    #[test]
    fn cdf_values() {
        assert_eq!(gaussian_cdf(0.0), 0.5);
        assert!((gaussian_cdf(1.96) - 0.975_002_104_851_779_6).abs() < 1e-15);
        for i in 0..=80 {
            let t = -8.0 + 0.2 * i as f64;
            assert!((gaussian_cdf(-t) - (1.0 - gaussian_cdf(t))).abs() < 1e-14);
        }
    }

    #[test]
    fn log_cdf_tail_is_continuous() {
        // Both branches around the switch point.
        let a = log_gaussian_cdf(TAIL_SWITCH + 1e-9);
        let b = log_gaussian_cdf(TAIL_SWITCH - 1e-9);
        assert!((a - b).abs() < 1e-9 * a.abs());
        assert!(log_gaussian_cdf(-85.0).is_finite());
        assert!(log_neg_log_gaussian_cdf(85.0).is_finite());
        assert!((log_gaussian_cdf(3.0) - gaussian_cdf(3.0).ln()).abs() < 1e-16);
    }

    #[test]
    fn gamma_examples() {
        let g = GaussianSpec { v: 0.3, v1: 0.1, v2: 0.2 };
        let (g1, g2) = gamma_bounds(0.5, 0.0, &g).unwrap();
        assert!((g2 - 2f64.ln()).abs() < 1e-15);
        assert!((g1 - 4.0 * 2f64.ln()).abs() < 1e-14);
        let (g1, g2) = gamma_bounds(1.0, 0.3, &g).unwrap();
        assert_eq!(g1, f64::NEG_INFINITY);
        assert_eq!(g2, 0.0);
        assert!(gamma_bounds(0.5, 0.0, &GaussianSpec { v: 0.0, v1: 0.0, v2: 0.0 }).is_err());
    }

    #[test]
    fn psi_degenerate_v1() {
        let g = GaussianSpec { v: 0.4, v1: 0.0, v2: 0.4 };
        let (p1, p2) = psi_bounds(0.5, 0.0, &g).unwrap();
        assert!((p2 - 2f64.ln()).abs() < 1e-15);
        // Delta mass: ∫ = Φ(0)^2.
        let want = -log_const_psi(0.5) / 0.5 - 0.25f64.ln();
        assert!((p1 - want).abs() < 1e-13);
    }

    #[test]
    fn case_a_and_b() {
        let c = canon();
        let v = second_order_limit(&c, 0.5, 1.0, SecondOrderCase::APos, Form::Std).unwrap();
        assert_eq!(v, SecondOrderValue::Exact(1.0));
        let v = second_order_limit(&c, 0.5, -1.0, SecondOrderCase::ANeg, Form::Std).unwrap();
        assert_eq!(v, SecondOrderValue::Exact(0.5));
        assert!(second_order_limit(&c, 0.5, 1.0, SecondOrderCase::ANeg, Form::Std).is_err());
        assert!(second_order_limit(&c, 0.5, 0.0, SecondOrderCase::B, Form::Std).is_err());
        assert!(second_order_limit(&c, 1.0, 0.0, SecondOrderCase::C, Form::Up).is_err());
        match second_order_limit(&c, 0.0, 0.0, SecondOrderCase::B, Form::Std).unwrap() {
            SecondOrderValue::Exact(x) => assert!((x - 0.235_119).abs() < 1e-5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn large_l_examples() {
        let c = canon();
        let v = varentropies(&c);
        let a = large_l_approx(&c, 0.5, 10.0, Form::Std, Direction::Pos).unwrap();
        assert!((a.value - 100.0 / v.v).abs() < 1e-12);
        assert!((a.value - 287.90).abs() < 0.01);
        let n = large_l_approx(&c, 0.5, -10.0, Form::Std, Direction::Neg).unwrap();
        assert!((n.value + 143.95).abs() < 0.01);
        let u = large_l_approx(&c, 0.5, 10.0, Form::Up, Direction::Pos).unwrap();
        assert!((u.value - 50.0 / (v.v1 + 0.5 * v.v2)).abs() < 1e-12);
        assert!(large_l_approx(&c, 0.5, 10.0, Form::Std, Direction::Neg).is_err());
    }

    #[test]
    fn simpson_integrates_polynomials() {
        let v = adaptive_simpson(&|x: f64| x * x * x - x, 0.0, 2.0, 1e-14, 4);
        assert!((v - 2.0).abs() < 1e-13);
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13, 8);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
