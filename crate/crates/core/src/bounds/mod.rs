//! Upper bounds on `P(E)` given `Q(E)` and a divergence between `P` and `Q`.
//!
//! Every bound is a scalar function of `q = Q(E)` and pair-level quantities. Results
//! keep the raw formula value next to the value clipped to `[0, 1]`; comparisons
//! between bounds use the raw value.

mod competitors;
mod fenchel;
mod orlicz;
mod reverse;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::{AbsContPair, EventMask};
use crate::error::{ensure, Error, Result};
use crate::optim;

pub use competitors::{
    competitor_bound, competitor_hellinger_at, competitor_power_at, competitor_reverse_chi2_at,
    competitor_reverse_kl_at, competitor_vc_at, vc_optimal_parameters,
};
pub use fenchel::{
    bound_f_via_egamma, bound_young_fenchel, lipschitz_on_tail, young_fenchel_value,
};
pub use orlicz::{bound_orlicz, bound_orlicz_joint, bound_orlicz_with_norm};
pub use reverse::{bound_reverse_chi2, bound_reverse_kl, bound_vincze_lecam, invert_binary_kl, ReverseKlMode};

/// Slack allowed on probabilities computed by summation.
const PROB_SLOP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub name: String,
    #[serde(with = "crate::serde_float")]
    pub raw: f64,
    pub value: f64,
    #[serde(with = "crate::serde_float::map")]
    pub free_params: BTreeMap<String, f64>,
    pub preconditions: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundResult {
    pub fn new(name: impl Into<String>, raw: f64) -> Self {
        let value = if raw.is_nan() { 1.0 } else { raw.clamp(0.0, 1.0) };
        Self {
            name: name.into(),
            raw,
            value,
            free_params: BTreeMap::new(),
            preconditions: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, v: f64) -> Self {
        self.free_params.insert(key.to_string(), v);
        self
    }

    pub fn precondition(mut self, key: &str, holds: bool) -> Self {
        self.preconditions.insert(key.to_string(), holds);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// True when every recorded precondition holds.
    pub fn applicable(&self) -> bool {
        self.preconditions.values().all(|&b| b)
    }
}

/// Validates `q` and snaps summation residue back into `[0, 1]`.
pub(crate) fn check_q(q: f64) -> Result<f64> {
    ensure(q >= -PROB_SLOP && q <= 1.0 + PROB_SLOP, || {
        Error::Range(format!("Q(E) must lie in [0, 1], got {q}"))
    })?;
    Ok(q.clamp(0.0, 1.0))
}

/// Validates a divergence value: nonnegative or `+inf`, never `NaN`.
pub(crate) fn check_div(d: f64, what: &str) -> Result<f64> {
    ensure(!d.is_nan() && d >= -PROB_SLOP, || {
        Error::Range(format!("{what} must be nonnegative, got {d}"))
    })?;
    Ok(d.max(0.0))
}

/// `Q(E) = 0` forces `P(E) = 0` by absolute continuity and `Q(E) = 1` allows `P(E) = 1`.
pub(crate) fn degenerate(name: &str, q: f64) -> Option<BoundResult> {
    if q == 0.0 {
        Some(BoundResult::new(name, 0.0).note("Q(E) = 0 forces P(E) = 0"))
    } else if q == 1.0 {
        Some(BoundResult::new(name, 1.0).note("Q(E) = 1"))
    } else {
        None
    }
}

/// `gamma q + E_gamma(P||Q)`.
pub fn bound_egamma(q: f64, egamma: f64, gamma: f64) -> Result<BoundResult> {
    let q = check_q(q)?;
    let e = check_div(egamma, "E_gamma")?;
    ensure(gamma.is_finite(), || Error::Range(format!("gamma must be finite, got {gamma}")))?;
    Ok(BoundResult::new("egamma", gamma * q + e).param("gamma", gamma))
}

/// `gamma Q(E) + P(dP/dQ > gamma)`.
pub fn bound_strong_converse(pair: &AbsContPair, event: &EventMask, gamma: f64) -> Result<BoundResult> {
    ensure(event.len() == pair.len(), || {
        Error::Shape(format!("mask over {} atoms, pair over {}", event.len(), pair.len()))
    })?;
    let tail = pair.p_of(&pair.ratio_exceeds(gamma));
    Ok(strong_converse_value(pair.q_of(event), tail, gamma))
}

pub(crate) fn strong_converse_value(q: f64, tail: f64, gamma: f64) -> BoundResult {
    BoundResult::new("strong_converse", gamma * q + tail)
        .param("gamma", gamma)
        .param("tail_mass", tail)
}

/// `q + sqrt(q (1 - q) chi2)`.
pub fn bound_chi2(q: f64, chi2: f64) -> Result<BoundResult> {
    let q = check_q(q)?;
    let c = check_div(chi2, "chi2")?;
    Ok(BoundResult::new("chi2", chi2_value(q, c)))
}

pub(crate) fn chi2_value(q: f64, chi2: f64) -> f64 {
    if chi2 == 0.0 {
        return q;
    }
    q + (q * (1.0 - q) * chi2).sqrt()
}

/// `(KL + ln(1 + q (e^c - 1))) / c` at `c` or at the minimizing `c`.
pub fn bound_kl(q: f64, kl: f64, c: Option<f64>) -> Result<BoundResult> {
    ensure(q > 0.0 && q < 1.0, || {
        Error::Boundary(format!("the KL bound needs Q(E) in (0, 1), got {q}"))
    })?;
    let kl = check_div(kl, "KL")?;
    let c_spec = (1.0 / q).ln();
    let spec_value = (kl + (2.0 - q).ln()) / c_spec;
    let base = |c: f64| kl_value(q, kl, c);
    let result = match c {
        Some(c) => {
            ensure(c > 0.0 && c.is_finite(), || {
                Error::Range(format!("c must be positive, got {c}"))
            })?;
            BoundResult::new("kl", base(c)).param("c", c)
        }
        None => {
            let m = optim::minimize_positive(base);
            BoundResult::new("kl", m.value).param("c", m.x)
        }
    };
    Ok(result.param("c_log_inv_q", c_spec).param("value_at_log_inv_q", spec_value))
}

pub(crate) fn kl_value(q: f64, kl: f64, c: f64) -> f64 {
    if kl.is_infinite() {
        return f64::INFINITY;
    }
    let log_mgf = if c < 1.0 {
        (q * c.exp_m1()).ln_1p()
    } else {
        c + (q + (1.0 - q) * (-c).exp()).ln()
    };
    (kl + log_mgf) / c
}

/// Squared-Hellinger bound `(sqrt(q) b + sqrt((1 - q)(1 - b^2)))^2` with `b = 1 - H^2/2`.
///
/// The closed form solves the two-point constraint only on the branch `b >= sqrt(q)`;
/// for `b < sqrt(q)` the constraint admits `P(E) = 1` and the bound is `1`.
pub fn bound_hellinger(q: f64, h2: f64) -> Result<BoundResult> {
    let q = check_q(q)?;
    ensure((-PROB_SLOP..=2.0 + PROB_SLOP).contains(&h2), || {
        Error::Range(format!("squared Hellinger distance must lie in [0, 2], got {h2}"))
    })?;
    let h2 = h2.clamp(0.0, 2.0);
    if let Some(r) = degenerate("hellinger", q) {
        return Ok(r);
    }
    let b = 1.0 - h2 / 2.0;
    let closed = hellinger_closed(q, b);
    let on_branch = b >= q.sqrt();
    let result = if on_branch {
        BoundResult::new("hellinger", closed)
    } else {
        BoundResult::new("hellinger", 1.0)
            .note("1 - H^2/2 < sqrt(Q(E)): the two-point constraint is met by P(E) = 1")
    };
    Ok(result.param("bhattacharyya", b).param("closed_form", closed))
}

pub(crate) fn hellinger_closed(q: f64, b: f64) -> f64 {
    (q.sqrt() * b + ((1.0 - q) * (1.0 - b * b).max(0.0)).sqrt()).powi(2)
}

/// How the power-divergence constraint is turned into a bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PowerMode {
    /// Largest `p` satisfying the two-point constraint, by bisection.
    Implicit,
    /// Closed relaxation valid while `Q(E) <= q_max < 1`.
    RelaxedM { q_max: f64 },
    /// Closed relaxation through `u0`, tight for small `Q(E)`.
    RelaxedU0,
}

pub fn bound_power_beta(q: f64, h_beta: f64, beta: f64, mode: PowerMode) -> Result<BoundResult> {
    let q = check_q(q)?;
    let h = check_div(h_beta, "power divergence")?;
    crate::divergences::DivergenceKind::PowerBeta { beta }.validate()?;
    let name = match mode {
        PowerMode::Implicit => "power_implicit",
        PowerMode::RelaxedM { .. } => "power_relaxed_m",
        PowerMode::RelaxedU0 => "power_relaxed_u0",
    };
    if let PowerMode::RelaxedM { q_max } = mode {
        ensure(q_max > 0.0 && q_max < 1.0, || {
            Error::Range(format!("q_max must lie in (0, 1), got {q_max}"))
        })?;
    }
    if let Some(r) = degenerate(name, q) {
        return Ok(r.param("beta", beta));
    }
    if h.is_infinite() {
        return Ok(BoundResult::new(name, f64::INFINITY).param("beta", beta));
    }
    if h == 0.0 && mode == PowerMode::Implicit {
        // P = Q on the two-point projection; the root is flat there, so skip the search.
        return Ok(BoundResult::new(name, q).param("beta", beta));
    }
    let log_k = ((beta - 1.0) * h).ln_1p();
    let result = match mode {
        PowerMode::Implicit => BoundResult::new(name, power_implicit(q, log_k, beta)),
        PowerMode::RelaxedM { q_max } => {
            let m = (q_max.ln() * (1.0 - beta) / beta - log_k / beta).exp() - 1.0;
            let raw = if m >= 0.0 {
                let lse = crate::divergences::log_sum_exp(&[
                    (1.0 - beta) * q.ln(),
                    beta * m.ln() + (1.0 - beta) * (1.0 - q).ln(),
                ]);
                ((log_k - lse) / beta).exp()
            } else {
                f64::INFINITY
            };
            BoundResult::new(name, raw)
                .param("m", m)
                .param("q_max", q_max)
                .precondition("q_le_q_max", q <= q_max)
                .precondition("m_nonnegative", m >= 0.0)
        }
        PowerMode::RelaxedU0 => {
            let (raw, u0) = power_u0(q, log_k, beta);
            BoundResult::new(name, raw).param("u0", u0)
        }
    };
    Ok(result.param("beta", beta))
}

/// `ln(q (p/q)^beta + (1-q) ((1-p)/(1-q))^beta)`.
fn power_lhs_log(p: f64, q: f64, beta: f64) -> f64 {
    let first = q.ln() + beta * (p / q).ln();
    let second = if p >= 1.0 {
        f64::NEG_INFINITY
    } else {
        (1.0 - q).ln() + beta * ((1.0 - p) / (1.0 - q)).ln()
    };
    crate::divergences::log_sum_exp(&[first, second])
}

pub(crate) fn power_implicit(q: f64, log_k: f64, beta: f64) -> f64 {
    optim::bisect_last_true(|p| power_lhs_log(p, q, beta) <= log_k, q, 1.0)
}

/// Returns `(bound, u0)`. Works in logs so `q^(beta-1)` never underflows.
pub(crate) fn power_u0(q: f64, log_k: f64, beta: f64) -> (f64, f64) {
    let log_cap = (log_k + (beta - 1.0) * q.ln()) / beta;
    if log_cap >= 0.0 {
        // u0 = 1 removes the second term.
        return (log_cap.exp(), 1.0);
    }
    let u0 = log_cap.exp();
    let log_sub = (1.0 - beta) * (1.0 - q).ln() + beta * (-u0).ln_1p();
    // ln(K - sub) = ln K + ln(1 - sub/K)
    let ratio = (log_sub - log_k).exp();
    if ratio >= 1.0 {
        return (0.0, u0);
    }
    let log_bracket = log_k + (-ratio).ln_1p();
    ((((beta - 1.0) * q.ln() + log_bracket) / beta).exp(), u0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn egamma_linear_formula() {
        let b = bound_egamma(0.2, 0.1, 1.0).unwrap();
        assert!((b.raw - 0.3).abs() < 1e-15);
        assert_eq!(bound_egamma(0.4, 0.0, 1.0).unwrap().raw, 0.4);
    }

    #[test]
    fn chi2_values() {
        assert_eq!(bound_chi2(0.3, 0.0).unwrap().raw, 0.3);
        assert!((bound_chi2(0.5, 1.0).unwrap().raw - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kl_specialization_and_direct_value() {
        let q: f64 = 0.5;
        let b = bound_kl(q, 0.2, Some(1.0)).unwrap();
        let direct = 0.2 + (1.0 + 0.5 * (1f64.exp() - 1.0)).ln();
        assert!((b.raw - direct).abs() < 1e-14);
        for &q in &[1e-6_f64, 0.01, 0.2, 0.7] {
            for &kl in &[0.0, 0.1, 2.0] {
                let c = (1.0 / q).ln();
                let at = bound_kl(q, kl, Some(c)).unwrap().raw;
                let spec = (kl + (2.0 - q).ln()) / c;
                assert!((at - spec).abs() < 1e-12 * spec.max(1.0));
                assert!(spec < (kl + 2f64.ln()) / c);
                let opt = bound_kl(q, kl, None).unwrap();
                assert!(opt.raw <= at + 1e-12);
            }
        }
        assert!(matches!(bound_kl(0.0, 0.1, None), Err(Error::Boundary(_))));
        assert!(matches!(bound_kl(1.0, 0.1, None), Err(Error::Boundary(_))));
    }

    #[test]
    fn kl_optimum_at_zero_divergence_is_near_q() {
        for &q in &[1e-4, 0.05, 0.3] {
            let opt = bound_kl(q, 0.0, None).unwrap();
            assert!(opt.raw >= q - 1e-12);
            assert!(opt.raw <= q + 1e-6, "{q}: {}", opt.raw);
        }
    }

    #[test]
    fn hellinger_endpoints() {
        for &q in &[0.1, 0.5, 0.9] {
            let b = bound_hellinger(q, 0.0).unwrap();
            assert!((b.raw - q).abs() < 1e-15);
            let closed = hellinger_closed(q, 0.0);
            assert!((closed - (1.0 - q)).abs() < 1e-15);
        }
        assert!(matches!(bound_hellinger(0.5, 2.5), Err(Error::Range(_))));
    }

    #[test]
    fn hellinger_off_branch_counterexample() {
        // P = (1, 0, 0), Q = (0.1, 0.4, 0.5), E = {0, 1}: P(E) = 1.
        let h2 = (1.0 - 0.1f64.sqrt()).powi(2) + 0.4 + 0.5;
        let closed = hellinger_closed(0.5, 1.0 - h2 / 2.0);
        assert!(closed < 0.9);
        assert_eq!(bound_hellinger(0.5, h2).unwrap().raw, 1.0);
    }

    #[test]
    fn power_modes() {
        let q: f64 = 0.2;
        let beta: f64 = 2.0;
        let exact = bound_power_beta(q, 0.0, beta, PowerMode::Implicit).unwrap();
        assert!((exact.raw - q).abs() < 1e-12);
        for &h in &[0.0, 0.05, 0.5, 3.0] {
            let imp = bound_power_beta(q, h, beta, PowerMode::Implicit).unwrap().raw;
            let u0 = bound_power_beta(q, h, beta, PowerMode::RelaxedU0).unwrap().raw;
            assert!(imp <= u0 + 1e-12, "h={h}: {imp} vs {u0}");
        }
        let q: f64 = 1e-3;
        let h = 0.01;
        let k: f64 = 1.0 + (beta - 1.0) * h;
        let b = bound_power_beta(q, h, beta, PowerMode::RelaxedU0).unwrap();
        assert!(b.free_params["u0"] < 1.0);
        let big = bound_power_beta(0.5, 5.0, beta, PowerMode::RelaxedU0).unwrap();
        assert_eq!(big.free_params["u0"], 1.0);
        assert!((big.raw - (0.5f64.powf(beta - 1.0) * 6.0).powf(1.0 / beta)).abs() < 1e-12);
        let rm = bound_power_beta(q, h, beta, PowerMode::RelaxedM { q_max: 0.01 }).unwrap();
        assert!(rm.applicable());
        let m = 0.01f64.powf((1.0 - beta) / beta) * k.powf(-1.0 / beta) - 1.0;
        let expect = k.powf(1.0 / beta) / (q.powf(1.0 - beta) + m.powf(beta) * (1.0 - q).powf(1.0 - beta)).powf(1.0 / beta);
        assert!((rm.raw - expect).abs() < 1e-12);
        let outside = bound_power_beta(0.5, h, beta, PowerMode::RelaxedM { q_max: 0.01 }).unwrap();
        assert!(!outside.applicable());
    }

    #[test]
    fn power_implicit_handles_large_beta() {
        let b = bound_power_beta(1e-8, 1e10, 50.0, PowerMode::Implicit).unwrap();
        assert!(b.raw.is_finite() && b.raw > 1e-8 && b.raw <= 1.0);
        let u = bound_power_beta(1e-8, 1e10, 50.0, PowerMode::RelaxedU0).unwrap();
        assert!(u.raw.is_finite() && u.raw >= b.raw - 1e-12);
    }

    #[test]
    fn degenerate_events() {
        assert_eq!(bound_hellinger(0.0, 1.0).unwrap().raw, 0.0);
        assert_eq!(bound_hellinger(1.0, 1.0).unwrap().raw, 1.0);
        assert!(bound_chi2(1.5, 1.0).is_err());
        assert!(bound_chi2(0.5, f64::NAN).is_err());
        assert_eq!(bound_chi2(0.5, f64::INFINITY).unwrap().value, 1.0);
    }
}
