//! Information measures on finite pairs and joints.

mod orlicz;
mod sibson;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::AbsContPair;
use crate::error::{ensure, Error, Result};
use crate::optim;

pub use orlicz::{amemiya_norm, amemiya_norm_of, luxemburg_indicator_norm, luxemburg_norm_of, OrliczSpec};
pub use sibson::{
    fiber_constant, fiber_constants, maximal_leakage, mutual_information, sibson_mi, FiberOrder,
};

/// Largest supported power-divergence order; `t^beta` overflows doubles beyond it.
pub const MAX_BETA: f64 = 50.0;

/// The divergences of the comparison table, plus Rényi.
///
/// Generators and their value at zero:
/// - `Kl`: `t ln t`, `f(0) = 0`
/// - `ReverseKl`: `-ln t`, `f(0) = +inf`
/// - `Chi2`: `(t - 1)^2`, `f(0) = 1`
/// - `ReverseChi2`: `1/t - 1`, `f(0) = +inf`
/// - `Tv`: `|t - 1| / 2`, `f(0) = 1/2`
/// - `SquaredHellinger`: `(1 - sqrt t)^2`, `f(0) = 1`, so `H^2` lies in `[0, 2]`
/// - `PowerBeta`: `(t^beta - 1) / (beta - 1)`, `f(0) = -1/(beta - 1)`
/// - `EGamma`: `[t - gamma]_+`, `f(0) = [-gamma]_+`
/// - `VinczeLeCam`: `(2 - 2t) / (t + 1)`, `f(0) = 2`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivergenceKind {
    Kl,
    ReverseKl,
    Chi2,
    ReverseChi2,
    Tv,
    SquaredHellinger,
    PowerBeta { beta: f64 },
    EGamma { gamma: f64 },
    VinczeLeCam,
    Renyi { alpha: f64 },
}

impl DivergenceKind {
    /// Every non-Rényi kind, instantiated at representative parameters.
    pub fn f_kinds() -> Vec<DivergenceKind> {
        use DivergenceKind::*;
        vec![
            Kl,
            ReverseKl,
            Chi2,
            ReverseChi2,
            Tv,
            SquaredHellinger,
            PowerBeta { beta: 2.0 },
            PowerBeta { beta: 1.5 },
            EGamma { gamma: 0.5 },
            EGamma { gamma: 1.0 },
            EGamma { gamma: 2.0 },
            VinczeLeCam,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DivergenceKind::PowerBeta { beta } => ensure(beta > 1.0 && beta <= MAX_BETA, || {
                Error::Range(format!("power divergence needs beta in (1, {MAX_BETA}], got {beta}"))
            }),
            DivergenceKind::Renyi { alpha } => {
                ensure(alpha > 0.0 && alpha != 1.0 && alpha.is_finite(), || {
                    Error::Range(format!("Rényi order must lie in (0, inf) minus 1, got {alpha}"))
                })
            }
            DivergenceKind::EGamma { gamma } => ensure(gamma.is_finite(), || {
                Error::Range(format!("gamma must be finite, got {gamma}"))
            }),
            _ => Ok(()),
        }
    }

    pub fn is_f_divergence(&self) -> bool {
        !matches!(self, DivergenceKind::Renyi { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            DivergenceKind::Kl => "kl",
            DivergenceKind::ReverseKl => "reverse-kl",
            DivergenceKind::Chi2 => "chi2",
            DivergenceKind::ReverseChi2 => "reverse-chi2",
            DivergenceKind::Tv => "tv",
            DivergenceKind::SquaredHellinger => "hellinger",
            DivergenceKind::PowerBeta { .. } => "power",
            DivergenceKind::EGamma { .. } => "egamma",
            DivergenceKind::VinczeLeCam => "vc",
            DivergenceKind::Renyi { .. } => "renyi",
        }
    }

    /// Builds a kind from its short name and the optional order/threshold parameters.
    pub fn from_name(
        name: &str,
        beta: Option<f64>,
        gamma: Option<f64>,
        alpha: Option<f64>,
    ) -> Result<Self> {
        let missing = |p: &str| Error::Validation(format!("`{name}` needs --{p}"));
        let kind = match name {
            "kl" => DivergenceKind::Kl,
            "reverse-kl" => DivergenceKind::ReverseKl,
            "chi2" => DivergenceKind::Chi2,
            "reverse-chi2" => DivergenceKind::ReverseChi2,
            "tv" => DivergenceKind::Tv,
            "hellinger" | "squared-hellinger" => DivergenceKind::SquaredHellinger,
            "power" | "power-beta" => DivergenceKind::PowerBeta {
                beta: beta.ok_or_else(|| missing("beta"))?,
            },
            "egamma" => DivergenceKind::EGamma {
                gamma: gamma.ok_or_else(|| missing("gamma"))?,
            },
            "vc" | "vincze-le-cam" => DivergenceKind::VinczeLeCam,
            "renyi" => DivergenceKind::Renyi {
                alpha: alpha.ok_or_else(|| missing("alpha"))?,
            },
            other => return Err(Error::Validation(format!("unknown divergence kind `{other}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }

    /// The generator `f(t)` for `t >= 0`; `NaN` for Rényi.
    pub fn f(&self, t: f64) -> f64 {
        match *self {
            DivergenceKind::Kl => {
                if t == 0.0 {
                    0.0
                } else {
                    t * t.ln()
                }
            }
            DivergenceKind::ReverseKl => -t.ln(),
            DivergenceKind::Chi2 => (t - 1.0) * (t - 1.0),
            DivergenceKind::ReverseChi2 => 1.0 / t - 1.0,
            DivergenceKind::Tv => 0.5 * (t - 1.0).abs(),
            DivergenceKind::SquaredHellinger => (1.0 - t.sqrt()).powi(2),
            DivergenceKind::PowerBeta { beta } => (t.powf(beta) - 1.0) / (beta - 1.0),
            DivergenceKind::EGamma { gamma } => (t - gamma).max(0.0),
            DivergenceKind::VinczeLeCam => (2.0 - 2.0 * t) / (t + 1.0),
            DivergenceKind::Renyi { .. } => f64::NAN,
        }
    }

    /// `f'(t)`, taking the right-continuous subgradient at kinks.
    pub fn f_prime(&self, t: f64) -> f64 {
        match *self {
            DivergenceKind::Kl => 1.0 + t.ln(),
            DivergenceKind::ReverseKl => -1.0 / t,
            DivergenceKind::Chi2 => 2.0 * (t - 1.0),
            DivergenceKind::ReverseChi2 => -1.0 / (t * t),
            DivergenceKind::Tv => {
                if t == 1.0 {
                    0.0
                } else {
                    0.5 * (t - 1.0).signum()
                }
            }
            DivergenceKind::SquaredHellinger => 1.0 - 1.0 / t.sqrt(),
            DivergenceKind::PowerBeta { beta } => beta * t.powf(beta - 1.0) / (beta - 1.0),
            DivergenceKind::EGamma { gamma } => {
                if t > gamma {
                    1.0
                } else {
                    0.0
                }
            }
            DivergenceKind::VinczeLeCam => -4.0 / ((1.0 + t) * (1.0 + t)),
            DivergenceKind::Renyi { .. } => f64::NAN,
        }
    }

    /// Convex conjugate `sup_{t > 0} (u t - f(t))`, possibly `+inf`.
    pub fn conjugate(&self, u: f64) -> f64 {
        let inf = f64::INFINITY;
        match *self {
            DivergenceKind::Kl => (u - 1.0).exp(),
            DivergenceKind::ReverseKl => {
                if u < 0.0 {
                    -1.0 - (-u).ln()
                } else {
                    inf
                }
            }
            DivergenceKind::Chi2 => {
                if u >= -2.0 {
                    u + 0.25 * u * u
                } else {
                    -1.0
                }
            }
            DivergenceKind::ReverseChi2 => {
                if u <= 0.0 {
                    1.0 - 2.0 * (-u).sqrt()
                } else {
                    inf
                }
            }
            DivergenceKind::Tv => {
                if u > 0.5 {
                    inf
                } else if u >= -0.5 {
                    u
                } else {
                    -0.5
                }
            }
            DivergenceKind::SquaredHellinger => {
                if u < 1.0 {
                    u / (1.0 - u)
                } else {
                    inf
                }
            }
            DivergenceKind::PowerBeta { beta } => {
                if u <= 0.0 {
                    1.0 / (beta - 1.0)
                } else {
                    let t = (u * (beta - 1.0) / beta).powf(1.0 / (beta - 1.0));
                    u * t - (t.powf(beta) - 1.0) / (beta - 1.0)
                }
            }
            DivergenceKind::EGamma { gamma } => {
                if u > 1.0 {
                    inf
                } else {
                    let kink = gamma.max(0.0);
                    (-self.f(0.0)).max(u * kink - self.f(kink))
                }
            }
            DivergenceKind::VinczeLeCam => {
                if u > 0.0 {
                    inf
                } else if u >= -4.0 {
                    2.0 - 4.0 * (-u).sqrt() - u
                } else {
                    -2.0
                }
            }
            DivergenceKind::Renyi { .. } => f64::NAN,
        }
    }

    /// `D_f` from pairs of masses `(p_i, q_i)`, summed with kind-specific stable forms.
    fn sum_terms(&self, atoms: impl Iterator<Item = (f64, f64)>) -> f64 {
        let mut total = 0.0;
        for (p, q) in atoms {
            if p == 0.0 && q == 0.0 {
                continue;
            }
            let term = match *self {
                DivergenceKind::Kl => {
                    if p == 0.0 {
                        0.0
                    } else {
                        p * (p / q).ln()
                    }
                }
                DivergenceKind::ReverseKl => {
                    if q == 0.0 {
                        0.0
                    } else if p == 0.0 {
                        f64::INFINITY
                    } else {
                        q * (q / p).ln()
                    }
                }
                DivergenceKind::Chi2 => (p - q) * (p - q) / q,
                DivergenceKind::ReverseChi2 => {
                    if p == 0.0 {
                        f64::INFINITY
                    } else {
                        (q - p) * (q - p) / p
                    }
                }
                DivergenceKind::Tv => 0.5 * (p - q).abs(),
                DivergenceKind::SquaredHellinger => (p.sqrt() - q.sqrt()).powi(2),
                DivergenceKind::PowerBeta { beta } => {
                    if p == 0.0 {
                        -q / (beta - 1.0)
                    } else {
                        q * (beta * (p / q).ln()).exp_m1() / (beta - 1.0)
                    }
                }
                DivergenceKind::EGamma { gamma } => (p - gamma * q).max(0.0),
                DivergenceKind::VinczeLeCam => (p - q) * (p - q) / (p + q),
                DivergenceKind::Renyi { .. } => f64::NAN,
            };
            total += term;
        }
        total
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DivergenceKind::PowerBeta { beta } => write!(f, "power:beta={beta}"),
            DivergenceKind::EGamma { gamma } => write!(f, "egamma:gamma={gamma}"),
            DivergenceKind::Renyi { alpha } => write!(f, "renyi:alpha={alpha}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Parses `name` or `name:param=value`, e.g. `chi2`, `power:beta=2`, `egamma:gamma=1.5`.
impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = parse_named(s)?;
        let get = |key: &str| params.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
        for (k, _) in &params {
            ensure(["beta", "gamma", "alpha"].contains(&k.as_str()), || {
                Error::Validation(format!("unknown parameter `{k}` in `{s}`"))
            })?;
        }
        DivergenceKind::from_name(name, get("beta"), get("gamma"), get("alpha"))
    }
}

/// Splits `name:k=v,k=v` into its name and numeric parameters.
pub(crate) fn parse_named(s: &str) -> Result<(&str, Vec<(String, f64)>)> {
    let (name, rest) = match s.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (s.trim(), ""),
    };
    let mut params = Vec::new();
    for item in rest.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("expected key=value, got `{item}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("`{v}` is not a number in `{s}`")))?;
        params.push((k.trim().to_string(), v));
    }
    Ok((name, params))
}

/// A divergence evaluated on a pair, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    pub kind: DivergenceKind,
    #[serde(with = "crate::serde_float")]
    pub value: f64,
}

/// `sum_i f(dP/dQ_i) Q_i`, with `+inf` when a reverse divergence meets `P_i = 0 < Q_i`.
pub fn f_divergence(pair: &AbsContPair, kind: DivergenceKind) -> Result<DivergenceValue> {
    kind.validate()?;
    if let DivergenceKind::Renyi { alpha } = kind {
        return Ok(DivergenceValue {
            kind,
            value: renyi(pair, alpha)?,
        });
    }
    let atoms = pair.p().probs().iter().copied().zip(pair.q().probs().iter().copied());
    let value = kind.sum_terms(atoms);
    Ok(DivergenceValue {
        kind,
        value: clamp_nonneg(value),
    })
}

/// Rounding can leave `-1e-17`-sized residue on identical inputs.
fn clamp_nonneg(value: f64) -> f64 {
    if value < 0.0 && value > -1e-12 {
        0.0
    } else {
        value
    }
}

/// Two-point divergence `q f(p/q) + (1-q) f((1-p)/(1-q))`.
pub fn binary_f_divergence(p: f64, q: f64, kind: DivergenceKind) -> Result<f64> {
    kind.validate()?;
    ensure(kind.is_f_divergence(), || {
        Error::Validation("Rényi divergence has no two-point generator form".into())
    })?;
    ensure((0.0..=1.0).contains(&p), || {
        Error::Range(format!("p must lie in [0, 1], got {p}"))
    })?;
    ensure(q > 0.0 && q < 1.0, || {
        Error::Boundary(format!("q must lie in (0, 1), got {q}"))
    })?;
    Ok(binary_unchecked(p, q, kind))
}

pub(crate) fn binary_unchecked(p: f64, q: f64, kind: DivergenceKind) -> f64 {
    kind.sum_terms([(p, q), (1.0 - p, 1.0 - q)].into_iter())
}

/// Binary relative entropy `kl(a || b)` in nats.
pub fn binary_kl(a: f64, b: f64) -> f64 {
    let term = |x: f64, y: f64| {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    };
    term(a, b) + term(1.0 - a, 1.0 - b)
}

/// `E_gamma(P||Q) = sum_i [P_i - gamma Q_i]_+`.
pub fn egamma(pair: &AbsContPair, gamma: f64) -> f64 {
    DivergenceKind::EGamma { gamma }.sum_terms(
        pair.p().probs().iter().copied().zip(pair.q().probs().iter().copied()),
    )
}

pub fn total_variation(pair: &AbsContPair) -> f64 {
    DivergenceKind::Tv.sum_terms(pair.p().probs().iter().copied().zip(pair.q().probs().iter().copied()))
}

/// `D_alpha(P||Q) = ln(sum_i Q_i r_i^alpha) / (alpha - 1)`, computed by log-sum-exp.
pub fn renyi(pair: &AbsContPair, alpha: f64) -> Result<f64> {
    DivergenceKind::Renyi { alpha }.validate()?;
    let logs: Vec<f64> = pair
        .support()
        .filter(|&(r, _)| r > 0.0)
        .map(|(r, q)| q.ln() + alpha * r.ln())
        .collect();
    let value = log_sum_exp(&logs) / (alpha - 1.0);
    Ok(clamp_nonneg(value))
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Rényi order `beta` from the power divergence of the same order.
pub fn hellinger_to_renyi(h: f64, beta: f64) -> Result<f64> {
    DivergenceKind::PowerBeta { beta }.validate()?;
    Ok(((beta - 1.0) * h).ln_1p() / (beta - 1.0))
}

/// Power divergence of order `alpha` from the Rényi divergence of the same order.
pub fn renyi_to_hellinger(d: f64, alpha: f64) -> Result<f64> {
    DivergenceKind::Renyi { alpha }.validate()?;
    Ok(((alpha - 1.0) * d).exp_m1() / (alpha - 1.0))
}

/// A user-supplied convex generator with `f(1) = 0`.
#[derive(Clone)]
pub struct CustomGenerator {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomGenerator").field("name", &self.name).finish()
    }
}

impl CustomGenerator {
    /// Spot-checks convexity on a log grid and `f(1) = 0`.
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let name = name.into();
        let g = Self {
            name: name.clone(),
            f: Arc::new(f),
        };
        ensure((g.eval(1.0)).abs() <= 1e-12, || {
            Error::Spec(format!("`{name}` has f(1) = {} instead of 0", g.eval(1.0)))
        })?;
        let grid: Vec<f64> = (-40..=40).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
        for w in grid.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            let (fa, fb, fc) = (g.eval(a), g.eval(b), g.eval(c));
            if !(fa.is_finite() && fb.is_finite() && fc.is_finite()) {
                continue;
            }
            let chord = fa + (fc - fa) * (b - a) / (c - a);
            let slack = 1e-9 * (fa.abs() + fb.abs() + fc.abs() + 1.0);
            ensure(fb <= chord + slack, || {
                Error::Spec(format!("`{name}` is not convex near t = {b}"))
            })?;
        }
        Ok(g)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }
}

/// Either a built-in kind or a custom scalar function.
#[derive(Debug, Clone)]
pub enum Generator {
    Kind(DivergenceKind),
    Custom(CustomGenerator),
}

impl From<DivergenceKind> for Generator {
    fn from(kind: DivergenceKind) -> Self {
        Generator::Kind(kind)
    }
}

impl From<CustomGenerator> for Generator {
    fn from(g: CustomGenerator) -> Self {
        Generator::Custom(g)
    }
}

const DERIV_STEP: f64 = 1e-6;

impl Generator {
    pub fn validate(&self) -> Result<()> {
        match self {
            Generator::Kind(k) => {
                k.validate()?;
                ensure(k.is_f_divergence(), || {
                    Error::Spec("Rényi divergence is not an f-divergence".into())
                })
            }
            Generator::Custom(_) => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Generator::Kind(k) => k.to_string(),
            Generator::Custom(g) => g.name.clone(),
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match self {
            Generator::Kind(k) => k.f(t),
            Generator::Custom(g) => g.eval(t),
        }
    }

    /// `f'(t)`: closed form for built-ins, Richardson-extrapolated central differences otherwise.
    pub fn f_prime(&self, t: f64) -> f64 {
        match self {
            Generator::Kind(k) => k.f_prime(t),
            Generator::Custom(g) => {
                let h = DERIV_STEP.min(0.5 * t).max(f64::EPSILON);
                let d = |h: f64| (g.eval(t + h) - g.eval(t - h)) / (2.0 * h);
                (4.0 * d(0.5 * h) - d(h)) / 3.0
            }
        }
    }

    /// `f*(u) = sup_{t > 0} (u t - f(t))`. Custom generators are maximized on the
    /// standard log bracket; a supremum at the bracket edge is reported as unbounded.
    pub fn conjugate(&self, u: f64) -> Result<f64> {
        match self {
            Generator::Kind(k) => Ok(k.conjugate(u)),
            Generator::Custom(g) => {
                let m = optim::minimize_positive(|t| g.eval(t) - u * t);
                ensure(m.value.is_finite(), || {
                    Error::Spec(format!("conjugate of `{}` is not finite at u = {u}", g.name))
                })?;
                if m.x > 0.5 * optim::LOG_HI {
                    return Ok(f64::INFINITY);
                }
                Ok(-m.value)
            }
        }
    }

    /// `D_f` for this generator over a pair.
    pub fn divergence(&self, pair: &AbsContPair) -> Result<f64> {
        match self {
            Generator::Kind(k) => f_divergence(pair, *k).map(|v| v.value),
            Generator::Custom(g) => {
                let f0 = g.eval(0.0);
                let mut total = 0.0;
                for (r, q) in pair.support() {
                    total += q * if r == 0.0 { f0 } else { g.eval(r) };
                }
                Ok(total)
            }
        }
    }

    /// Two-point divergence with the same conventions as [`binary_f_divergence`].
    pub fn binary(&self, p: f64, q: f64) -> f64 {
        match self {
            Generator::Kind(k) => binary_unchecked(p, q, *k),
            Generator::Custom(g) => {
                let term = |a: f64, b: f64| {
                    if b == 0.0 {
                        0.0
                    } else if a == 0.0 {
                        b * g.eval(0.0)
                    } else {
                        b * g.eval(a / b)
                    }
                };
                term(p, q) + term(1.0 - p, 1.0 - q)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::make_pair;
    use crate::dist::FiniteDistribution;

    fn pair(p: &[f64], q: &[f64]) -> AbsContPair {
        AbsContPair::from_probs(p.to_vec(), q.to_vec()).unwrap()
    }

    #[test]
    fn chi2_hand_value() {
        let pr = pair(&[0.5, 0.5], &[0.25, 0.75]);
        let v = f_divergence(&pr, DivergenceKind::Chi2).unwrap().value;
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_at_identical_inputs() {
        let pr = pair(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]);
        for kind in DivergenceKind::f_kinds() {
            let v = f_divergence(&pr, kind).unwrap().value;
            match kind {
                DivergenceKind::EGamma { gamma } if gamma < 1.0 => {
                    assert!((v - (1.0 - gamma)).abs() < 1e-12)
                }
                _ => assert!(v.abs() < 1e-12, "{kind}: {v}"),
            }
        }
        assert_eq!(renyi(&pr, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn binary_values() {
        assert!(binary_f_divergence(0.3, 0.3, DivergenceKind::Kl).unwrap().abs() < 1e-15);
        let c = binary_f_divergence(0.5, 0.25, DivergenceKind::Chi2).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-15);
        let tv = binary_f_divergence(0.9, 0.5, DivergenceKind::EGamma { gamma: 1.0 }).unwrap();
        assert!((tv - 0.4).abs() < 1e-15);
        assert!(matches!(
            binary_f_divergence(0.5, 0.0, DivergenceKind::Kl),
            Err(Error::Boundary(_))
        ));
        assert!(matches!(
            binary_f_divergence(1.5, 0.5, DivergenceKind::Kl),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn reverse_divergences_go_infinite() {
        let pr = pair(&[1.0, 0.0], &[0.5, 0.5]);
        for kind in [DivergenceKind::ReverseKl, DivergenceKind::ReverseChi2] {
            assert_eq!(f_divergence(&pr, kind).unwrap().value, f64::INFINITY);
        }
        let kl = f_divergence(&pr, DivergenceKind::Kl).unwrap().value;
        assert!((kl - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn renyi_conversion_round_trip() {
        for &h in &[0.0, 1e-6, 0.3, 5.0, 123.0] {
            for &beta in &[1.1, 2.0, 7.5] {
                let d = hellinger_to_renyi(h, beta).unwrap();
                let back = renyi_to_hellinger(d, beta).unwrap();
                assert!((back - h).abs() <= 1e-12 * h.max(1.0));
            }
        }
        assert!(hellinger_to_renyi(1.0, 1.0).is_err());
        assert!(renyi_to_hellinger(1.0, -1.0).is_err());
    }

    #[test]
    fn renyi_two_is_log_one_plus_chi2() {
        let pr = pair(&[0.1, 0.2, 0.3, 0.4], &[0.4, 0.3, 0.2, 0.1]);
        let chi2 = f_divergence(&pr, DivergenceKind::Chi2).unwrap().value;
        assert!((renyi(&pr, 2.0).unwrap() - chi2.ln_1p()).abs() < 1e-12);
    }

    #[test]
    fn conjugates_match_numeric_supremum() {
        let us = [-6.0, -3.0, -1.0, -0.3, 0.0, 0.2, 0.45, 0.9, 2.5];
        for kind in DivergenceKind::f_kinds() {
            for &u in &us {
                let closed = kind.conjugate(u);
                let numeric = -optim::minimize_positive(|t| kind.f(t) - u * t).value;
                let numeric = numeric.max(-kind.f(0.0));
                if closed.is_infinite() {
                    assert!(numeric > 20.0, "{kind} u={u}: {numeric}");
                } else {
                    assert!(
                        (closed - numeric).abs() < 1e-6 * (1.0 + closed.abs()),
                        "{kind} u={u}: {closed} vs {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn derivatives_match_differences() {
        for kind in DivergenceKind::f_kinds() {
            for &t in &[0.3, 0.8, 1.7, 4.0] {
                let g = Generator::Custom(CustomGenerator {
                    name: "probe".into(),
                    f: Arc::new(move |x| kind.f(x)),
                });
                if let DivergenceKind::EGamma { gamma } = kind {
                    if (t - gamma).abs() < 1e-3 {
                        continue;
                    }
                }
                let a = kind.f_prime(t);
                let b = g.f_prime(t);
                assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{kind} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn generators_are_convex_with_zero_at_one() {
        for kind in DivergenceKind::f_kinds() {
            let g = CustomGenerator::new(kind.to_string(), move |t| kind.f(t));
            match kind {
                DivergenceKind::EGamma { gamma } if gamma < 1.0 => {
                    assert!(matches!(g, Err(Error::Spec(_))))
                }
                _ => {
                    g.unwrap();
                }
            }
        }
        assert!(CustomGenerator::new("concave", |t: f64| -t * t.ln()).is_err());
    }

    #[test]
    fn custom_generator_agrees_with_builtin() {
        let kl = |t: f64| if t == 0.0 { 0.0 } else { t * t.ln() };
        let custom = Generator::Custom(CustomGenerator::new("kl", kl).unwrap());
        let pr = pair(&[0.1, 0.6, 0.3], &[0.3, 0.3, 0.4]);
        let a = custom.divergence(&pr).unwrap();
        let b = f_divergence(&pr, DivergenceKind::Kl).unwrap().value;
        assert!((a - b).abs() < 1e-12);
        for &u in &[-1.0, 0.0, 1.5] {
            let c = custom.conjugate(u).unwrap();
            assert!((c - (u - 1.0).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("chi2".parse::<DivergenceKind>().unwrap(), DivergenceKind::Chi2);
        assert_eq!(
            "power:beta=2".parse::<DivergenceKind>().unwrap(),
            DivergenceKind::PowerBeta { beta: 2.0 }
        );
        assert!("power".parse::<DivergenceKind>().is_err());
        assert!("power:beta=0.5".parse::<DivergenceKind>().is_err());
        assert!("power:beta=60".parse::<DivergenceKind>().is_err());
        assert!("renyi:alpha=1".parse::<DivergenceKind>().is_err());
        assert!("nope".parse::<DivergenceKind>().is_err());
        for kind in DivergenceKind::f_kinds() {
            assert_eq!(kind.to_string().parse::<DivergenceKind>().unwrap(), kind);
        }
    }

    #[test]
    fn egamma_at_one_is_tv() {
        let p = FiniteDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        let q = FiniteDistribution::new(vec![0.3, 0.3, 0.4]).unwrap();
        let pr = make_pair(p, q).unwrap();
        assert!((egamma(&pr, 1.0) - total_variation(&pr)).abs() < 1e-15);
        assert!((egamma(&pr, 0.0) - 1.0).abs() < 1e-15);
    }
}
