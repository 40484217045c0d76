use std::fmt;
use std::sync::Arc;

use crate::dist::AbsContPair;
use crate::error::{ensure, Error, Result};
use crate::optim;

/// An Orlicz function `psi` with its conjugate and generalized inverse.
#[derive(Clone)]
pub enum OrliczSpec {
    /// `psi(t) = t^kappa / kappa`, `psi*(u) = u^alpha / alpha`, `1/kappa + 1/alpha = 1`.
    Power { kappa: f64 },
    Custom {
        name: String,
        psi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for OrliczSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrliczSpec::Power { kappa } => write!(f, "Power {{ kappa: {kappa} }}"),
            OrliczSpec::Custom { name, .. } => write!(f, "Custom {{ name: {name:?} }}"),
        }
    }
}

impl OrliczSpec {
    pub fn power(kappa: f64) -> Result<Self> {
        let spec = OrliczSpec::Power { kappa };
        spec.validate()?;
        Ok(spec)
    }

    /// The power function whose conjugate has exponent `alpha`.
    pub fn power_with_conjugate(alpha: f64) -> Result<Self> {
        ensure(alpha > 1.0, || {
            Error::Spec(format!("conjugate exponent must exceed 1, got {alpha}"))
        })?;
        Self::power(alpha / (alpha - 1.0))
    }

    pub fn custom(name: impl Into<String>, psi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let spec = OrliczSpec::Custom {
            name: name.into(),
            psi: Arc::new(psi),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks `psi(0) = 0`, monotonicity and convexity on a log grid, and
    /// `psi^{-1}(psi(t)) <= t`.
    pub fn validate(&self) -> Result<()> {
        match self {
            OrliczSpec::Power { kappa } => ensure(*kappa > 1.0 && kappa.is_finite(), || {
                Error::Spec(format!("power Orlicz exponent must exceed 1, got {kappa}"))
            }),
            OrliczSpec::Custom { name, .. } => {
                ensure(self.psi(0.0) == 0.0, || Error::Spec(format!("`{name}` has psi(0) != 0")))?;
                let grid: Vec<f64> = (-30..=30).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
                for w in grid.windows(3) {
                    let (a, b, c) = (w[0], w[1], w[2]);
                    let (fa, fb, fc) = (self.psi(a), self.psi(b), self.psi(c));
                    ensure(fa >= 0.0 && fb >= fa && fc >= fb, || {
                        Error::Spec(format!("`{name}` is not nondecreasing near t = {b}"))
                    })?;
                    if fc.is_finite() {
                        let chord = fa + (fc - fa) * (b - a) / (c - a);
                        ensure(fb <= chord * (1.0 + 1e-9) + 1e-300, || {
                            Error::Spec(format!("`{name}` is not convex near t = {b}"))
                        })?;
                    }
                    let back = self.psi_inverse(fb)?;
                    ensure(back <= b * (1.0 + 1e-9), || {
                        Error::Spec(format!("`{name}` inverse overshoots at t = {b}"))
                    })?;
                }
                Ok(())
            }
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        match self {
            OrliczSpec::Power { kappa } => t.powf(*kappa) / kappa,
            OrliczSpec::Custom { psi, .. } => psi(t),
        }
    }

    /// `psi*(u) = sup_{l > 0} (l u - psi(l))` for `u >= 0`.
    pub fn psi_star(&self, u: f64) -> Result<f64> {
        match self {
            OrliczSpec::Power { kappa } => {
                let alpha = kappa / (kappa - 1.0);
                Ok(u.powf(alpha) / alpha)
            }
            OrliczSpec::Custom { name, psi } => {
                if u == 0.0 {
                    return Ok(0.0);
                }
                let m = optim::minimize_positive(|l| psi(l) - l * u);
                ensure(m.value.is_finite() && m.x < 0.5 * optim::LOG_HI, || {
                    Error::Spec(format!("conjugate of `{name}` is not finite at u = {u}"))
                })?;
                Ok((-m.value).max(0.0))
            }
        }
    }

    /// `psi^{-1}(s) = inf { t >= 0 : psi(t) >= s }`.
    pub fn psi_inverse(&self, s: f64) -> Result<f64> {
        if s == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        match self {
            OrliczSpec::Power { kappa } => Ok((kappa * s).powf(1.0 / kappa)),
            OrliczSpec::Custom { name, psi } => {
                if s <= 0.0 {
                    return Ok(0.0);
                }
                let mut hi = 1.0;
                while psi(hi) < s {
                    hi *= 2.0;
                    ensure(hi < 1e300, || {
                        Error::Spec(format!("`{name}` never reaches {s}"))
                    })?;
                }
                let below = optim::bisect_last_true(|t| psi(t) < s, 0.0, hi);
                Ok(below)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            OrliczSpec::Power { kappa } => format!("power:kappa={kappa}"),
            OrliczSpec::Custom { name, .. } => name.clone(),
        }
    }
}

/// `||1_E||_psi = 1 / psi^{-1}(1/q)`; for the power family `q^{1/kappa} kappa^{-1/kappa}`.
pub fn luxemburg_indicator_norm(q: f64, spec: &OrliczSpec) -> Result<f64> {
    ensure(q > 0.0 && q <= 1.0, || {
        Error::Range(format!("indicator norm needs q in (0, 1], got {q}"))
    })?;
    if let OrliczSpec::Power { kappa } = spec {
        return Ok(q.powf(1.0 / kappa) * kappa.powf(-1.0 / kappa));
    }
    Ok(1.0 / spec.psi_inverse(1.0 / q)?)
}

/// Luxemburg norm `inf { s > 0 : sum_i w_i psi(|u_i| / s) <= 1 }` of a weighted vector.
pub fn luxemburg_norm_of(values: &[f64], weights: &[f64], spec: &OrliczSpec) -> Result<f64> {
    ensure(values.len() == weights.len(), || {
        Error::Shape("values and weights differ in length".into())
    })?;
    if values.iter().zip(weights).all(|(v, w)| *v == 0.0 || *w == 0.0) {
        return Ok(0.0);
    }
    if let OrliczSpec::Power { kappa } = spec {
        let moment: f64 = values.iter().zip(weights).map(|(v, w)| w * v.abs().powf(*kappa)).sum();
        return Ok((moment / kappa).powf(1.0 / kappa));
    }
    let excess = |s: f64| -> f64 {
        values.iter().zip(weights).map(|(v, w)| w * spec.psi(v.abs() / s)).sum::<f64>() - 1.0
    };
    let mut hi = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    while excess(hi) > 0.0 {
        hi *= 2.0;
        ensure(hi.is_finite(), || Error::Spec("Luxemburg norm diverges".into()))?;
    }
    Ok(optim::bisect_increasing(|s| -excess(s), hi * 1e-300_f64.max(f64::MIN_POSITIVE), hi))
}

/// Amemiya norm under `psi*`: `inf_{t > 0} (sum_i w_i psi*(t |v_i|) + 1) / t`.
pub fn amemiya_norm_of(values: &[f64], weights: &[f64], spec: &OrliczSpec) -> Result<f64> {
    ensure(values.len() == weights.len(), || {
        Error::Shape("values and weights differ in length".into())
    })?;
    let active: Vec<(f64, f64)> = values
        .iter()
        .zip(weights)
        .filter(|(v, w)| **v != 0.0 && **w > 0.0)
        .map(|(v, w)| (v.abs(), *w))
        .collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let mut failure = None;
    let m = optim::minimize_positive(|t| {
        let mut total = 1.0;
        for &(v, w) in &active {
            match spec.psi_star(t * v) {
                Ok(x) => total += w * x,
                Err(e) => {
                    failure.get_or_insert(e);
                    return f64::INFINITY;
                }
            }
        }
        total / t
    });
    if !m.value.is_finite() {
        return Err(failure.unwrap_or_else(|| {
            Error::Spec(format!("`{}` conjugate is not finite on the required range", spec.name()))
        }));
    }
    Ok(m.value)
}

/// `|| [dP/dQ - gamma]_+ ||` in the Amemiya norm of `psi*` under `Q`.
pub fn amemiya_norm(pair: &AbsContPair, gamma: f64, spec: &OrliczSpec) -> Result<f64> {
    spec.validate()?;
    let (values, weights): (Vec<f64>, Vec<f64>) =
        pair.support().map(|(r, q)| ((r - gamma).max(0.0), q)).unzip();
    amemiya_norm_of(&values, &weights, spec)
}
