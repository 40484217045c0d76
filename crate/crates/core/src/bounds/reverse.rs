use serde::{Deserialize, Serialize};

use crate::divergences::binary_kl;
use crate::error::{ensure, Error, Result};
use crate::optim;

use super::{check_div, check_q, degenerate, BoundResult};

/// Upper end of the search interval for the inverse of `p -> kl(q || p)`.
const KL_INVERSE_TOP: f64 = 1.0 - 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReverseKlMode {
    /// `1 - (1-q) exp(-D/(1-q))`: drops `q ln(q/p)`, which is negative for `p > q`,
    /// so it sits below the exact inversion and is flagged as not applicable.
    Explicit,
    /// Explicit relaxation using `q ln(q/p) >= q ln q`, which keeps it valid.
    ExplicitSound,
    Exact,
}

/// Larger root of `(1 + r) p^2 - (r + 2q) p + q^2 <= 0` with `r = chi2(Q||P)`.
pub fn bound_reverse_chi2(q: f64, rchi2: f64) -> Result<BoundResult> {
    let q = check_q(q)?;
    let r = check_div(rchi2, "reverse chi2")?;
    if let Some(b) = degenerate("reverse_chi2", q) {
        return Ok(b);
    }
    if r.is_infinite() {
        return Ok(BoundResult::new("reverse_chi2", 1.0));
    }
    let raw = (r + 2.0 * q + (r * r + 4.0 * r * q * (1.0 - q)).sqrt()) / (2.0 * (1.0 + r));
    Ok(BoundResult::new("reverse_chi2", raw))
}

/// Bound from `D(Q||P) >= kl(q || p)`, either inverted exactly or relaxed explicitly.
pub fn bound_reverse_kl(q: f64, d: f64, mode: ReverseKlMode) -> Result<BoundResult> {
    let q = check_q(q)?;
    let d = check_div(d, "reverse KL")?;
    let name = match mode {
        ReverseKlMode::Explicit => "reverse_kl_explicit",
        ReverseKlMode::ExplicitSound => "reverse_kl_explicit_sound",
        ReverseKlMode::Exact => "reverse_kl_exact",
    };
    if let Some(b) = degenerate(name, q) {
        return Ok(b);
    }
    let exact = if d.is_infinite() { 1.0 } else { invert_binary_kl(q, d)? };
    let result = match mode {
        ReverseKlMode::Exact => BoundResult::new(name, exact),
        ReverseKlMode::Explicit => {
            let raw = 1.0 - (1.0 - q) * (-d / (1.0 - q)).exp();
            BoundResult::new(name, raw)
                .param("exact", exact)
                .precondition("covers_exact_inversion", raw >= exact - 1e-12)
        }
        ReverseKlMode::ExplicitSound => {
            let raw = 1.0 - (1.0 - q) * ((q * q.ln() - d) / (1.0 - q)).exp();
            BoundResult::new(name, raw)
        }
    };
    Ok(result)
}

/// The `p` in `[q, 1)` with `kl(q || p) = d`. Past the search interval the largest
/// double below 1 is returned.
pub fn invert_binary_kl(q: f64, d: f64) -> Result<f64> {
    ensure(q > 0.0 && q < 1.0, || {
        Error::Range(format!("q must lie in (0, 1), got {q}"))
    })?;
    ensure(d >= 0.0 && !d.is_nan(), || {
        Error::Range(format!("divergence must be nonnegative, got {d}"))
    })?;
    if d == 0.0 {
        return Ok(q);
    }
    if d > binary_kl(q, KL_INVERSE_TOP) {
        return Ok(1.0 - f64::EPSILON / 2.0);
    }
    Ok(optim::bisect_increasing(|p| binary_kl(q, p) - d, q, KL_INVERSE_TOP))
}

/// Larger root of `(V + 2) p^2 - 2q(V + 2) p + (V + 2) q^2 - 2Vq <= 0`.
pub fn bound_vincze_lecam(q: f64, vc: f64) -> Result<BoundResult> {
    let q = check_q(q)?;
    let v = check_div(vc, "Vincze-Le Cam divergence")?;
    ensure(v <= 2.0 + 1e-12, || {
        Error::Range(format!("Vincze-Le Cam divergence is at most 2, got {vc}"))
    })?;
    if let Some(b) = degenerate("vincze_le_cam", q) {
        return Ok(b);
    }
    let raw = (v * (1.0 - q) + 2.0 * q + (v * (v + 8.0 * q * (1.0 - q))).sqrt()) / (v + 2.0);
    Ok(BoundResult::new("vincze_le_cam", raw))
}
