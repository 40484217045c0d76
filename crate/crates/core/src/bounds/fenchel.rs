use crate::divergences::{DivergenceKind, Generator};
use crate::error::{ensure, Error, Result};
use crate::optim::{self, Minimum};

use super::{check_div, check_q, degenerate, BoundResult};

const POLISH_ROUNDS: usize = 50;
const POLISH_POINTS: usize = 21;
const POLISH_TOL: f64 = 1e-10;
const MIN_GAP: f64 = 1e-9;

/// `(D - v + q f*(u) + (1 - q) f*(v)) / (u - v)` for `u > v`.
pub fn young_fenchel_value(q: f64, df: f64, gen: &Generator, u: f64, v: f64) -> Result<f64> {
    ensure(u > v, || Error::Range(format!("need u > v, got u = {u}, v = {v}")))?;
    let fu = gen.conjugate(u)?;
    let fv = gen.conjugate(v)?;
    ensure(fu.is_finite() && fv.is_finite(), || {
        Error::Range(format!(
            "conjugate of `{}` is infinite at u = {u} or v = {v}",
            gen.name()
        ))
    })?;
    Ok(raw_value(q, df, fu, fv, u, v))
}

fn raw_value(q: f64, df: f64, fu: f64, fv: f64, u: f64, v: f64) -> f64 {
    // q f*(u) is dropped when q = 0 so an infinite conjugate cannot poison it.
    let first = if q == 0.0 { 0.0 } else { q * fu };
    let second = if q == 1.0 { 0.0 } else { (1.0 - q) * fv };
    (df - v + first + second) / (u - v)
}

/// Linearizes the two-point constraint with the conjugate. With both `u` and `v` given
/// the bound is evaluated there; otherwise the free ones are optimized.
pub fn bound_young_fenchel(
    q: f64,
    df: f64,
    gen: &Generator,
    u: Option<f64>,
    v: Option<f64>,
) -> Result<BoundResult> {
    gen.validate()?;
    let q = check_q(q)?;
    let df = check_div(df, "f-divergence")?;
    if let Some(r) = degenerate("young_fenchel", q) {
        return Ok(r);
    }
    if df.is_infinite() {
        return Ok(BoundResult::new("young_fenchel", f64::INFINITY));
    }
    let conj = |u: f64| gen.conjugate(u).unwrap_or(f64::INFINITY);
    let objective = |u: f64, v: f64| -> f64 {
        // Below this gap the numerator is lost to cancellation.
        if u - v <= MIN_GAP * v.abs().max(1.0) {
            return f64::INFINITY;
        }
        let (fu, fv) = (conj(u), conj(v));
        if !fu.is_finite() || !fv.is_finite() {
            return f64::INFINITY;
        }
        raw_value(q, df, fu, fv, u, v)
    };

    let (best_u, best_v, value) = match (u, v) {
        (Some(u), Some(v)) => (u, v, young_fenchel_value(q, df, gen, u, v)?),
        (Some(u), None) => {
            let m = minimize_free(|v| objective(u, v), u - 1.0);
            (u, m.x, m.value)
        }
        (None, Some(v)) => {
            let m = minimize_free(|u| objective(u, v), v + 1.0);
            (m.x, v, m.value)
        }
        (None, None) => optimize_pair(q, df, gen, &objective),
    };
    ensure(value.is_finite(), || {
        Error::Range(format!(
            "no finite Young-Fenchel value for `{}`: the conjugate is infinite on the search bracket",
            gen.name()
        ))
    })?;
    let mut result = BoundResult::new("young_fenchel", value).param("u", best_u).param("v", best_v);
    if u.is_none() && v.is_none() && gen.conjugate(0.0).map(|c| c.abs() < 1e-12).unwrap_or(false) {
        let simple = optim::minimize_positive(|u| objective(u, 0.0));
        result = result.param("simple_form", simple.value).param("simple_form_u", simple.x);
    }
    Ok(result)
}

/// One free coordinate: scan a wide symmetric log bracket around `center`.
fn minimize_free(mut f: impl FnMut(f64) -> f64, center: f64) -> Minimum {
    let up = optim::minimize_positive(|d| f(center + d));
    let down = optim::minimize_positive(|d| f(center - d));
    let at = Minimum { x: center, value: f(center) };
    let mut best = at;
    for m in [
        Minimum { x: center + up.x, value: up.value },
        Minimum { x: center - down.x, value: down.value },
    ] {
        if m.value < best.value {
            best = m;
        }
    }
    best
}

/// Dual warm start then coordinate-descent polish over `(v, ln(u - v))`.
fn optimize_pair(
    q: f64,
    df: f64,
    gen: &Generator,
    objective: &impl Fn(f64, f64) -> f64,
) -> (f64, f64, f64) {
    let p_star = optim::bisect_last_true(|p| gen.binary(p, q) <= df, q, 1.0);
    if df == 0.0 {
        // The infimum is the limit u -> v = f'(1), which is the two-point maximum itself.
        let at = gen.f_prime(1.0);
        return (at, at, p_star);
    }
    let warm = (
        gen.f_prime(p_star / q),
        gen.f_prime((1.0 - p_star) / (1.0 - q)),
    );
    let (mut v, mut log_d) = if warm.0.is_finite() && warm.1.is_finite() && warm.0 > warm.1 {
        (warm.1, (warm.0 - warm.1).ln())
    } else {
        cold_start(objective)
    };
    let mut value = objective(v + log_d.exp(), v);
    if !value.is_finite() {
        let (cv, cd) = cold_start(objective);
        v = cv;
        log_d = cd;
        value = objective(v + log_d.exp(), v);
    }
    let mut width_v = 1.0f64.max(v.abs());
    let mut width_d = 2.0;
    for _ in 0..POLISH_ROUNDS {
        let before = value;
        let d = log_d.exp();
        let mv = optim::minimize_scan(|x| objective(x + d, x), v - width_v, v + width_v, POLISH_POINTS);
        if mv.value < value {
            v = mv.x;
            value = mv.value;
        }
        let md = optim::minimize_scan(
            |s| objective(v + s.exp(), v),
            log_d - width_d,
            log_d + width_d,
            POLISH_POINTS,
        );
        if md.value < value {
            log_d = md.x;
            value = md.value;
        }
        let change = (before - value).abs() / value.abs().max(f64::MIN_POSITIVE);
        if change < POLISH_TOL {
            width_v *= 0.25;
            width_d *= 0.25;
            if width_d < 1e-9 {
                break;
            }
        }
    }
    // Any (u, v) upper-bounds the two-point maximum, so a value under it is rounding.
    (v + log_d.exp(), v, value.max(p_star))
}

/// Coarse grid over `v in [-50, 50]`, `ln d in [-30, 30]` for generators without a
/// usable derivative at the dual point.
fn cold_start(objective: &impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..=40 {
        let v = -50.0 + 2.5 * i as f64;
        for j in 0..=40 {
            let s = -30.0 + 1.5 * j as f64;
            let val = objective(v + s.exp(), v);
            if val < best.2 {
                best = (v, s, val);
            }
        }
    }
    (best.0, best.1)
}

/// `gamma q + D_f / (f'(gamma) - f'(1))`, or with the Lipschitz-sharpened `gamma_0`.
pub fn bound_f_via_egamma(
    q: f64,
    df: f64,
    gen: &Generator,
    gamma: f64,
    lipschitz: Option<f64>,
) -> Result<BoundResult> {
    gen.validate()?;
    let q = check_q(q)?;
    let df = check_div(df, "f-divergence")?;
    ensure(gamma > 1.0 && gamma.is_finite(), || {
        Error::Range(format!("gamma must exceed 1, got {gamma}"))
    })?;
    let name = if lipschitz.is_some() { "f_via_egamma_lipschitz" } else { "f_via_egamma" };
    let f1 = gen.f_prime(1.0);
    let at = match lipschitz {
        None => gamma,
        Some(l) => {
            ensure(l > 0.0 && l.is_finite(), || {
                Error::Range(format!("Lipschitz constant must be positive, got {l}"))
            })?;
            let tilde = (gen.f(gamma) - f1 * (gamma - 1.0)).max(0.0);
            gamma + (2.0 * tilde / l).sqrt()
        }
    };
    let denom = gen.f_prime(at) - f1;
    let ok = denom > 0.0 && denom.is_finite();
    let raw = if !ok {
        f64::INFINITY
    } else if df == 0.0 {
        gamma * q
    } else {
        gamma * q + df / denom
    };
    let mut result = BoundResult::new(name, raw)
        .param("gamma", gamma)
        .param("denominator", denom)
        .precondition("derivative_gap_positive", ok);
    if let Some(l) = lipschitz {
        result = result.param("gamma_0", at).param("lipschitz", l);
    }
    Ok(result)
}

/// A valid Lipschitz constant for `f'` on `[gamma, inf)`, i.e. `sup f''` there,
/// when one exists for the kind.
pub fn lipschitz_on_tail(kind: DivergenceKind, gamma: f64) -> Option<f64> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return None;
    }
    match kind {
        DivergenceKind::Chi2 => Some(2.0),
        DivergenceKind::Kl => Some(1.0 / gamma),
        DivergenceKind::SquaredHellinger => Some(0.5 * gamma.powf(-1.5)),
        DivergenceKind::PowerBeta { beta } if beta <= 2.0 => Some(beta * gamma.powf(beta - 2.0)),
        DivergenceKind::ReverseKl => Some(1.0 / (gamma * gamma)),
        DivergenceKind::ReverseChi2 => Some(2.0 / gamma.powi(3)),
        DivergenceKind::VinczeLeCam => Some(8.0 / (1.0 + gamma).powi(3)),
        _ => None,
    }
}
