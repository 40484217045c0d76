use serde::{Deserialize, Serialize};

use crate::dist::JointFinite;
use crate::error::{ensure, Error, Result};

use super::{f_divergence, log_sum_exp, DivergenceKind};

/// Order of a fiber constant: `M_alpha(w)` for finite `alpha`, `M(w)` at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberOrder {
    Alpha(f64),
    Infinity,
}

fn check_alpha(alpha: f64) -> Result<()> {
    ensure(alpha > 1.0, || {
        Error::Range(format!("Sibson order must exceed 1, got {alpha}"))
    })
}

fn positive_marginal(joint: &JointFinite) -> Result<()> {
    match joint.marginal_s().iter().position(|&p| p <= 0.0) {
        Some(s) => Err(Error::DegenerateMarginal(format!(
            "P_S({s}) = 0; Sibson information needs a strictly positive input marginal"
        ))),
        None => Ok(()),
    }
}

/// `I_alpha(S, W)` in nats via the closed-form minimizer over `Q_W`:
/// `alpha/(alpha-1) * ln sum_w (sum_s P_S(s) P(w|s)^alpha)^(1/alpha)`.
/// An infinite order returns the maximal leakage.
pub fn sibson_mi(joint: &JointFinite, alpha: f64) -> Result<f64> {
    if alpha == f64::INFINITY {
        positive_marginal(joint)?;
        return maximal_leakage(joint);
    }
    check_alpha(alpha)?;
    positive_marginal(joint)?;
    let ps = joint.marginal_s();
    let per_w: Vec<f64> = (0..joint.n_w())
        .map(|w| {
            let terms: Vec<f64> = (0..joint.n_s())
                .filter(|&s| joint.mass(s, w) > 0.0)
                .map(|s| ps[s].ln() + alpha * (joint.mass(s, w) / ps[s]).ln())
                .collect();
            log_sum_exp(&terms) / alpha
        })
        .collect();
    let value = alpha / (alpha - 1.0) * log_sum_exp(&per_w);
    Ok(value.max(0.0))
}

/// `L(S -> W) = ln sum_w max_{s : P_S(s) > 0} P(w|s)`.
pub fn maximal_leakage(joint: &JointFinite) -> Result<f64> {
    let ps = joint.marginal_s();
    let total: f64 = (0..joint.n_w())
        .map(|w| {
            (0..joint.n_s())
                .filter(|&s| ps[s] > 0.0)
                .map(|s| joint.mass(s, w) / ps[s])
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(total.ln().max(0.0))
}

/// `I(S; W) = KL(P_SW || P_S P_W)`.
pub fn mutual_information(joint: &JointFinite) -> f64 {
    f_divergence(&joint.product_pair(), DivergenceKind::Kl)
        .map(|v| v.value)
        .unwrap_or(f64::NAN)
}

/// `M(w)` or `M_alpha(w)` for a single `w`; errors when `P_W(w) = 0`.
pub fn fiber_constant(joint: &JointFinite, w: usize, order: FiberOrder) -> Result<f64> {
    ensure(w < joint.n_w(), || {
        Error::Shape(format!("w = {w} outside an output alphabet of size {}", joint.n_w()))
    })?;
    let pw = joint.marginal_w()[w];
    ensure(pw > 0.0, || {
        Error::DegenerateMarginal(format!("P_W({w}) = 0, fiber constant undefined"))
    })?;
    let ps = joint.marginal_s();
    let ratios = (0..joint.n_s())
        .filter(|&s| ps[s] > 0.0)
        .map(|s| (ps[s], joint.mass(s, w) / (ps[s] * pw)));
    match order {
        FiberOrder::Infinity => Ok(ratios.map(|(_, r)| r).fold(0.0, f64::max)),
        FiberOrder::Alpha(alpha) => {
            check_alpha(alpha)?;
            let logs: Vec<f64> = ratios
                .filter(|&(_, r)| r > 0.0)
                .map(|(p, r)| p.ln() + alpha * r.ln())
                .collect();
            Ok((log_sum_exp(&logs) / alpha).exp())
        }
    }
}

/// Fiber constants for every `w`; `None` where `P_W(w) = 0`.
pub fn fiber_constants(joint: &JointFinite, order: FiberOrder) -> Result<Vec<Option<f64>>> {
    if let FiberOrder::Alpha(alpha) = order {
        check_alpha(alpha)?;
    }
    (0..joint.n_w())
        .map(|w| {
            if joint.marginal_w()[w] > 0.0 {
                fiber_constant(joint, w, order).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}
