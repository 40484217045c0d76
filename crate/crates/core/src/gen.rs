//! Generalization-error tail bounds, PAC-Bayes, CMI, differential privacy and the
//! average bound through mutual information.
//!
//! Tail bounds feed the Hoeffding surrogate `theta = 2 exp(-n eta^2 / (2 sigma^2))` for
//! `P_S P_W(|gen| >= eta)` into the change-of-measure bounds. `theta` can exceed 1; it is
//! clipped to 1 before use, which keeps every branch valid because each branch is
//! nondecreasing in `Q(E)` wherever it is below 1.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::bounds::{self, BoundResult, PowerMode};
use crate::divergences::OrliczSpec;
use crate::error::{ensure, Error, Result};
use crate::optim;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubGaussianSetting {
    pub sigma: f64,
    pub n: usize,
}

impl SubGaussianSetting {
    pub fn new(sigma: f64, n: usize) -> Result<Self> {
        ensure(sigma > 0.0 && sigma.is_finite(), || {
            Error::Validation(format!("sigma must be positive, got {sigma}"))
        })?;
        ensure(n >= 1, || Error::Validation("n must be at least 1".into()))?;
        Ok(Self { sigma, n })
    }

    /// `theta(eta) = 2 exp(-n eta^2 / (2 sigma^2))`.
    pub fn theta(&self, eta: f64) -> f64 {
        2.0 * (-(self.n as f64) * eta * eta / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Loss bounded in `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedLossSetting {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl BoundedLossSetting {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        ensure(a.is_finite() && b.is_finite() && a < b, || {
            Error::Validation(format!("need a < b, got [{a}, {b}]"))
        })?;
        ensure(n >= 1, || Error::Validation("n must be at least 1".into()))?;
        Ok(Self { a, b, n })
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// A loss in `[a, b]` is `(b - a)/2`-sub-Gaussian.
    pub fn sub_gaussian(&self) -> SubGaussianSetting {
        SubGaussianSetting {
            sigma: self.width() / 2.0,
            n: self.n,
        }
    }

    /// Tail surrogate for the super-sample gap: `2 exp(-n eta^2 / (2 (b - a)^2))`.
    pub fn cmi_theta(&self, eta: f64) -> f64 {
        2.0 * (-(self.n as f64) * eta * eta / (2.0 * self.width().powi(2))).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpParams {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
}

fn one() -> f64 {
    1.0
}

impl DpParams {
    /// `c1 = c2 = 1`; the constants are only known to exist.
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        Self::with_constants(epsilon, delta, 1.0, 1.0)
    }

    pub fn with_constants(epsilon: f64, delta: f64, c1: f64, c2: f64) -> Result<Self> {
        let p = Self { epsilon, delta, c1, c2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.epsilon > 0.0 && self.epsilon <= 0.5, || {
            Error::Range(format!("epsilon must lie in (0, 1/2], got {}", self.epsilon))
        })?;
        ensure(self.delta > 0.0 && self.delta < self.epsilon, || {
            Error::Range(format!("delta must lie in (0, epsilon), got {}", self.delta))
        })?;
        ensure(self.c1 > 0.0 && self.c2 > 0.0, || {
            Error::Range("c1 and c2 must be positive".into())
        })
    }
}

/// Divergences between `P_SW` and `P_S P_W` available to the tail bound; absent ones
/// skip their branch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergencePanel {
    /// `(gamma, E_gamma)`.
    #[serde(default)]
    pub egamma: Option<(f64, f64)>,
    #[serde(default)]
    pub chi2: Option<f64>,
    #[serde(default)]
    pub h2: Option<f64>,
    /// `(beta, H_beta)`.
    #[serde(default)]
    pub power: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub eta: f64,
    pub theta: f64,
    pub branches: Vec<BoundResult>,
    pub min: f64,
    pub vacuous: bool,
}

fn check_eta(eta: f64) -> Result<()> {
    ensure(eta > 0.0 && eta.is_finite(), || {
        Error::Range(format!("eta must be positive, got {eta}"))
    })
}

fn rename(mut b: BoundResult, name: &str) -> BoundResult {
    b.name = name.to_string();
    b
}

/// Every branch of the `f`-divergence tail bound at `theta(eta)`, and their minimum.
pub fn gen_tail_bounds(setting: &SubGaussianSetting, eta: f64, panel: &DivergencePanel) -> Result<TailReport> {
    check_eta(eta)?;
    let theta = setting.theta(eta);
    let q = theta.min(1.0);
    let mut branches = Vec::new();
    if let Some((gamma, e)) = panel.egamma {
        ensure(gamma >= 0.0, || Error::Range(format!("gamma must be nonnegative, got {gamma}")))?;
        branches.push(rename(bounds::bound_egamma(q, e, gamma)?, "gen_egamma"));
    }
    if let Some(c) = panel.chi2 {
        branches.push(rename(bounds::bound_chi2(q, c)?, "gen_chi2"));
    }
    if let Some(h) = panel.h2 {
        branches.push(rename(bounds::bound_hellinger(q, h)?, "gen_hellinger"));
    }
    if let Some((beta, h)) = panel.power {
        branches.push(rename(bounds::bound_power_beta(q, h, beta, PowerMode::RelaxedU0)?, "gen_power_u0"));
    }
    ensure(!branches.is_empty(), || {
        Error::Validation("the divergence panel is empty".into())
    })?;
    let min = branches.iter().map(|b| b.raw).fold(f64::INFINITY, f64::min);
    Ok(TailReport {
        eta,
        theta,
        branches,
        min,
        vacuous: min >= 1.0,
    })
}

/// `2 exp(L - n eta^2 / (2 sigma^2)) = theta e^L`.
pub fn gen_tail_ml(setting: &SubGaussianSetting, eta: f64, leakage: f64) -> Result<BoundResult> {
    check_eta(eta)?;
    let l = bounds::check_div(leakage, "maximal leakage")?;
    let log = 2f64.ln() + l - setting.n as f64 * eta * eta / (2.0 * setting.sigma.powi(2));
    Ok(BoundResult::new("gen_ml", log.exp()).param("theta", setting.theta(eta)))
}

/// `theta + sqrt(theta (e^L - 1))`, using `chi2 <= e^L - 1`.
pub fn gen_tail_ml_chi2(setting: &SubGaussianSetting, eta: f64, leakage: f64) -> Result<BoundResult> {
    check_eta(eta)?;
    let l = bounds::check_div(leakage, "maximal leakage")?;
    let q = setting.theta(eta).min(1.0);
    Ok(BoundResult::new("gen_ml_chi2", q + (q * l.exp_m1()).sqrt()).param("theta", setting.theta(eta)))
}

/// `theta^((alpha-1)/alpha) exp((alpha-1)/alpha * I_alpha)`, with `theta` standing in for
/// `ess sup_w P_S(E_w)`.
pub fn gen_tail_alpha_mi(setting: &SubGaussianSetting, eta: f64, i_alpha: f64, alpha: f64) -> Result<BoundResult> {
    check_eta(eta)?;
    let i = bounds::check_div(i_alpha, "alpha mutual information")?;
    ensure(alpha > 1.0, || Error::Range(format!("alpha must exceed 1, got {alpha}")))?;
    let theta = setting.theta(eta);
    let k = (alpha - 1.0) / alpha;
    let log = k * (theta.min(1.0).ln() + i);
    Ok(BoundResult::new("gen_alpha_mi", log.exp()).param("theta", theta).param("alpha", alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacBayesVariant {
    /// Through the two-point power constraint.
    TwoPoint,
    /// Through Hölder's inequality directly; smaller by `ln sqrt(pi beta/(beta-1))`.
    Holder,
}

/// High-probability bound on `E_{P_W|S}[gen]` in terms of `H_beta(P_SW || P_S P_W)`.
pub fn pac_bayes_bound(
    setting: &SubGaussianSetting,
    delta: f64,
    h_beta: f64,
    beta: f64,
    variant: PacBayesVariant,
) -> Result<f64> {
    ensure(delta > 0.0 && delta <= 1.0, || {
        Error::Range(format!("delta must lie in (0, 1], got {delta}"))
    })?;
    crate::divergences::DivergenceKind::PowerBeta { beta }.validate()?;
    let h = bounds::check_div(h_beta, "power divergence")?;
    let scale = (2.0 * setting.sigma.powi(2) / setting.n as f64).sqrt();
    let constant = match variant {
        PacBayesVariant::TwoPoint => {
            0.5 * (std::f64::consts::PI * beta / (beta - 1.0)).ln() + beta / (4.0 * (beta - 1.0))
        }
        PacBayesVariant::Holder => 0.25 + 0.25 / (beta - 1.0),
    };
    let info = ((beta - 1.0) * h).ln_1p() / beta - delta.ln();
    Ok(scale * (constant + info))
}

/// `E_gamma + 2 gamma exp(-n eta^2 / (2 (b-a)^2))` for the super-sample gap.
pub fn cmi_tail(setting: &BoundedLossSetting, eta: f64, gamma: f64, egamma: f64) -> Result<BoundResult> {
    check_eta(eta)?;
    ensure(gamma.is_finite(), || Error::Range(format!("gamma must be finite, got {gamma}")))?;
    let e = bounds::check_div(egamma, "E_gamma")?;
    let theta = setting.cmi_theta(eta);
    Ok(BoundResult::new("cmi_egamma", e + gamma * theta)
        .param("gamma", gamma)
        .param("theta", theta))
}

/// Orlicz form of the super-sample tail:
/// `gamma theta + ||[dP/dQ - gamma]_+||^A_{psi*} / psi^{-1}(1/theta)`.
pub fn cmi_tail_orlicz(
    setting: &BoundedLossSetting,
    eta: f64,
    gamma: f64,
    amemiya: f64,
    spec: &OrliczSpec,
) -> Result<BoundResult> {
    check_eta(eta)?;
    let theta = setting.cmi_theta(eta);
    let mut b = rename(bounds::bound_orlicz_with_norm(theta.min(1.0), gamma, amemiya, spec)?, "cmi_orlicz");
    b.free_params.insert("theta".into(), theta);
    Ok(b)
}

/// Smallest `eta` with `E_gamma + 2 gamma exp(-n eta^2/(2(b-a)^2)) <= delta`; infinite when
/// `delta <= E_gamma`.
pub fn cmi_epsilon(setting: &BoundedLossSetting, gamma: f64, egamma: f64, delta: f64) -> f64 {
    let room = delta - egamma;
    if room <= 0.0 {
        return f64::INFINITY;
    }
    let ratio = 2.0 * gamma / room;
    if ratio <= 1.0 {
        return 0.0;
    }
    setting.width() * (2.0 * ratio.ln() / setting.n as f64).sqrt()
}

/// `eps(delta/2) + sqrt((b-a)^2/(2n) ln(4/delta))`: a bound on `|gen|` holding with
/// probability `1 - delta` from a super-sample tail `eps`.
pub fn cmi_convert(setting: &BoundedLossSetting, delta: f64, eps: impl Fn(f64) -> f64) -> f64 {
    eps(delta / 2.0) + (setting.width().powi(2) / (2.0 * setting.n as f64) * (4.0 / delta).ln()).sqrt()
}

/// `(k, tau)` with `E_{e^k}(P_SW || P_S P_W) <= tau` for an `(epsilon, delta)`-DP algorithm
/// on `n` i.i.d. samples.
pub fn dp_egamma_cap(dp: &DpParams, n: usize) -> Result<(f64, f64)> {
    dp.validate()?;
    let n = n as f64;
    let root = (dp.delta / dp.epsilon).sqrt();
    let tau = (-dp.epsilon.powi(2) * n).exp() + dp.c1 * n * root;
    let k = dp.c2 * (dp.epsilon.powi(2) * n + n * root);
    Ok((k, tau))
}

/// `2 exp(k - n eta^2/(2 sigma^2)) + tau`.
pub fn dp_gen_bound(setting: &SubGaussianSetting, eta: f64, dp: &DpParams) -> Result<BoundResult> {
    ensure(eta > 0.0 && eta < 1.0, || Error::Range(format!("eta must lie in (0, 1), got {eta}")))?;
    let (k, tau) = dp_egamma_cap(dp, setting.n)?;
    let log = 2f64.ln() + k - setting.n as f64 * eta * eta / (2.0 * setting.sigma.powi(2));
    Ok(BoundResult::new("gen_dp", log.exp() + tau)
        .param("k", k)
        .param("tau", tau)
        .param("c1", dp.c1)
        .param("c2", dp.c2)
        .note("c1 and c2 are only shown to exist; the values used here are caller choices")
        .note("assumes the dataset is drawn i.i.d. from a product distribution"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvgVariant {
    /// `(2 sigma/sqrt n)(2 sqrt(I + 2/e) + sqrt(pi))`.
    Closed,
    /// Same proof keeping the Gaussian tail from `eps_0` onwards.
    Tstar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    /// `2 sigma / sqrt(n)`, as the proof derives.
    AsProved,
    /// `2 sigma^2 / n`, the alternative printed form.
    AsStated,
}

/// Lower end of the bracket where `t^2 (1 - 2 e^{-t^2})` is increasing and already below
/// `2/e`, the smallest right-hand side.
const TSTAR_LO: f64 = 1.1;

/// Root of `t^2 (1 - 2 e^{-t^2}) = mi + 2/e`.
pub fn tstar(mi: f64) -> f64 {
    let c = mi + 2.0 / std::f64::consts::E;
    let g = |t: f64| t * t * (1.0 - 2.0 * (-t * t).exp()) - c;
    let hi = 20f64.max(2.0 * c.sqrt());
    optim::bisect_increasing(g, TSTAR_LO, hi)
}

/// Bound on `E|gen(S, W)|` from `I(S; W)`.
pub fn avg_gen_bound_mi(setting: &SubGaussianSetting, mi: f64, variant: AvgVariant, prefactor: Prefactor) -> Result<f64> {
    let mi = bounds::check_div(mi, "mutual information")?;
    let scale = match prefactor {
        Prefactor::AsProved => 2.0 * setting.sigma / (setting.n as f64).sqrt(),
        Prefactor::AsStated => 2.0 * setting.sigma.powi(2) / setting.n as f64,
    };
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let inner = match variant {
        AvgVariant::Closed => 2.0 * (mi + 2.0 / std::f64::consts::E).sqrt() + sqrt_pi,
        AvgVariant::Tstar => {
            let t = tstar(mi);
            2.0 * t * (1.0 - (-t * t).exp()) + sqrt_pi * erfc(t)
        }
    };
    Ok(scale * inner)
}

/// The earlier bound `(2 sigma/sqrt n) sqrt(6 (I + 4))`.
pub fn avg_gen_bound_mi_competitor(setting: &SubGaussianSetting, mi: f64) -> f64 {
    2.0 * setting.sigma / (setting.n as f64).sqrt() * (6.0 * (mi + 4.0)).sqrt()
}

/// `2 (sqrt(8 - 4/e) - sqrt(pi))`: the smallest gap, in units of `sigma/sqrt n`.
pub fn mi_gap_constant() -> f64 {
    2.0 * ((8.0 - 4.0 / std::f64::consts::E).sqrt() - std::f64::consts::PI.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureKRow {
    pub mi: f64,
    pub ours: f64,
    pub competitor: f64,
    pub gap: f64,
}

/// Our average bound against the earlier one over a grid of `I(S; W)` values.
pub fn figure_k_rows(setting: &SubGaussianSetting, grid: &[f64]) -> Result<Vec<FigureKRow>> {
    grid.iter()
        .map(|&mi| {
            let ours = avg_gen_bound_mi(setting, mi, AvgVariant::Closed, Prefactor::AsProved)?;
            let competitor = avg_gen_bound_mi_competitor(setting, mi);
            Ok(FigureKRow {
                mi,
                ours,
                competitor,
                gap: competitor - ours,
            })
        })
        .collect()
}
