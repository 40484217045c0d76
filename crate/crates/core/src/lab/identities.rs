use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_vincze_lecam, competitor_vc_at, invert_binary_kl};
use crate::dist::{enumerate_events, make_distribution, AbsContPair};
use crate::divergences::{
    binary_f_divergence, binary_kl, egamma, f_divergence, hellinger_to_renyi, renyi, renyi_to_hellinger,
    total_variation, DivergenceKind,
};
use crate::error::{ensure, Error, Result};
use crate::optim;

use super::{merge_all, random_pair, trial_rng, VerificationReport, Witness, EXHAUSTIVE_SUPPORT};

/// Tolerance on the exact identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Tolerance on identities that go through a numerical minimization.
pub const OPTIMIZED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgammaVariationalReport {
    pub gamma: f64,
    /// `sup_E (P(E) - gamma Q(E))` over every event.
    pub signed_sup: f64,
    /// `sum_i [P_i - gamma Q_i]_+`.
    pub integral: f64,
    /// `sup_E |P(E) - gamma Q(E)|`.
    pub abs_sup: f64,
    /// `{dP/dQ > gamma}` and its value of `P(E) - gamma Q(E)`.
    pub witness_event: u64,
    pub witness_value: f64,
    pub residual: f64,
    pub holds: bool,
}

fn check_exhaustive(pair: &AbsContPair) -> Result<()> {
    ensure(pair.len() <= EXHAUSTIVE_SUPPORT, || {
        Error::Resource(format!(
            "exhaustive enumeration is capped at {EXHAUSTIVE_SUPPORT} atoms, got {}",
            pair.len()
        ))
    })
}

/// Checks `sup_E (P(E) - gamma Q(E)) = sum_i [P_i - gamma Q_i]_+` by enumeration.
pub fn verify_egamma_variational(pair: &AbsContPair, gamma: f64) -> Result<EgammaVariationalReport> {
    check_exhaustive(pair)?;
    let mut signed_sup = f64::NEG_INFINITY;
    let mut abs_sup: f64 = 0.0;
    for e in enumerate_events(pair.len())? {
        let d = pair.p_of(&e) - gamma * pair.q_of(&e);
        signed_sup = signed_sup.max(d);
        abs_sup = abs_sup.max(d.abs());
    }
    let integral = egamma(pair, gamma);
    // P-only atoms cannot occur, so the witness only needs the Q support.
    let star = pair.ratio_exceeds(gamma);
    let residual = (signed_sup - integral).abs();
    Ok(EgammaVariationalReport {
        gamma,
        signed_sup,
        integral,
        abs_sup,
        witness_event: star.bits(),
        witness_value: pair.p_of(&star) - gamma * pair.q_of(&star),
        residual,
        holds: residual <= IDENTITY_TOL,
    })
}

/// `P = p R1 + (1-p) R0`, `Q = q R1 + (1-q) R0` with `R1` on the first `atoms_per_block`
/// atoms and `R0` on the next ones, both proportional to `1, 2, ...`. The indicator of the
/// first block loses nothing, so every f-divergence equals its two-point value.
pub fn binary_tightness_witness(kind: DivergenceKind, p: f64, q: f64, atoms_per_block: usize) -> Result<AbsContPair> {
    kind.validate()?;
    ensure(atoms_per_block >= 1, || Error::Validation("atoms_per_block must be at least 1".into()))?;
    let block: Vec<f64> = (1..=atoms_per_block).map(|i| i as f64).collect();
    binary_tightness_witness_with(p, q, &block, &block)
}

/// The mixture witness with caller-chosen block shapes (normalized here).
pub fn binary_tightness_witness_with(p: f64, q: f64, r1: &[f64], r0: &[f64]) -> Result<AbsContPair> {
    ensure(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0, || {
        Error::Range(format!("p and q must lie in (0, 1), got p = {p}, q = {q}"))
    })?;
    let r1 = make_distribution(r1)?;
    let r0 = make_distribution(r0)?;
    let mix = |a: f64| -> Vec<f64> {
        r1.probs()
            .iter()
            .map(|r| a * r)
            .chain(r0.probs().iter().map(|r| (1.0 - a) * r))
            .collect()
    };
    AbsContPair::from_probs(mix(p), mix(q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub gamma: f64,
    pub tau: f64,
    pub egamma: f64,
    /// `sup_{E : P(E) > tau} (P(E) - tau) / Q(E)`, or `-inf` when no event qualifies.
    #[serde(with = "crate::serde_float")]
    pub sup_ratio: f64,
    pub egamma_below_tau: bool,
    pub ratio_below_gamma: bool,
}

impl ThresholdCheck {
    pub fn equivalent(&self) -> bool {
        self.egamma_below_tau == self.ratio_below_gamma
    }
}

/// Both sides of `E_gamma(P||Q) <= tau  <=>  sup_{P(E) > tau} (P(E) - tau)/Q(E) <= gamma`.
pub fn threshold_check(pair: &AbsContPair, gamma: f64, tau: f64) -> Result<ThresholdCheck> {
    check_exhaustive(pair)?;
    ensure(gamma >= 0.0 && tau >= 0.0, || {
        Error::Range(format!("gamma and tau must be nonnegative, got {gamma}, {tau}"))
    })?;
    let sup_ratio = enumerate_events(pair.len())?
        .map(|e| (pair.p_of(&e), pair.q_of(&e)))
        .filter(|&(p, _)| p > tau)
        .map(|(p, q)| (p - tau) / q)
        .fold(f64::NEG_INFINITY, f64::max);
    let e = egamma(pair, gamma);
    Ok(ThresholdCheck {
        gamma,
        tau,
        egamma: e,
        sup_ratio,
        egamma_below_tau: e <= tau,
        ratio_below_gamma: sup_ratio <= gamma,
    })
}

fn scaled(x: f64) -> f64 {
    x.abs().max(1.0)
}

/// Identity checks on `trials` random pairs; slack is the negated residual.
pub(crate) fn identity_suite(seed: u64, trials: u64) -> Result<Vec<VerificationReport>> {
    let gammas = [0.5, 1.0, 2.0, 5.0];
    let kinds = DivergenceKind::f_kinds();
    let betas = [1.5, 2.0, 4.0];
    let mut names: Vec<String> = gammas.iter().map(|g| format!("egamma-variational:gamma={g}")).collect();
    names.extend(kinds.iter().map(|k| format!("tightness-witness:{k}")));
    names.extend([1.0, 2.0, 5.0].iter().map(|g| format!("egamma-threshold:gamma={g}")));
    names.extend(betas.iter().map(|b| format!("renyi-power:beta={b}")));
    names.extend(["d2-chi2", "e1-tv", "vc-min", "kl-inverse"].map(String::from));

    let per_trial: Vec<Vec<VerificationReport>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let pair = random_pair(&mut rng, 8)?;
            let mut out: Vec<VerificationReport> =
                names.iter().map(|n| VerificationReport::new(n.clone(), seed)).collect();
            out.iter_mut().for_each(|r| r.trials = 1);
            let witness = |bound: f64| {
                let pair = &pair;
                move || Witness::Event {
                    trial,
                    event: 0,
                    p: pair.p().probs().to_vec(),
                    q: pair.q().probs().to_vec(),
                    p_event: 0.0,
                    q_event: 0.0,
                    bound,
                }
            };
            let mut slot = out.iter_mut();

            for &g in &gammas {
                let r = verify_egamma_variational(&pair, g)?;
                slot.next().unwrap().record_with_tolerance(-r.residual, IDENTITY_TOL, witness(r.integral));
            }
            let (p, q) = (rng.gen_range(0.02..0.98), rng.gen_range(0.02..0.98));
            let r1: Vec<f64> = (0..2).map(|_| rng.gen_range(0.1..1.0)).collect();
            let r0: Vec<f64> = (0..2).map(|_| rng.gen_range(0.1..1.0)).collect();
            let w = binary_tightness_witness_with(p, q, &r1, &r0)?;
            for k in &kinds {
                let full = f_divergence(&w, *k)?.value;
                let two = binary_f_divergence(p, q, *k)?;
                slot.next()
                    .unwrap()
                    .record_with_tolerance(-(full - two).abs() / scaled(two), IDENTITY_TOL, witness(two));
            }
            for &g in &[1.0, 2.0, 5.0] {
                let e = egamma(&pair, g);
                let report = slot.next().unwrap();
                for delta in [-0.05, -1e-6, 1e-6, 0.05] {
                    let tau = e + delta;
                    if tau < 0.0 {
                        continue;
                    }
                    let c = threshold_check(&pair, g, tau)?;
                    report.record(if c.equivalent() { 0.0 } else { -1.0 }, witness(tau));
                }
            }
            for &b in &betas {
                let d = renyi(&pair, b)?;
                let h = f_divergence(&pair, DivergenceKind::PowerBeta { beta: b })?.value;
                let forward = (hellinger_to_renyi(h, b)? - d).abs() / scaled(d);
                let back = (renyi_to_hellinger(hellinger_to_renyi(h, b)?, b)? - h).abs() / scaled(h);
                slot.next()
                    .unwrap()
                    .record_with_tolerance(-forward.max(back), IDENTITY_TOL, witness(d));
            }
            let chi2 = f_divergence(&pair, DivergenceKind::Chi2)?.value;
            let d2 = renyi(&pair, 2.0)?;
            slot.next()
                .unwrap()
                .record_with_tolerance(-(d2 - chi2.ln_1p()).abs() / scaled(d2), IDENTITY_TOL, witness(d2));
            let tv = total_variation(&pair);
            slot.next()
                .unwrap()
                .record_with_tolerance(-(egamma(&pair, 1.0) - tv).abs(), IDENTITY_TOL, witness(tv));
            let vc = f_divergence(&pair, DivergenceKind::VinczeLeCam)?.value.min(2.0);
            let report = slot.next().unwrap();
            for e in enumerate_events(8)? {
                let q = pair.q_of(&e);
                if q <= 0.0 || q >= 1.0 {
                    continue;
                }
                let closed = bound_vincze_lecam(q, vc)?.raw;
                let numeric = optim::minimize_positive(|c| competitor_vc_at(q, vc, c)).value;
                let numeric = if vc == 0.0 { numeric.min(q) } else { numeric };
                report.record_with_tolerance(-(closed - numeric).abs(), OPTIMIZED_TOL, witness(closed));
            }
            let report = slot.next().unwrap();
            for _ in 0..8 {
                let q: f64 = rng.gen_range(0.01..0.99);
                let d = rng.gen_range(0.0..=binary_kl(q, 0.999));
                let p = invert_binary_kl(q, d)?;
                report.record_with_tolerance(-(binary_kl(q, p) - d).abs(), IDENTITY_TOL, witness(p));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(merge_all(names.into_iter(), seed, per_trial))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> AbsContPair {
        AbsContPair::from_probs(vec![0.4, 0.1, 0.3, 0.2, 0.0], vec![0.1, 0.2, 0.2, 0.3, 0.2]).unwrap()
    }

    #[test]
    fn variational_endpoints() {
        let p = pair();
        let one = verify_egamma_variational(&p, 1.0).unwrap();
        assert!(one.holds);
        assert!((one.signed_sup - total_variation(&p)).abs() < 1e-15);
        let zero = verify_egamma_variational(&p, 0.0).unwrap();
        assert!((zero.signed_sup - 1.0).abs() < 1e-15 && (zero.integral - 1.0).abs() < 1e-15);
        for g in [0.5, 2.0, 5.0] {
            let r = verify_egamma_variational(&p, g).unwrap();
            assert!(r.holds);
            assert!((r.witness_value - r.integral).abs() < 1e-15);
            assert!(r.abs_sup >= r.signed_sup);
        }
    }

    #[test]
    fn witness_matches_two_point_value() {
        for kind in DivergenceKind::f_kinds() {
            let w = binary_tightness_witness(kind, 0.3, 0.6, 2).unwrap();
            let full = f_divergence(&w, kind).unwrap().value;
            let two = binary_f_divergence(0.3, 0.6, kind).unwrap();
            assert!((full - two).abs() < 1e-12, "{kind}");
            assert!(w.support().take(2).all(|(r, _)| (r - 0.5).abs() < 1e-15));
            let same = binary_tightness_witness(kind, 0.4, 0.4, 3).unwrap();
            // Zero except for E_gamma with gamma < 1, where f(1) != 0.
            assert!((f_divergence(&same, kind).unwrap().value - kind.f(1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn threshold_sides_agree() {
        let p = pair();
        for g in [1.0, 2.0] {
            let e = egamma(&p, g);
            for tau in [e - 0.01, e + 0.01, 0.0, 1.0] {
                if tau >= 0.0 {
                    assert!(threshold_check(&p, g, tau).unwrap().equivalent());
                }
            }
        }
    }

    #[test]
    fn identity_suite_is_clean() {
        let reports = identity_suite(11, 20).unwrap();
        for r in &reports {
            assert_eq!(r.violations, 0, "{r:?}");
        }
    }
}
