//! Exact oracles for the bounds: exhaustive event checks, identities, dominance,
//! and learning experiments small enough to enumerate.

mod dominance;
mod gibbs;
mod identities;
mod random;
mod registry;
mod supersample;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{AbsContPair, EventMask};
use crate::error::{ensure, Error, Result};

pub use dominance::{dominance_report, summarize_dominance, Claim, DominanceRow, DominanceSummary, Verdict};
pub use gibbs::{check_gibbs, gibbs_suite_configs, GibbsExperiment, GibbsOutcome, InformationPanel, run_gibbs_experiment};
pub use identities::{
    binary_tightness_witness, binary_tightness_witness_with, threshold_check, verify_egamma_variational,
    EgammaVariationalReport, ThresholdCheck,
};
pub use random::{random_gibbs, random_pair, trial_rng, ZERO_PLANT_RATE};
pub use registry::BoundSpec;
pub use supersample::{
    check_supersample, run_supersample_experiment, supersample_suite_configs, SuperSampleExperiment,
    SuperSampleOutcome,
};

/// A bound fails when it sits this far below the true probability.
pub const SLACK_TOL: f64 = 1e-9;

/// Largest support checked on every event.
pub const EXHAUSTIVE_SUPPORT: usize = 16;

/// Events drawn per pair above [`EXHAUSTIVE_SUPPORT`].
pub const SAMPLED_EVENTS: usize = 100_000;

/// Where the worst slack of a report was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    Event {
        trial: u64,
        event: u64,
        p: Vec<f64>,
        q: Vec<f64>,
        p_event: f64,
        q_event: f64,
        #[serde(with = "crate::serde_float")]
        bound: f64,
    },
    Eta {
        config: u64,
        eta: f64,
        exact: f64,
        #[serde(with = "crate::serde_float")]
        bound: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub bound: String,
    pub trials: u64,
    pub checks: u64,
    /// Checks where a precondition of the bound failed; they do not count as violations.
    pub skipped: u64,
    pub violations: u64,
    /// `min (bound - truth)` over every applicable check.
    #[serde(with = "crate::serde_float")]
    pub worst_slack: f64,
    pub seed: u64,
    pub witness: Option<Witness>,
}

impl VerificationReport {
    pub fn new(bound: impl Into<String>, seed: u64) -> Self {
        Self {
            bound: bound.into(),
            trials: 0,
            checks: 0,
            skipped: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            seed,
            witness: None,
        }
    }

    /// Records one check. `NaN` slack counts as a violation.
    pub fn record(&mut self, slack: f64, witness: impl FnOnce() -> Witness) {
        self.record_with_tolerance(slack, SLACK_TOL, witness);
    }

    /// [`record`](Self::record) with a violation threshold of `-tol`.
    pub fn record_with_tolerance(&mut self, slack: f64, tol: f64, witness: impl FnOnce() -> Witness) {
        self.checks += 1;
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if slack < -tol {
            self.violations += 1;
        }
        if slack < self.worst_slack {
            self.worst_slack = slack;
            self.witness = Some(witness());
        }
    }

    pub fn skip(&mut self) {
        self.checks += 1;
        self.skipped += 1;
    }

    /// Merges a later report into this one; ties on worst slack keep the earlier witness.
    pub fn merge(&mut self, other: VerificationReport) {
        self.trials += other.trials;
        self.checks += other.checks;
        self.skipped += other.skipped;
        self.violations += other.violations;
        if other.worst_slack < self.worst_slack {
            self.worst_slack = other.worst_slack;
            self.witness = other.witness;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// The events checked on a pair: all of them up to [`EXHAUSTIVE_SUPPORT`] atoms,
/// otherwise [`SAMPLED_EVENTS`] seeded random masks.
fn events_for(support: usize, rng: &mut impl Rng) -> Result<Vec<EventMask>> {
    if support <= EXHAUSTIVE_SUPPORT {
        return Ok(crate::dist::enumerate_events(support)?.collect());
    }
    let keep = if support == 64 { u64::MAX } else { (1u64 << support) - 1 };
    (0..SAMPLED_EVENTS).map(|_| EventMask::new(support, rng.gen::<u64>() & keep)).collect()
}

fn check_pair(
    pair: &AbsContPair,
    specs: &[BoundSpec],
    events: &[EventMask],
    seed: u64,
    trial: u64,
) -> Result<Vec<VerificationReport>> {
    let masses: Vec<(u64, f64, f64)> = events.iter().map(|e| (e.bits(), pair.p_of(e), pair.q_of(e))).collect();
    specs
        .iter()
        .map(|spec| {
            let mut report = VerificationReport::new(spec.to_string(), seed);
            report.trials = 1;
            let stat = spec.prepare(pair)?;
            for &(bits, p, q) in &masses {
                let b = spec.evaluate(stat, q)?;
                if !b.applicable() {
                    report.skip();
                    continue;
                }
                report.record(b.raw - p, || Witness::Event {
                    trial,
                    event: bits,
                    p: pair.p().probs().to_vec(),
                    q: pair.q().probs().to_vec(),
                    p_event: p,
                    q_event: q,
                    bound: b.raw,
                });
            }
            Ok(report)
        })
        .collect()
}

/// Checks one bound on every event of `pair` (or on seeded random events above 16 atoms).
pub fn verify_com_bound(pair: &AbsContPair, spec: &BoundSpec, seed: u64) -> Result<VerificationReport> {
    let events = events_for(pair.len(), &mut trial_rng(seed, 0))?;
    let mut reports = check_pair(pair, std::slice::from_ref(spec), &events, seed, 0)?;
    Ok(reports.remove(0))
}

/// Size and seed of a random-pair suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: u64,
    pub support: usize,
}

impl SuiteConfig {
    pub fn new(seed: u64, trials: u64, support: usize) -> Result<Self> {
        ensure((1..=crate::dist::MAX_MASK_SUPPORT).contains(&support), || {
            Error::Validation(format!(
                "support must lie in [1, {}], got {support}",
                crate::dist::MAX_MASK_SUPPORT
            ))
        })?;
        Ok(Self { seed, trials, support })
    }
}

/// Runs every bound in `specs` on `cfg.trials` random pairs. Trials run on the current
/// rayon pool; each owns the stream `(seed, trial)`, and reports are merged in trial
/// order so the output does not depend on scheduling.
pub fn run_com_suite(specs: &[BoundSpec], cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let per_trial: Vec<Vec<VerificationReport>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let pair = random_pair(&mut rng, cfg.support)?;
            let events = events_for(cfg.support, &mut rng)?;
            check_pair(&pair, specs, &events, cfg.seed, trial)
        })
        .collect::<Result<_>>()?;
    Ok(merge_all(specs.iter().map(|s| s.to_string()), cfg.seed, per_trial))
}

fn merge_all(
    names: impl Iterator<Item = String>,
    seed: u64,
    per_trial: Vec<Vec<VerificationReport>>,
) -> Vec<VerificationReport> {
    let mut total: Vec<VerificationReport> = names.map(|n| VerificationReport::new(n, seed)).collect();
    for reports in per_trial {
        for (acc, r) in total.iter_mut().zip(reports) {
            acc.merge(r);
        }
    }
    total
}

/// Named groups of checks run by `divgauge verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Every change-of-measure bound on random pairs.
    Master,
    /// The optimized Young-Fenchel bound on random pairs.
    YoungFenchel,
    /// Variational and mixture identities on random pairs.
    Identities,
    /// Dominance claims on random pairs.
    Dominance,
    /// Generalization tail bounds against exact Gibbs experiments.
    Gibbs,
    /// Super-sample tail bounds against exact enumeration.
    Supersample,
    /// The corrupted chi2 bound; passes only when the harness reports violations.
    NegativeControl,
    /// Everything except the negative control.
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "master" => Suite::Master,
            "young-fenchel" => Suite::YoungFenchel,
            "identities" => Suite::Identities,
            "dominance" => Suite::Dominance,
            "gibbs" => Suite::Gibbs,
            "supersample" => Suite::Supersample,
            "negative-control" => Suite::NegativeControl,
            "all" => Suite::All,
            other => return Err(Error::Validation(format!("unknown suite `{other}`"))),
        })
    }
}

/// The 50-point grid `0.02, 0.04, ..., 1.0` used by the experiment suites.
pub fn default_eta_grid() -> Vec<f64> {
    (1..=50).map(|i| i as f64 * 0.02).collect()
}

/// Runs a suite. `trials` sizes the random-pair suites; the Young-Fenchel, identity
/// and dominance suites use a tenth of it (at least one).
pub fn run_suite(suite: Suite, seed: u64, trials: u64) -> Result<Vec<VerificationReport>> {
    let small = (trials / 10).max(1);
    match suite {
        Suite::Master => run_com_suite(&BoundSpec::master_suite(), &SuiteConfig::new(seed, trials, 8)?),
        Suite::YoungFenchel => run_com_suite(&BoundSpec::young_fenchel_suite(), &SuiteConfig::new(seed, small, 6)?),
        Suite::Identities => identities::identity_suite(seed, small),
        Suite::Dominance => dominance::dominance_suite(seed, small),
        Suite::Gibbs => {
            let grid = default_eta_grid();
            let per: Vec<Vec<VerificationReport>> = gibbs_suite_configs(seed)?
                .par_iter()
                .enumerate()
                .map(|(i, exp)| check_gibbs(exp, &grid, i as u64, seed))
                .collect::<Result<_>>()?;
            Ok(merge_by_name(per, seed))
        }
        Suite::Supersample => {
            let grid = default_eta_grid();
            let per: Vec<Vec<VerificationReport>> = supersample_suite_configs(seed)?
                .par_iter()
                .enumerate()
                .map(|(i, exp)| check_supersample(exp, &grid, i as u64, seed))
                .collect::<Result<_>>()?;
            Ok(merge_by_name(per, seed))
        }
        Suite::NegativeControl => {
            let mut reports = run_com_suite(&[BoundSpec::CorruptedChi2], &SuiteConfig::new(seed, small, 8)?)?;
            // Inverted: the control passes when the corrupted bound is caught.
            for r in &mut reports {
                r.bound = format!("{} (expect violations)", r.bound);
                r.violations = u64::from(r.violations == 0);
            }
            Ok(reports)
        }
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Master,
                Suite::YoungFenchel,
                Suite::Identities,
                Suite::Dominance,
                Suite::Gibbs,
                Suite::Supersample,
            ] {
                out.extend(run_suite(s, seed, trials)?);
            }
            Ok(out)
        }
    }
}

/// Merges per-config report lists whose names may differ between configs, keeping
/// first-seen order.
fn merge_by_name(per: Vec<Vec<VerificationReport>>, seed: u64) -> Vec<VerificationReport> {
    let mut total: Vec<VerificationReport> = Vec::new();
    for reports in per {
        for r in reports {
            match total.iter_mut().find(|t| t.bound == r.bound) {
                Some(t) => t.merge(r),
                None => {
                    let mut t = VerificationReport::new(r.bound.clone(), seed);
                    t.merge(r);
                    total.push(t);
                }
            }
        }
    }
    total
}
