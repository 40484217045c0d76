use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, competitor_bound, BoundResult, PowerMode, ReverseKlMode};
use crate::dist::{enumerate_events, AbsContPair, EventMask};
use crate::divergences::{egamma, f_divergence, DivergenceKind};
use crate::error::Result;

use super::{random_pair, trial_rng, VerificationReport, Witness};

/// Two values this close count as the same bound.
pub const SAME_TOL: f64 = 1e-12;

/// Slack allowed on "ours is tighter" claims.
pub const TIGHTER_TOL: f64 = 1e-10;

/// What the dominance table claims about a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Same,
    OursTighter,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Same,
    Ours,
    Theirs,
    /// An infinite divergence, or outside the region where the claim is made.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub row: String,
    pub claim: Claim,
    pub event: u64,
    pub p_event: f64,
    pub q_event: f64,
    #[serde(with = "crate::serde_float")]
    pub ours: f64,
    #[serde(with = "crate::serde_float")]
    pub competitor: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceSummary {
    pub row: String,
    pub claim: Claim,
    pub trials: u64,
    pub same: u64,
    pub ours: u64,
    pub theirs: u64,
    pub not_applicable: u64,
    /// `max (ours - competitor)` over applicable trials.
    #[serde(with = "crate::serde_float")]
    pub max_excess: f64,
    pub claim_holds: bool,
}

struct RowSpec {
    name: String,
    claim: Claim,
    stat: f64,
    ours: Box<dyn Fn(f64) -> Result<BoundResult> + Sync>,
    theirs: Box<dyn Fn(f64) -> Result<BoundResult> + Sync>,
    /// Region where the claim is made.
    region: Box<dyn Fn(f64) -> bool + Sync>,
}

fn rows_for(pair: &AbsContPair) -> Result<Vec<RowSpec>> {
    let div = |k: DivergenceKind| f_divergence(pair, k).map(|v| v.value);
    let mut rows = Vec::new();
    for &gamma in &[0.5, 1.0, 2.0, 5.0] {
        let e = egamma(pair, gamma);
        let tail = pair.p_of(&pair.ratio_exceeds(gamma));
        rows.push(RowSpec {
            name: format!("egamma-vs-strong-converse:gamma={gamma}"),
            claim: Claim::OursTighter,
            stat: e,
            ours: Box::new(move |q| bounds::bound_egamma(q, e, gamma)),
            theirs: Box::new(move |q| Ok(bounds::strong_converse_value(q, tail, gamma))),
            region: Box::new(|_| true),
        });
    }
    let kl = div(DivergenceKind::Kl)?;
    rows.push(RowSpec {
        name: "kl".into(),
        claim: Claim::Same,
        stat: kl,
        ours: Box::new(move |q| bounds::bound_kl(q, kl, None)),
        theirs: Box::new(move |q| competitor_bound(q, DivergenceKind::Kl, kl, None)),
        region: Box::new(|_| true),
    });
    let chi2 = div(DivergenceKind::Chi2)?;
    rows.push(RowSpec {
        name: "chi2".into(),
        claim: Claim::Same,
        stat: chi2,
        ours: Box::new(move |q| bounds::bound_chi2(q, chi2)),
        theirs: Box::new(move |q| competitor_bound(q, DivergenceKind::Chi2, chi2, None)),
        region: Box::new(|_| true),
    });
    let power = DivergenceKind::PowerBeta { beta: 2.0 };
    let h = div(power)?;
    rows.push(RowSpec {
        name: "power:beta=2".into(),
        claim: Claim::Incomparable,
        stat: h,
        ours: Box::new(move |q| bounds::bound_power_beta(q, h, 2.0, PowerMode::Implicit)),
        theirs: Box::new(move |q| competitor_bound(q, power, h, None)),
        region: Box::new(|_| true),
    });
    let h2 = div(DivergenceKind::SquaredHellinger)?.min(2.0);
    rows.push(RowSpec {
        name: "hellinger".into(),
        claim: Claim::OursTighter,
        stat: h2,
        ours: Box::new(move |q| bounds::bound_hellinger(q, h2)),
        theirs: Box::new(move |q| competitor_bound(q, DivergenceKind::SquaredHellinger, h2, None)),
        region: Box::new(move |q| q.sqrt() <= 1.0 - h2),
    });
    let rchi2 = div(DivergenceKind::ReverseChi2)?;
    rows.push(RowSpec {
        name: "reverse-chi2".into(),
        claim: Claim::OursTighter,
        stat: rchi2,
        ours: Box::new(move |q| bounds::bound_reverse_chi2(q, rchi2)),
        theirs: Box::new(move |q| competitor_bound(q, DivergenceKind::ReverseChi2, rchi2, None)),
        region: Box::new(|_| true),
    });
    let rkl = div(DivergenceKind::ReverseKl)?;
    rows.push(RowSpec {
        name: "reverse-kl".into(),
        claim: Claim::OursTighter,
        stat: rkl,
        ours: Box::new(move |q| bounds::bound_reverse_kl(q, rkl, ReverseKlMode::Exact)),
        theirs: Box::new(move |q| competitor_bound(q, DivergenceKind::ReverseKl, rkl, None)),
        region: Box::new(|_| true),
    });
    let vc = div(DivergenceKind::VinczeLeCam)?.min(2.0);
    rows.push(RowSpec {
        name: "vc".into(),
        claim: Claim::OursTighter,
        stat: vc,
        ours: Box::new(move |q| bounds::bound_vincze_lecam(q, vc)),
        theirs: Box::new(move |q| competitor_bound(q, DivergenceKind::VinczeLeCam, vc, None)),
        region: Box::new(|_| true),
    });
    Ok(rows)
}

/// Our bound against the earlier one for each dominance-table row and each event with
/// `Q(E)` strictly inside `(0, 1)`.
pub fn dominance_report(pair: &AbsContPair, events: &[EventMask]) -> Result<Vec<DominanceRow>> {
    let rows = rows_for(pair)?;
    let mut out = Vec::new();
    for spec in &rows {
        for e in events {
            let (p, q) = (pair.p_of(e), pair.q_of(e));
            if q <= 0.0 || q >= 1.0 {
                continue;
            }
            let applicable = spec.stat.is_finite() && (spec.region)(q);
            let (ours, theirs) = if spec.stat.is_finite() {
                ((spec.ours)(q)?.raw, (spec.theirs)(q)?.raw)
            } else {
                (f64::INFINITY, f64::INFINITY)
            };
            let verdict = if !applicable {
                Verdict::NotApplicable
            } else if (ours - theirs).abs() <= SAME_TOL {
                Verdict::Same
            } else if ours < theirs {
                Verdict::Ours
            } else {
                Verdict::Theirs
            };
            out.push(DominanceRow {
                row: spec.name.clone(),
                claim: spec.claim,
                event: e.bits(),
                p_event: p,
                q_event: q,
                ours,
                competitor: theirs,
                verdict,
            });
        }
    }
    Ok(out)
}

/// Per-row counts and whether the claim holds on every applicable trial.
pub fn summarize_dominance(rows: &[DominanceRow]) -> Vec<DominanceSummary> {
    let mut out: Vec<DominanceSummary> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|s| s.row == r.row) {
            Some(i) => i,
            None => {
                out.push(DominanceSummary {
                    row: r.row.clone(),
                    claim: r.claim,
                    trials: 0,
                    same: 0,
                    ours: 0,
                    theirs: 0,
                    not_applicable: 0,
                    max_excess: f64::NEG_INFINITY,
                    claim_holds: true,
                });
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        s.trials += 1;
        match r.verdict {
            Verdict::Same => s.same += 1,
            Verdict::Ours => s.ours += 1,
            Verdict::Theirs => s.theirs += 1,
            Verdict::NotApplicable => {
                s.not_applicable += 1;
                continue;
            }
        }
        let excess = r.ours - r.competitor;
        s.max_excess = s.max_excess.max(excess);
        s.claim_holds &= match r.claim {
            Claim::Same => excess.abs() <= SAME_TOL,
            Claim::OursTighter => excess <= TIGHTER_TOL,
            Claim::Incomparable => true,
        };
    }
    out
}

/// Dominance claims as verification reports: slack is `competitor - ours` for
/// "tighter" rows and `-|ours - competitor|` for "same" rows.
pub(crate) fn dominance_suite(seed: u64, trials: u64) -> Result<Vec<VerificationReport>> {
    let per_trial: Vec<Vec<DominanceRow>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let pair = random_pair(&mut trial_rng(seed, trial), 8)?;
            let events: Vec<EventMask> = enumerate_events(8)?.collect();
            dominance_report(&pair, &events)
        })
        .collect::<Result<_>>()?;
    let mut reports: Vec<VerificationReport> = Vec::new();
    for (trial, rows) in per_trial.into_iter().enumerate() {
        for r in rows {
            if r.claim == Claim::Incomparable {
                continue;
            }
            let name = format!("dominance:{}", r.row);
            let idx = match reports.iter().position(|x| x.bound == name) {
                Some(i) => i,
                None => {
                    reports.push(VerificationReport::new(name, seed));
                    reports.len() - 1
                }
            };
            let rep = &mut reports[idx];
            if r.verdict == Verdict::NotApplicable {
                rep.skip();
                continue;
            }
            let (slack, tol) = match r.claim {
                Claim::Same => (-(r.ours - r.competitor).abs(), SAME_TOL),
                _ => (r.competitor - r.ours, TIGHTER_TOL),
            };
            rep.record_with_tolerance(slack, tol, || Witness::Event {
                trial: trial as u64,
                event: r.event,
                p: Vec::new(),
                q: Vec::new(),
                p_event: r.p_event,
                q_event: r.q_event,
                bound: r.ours,
            });
        }
    }
    for r in &mut reports {
        r.trials = trials;
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claims_hold_on_random_pairs() {
        let mut rows = Vec::new();
        for t in 0..40 {
            let pair = random_pair(&mut trial_rng(21, t), 6).unwrap();
            let events: Vec<EventMask> = enumerate_events(6).unwrap().collect();
            rows.extend(dominance_report(&pair, &events).unwrap());
        }
        for s in summarize_dominance(&rows) {
            assert!(s.claim_holds, "{s:?}");
        }
    }

    #[test]
    fn infinite_rows_are_not_applicable() {
        let pair = AbsContPair::from_probs(vec![0.5, 0.5, 0.0], vec![0.3, 0.3, 0.4]).unwrap();
        let events: Vec<EventMask> = enumerate_events(3).unwrap().collect();
        let rows = dominance_report(&pair, &events).unwrap();
        assert!(rows
            .iter()
            .filter(|r| r.row == "reverse-kl")
            .all(|r| r.verdict == Verdict::NotApplicable));
    }
}
