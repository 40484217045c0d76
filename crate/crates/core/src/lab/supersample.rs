use serde::{Deserialize, Serialize};

use crate::divergences::{amemiya_norm_of, OrliczSpec};
use crate::error::{ensure, Error, Result};
use crate::gen::{self, BoundedLossSetting};

use super::gibbs::{digits, GibbsExperiment, MAX_ATOMS, TIE_TOL};
use super::{random_gibbs, trial_rng, VerificationReport, Witness};

/// The Gibbs learner run inside the super-sample construction: `2n` draws arranged as
/// `n` pairs, a uniform selector `S` in `{0,1}^n` picking the training half, and
/// `W ~ P_{W|Z(S)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuperSampleExperiment(pub GibbsExperiment);

impl SuperSampleExperiment {
    /// Atoms of the `(W, Z~, S)` law, or `None` on overflow.
    pub fn atoms(&self) -> Option<usize> {
        let e = &self.0;
        e.m()
            .checked_pow(2 * e.n as u32)?
            .checked_mul(1usize.checked_shl(e.n as u32)?)?
            .checked_mul(e.k())
    }

    pub fn setting(&self) -> Result<BoundedLossSetting> {
        BoundedLossSetting::new(self.0.a, self.0.b, self.0.n)
    }
}

/// Exact law of `(W, Z~, S)` against `P_{W|Z~} P_{Z~ S}`, with `ghat` per atom.
#[derive(Debug, Clone)]
pub struct SuperSampleOutcome {
    pub setting: BoundedLossSetting,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub ghat: Vec<f64>,
}

impl SuperSampleOutcome {
    /// `E_gamma(P_{W Z~ S} || P_{W|Z~} P_{Z~ S})`.
    pub fn egamma(&self, gamma: f64) -> f64 {
        self.p.iter().zip(&self.q).map(|(p, q)| (p - gamma * q).max(0.0)).sum()
    }

    /// Amemiya norm of `[dP/dQ - gamma]_+` under `Q` with the conjugate of `spec`.
    pub fn amemiya(&self, gamma: f64, spec: &OrliczSpec) -> Result<f64> {
        let values: Vec<f64> = self
            .p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| if *q > 0.0 { (p / q - gamma).max(0.0) } else { 0.0 })
            .collect();
        amemiya_norm_of(&values, &self.q, spec)
    }

    /// `P(|ghat| >= eta)` under the true law.
    pub fn exact_tail(&self, eta: f64) -> f64 {
        tail(&self.p, &self.ghat, eta)
    }

    /// `P(|ghat| >= eta)` with `W` decoupled from `S` given `Z~`.
    pub fn product_tail(&self, eta: f64) -> f64 {
        tail(&self.q, &self.ghat, eta)
    }
}

fn tail(mass: &[f64], ghat: &[f64], eta: f64) -> f64 {
    mass.iter()
        .zip(ghat)
        .filter(|(_, g)| g.abs() >= eta - TIE_TOL)
        .map(|(m, _)| m)
        .sum()
}

pub fn run_supersample_experiment(exp: &SuperSampleExperiment) -> Result<SuperSampleOutcome> {
    let e = &exp.0;
    e.validate()?;
    let atoms = exp
        .atoms()
        .filter(|&a| a <= MAX_ATOMS)
        .ok_or_else(|| Error::Resource(format!("super-sample law needs more than {MAX_ATOMS} atoms")))?;
    let (n, m, k) = (e.n, e.m(), e.k());
    let selectors = 1usize << n;
    let supers = atoms / (selectors * k);
    let training_sets = m.pow(n as u32);

    let mut sample = vec![0usize; n];
    let posteriors: Vec<Vec<f64>> = (0..training_sets)
        .map(|t| {
            digits(t, m, n, &mut sample);
            e.posterior(&sample)
        })
        .collect();

    let mut p = Vec::with_capacity(atoms);
    let mut q = Vec::with_capacity(atoms);
    let mut ghat = Vec::with_capacity(atoms);
    let mut z = vec![0usize; 2 * n];
    let inv_sel = 1.0 / selectors as f64;
    for zt in 0..supers {
        digits(zt, m, 2 * n, &mut z);
        let pz: f64 = z.iter().map(|&d| e.p_z[d]).product();
        let train_index = |s: usize| -> usize {
            (0..n).rev().fold(0, |acc, i| acc * m + z[2 * i + ((s >> i) & 1)])
        };
        let mut cond = vec![0.0; k];
        for s in 0..selectors {
            for (c, x) in cond.iter_mut().zip(&posteriors[train_index(s)]) {
                *c += x * inv_sel;
            }
        }
        for s in 0..selectors {
            let post = &posteriors[train_index(s)];
            for w in 0..k {
                let row = &e.loss[w];
                let gap: f64 = (0..n)
                    .map(|i| {
                        let bit = (s >> i) & 1;
                        row[z[2 * i + 1 - bit]] - row[z[2 * i + bit]]
                    })
                    .sum::<f64>()
                    / n as f64;
                p.push(pz * inv_sel * post[w]);
                q.push(pz * inv_sel * cond[w]);
                ghat.push(gap);
            }
        }
    }
    let total: f64 = p.iter().sum();
    ensure((total - 1.0).abs() <= crate::dist::JOINT_MASS_TOL, || {
        Error::Validation(format!("super-sample law sums to {total}"))
    })?;
    Ok(SuperSampleOutcome {
        setting: exp.setting()?,
        p,
        q,
        ghat,
    })
}

pub const CMI_GAMMAS: [f64; 3] = [1.0, 2.0, 4.0];

/// The `E_gamma` and Orlicz super-sample tails against the exact tail on `grid`.
pub fn check_supersample(
    exp: &SuperSampleExperiment,
    grid: &[f64],
    config: u64,
    seed: u64,
) -> Result<Vec<VerificationReport>> {
    let out = run_supersample_experiment(exp)?;
    let s = out.setting;
    let spec = OrliczSpec::power(2.0)?;
    let inputs: Vec<(f64, f64, f64)> = CMI_GAMMAS
        .iter()
        .map(|&g| Ok((g, out.egamma(g), out.amemiya(g, &spec)?)))
        .collect::<Result<_>>()?;
    let mut names = vec!["cmi-hoeffding".to_string()];
    names.extend(CMI_GAMMAS.iter().map(|g| format!("cmi-egamma:gamma={g}")));
    names.extend(CMI_GAMMAS.iter().map(|g| format!("cmi-orlicz:kappa=2,gamma={g}")));
    let mut reports: Vec<VerificationReport> = names.iter().map(|n| VerificationReport::new(n.clone(), seed)).collect();
    for &eta in grid {
        let exact = out.exact_tail(eta);
        let mut values = vec![(s.cmi_theta(eta), out.product_tail(eta))];
        for &(g, e, _) in &inputs {
            values.push((gen::cmi_tail(&s, eta, g, e)?.raw, exact));
        }
        for &(g, _, a) in &inputs {
            values.push((gen::cmi_tail_orlicz(&s, eta, g, a, &spec)?.raw, exact));
        }
        for (r, (bound, truth)) in reports.iter_mut().zip(values) {
            r.record(bound - truth, || Witness::Eta {
                config,
                eta,
                exact: truth,
                bound,
            });
        }
    }
    for r in &mut reports {
        r.trials = 1;
    }
    Ok(reports)
}

/// Sizes and temperatures of the super-sample suite.
pub fn supersample_suite_configs(seed: u64) -> Result<Vec<SuperSampleExperiment>> {
    let mut out = Vec::new();
    for (i, &n) in [2usize, 4, 6].iter().enumerate() {
        for (j, &t) in [0.0, 2.0, 8.0, f64::INFINITY].iter().enumerate() {
            let idx = 1000 + (i * 4 + j) as u64;
            out.push(SuperSampleExperiment(random_gibbs(&mut trial_rng(seed, idx), n, 2, 2, t)?));
        }
    }
    Ok(out)
}
