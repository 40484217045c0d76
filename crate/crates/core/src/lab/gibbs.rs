use serde::{Deserialize, Serialize};

use crate::dist::{JointFinite, JOINT_MASS_TOL};
use crate::divergences::{egamma, f_divergence, maximal_leakage, mutual_information, sibson_mi, DivergenceKind};
use crate::error::{ensure, Error, Result};
use crate::gen::{self, DivergencePanel, SubGaussianSetting};

use super::{random_gibbs, trial_rng, VerificationReport, Witness};

/// Largest joint the experiments will enumerate.
pub const MAX_ATOMS: usize = 20_000_000;
pub const MAX_N: usize = 12;
pub const MAX_ALPHABET: usize = 3;

/// `|gen| >= eta` is tested with this much room, so rounding in `gen` can only
/// enlarge the exact tail.
pub(crate) const TIE_TOL: f64 = 1e-12;

pub const PANEL_ALPHAS: [f64; 3] = [1.5, 2.0, 4.0];
pub const PANEL_BETAS: [f64; 3] = [1.5, 2.0, 4.0];
pub const PANEL_GAMMAS: [f64; 3] = [1.0, 2.0, 5.0];

/// A finite learning problem: `n` i.i.d. draws from `p_z`, `k` hypotheses with losses
/// `loss[w][z]` in `[a, b]`, and a Gibbs posterior `exp(-temperature * empirical loss)`
/// under a uniform prior. An infinite temperature picks the empirical minimizer, with
/// ties going to the lowest index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsExperiment {
    pub n: usize,
    pub p_z: Vec<f64>,
    pub loss: Vec<Vec<f64>>,
    pub a: f64,
    pub b: f64,
    #[serde(with = "crate::serde_float")]
    pub temperature: f64,
}

impl GibbsExperiment {
    pub fn new(n: usize, p_z: Vec<f64>, loss: Vec<Vec<f64>>, a: f64, b: f64, temperature: f64) -> Result<Self> {
        let exp = Self {
            n,
            p_z,
            loss,
            a,
            b,
            temperature,
        };
        exp.validate()?;
        Ok(exp)
    }

    pub fn k(&self) -> usize {
        self.loss.len()
    }

    pub fn m(&self) -> usize {
        self.p_z.len()
    }

    pub fn validate(&self) -> Result<()> {
        ensure((1..=MAX_N).contains(&self.n), || {
            Error::Validation(format!("n must lie in [1, {MAX_N}], got {}", self.n))
        })?;
        ensure((1..=MAX_ALPHABET).contains(&self.m()), || {
            Error::Validation(format!("alphabet size must lie in [1, {MAX_ALPHABET}], got {}", self.m()))
        })?;
        crate::dist::FiniteDistribution::new(self.p_z.clone())?;
        ensure(self.k() >= 1, || Error::Validation("need at least one hypothesis".into()))?;
        ensure(self.a.is_finite() && self.b.is_finite() && self.a < self.b, || {
            Error::Validation(format!("need a < b, got [{}, {}]", self.a, self.b))
        })?;
        for row in &self.loss {
            ensure(row.len() == self.m(), || {
                Error::Shape(format!("loss row has {} entries, alphabet has {}", row.len(), self.m()))
            })?;
            ensure(row.iter().all(|l| (self.a..=self.b).contains(l)), || {
                Error::Validation(format!("losses must lie in [{}, {}]", self.a, self.b))
            })?;
        }
        ensure(self.temperature >= 0.0, || {
            Error::Validation(format!("temperature must be nonnegative, got {}", self.temperature))
        })
    }

    /// A loss in `[a, b]` is `(b - a)/2`-sub-Gaussian.
    pub fn setting(&self) -> SubGaussianSetting {
        SubGaussianSetting {
            sigma: (self.b - self.a) / 2.0,
            n: self.n,
        }
    }

    /// `E_{P_Z} loss(Z, w)` per hypothesis.
    pub fn population_loss(&self) -> Vec<f64> {
        self.loss
            .iter()
            .map(|row| row.iter().zip(&self.p_z).map(|(l, p)| l * p).sum())
            .collect()
    }

    pub fn empirical_loss(&self, sample: &[usize]) -> Vec<f64> {
        self.loss
            .iter()
            .map(|row| sample.iter().map(|&z| row[z]).sum::<f64>() / sample.len() as f64)
            .collect()
    }

    /// `P_{W|S}` on a training sample.
    pub fn posterior(&self, sample: &[usize]) -> Vec<f64> {
        let emp = self.empirical_loss(sample);
        let k = emp.len();
        if self.temperature.is_infinite() {
            let best = (0..k).fold(0, |b, w| if emp[w] < emp[b] { w } else { b });
            return (0..k).map(|w| if w == best { 1.0 } else { 0.0 }).collect();
        }
        let lo = emp.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = emp.iter().map(|e| (-self.temperature * (e - lo)).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Number of atoms in the `(S, W)` joint, or `None` on overflow.
    pub fn atoms(&self) -> Option<usize> {
        self.m().checked_pow(self.n as u32)?.checked_mul(self.k())
    }
}

/// Decodes dataset index `s` into `n` base-`m` digits, least significant first.
pub(crate) fn digits(mut s: usize, m: usize, n: usize, out: &mut [usize]) {
    for d in out.iter_mut().take(n) {
        *d = s % m;
        s /= m;
    }
}

/// Information measures between `S` and `W` under the exact joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationPanel {
    pub mi: f64,
    pub leakage: f64,
    /// `(alpha, I_alpha)`.
    pub sibson: Vec<(f64, f64)>,
    pub chi2: f64,
    pub h2: f64,
    /// `(beta, H_beta)`.
    pub power: Vec<(f64, f64)>,
    /// `(gamma, E_gamma)`.
    pub egamma: Vec<(f64, f64)>,
}

impl InformationPanel {
    pub fn of(joint: &JointFinite) -> Result<Self> {
        let pair = joint.product_pair();
        let div = |k: DivergenceKind| f_divergence(&pair, k).map(|v| v.value);
        Ok(Self {
            mi: mutual_information(joint),
            leakage: maximal_leakage(joint)?,
            sibson: PANEL_ALPHAS
                .iter()
                .map(|&a| Ok((a, sibson_mi(joint, a)?)))
                .collect::<Result<_>>()?,
            chi2: div(DivergenceKind::Chi2)?,
            h2: div(DivergenceKind::SquaredHellinger)?,
            power: PANEL_BETAS
                .iter()
                .map(|&b| Ok((b, div(DivergenceKind::PowerBeta { beta: b })?)))
                .collect::<Result<_>>()?,
            egamma: PANEL_GAMMAS.iter().map(|&g| (g, egamma(&pair, g))).collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct GibbsOutcome {
    pub joint: JointFinite,
    /// `gen(s, w)` at flat index `s * k + w`.
    pub gen: Vec<f64>,
    pub panel: InformationPanel,
    pub setting: SubGaussianSetting,
}

impl GibbsOutcome {
    /// `P_SW(|gen| >= eta)`.
    pub fn exact_tail(&self, eta: f64) -> f64 {
        self.joint
            .flat()
            .iter()
            .zip(&self.gen)
            .filter(|(_, g)| g.abs() >= eta - TIE_TOL)
            .map(|(m, _)| m)
            .sum()
    }

    /// `P_S P_W(|gen| >= eta)`.
    pub fn product_tail(&self, eta: f64) -> f64 {
        let (ps, pw) = (self.joint.marginal_s(), self.joint.marginal_w());
        let k = pw.len();
        self.gen
            .iter()
            .enumerate()
            .filter(|(_, g)| g.abs() >= eta - TIE_TOL)
            .map(|(i, _)| ps[i / k] * pw[i % k])
            .sum()
    }
}

/// Enumerates every dataset, forms the Gibbs posterior on each and assembles the
/// exact joint of `(S, W)` with its information panel.
pub fn run_gibbs_experiment(exp: &GibbsExperiment) -> Result<GibbsOutcome> {
    exp.validate()?;
    let atoms = exp
        .atoms()
        .filter(|&a| a <= MAX_ATOMS)
        .ok_or_else(|| Error::Resource(format!("Gibbs joint needs more than {MAX_ATOMS} atoms")))?;
    let (n, m, k) = (exp.n, exp.m(), exp.k());
    let datasets = atoms / k;
    let pop = exp.population_loss();
    let mut mass = Vec::with_capacity(atoms);
    let mut gen = Vec::with_capacity(atoms);
    let mut sample = vec![0usize; n];
    for s in 0..datasets {
        digits(s, m, n, &mut sample);
        let ps: f64 = sample.iter().map(|&z| exp.p_z[z]).product();
        let post = exp.posterior(&sample);
        let emp = exp.empirical_loss(&sample);
        for w in 0..k {
            mass.push(ps * post[w]);
            gen.push(pop[w] - emp[w]);
        }
    }
    let total: f64 = mass.iter().sum();
    ensure((total - 1.0).abs() <= JOINT_MASS_TOL, || {
        Error::Validation(format!("Gibbs joint sums to {total}"))
    })?;
    let joint = JointFinite::from_flat(datasets, k, mass)?;
    let panel = InformationPanel::of(&joint)?;
    Ok(GibbsOutcome {
        joint,
        gen,
        panel,
        setting: exp.setting(),
    })
}

/// Every generalization tail bound against the exact tail on `grid`.
pub fn check_gibbs(exp: &GibbsExperiment, grid: &[f64], config: u64, seed: u64) -> Result<Vec<VerificationReport>> {
    let out = run_gibbs_experiment(exp)?;
    let s = out.setting;
    let panel = &out.panel;
    let mut branches: Vec<(String, DivergencePanel)> = Vec::new();
    for &(g, e) in &panel.egamma {
        branches.push((
            format!("gen-egamma:gamma={g}"),
            DivergencePanel {
                egamma: Some((g, e)),
                ..Default::default()
            },
        ));
    }
    branches.push((
        "gen-chi2".into(),
        DivergencePanel {
            chi2: Some(panel.chi2),
            ..Default::default()
        },
    ));
    branches.push((
        "gen-hellinger".into(),
        DivergencePanel {
            h2: Some(panel.h2.min(2.0)),
            ..Default::default()
        },
    ));
    for &(b, h) in &panel.power {
        branches.push((
            format!("gen-power-u0:beta={b}"),
            DivergencePanel {
                power: Some((b, h)),
                ..Default::default()
            },
        ));
    }
    branches.push((
        "gen-min".into(),
        DivergencePanel {
            egamma: Some(panel.egamma[0]),
            chi2: Some(panel.chi2),
            h2: Some(panel.h2.min(2.0)),
            power: Some(panel.power[1]),
        },
    ));

    let mut names: Vec<String> = vec!["hoeffding".into()];
    names.extend(branches.iter().map(|(n, _)| n.clone()));
    names.extend(["gen-ml".to_string(), "gen-ml-chi2".to_string()]);
    names.extend(panel.sibson.iter().map(|(a, _)| format!("gen-alpha-mi:alpha={a}")));
    let mut reports: Vec<VerificationReport> = names.iter().map(|n| VerificationReport::new(n.clone(), seed)).collect();

    for &eta in grid {
        let exact = out.exact_tail(eta);
        let mut values = vec![(s.theta(eta), out.product_tail(eta))];
        for (_, p) in &branches {
            values.push((gen::gen_tail_bounds(&s, eta, p)?.min, exact));
        }
        values.push((gen::gen_tail_ml(&s, eta, panel.leakage)?.raw, exact));
        values.push((gen::gen_tail_ml_chi2(&s, eta, panel.leakage)?.raw, exact));
        for &(a, i) in &panel.sibson {
            values.push((gen::gen_tail_alpha_mi(&s, eta, i, a)?.raw, exact));
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

/// Temperatures and sizes of the Gibbs suite, with losses drawn from `(seed, index)`.
pub fn gibbs_suite_configs(seed: u64) -> Result<Vec<GibbsExperiment>> {
    let temps = [0.0, 1.0, 4.0, 16.0, f64::INFINITY];
    let mut out = Vec::new();
    for (i, &n) in [4usize, 6, 8, 10].iter().enumerate() {
        for (j, &t) in temps.iter().enumerate() {
            let idx = (i * temps.len() + j) as u64;
            let k = 2 + (idx as usize % 2);
            let m = if idx % 3 == 0 { 3 } else { 2 };
            out.push(random_gibbs(&mut trial_rng(seed, idx), n, k, m, t)?);
        }
    }
    out.push(random_gibbs(&mut trial_rng(seed, 100), 8, 3, 2, 2.0)?);
    out.push(GibbsExperiment::new(
        6,
        vec![0.5, 0.5],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        0.0,
        1.0,
        f64::INFINITY,
    )?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_temperature_is_independent() {
        let exp = random_gibbs(&mut trial_rng(1, 0), 5, 3, 2, 0.0).unwrap();
        let out = run_gibbs_experiment(&exp).unwrap();
        assert!(out.panel.mi.abs() < 1e-12);
        assert!(out.panel.chi2.abs() < 1e-12);
        assert!(out.panel.leakage.abs() < 1e-12);
        let total: f64 = out.joint.flat().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(out.joint.flat().len(), 32 * 3);
        for eta in [0.1, 0.3] {
            assert!((out.exact_tail(eta) - out.product_tail(eta)).abs() < 1e-12);
        }
    }

    #[test]
    fn argmin_learner_leaks_at_most_log_k() {
        let exp = GibbsExperiment::new(6, vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![1.0, 0.0]], 0.0, 1.0, f64::INFINITY)
            .unwrap();
        let out = run_gibbs_experiment(&exp).unwrap();
        assert!(out.panel.leakage <= 2f64.ln() + 1e-12);
        assert!(out.panel.leakage > 0.5);
        // Ties at three zeros and three ones go to hypothesis 0.
        assert_eq!(exp.posterior(&[0, 0, 0, 1, 1, 1]), vec![1.0, 0.0]);
    }

    #[test]
    fn every_bound_covers_the_exact_tail() {
        let exp = random_gibbs(&mut trial_rng(2, 0), 8, 3, 2, 2.0).unwrap();
        let grid: Vec<f64> = (1..=50).map(|i| i as f64 * 0.02).collect();
        for r in check_gibbs(&exp, &grid, 0, 2).unwrap() {
            assert_eq!(r.violations, 0, "{r:?}");
        }
    }

    #[test]
    fn atom_cap_is_enforced() {
        let exp = GibbsExperiment::new(12, vec![0.3, 0.3, 0.4], vec![vec![0.0; 3]; 40], 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(run_gibbs_experiment(&exp), Err(Error::Resource(_))));
    }
}
