//! Finite probability spaces.
//!
//! Everything downstream (divergences, bounds, the verification lab) consumes the
//! types defined here. Atoms with zero mass are never pruned, so an [`EventMask`]
//! indexes the same atoms under both measures of an [`AbsContPair`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Absolute tolerance on total mass for distributions built from explicit probabilities.
pub const MASS_TOL: f64 = 1e-12;

/// Tolerance on total mass accepted (and then renormalized) for joint matrices.
pub const JOINT_MASS_TOL: f64 = 1e-9;

/// Largest support for which [`enumerate_events`] will produce all subsets.
pub const MAX_ENUMERATION_SUPPORT: usize = 24;

/// Largest support an [`EventMask`] can index.
pub const MAX_MASK_SUPPORT: usize = 64;

/// A probability vector on a finite, optionally labeled, support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct FiniteDistribution {
    probs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    probs: Vec<f64>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

impl TryFrom<RawDistribution> for FiniteDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        let dist = FiniteDistribution::new(raw.probs)?;
        match raw.labels {
            Some(labels) => dist.with_labels(labels),
            None => Ok(dist),
        }
    }
}

fn check_masses(values: &[f64]) -> Result<()> {
    ensure(!values.is_empty(), || {
        Error::Validation("distribution has an empty support".into())
    })?;
    for (i, &v) in values.iter().enumerate() {
        ensure(v.is_finite(), || {
            Error::Validation(format!("mass at atom {i} is not finite ({v})"))
        })?;
        ensure(v >= 0.0, || {
            Error::Validation(format!("mass at atom {i} is negative ({v})"))
        })?;
    }
    Ok(())
}

impl FiniteDistribution {
    /// Wraps an explicit probability vector. Masses must already sum to one within
    /// [`MASS_TOL`]; use [`make_distribution`] to normalize raw weights.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_masses(&probs)?;
        let total: f64 = probs.iter().sum();
        ensure((total - 1.0).abs() <= MASS_TOL, || {
            Error::Validation(format!("masses sum to {total}, expected 1"))
        })?;
        Ok(Self {
            probs,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        ensure(labels.len() == self.probs.len(), || {
            Error::Shape(format!(
                "{} labels for a support of size {}",
                labels.len(),
                self.probs.len()
            ))
        })?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        make_distribution(&vec![1.0; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn event_probability(&self, event: &EventMask) -> Result<f64> {
        event_probability(self, event)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("distribution serializes")
    }
}

/// Normalizes nonnegative finite weights into a distribution.
pub fn make_distribution(weights: &[f64]) -> Result<FiniteDistribution> {
    check_masses(weights)?;
    let total: f64 = weights.iter().sum();
    ensure(total > 0.0, || {
        Error::Validation("all weights are zero".into())
    })?;
    Ok(FiniteDistribution {
        probs: weights.iter().map(|w| w / total).collect(),
        labels: None,
    })
}

/// Subset of support indices. Bit `i` (least significant first) selects atom `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventMask {
    len: usize,
    bits: u64,
}

impl EventMask {
    pub fn new(len: usize, bits: u64) -> Result<Self> {
        ensure(len <= MAX_MASK_SUPPORT, || {
            Error::Resource(format!(
                "event masks index at most {MAX_MASK_SUPPORT} atoms, got {len}"
            ))
        })?;
        ensure(bits & !Self::full_bits(len) == 0, || {
            Error::Shape(format!("mask {bits:#b} selects atoms beyond support size {len}"))
        })?;
        Ok(Self { len, bits })
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &i in indices {
            ensure(i < len, || {
                Error::Shape(format!("atom {i} outside support of size {len}"))
            })?;
            bits |= 1 << i;
        }
        Self::new(len, bits)
    }

    pub fn from_predicate(len: usize, pred: impl Fn(usize) -> bool) -> Result<Self> {
        let indices: Vec<usize> = (0..len).filter(|&i| pred(i)).collect();
        Self::from_indices(len, &indices)
    }

    pub fn empty(len: usize) -> Result<Self> {
        Self::new(len, 0)
    }

    pub fn full(len: usize) -> Result<Self> {
        Self::new(len, Self::full_bits(len))
    }

    fn full_bits(len: usize) -> u64 {
        if len >= 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && (self.bits >> i) & 1 == 1
    }

    pub fn complement(&self) -> Self {
        Self {
            len: self.len,
            bits: !self.bits & Self::full_bits(self.len),
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits & other.bits == 0
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        ensure(self.len == other.len, || {
            Error::Shape(format!("mask lengths {} and {}", self.len, other.len))
        })?;
        Ok(Self {
            len: self.len,
            bits: self.bits | other.bits,
        })
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }
}

impl fmt::Display for EventMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0b")?;
        if self.len == 0 {
            return write!(f, "0");
        }
        for i in (0..self.len).rev() {
            write!(f, "{}", if self.contains(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// Parses `0b0101` style literals. The number of binary digits fixes the support
/// size; the rightmost digit is atom 0.
impl FromStr for EventMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().strip_prefix("0b").ok_or_else(|| {
            Error::Validation(format!("event `{s}` must be a binary literal such as 0b0101"))
        })?;
        ensure(!digits.is_empty() && digits.chars().all(|c| c == '0' || c == '1'), || {
            Error::Validation(format!("event `{s}` contains non-binary digits"))
        })?;
        ensure(digits.len() <= MAX_MASK_SUPPORT, || {
            Error::Resource(format!("event `{s}` is longer than {MAX_MASK_SUPPORT} atoms"))
        })?;
        let bits = u64::from_str_radix(digits, 2)
            .map_err(|e| Error::Validation(format!("event `{s}`: {e}")))?;
        EventMask::new(digits.len(), bits)
    }
}

pub fn event_probability(dist: &FiniteDistribution, event: &EventMask) -> Result<f64> {
    ensure(event.len() == dist.len(), || {
        Error::Shape(format!(
            "mask over {} atoms applied to a support of size {}",
            event.len(),
            dist.len()
        ))
    })?;
    Ok(masked_sum(dist.probs(), event))
}

fn masked_sum(values: &[f64], event: &EventMask) -> f64 {
    let mut bits = event.bits();
    let mut total = 0.0;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize;
        total += values[i];
        bits &= bits - 1;
    }
    total
}

/// All `2^n` subsets of an `n`-atom support, in increasing bit order.
pub fn enumerate_events(support_size: usize) -> Result<impl Iterator<Item = EventMask>> {
    ensure(support_size <= MAX_ENUMERATION_SUPPORT, || {
        Error::Resource(format!(
            "enumerating 2^{support_size} events exceeds the cap of 2^{MAX_ENUMERATION_SUPPORT}; \
             sample random masks instead"
        ))
    })?;
    let n = support_size;
    Ok((0..(1u64 << n)).map(move |bits| EventMask { len: n, bits }))
}

/// A pair `P << Q` on a common finite support together with `dP/dQ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct AbsContPair {
    p: FiniteDistribution,
    q: FiniteDistribution,
    #[serde(skip)]
    ratios: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    p: FiniteDistribution,
    q: FiniteDistribution,
}

impl TryFrom<RawPair> for AbsContPair {
    type Error = Error;

    fn try_from(raw: RawPair) -> Result<Self> {
        make_pair(raw.p, raw.q)
    }
}

/// Builds the pair and its likelihood ratios; fails if `P` charges a `Q`-null atom.
pub fn make_pair(p: FiniteDistribution, q: FiniteDistribution) -> Result<AbsContPair> {
    ensure(p.len() == q.len(), || {
        Error::Shape(format!("P has {} atoms, Q has {}", p.len(), q.len()))
    })?;
    let mut ratios = Vec::with_capacity(p.len());
    for (i, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if qi > 0.0 {
            ratios.push(pi / qi);
        } else {
            ensure(pi == 0.0, || Error::Domination { index: i, p: pi })?;
            // Unused: atoms outside supp(Q) are skipped by every integral.
            ratios.push(0.0);
        }
    }
    Ok(AbsContPair { p, q, ratios })
}

impl AbsContPair {
    pub fn new(p: FiniteDistribution, q: FiniteDistribution) -> Result<Self> {
        make_pair(p, q)
    }

    /// Convenience constructor from raw probability vectors.
    pub fn from_probs(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        make_pair(FiniteDistribution::new(p)?, FiniteDistribution::new(q)?)
    }

    pub fn p(&self) -> &FiniteDistribution {
        &self.p
    }

    pub fn q(&self) -> &FiniteDistribution {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// `dP/dQ` at atom `i`; `None` outside the support of `Q`.
    pub fn ratio(&self, i: usize) -> Option<f64> {
        (self.q.mass(i) > 0.0).then(|| self.ratios[i])
    }

    /// `(dP/dQ, Q_i)` over atoms with `Q_i > 0`.
    pub fn support(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ratios
            .iter()
            .zip(self.q.probs())
            .filter(|(_, &q)| q > 0.0)
            .map(|(&r, &q)| (r, q))
    }

    pub fn max_ratio(&self) -> f64 {
        self.support().map(|(r, _)| r).fold(0.0, f64::max)
    }

    /// True when some atom has `Q_i > 0` but `P_i = 0`, i.e. `Q` is not dominated by `P`.
    pub fn has_p_null_atom(&self) -> bool {
        self.support().any(|(r, _)| r == 0.0)
    }

    pub fn p_of(&self, event: &EventMask) -> f64 {
        debug_assert_eq!(event.len(), self.len());
        masked_sum(self.p.probs(), event)
    }

    pub fn q_of(&self, event: &EventMask) -> f64 {
        debug_assert_eq!(event.len(), self.len());
        masked_sum(self.q.probs(), event)
    }

    /// The event `{dP/dQ > threshold}` restricted to the support of `Q`.
    pub fn ratio_exceeds(&self, threshold: f64) -> EventMask {
        let mut bits = 0u64;
        for (i, &r) in self.ratios.iter().enumerate() {
            if self.q.mass(i) > 0.0 && r > threshold {
                bits |= 1 << i;
            }
        }
        EventMask {
            len: self.len(),
            bits,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("pair serializes")
    }
}

/// A joint law on `S x W` stored row-major (rows indexed by `s`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint", into = "RawJoint")]
pub struct JointFinite {
    n_s: usize,
    n_w: usize,
    mass: Vec<f64>,
    marginal_s: Vec<f64>,
    marginal_w: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<RawJoint> for JointFinite {
    type Error = Error;

    fn try_from(raw: RawJoint) -> Result<Self> {
        joint_from_matrix(&raw.matrix)
    }
}

impl From<JointFinite> for RawJoint {
    fn from(joint: JointFinite) -> Self {
        RawJoint {
            matrix: joint.rows().map(|r| r.to_vec()).collect(),
        }
    }
}

pub fn joint_from_matrix(matrix: &[Vec<f64>]) -> Result<JointFinite> {
    ensure(!matrix.is_empty() && !matrix[0].is_empty(), || {
        Error::Shape("joint matrix is empty".into())
    })?;
    let n_w = matrix[0].len();
    ensure(matrix.iter().all(|row| row.len() == n_w), || {
        Error::Shape("joint matrix rows have unequal lengths".into())
    })?;
    let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
    JointFinite::from_flat(matrix.len(), n_w, flat)
}

impl JointFinite {
    /// Accepts nonnegative masses summing to one within [`JOINT_MASS_TOL`] and renormalizes.
    pub fn from_flat(n_s: usize, n_w: usize, mut mass: Vec<f64>) -> Result<Self> {
        ensure(n_s > 0 && n_w > 0 && mass.len() == n_s * n_w, || {
            Error::Shape(format!("{} masses for a {n_s}x{n_w} joint", mass.len()))
        })?;
        check_masses(&mass)?;
        let total: f64 = mass.iter().sum();
        ensure((total - 1.0).abs() <= JOINT_MASS_TOL, || {
            Error::Validation(format!("joint masses sum to {total}, expected 1"))
        })?;
        mass.iter_mut().for_each(|m| *m /= total);
        let mut marginal_s = vec![0.0; n_s];
        let mut marginal_w = vec![0.0; n_w];
        for s in 0..n_s {
            for w in 0..n_w {
                let m = mass[s * n_w + w];
                marginal_s[s] += m;
                marginal_w[w] += m;
            }
        }
        Ok(Self {
            n_s,
            n_w,
            mass,
            marginal_s,
            marginal_w,
        })
    }

    /// The product law `P_S x P_W`.
    pub fn independent(p_s: &FiniteDistribution, p_w: &FiniteDistribution) -> Result<Self> {
        let mass = p_s
            .probs()
            .iter()
            .flat_map(|&a| p_w.probs().iter().map(move |&b| a * b))
            .collect();
        Self::from_flat(p_s.len(), p_w.len(), mass)
    }

    /// Builds `P_S(s) P_{W|S}(w|s)` from a marginal and a row-stochastic channel.
    pub fn from_channel(p_s: &FiniteDistribution, channel: &[Vec<f64>]) -> Result<Self> {
        ensure(channel.len() == p_s.len(), || {
            Error::Shape(format!(
                "channel has {} rows for {} inputs",
                channel.len(),
                p_s.len()
            ))
        })?;
        let n_w = channel.first().map_or(0, Vec::len);
        let mut mass = Vec::with_capacity(p_s.len() * n_w);
        for (row, &ps) in channel.iter().zip(p_s.probs()) {
            ensure(row.len() == n_w, || {
                Error::Shape("channel rows have unequal lengths".into())
            })?;
            mass.extend(row.iter().map(|&c| ps * c));
        }
        Self::from_flat(p_s.len(), n_w, mass)
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_w(&self) -> usize {
        self.n_w
    }

    pub fn mass(&self, s: usize, w: usize) -> f64 {
        self.mass[s * self.n_w + w]
    }

    pub fn flat(&self) -> &[f64] {
        &self.mass
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.mass.chunks(self.n_w)
    }

    pub fn marginal_s(&self) -> &[f64] {
        &self.marginal_s
    }

    pub fn marginal_w(&self) -> &[f64] {
        &self.marginal_w
    }

    /// `P_{W|S=s}`; errors when `P_S(s) = 0`.
    pub fn conditional_w_given_s(&self, s: usize) -> Result<Vec<f64>> {
        let ps = self.marginal_s[s];
        ensure(ps > 0.0, || {
            Error::DegenerateMarginal(format!("P_S({s}) = 0, conditional W|S undefined"))
        })?;
        Ok((0..self.n_w).map(|w| self.mass(s, w) / ps).collect())
    }

    /// `P_{S|W=w}`; errors when `P_W(w) = 0`.
    pub fn conditional_s_given_w(&self, w: usize) -> Result<Vec<f64>> {
        let pw = self.marginal_w[w];
        ensure(pw > 0.0, || {
            Error::DegenerateMarginal(format!("P_W({w}) = 0, conditional S|W undefined"))
        })?;
        Ok((0..self.n_s).map(|s| self.mass(s, w) / pw).collect())
    }

    /// Flattens `(P_SW, P_S P_W)` into a pair over `S x W` (index `s * n_w + w`).
    pub fn product_pair(&self) -> AbsContPair {
        let product: Vec<f64> = self
            .marginal_s
            .iter()
            .flat_map(|&a| self.marginal_w.iter().map(move |&b| a * b))
            .collect();
        let mut ratios = Vec::with_capacity(product.len());
        for (&pj, &qj) in self.mass.iter().zip(&product) {
            // P_SW(s,w) <= min(P_S(s), P_W(w)), so a null product atom is never charged.
            ratios.push(if qj > 0.0 { pj / qj } else { 0.0 });
        }
        AbsContPair {
            p: FiniteDistribution {
                probs: self.mass.clone(),
                labels: None,
            },
            q: FiniteDistribution {
                probs: product,
                labels: None,
            },
            ratios,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("joint serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_distribution_normalizes() {
        let d = make_distribution(&[2.0, 2.0]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        let d = make_distribution(&[1.0, 0.0, 3.0]).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.0, 0.75]);
    }

    #[test]
    fn make_distribution_rejects_bad_weights() {
        assert!(matches!(make_distribution(&[1.0, -1.0]), Err(Error::Validation(_))));
        assert!(matches!(make_distribution(&[0.0, 0.0]), Err(Error::Validation(_))));
        assert!(matches!(make_distribution(&[f64::NAN]), Err(Error::Validation(_))));
        assert!(matches!(make_distribution(&[]), Err(Error::Validation(_))));
    }

    #[test]
    fn pair_ratios_and_domination() {
        let pair = AbsContPair::from_probs(vec![0.5, 0.5], vec![0.25, 0.75]).unwrap();
        assert_eq!(pair.ratio(0), Some(2.0));
        assert!((pair.ratio(1).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let same = AbsContPair::from_probs(vec![0.2, 0.8], vec![0.2, 0.8]).unwrap();
        assert!(same.support().all(|(r, _)| r == 1.0));

        let err = AbsContPair::from_probs(vec![0.5, 0.5], vec![1.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::Domination { index: 1, p: 0.5 });

        let err = AbsContPair::from_probs(vec![1.0], vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn zero_atoms_are_kept() {
        let pair = AbsContPair::from_probs(vec![0.0, 1.0, 0.0], vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(pair.len(), 3);
        assert_eq!(pair.ratio(2), None);
        assert_eq!(pair.support().count(), 2);
        assert!(pair.has_p_null_atom());
    }

    #[test]
    fn event_probability_basics() {
        let d = FiniteDistribution::new(vec![0.25, 0.75]).unwrap();
        let e0 = EventMask::from_indices(2, &[0]).unwrap();
        assert_eq!(event_probability(&d, &e0).unwrap(), 0.25);
        assert_eq!(event_probability(&d, &EventMask::full(2).unwrap()).unwrap(), 1.0);
        assert_eq!(event_probability(&d, &EventMask::empty(2).unwrap()).unwrap(), 0.0);
        let wrong = EventMask::full(3).unwrap();
        assert!(matches!(event_probability(&d, &wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn enumerate_events_counts_and_cap() {
        assert_eq!(enumerate_events(0).unwrap().count(), 1);
        let masks: Vec<_> = enumerate_events(3).unwrap().collect();
        assert_eq!(masks.len(), 8);
        let mut bits: Vec<u64> = masks.iter().map(|m| m.bits()).collect();
        bits.dedup();
        assert_eq!(bits.len(), 8);
        assert!(matches!(enumerate_events(25), Err(Error::Resource(_))));
    }

    #[test]
    fn mask_parsing_and_display() {
        let m: EventMask = "0b0101".parse().unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.contains(0) && m.contains(2) && !m.contains(1));
        assert_eq!(m.to_string(), "0b0101");
        assert!("0101".parse::<EventMask>().is_err());
        assert!("0b012".parse::<EventMask>().is_err());
        assert_eq!(m.complement().bits(), 0b1010);
    }

    #[test]
    fn joint_marginals_and_conditionals() {
        let joint = joint_from_matrix(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(joint.marginal_s(), &[0.5, 0.5]);
        let pair = joint.product_pair();
        assert_eq!(pair.ratio(0), Some(2.0));
        assert_eq!(pair.ratio(1), Some(0.0));
        assert_eq!(pair.q().probs(), &[0.25; 4]);

        let degenerate = joint_from_matrix(&[vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            degenerate.conditional_w_given_s(1),
            Err(Error::DegenerateMarginal(_))
        ));
        assert_eq!(degenerate.conditional_w_given_s(0).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn independent_joint_has_unit_ratios() {
        let ps = FiniteDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let pw = FiniteDistribution::new(vec![0.6, 0.4]).unwrap();
        let joint = JointFinite::independent(&ps, &pw).unwrap();
        for (r, _) in joint.product_pair().support() {
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_renormalizes_within_tolerance() {
        let joint = joint_from_matrix(&[vec![0.5 + 4e-10, 0.5]]).unwrap();
        let total: f64 = joint.flat().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(joint_from_matrix(&[vec![0.5, 0.6]]).is_err());
        assert!(joint_from_matrix(&[vec![0.5, 0.5], vec![0.0]]).is_err());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let d = make_distribution(&[1.0, 3.0, 7.0]).unwrap();
        let back = FiniteDistribution::from_json_str(&d.to_json_string()).unwrap();
        assert_eq!(d, back);

        let pair = AbsContPair::from_probs(vec![0.1, 0.9], vec![0.3, 0.7]).unwrap();
        let back = AbsContPair::from_json_str(&pair.to_json_string()).unwrap();
        assert_eq!(pair, back);

        let joint = joint_from_matrix(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let text = joint.to_json_string();
        assert!(text.starts_with("{\"matrix\""));
        assert_eq!(JointFinite::from_json_str(&text).unwrap(), joint);
    }

    #[test]
    fn json_errors_carry_position() {
        let err = FiniteDistribution::from_json_str("{\"probs\": [0.5,\n 0.5,]}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(FiniteDistribution::from_json_str("{\"probs\":[1.0],\"extra\":1}").is_err());
        assert!(FiniteDistribution::from_json_str("{\"probs\":[0.5,0.6]}").is_err());
    }
}
