use std::fmt;
use std::str::FromStr;

use crate::bounds::{self, BoundResult, PowerMode, ReverseKlMode};
use crate::dist::AbsContPair;
use crate::divergences::{amemiya_norm, egamma, f_divergence, DivergenceKind, Generator, OrliczSpec};
use crate::error::{ensure, Error, Result};

/// A change-of-measure bound with fixed parameters, addressable by a string id such
/// as `chi2`, `egamma:gamma=2` or `f-via-egamma:kind=power,beta=2,gamma=1.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundSpec {
    EGamma { gamma: f64 },
    StrongConverse { gamma: f64 },
    Chi2,
    Kl { c: Option<f64> },
    Hellinger,
    Power { beta: f64, mode: PowerMode },
    YoungFenchel { kind: DivergenceKind },
    FViaEgamma { kind: DivergenceKind, gamma: f64, lipschitz: bool },
    ReverseChi2,
    ReverseKl { mode: ReverseKlMode },
    VinczeLeCam,
    Orlicz { kappa: f64, gamma: f64 },
    Competitor { kind: DivergenceKind },
    /// The chi2 bound without its square root. Not a bound; the harness must catch it.
    CorruptedChi2,
}

impl BoundSpec {
    /// Every change-of-measure bound checked by the master suite.
    pub fn master_suite() -> Vec<BoundSpec> {
        use BoundSpec::*;
        let mut out = Vec::new();
        for &gamma in &[0.5, 1.0, 2.0, 5.0] {
            out.push(EGamma { gamma });
            out.push(StrongConverse { gamma });
        }
        out.extend([Chi2, Kl { c: None }, Kl { c: Some(1.0) }, Hellinger]);
        for &beta in &[1.5, 2.0, 4.0] {
            out.push(Power { beta, mode: PowerMode::Implicit });
            out.push(Power { beta, mode: PowerMode::RelaxedU0 });
        }
        for &q_max in &[0.5, 0.9] {
            out.push(Power {
                beta: 2.0,
                mode: PowerMode::RelaxedM { q_max },
            });
        }
        let via = [
            DivergenceKind::Kl,
            DivergenceKind::Chi2,
            DivergenceKind::SquaredHellinger,
            DivergenceKind::PowerBeta { beta: 1.5 },
            DivergenceKind::PowerBeta { beta: 3.0 },
            DivergenceKind::ReverseKl,
            DivergenceKind::ReverseChi2,
            DivergenceKind::VinczeLeCam,
            DivergenceKind::Tv,
        ];
        for kind in via {
            for &gamma in &[1.5, 3.0] {
                out.push(FViaEgamma { kind, gamma, lipschitz: false });
                if bounds::lipschitz_on_tail(kind, gamma).is_some() {
                    out.push(FViaEgamma { kind, gamma, lipschitz: true });
                }
            }
        }
        out.extend([
            ReverseChi2,
            ReverseKl { mode: ReverseKlMode::Exact },
            ReverseKl { mode: ReverseKlMode::Explicit },
            ReverseKl { mode: ReverseKlMode::ExplicitSound },
            VinczeLeCam,
        ]);
        for &kappa in &[2.0, 3.0] {
            for &gamma in &[0.0, 1.0, 2.0] {
                out.push(Orlicz { kappa, gamma });
            }
        }
        for kind in [
            DivergenceKind::Kl,
            DivergenceKind::Chi2,
            DivergenceKind::PowerBeta { beta: 2.0 },
            DivergenceKind::SquaredHellinger,
            DivergenceKind::ReverseChi2,
            DivergenceKind::ReverseKl,
            DivergenceKind::VinczeLeCam,
        ] {
            out.push(Competitor { kind });
        }
        out
    }

    /// The Young-Fenchel bound for every kind whose generator vanishes at 1.
    pub fn young_fenchel_suite() -> Vec<BoundSpec> {
        DivergenceKind::f_kinds()
            .into_iter()
            .filter(|k| k.f(1.0) == 0.0)
            .map(|kind| BoundSpec::YoungFenchel { kind })
            .collect()
    }

    /// The pair-level statistic the bound consumes: a divergence, a tail mass or a norm.
    pub fn prepare(&self, pair: &AbsContPair) -> Result<f64> {
        let div = |kind: DivergenceKind| f_divergence(pair, kind).map(|v| v.value);
        match *self {
            BoundSpec::EGamma { gamma } => Ok(egamma(pair, gamma)),
            BoundSpec::StrongConverse { gamma } => Ok(pair.p_of(&pair.ratio_exceeds(gamma))),
            BoundSpec::Chi2 | BoundSpec::CorruptedChi2 => div(DivergenceKind::Chi2),
            BoundSpec::Kl { .. } => div(DivergenceKind::Kl),
            BoundSpec::Hellinger => div(DivergenceKind::SquaredHellinger),
            BoundSpec::Power { beta, .. } => div(DivergenceKind::PowerBeta { beta }),
            BoundSpec::YoungFenchel { kind } | BoundSpec::FViaEgamma { kind, .. } | BoundSpec::Competitor { kind } => {
                div(kind)
            }
            BoundSpec::ReverseChi2 => div(DivergenceKind::ReverseChi2),
            BoundSpec::ReverseKl { .. } => div(DivergenceKind::ReverseKl),
            BoundSpec::VinczeLeCam => div(DivergenceKind::VinczeLeCam),
            BoundSpec::Orlicz { kappa, gamma } => amemiya_norm(pair, gamma, &OrliczSpec::power(kappa)?),
        }
    }

    /// The bound at `q = Q(E)` from the prepared statistic.
    pub fn evaluate(&self, stat: f64, q: f64) -> Result<BoundResult> {
        match *self {
            BoundSpec::EGamma { gamma } => bounds::bound_egamma(q, stat, gamma),
            BoundSpec::StrongConverse { gamma } => Ok(bounds::strong_converse_value(bounds::check_q(q)?, stat, gamma)),
            BoundSpec::Chi2 => bounds::bound_chi2(q, stat),
            BoundSpec::Kl { c } => {
                let q = bounds::check_q(q)?;
                match bounds::degenerate("kl", q) {
                    Some(b) => Ok(b),
                    None => bounds::bound_kl(q, stat, c),
                }
            }
            BoundSpec::Hellinger => bounds::bound_hellinger(q, stat.min(2.0)),
            BoundSpec::Power { beta, mode } => bounds::bound_power_beta(q, stat, beta, mode),
            BoundSpec::YoungFenchel { kind } => bounds::bound_young_fenchel(q, stat, &Generator::Kind(kind), None, None),
            BoundSpec::FViaEgamma { kind, gamma, lipschitz } => {
                let l = if lipschitz {
                    Some(bounds::lipschitz_on_tail(kind, gamma).ok_or_else(|| {
                        Error::Spec(format!("no Lipschitz constant for `{kind}` on [{gamma}, inf)"))
                    })?)
                } else {
                    None
                };
                bounds::bound_f_via_egamma(q, stat, &Generator::Kind(kind), gamma, l)
            }
            BoundSpec::ReverseChi2 => bounds::bound_reverse_chi2(q, stat),
            BoundSpec::ReverseKl { mode } => bounds::bound_reverse_kl(q, stat, mode),
            BoundSpec::VinczeLeCam => bounds::bound_vincze_lecam(q, stat.min(2.0)),
            BoundSpec::Orlicz { kappa, gamma } => {
                bounds::bound_orlicz_with_norm(q, gamma, stat, &OrliczSpec::power(kappa)?)
            }
            BoundSpec::Competitor { kind } => {
                let d = match kind {
                    DivergenceKind::SquaredHellinger => stat.min(2.0),
                    DivergenceKind::VinczeLeCam => stat.min(2.0),
                    _ => stat,
                };
                bounds::competitor_bound(q, kind, d, None)
            }
            BoundSpec::CorruptedChi2 => {
                let q = bounds::check_q(q)?;
                Ok(BoundResult::new("corrupted_chi2", q + q * (1.0 - q) * stat))
            }
        }
    }
}

fn write_kind(f: &mut fmt::Formatter<'_>, kind: DivergenceKind) -> fmt::Result {
    write!(f, "kind={}", kind.name())?;
    match kind {
        DivergenceKind::PowerBeta { beta } => write!(f, ",beta={beta}"),
        DivergenceKind::EGamma { gamma } => write!(f, ",gamma={gamma}"),
        DivergenceKind::Renyi { alpha } => write!(f, ",alpha={alpha}"),
        _ => Ok(()),
    }
}

impl fmt::Display for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BoundSpec::EGamma { gamma } => write!(f, "egamma:gamma={gamma}"),
            BoundSpec::StrongConverse { gamma } => write!(f, "strong-converse:gamma={gamma}"),
            BoundSpec::Chi2 => f.write_str("chi2"),
            BoundSpec::Kl { c: None } => f.write_str("kl"),
            BoundSpec::Kl { c: Some(c) } => write!(f, "kl:c={c}"),
            BoundSpec::Hellinger => f.write_str("hellinger"),
            BoundSpec::Power { beta, mode } => match mode {
                PowerMode::Implicit => write!(f, "power-implicit:beta={beta}"),
                PowerMode::RelaxedM { q_max } => write!(f, "power-relaxed-m:beta={beta},q_max={q_max}"),
                PowerMode::RelaxedU0 => write!(f, "power-relaxed-u0:beta={beta}"),
            },
            BoundSpec::YoungFenchel { kind } => {
                f.write_str("young-fenchel:")?;
                write_kind(f, kind)
            }
            BoundSpec::FViaEgamma { kind, gamma, lipschitz } => {
                f.write_str(if lipschitz { "f-via-egamma-lipschitz:" } else { "f-via-egamma:" })?;
                write_kind(f, kind)?;
                write!(f, ",gamma={gamma}")
            }
            BoundSpec::ReverseChi2 => f.write_str("reverse-chi2"),
            BoundSpec::ReverseKl { mode } => f.write_str(match mode {
                ReverseKlMode::Exact => "reverse-kl-exact",
                ReverseKlMode::Explicit => "reverse-kl-explicit",
                ReverseKlMode::ExplicitSound => "reverse-kl-explicit-sound",
            }),
            BoundSpec::VinczeLeCam => f.write_str("vc"),
            BoundSpec::Orlicz { kappa, gamma } => write!(f, "orlicz:kappa={kappa},gamma={gamma}"),
            BoundSpec::Competitor { kind } => {
                f.write_str("competitor:")?;
                write_kind(f, kind)
            }
            BoundSpec::CorruptedChi2 => f.write_str("corrupted-chi2"),
        }
    }
}

struct Params<'a> {
    id: &'a str,
    items: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn parse(id: &'a str, rest: &'a str) -> Result<Self> {
        let items = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                item.split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| Error::Validation(format!("expected key=value, got `{item}` in `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { id, items })
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        for (k, _) in &self.items {
            ensure(keys.contains(k), || {
                Error::Validation(format!("unknown parameter `{k}` in `{}`", self.id))
            })?;
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.items.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Validation(format!("`{v}` is not a number in `{}`", self.id)))
            })
            .transpose()
    }

    fn need(&self, key: &str) -> Result<f64> {
        self.num(key)?
            .ok_or_else(|| Error::Validation(format!("`{}` needs {key}=...", self.id)))
    }

    fn kind(&self, gamma_is_kind: bool) -> Result<DivergenceKind> {
        let name = self
            .raw("kind")
            .ok_or_else(|| Error::Validation(format!("`{}` needs kind=...", self.id)))?;
        let gamma = if gamma_is_kind { self.num("gamma")? } else { None };
        DivergenceKind::from_name(name, self.num("beta")?, gamma, self.num("alpha")?)
    }
}

impl FromStr for BoundSpec {
    type Err = Error;

    fn from_str(id: &str) -> Result<Self> {
        let (name, rest) = id.split_once(':').unwrap_or((id, ""));
        let p = Params::parse(id, rest)?;
        let spec = match name.trim() {
            "egamma" => {
                p.allow(&["gamma"])?;
                BoundSpec::EGamma { gamma: p.need("gamma")? }
            }
            "strong-converse" => {
                p.allow(&["gamma"])?;
                BoundSpec::StrongConverse { gamma: p.need("gamma")? }
            }
            "chi2" => {
                p.allow(&[])?;
                BoundSpec::Chi2
            }
            "kl" => {
                p.allow(&["c"])?;
                BoundSpec::Kl { c: p.num("c")? }
            }
            "hellinger" => {
                p.allow(&[])?;
                BoundSpec::Hellinger
            }
            "power-implicit" | "power-relaxed-u0" | "power-relaxed-m" => {
                let mode = match name {
                    "power-implicit" => {
                        p.allow(&["beta"])?;
                        PowerMode::Implicit
                    }
                    "power-relaxed-u0" => {
                        p.allow(&["beta"])?;
                        PowerMode::RelaxedU0
                    }
                    _ => {
                        p.allow(&["beta", "q_max"])?;
                        PowerMode::RelaxedM { q_max: p.need("q_max")? }
                    }
                };
                let beta = p.need("beta")?;
                DivergenceKind::PowerBeta { beta }.validate()?;
                BoundSpec::Power { beta, mode }
            }
            "young-fenchel" => {
                p.allow(&["kind", "beta", "gamma"])?;
                BoundSpec::YoungFenchel { kind: p.kind(true)? }
            }
            "f-via-egamma" | "f-via-egamma-lipschitz" => {
                p.allow(&["kind", "beta", "gamma"])?;
                let kind = p.kind(false)?;
                ensure(!matches!(kind, DivergenceKind::EGamma { .. } | DivergenceKind::Renyi { .. }), || {
                    Error::Validation(format!("`{id}` needs an f-divergence other than E_gamma"))
                })?;
                BoundSpec::FViaEgamma {
                    kind,
                    gamma: p.need("gamma")?,
                    lipschitz: name == "f-via-egamma-lipschitz",
                }
            }
            "reverse-chi2" => {
                p.allow(&[])?;
                BoundSpec::ReverseChi2
            }
            "reverse-kl-exact" | "reverse-kl-explicit" | "reverse-kl-explicit-sound" => {
                p.allow(&[])?;
                let mode = match name {
                    "reverse-kl-exact" => ReverseKlMode::Exact,
                    "reverse-kl-explicit" => ReverseKlMode::Explicit,
                    _ => ReverseKlMode::ExplicitSound,
                };
                BoundSpec::ReverseKl { mode }
            }
            "vc" => {
                p.allow(&[])?;
                BoundSpec::VinczeLeCam
            }
            "orlicz" => {
                p.allow(&["kappa", "gamma"])?;
                let kappa = p.need("kappa")?;
                OrliczSpec::power(kappa)?;
                BoundSpec::Orlicz {
                    kappa,
                    gamma: p.need("gamma")?,
                }
            }
            "competitor" => {
                p.allow(&["kind", "beta", "gamma"])?;
                BoundSpec::Competitor { kind: p.kind(true)? }
            }
            "corrupted-chi2" => {
                p.allow(&[])?;
                BoundSpec::CorruptedChi2
            }
            other => return Err(Error::Lookup(other.to_string())),
        };
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        let mut all = BoundSpec::master_suite();
        all.extend(BoundSpec::young_fenchel_suite());
        all.push(BoundSpec::CorruptedChi2);
        for spec in all {
            let id = spec.to_string();
            let back: BoundSpec = id.parse().unwrap();
            assert_eq!(back, spec, "{id}");
        }
    }

    #[test]
    fn unknown_ids_and_keys_are_rejected() {
        assert!(matches!("nope".parse::<BoundSpec>(), Err(Error::Lookup(_))));
        assert!(matches!("chi2:x=1".parse::<BoundSpec>(), Err(Error::Validation(_))));
        assert!("egamma".parse::<BoundSpec>().is_err());
        assert!("f-via-egamma:kind=egamma,gamma=2".parse::<BoundSpec>().is_err());
    }
}
