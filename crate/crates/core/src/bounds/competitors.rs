//! Earlier bounds each of ours is compared against, one per generator.

use crate::divergences::DivergenceKind;
use crate::error::{ensure, Error, Result};
use crate::optim;

use super::{bound_chi2, check_div, check_q, degenerate, kl_value, BoundResult};

/// Competitor bound for `kind` at the given parameter (`c`, or `s` for the power row),
/// or at the optimized parameter when `param` is `None`.
pub fn competitor_bound(q: f64, kind: DivergenceKind, div: f64, param: Option<f64>) -> Result<BoundResult> {
    kind.validate()?;
    let q = check_q(q)?;
    let d = check_div(div, "divergence")?;
    let name = format!("competitor_{}", kind.name());
    if let Some(b) = degenerate(&name, q) {
        return Ok(b);
    }
    if let Some(c) = param {
        let positive = !matches!(kind, DivergenceKind::PowerBeta { .. });
        ensure(c.is_finite() && (!positive || c > 0.0), || {
            Error::Range(format!("competitor parameter out of range: {c}"))
        })?;
    }
    let at_c = |f: &dyn Fn(f64) -> f64| -> (f64, f64) {
        match param {
            Some(c) => (c, f(c)),
            None => {
                let m = optim::minimize_positive(f);
                (m.x, m.value)
            }
        }
    };
    let result = match kind {
        DivergenceKind::Kl => {
            let (c, v) = at_c(&|c| kl_value(q, d, c));
            BoundResult::new(name, v).param("c", c)
        }
        DivergenceKind::Chi2 => {
            let mut b = bound_chi2(q, d)?;
            b.name = name;
            b
        }
        DivergenceKind::PowerBeta { beta } => {
            let log_k = ((beta - 1.0) * d).ln_1p();
            let (s, v) = match param {
                Some(s) => (s, competitor_power_at(q, log_k, beta, s)),
                None => {
                    // Negative side on a log bracket, the rest linearly; the infimum
                    // can sit far out at large negative s.
                    let f = |s: f64| competitor_power_at(q, log_k, beta, s);
                    let neg = optim::minimize_log(|t| f(-t), 1e-12, 1e6, 145);
                    let pos = optim::minimize_scan(f, 0.0, 1.0, 41);
                    if neg.value < pos.value {
                        (-neg.x, neg.value)
                    } else {
                        (pos.x, pos.value)
                    }
                }
            };
            BoundResult::new(name, v).param("s", s).param("beta", beta)
        }
        DivergenceKind::SquaredHellinger => {
            let x = 1.0 - d;
            let mut b = match param {
                Some(c) => BoundResult::new(name, competitor_hellinger_at(q, x, c)).param("c", c),
                None => {
                    let (c, v) = hellinger_optimum(q, x);
                    BoundResult::new(name, v).param("c", c)
                }
            };
            b = b.param("x", x).precondition("h2_at_most_1", x >= 0.0);
            b
        }
        DivergenceKind::ReverseChi2 => {
            let (c, v) = at_c(&|c| competitor_reverse_chi2_at(q, d, c));
            BoundResult::new(name, v).param("c", c)
        }
        DivergenceKind::ReverseKl => {
            let (c, v) = at_c(&|c| competitor_reverse_kl_at(q, d, c));
            BoundResult::new(name, v).param("c", c)
        }
        DivergenceKind::VinczeLeCam => match param {
            Some(c) => BoundResult::new(name, competitor_vc_at(q, d, c)).param("c", c),
            None => {
                let (r, c) = vc_optimal_parameters(q, d);
                let v = if c.is_finite() { competitor_vc_at(q, d, c) } else { q };
                BoundResult::new(name, v).param("c", c).param("r", r)
            }
        },
        other => {
            return Err(Error::Spec(format!("no competitor bound is defined for `{other}`")));
        }
    };
    Ok(result)
}

/// `s + K^(1/beta) (q (1-s)_+^a + (1-q) (-s)_+^a)^(1/a)` with `a = beta/(beta-1)`.
pub fn competitor_power_at(q: f64, log_k: f64, beta: f64, s: f64) -> f64 {
    let a = beta / (beta - 1.0);
    let pos = (1.0 - s).max(0.0);
    let neg = (-s).max(0.0);
    let inner = q * pos.powf(a) + (1.0 - q) * neg.powf(a);
    s + (log_k / beta).exp() * inner.powf(1.0 / a)
}

/// `1 + c - c (1 + c) x^2 / (q + c)` with `x = 1 - H^2`.
pub fn competitor_hellinger_at(q: f64, x: f64, c: f64) -> f64 {
    1.0 + c - c * (1.0 + c) * x * x / (q + c)
}

/// Closed-form optimum `c* = -q + sqrt(x^2 q (1-q) / (1 - x^2))`; when `c* <= 0` the
/// infimum is approached as `c -> 0` and equals 1.
fn hellinger_optimum(q: f64, x: f64) -> (f64, f64) {
    if x >= 1.0 {
        return (f64::INFINITY, q);
    }
    if x < 0.0 || x * x <= q {
        return (0.0, 1.0);
    }
    let c = -q + (x * x * q * (1.0 - q) / (1.0 - x * x)).sqrt();
    (c, competitor_hellinger_at(q, x, c))
}

/// `1 + c - (q sqrt(c) + (1-q) sqrt(1+c))^2 / (1 + r)`.
pub fn competitor_reverse_chi2_at(q: f64, r: f64, c: f64) -> f64 {
    let s = q * c.sqrt() + (1.0 - q) * (1.0 + c).sqrt();
    1.0 + c - s * s / (1.0 + r)
}

/// `1 + c - c^q (1+c)^(1-q) e^(-D)`.
pub fn competitor_reverse_kl_at(q: f64, d: f64, c: f64) -> f64 {
    1.0 + c - (q * c.ln() + (1.0 - q) * c.ln_1p() - d).exp()
}

/// `A(c) = 2(1+c) - q - 4 (q sqrt(c) + (1-q) sqrt(1+c))^2 / (V + 2)`.
pub fn competitor_vc_at(q: f64, v: f64, c: f64) -> f64 {
    let s = q * c.sqrt() + (1.0 - q) * (1.0 + c).sqrt();
    2.0 * (1.0 + c) - q - 4.0 * s * s / (v + 2.0)
}

/// `(r*, c*)` minimizing `A`; `V = 0` pushes `r*` to 1 and `c*` to infinity.
pub fn vc_optimal_parameters(q: f64, v: f64) -> (f64, f64) {
    let k = 4.0 * q * (1.0 - q);
    let r = (v + k - (v * (v + 2.0 * k)).sqrt()) / k;
    if r >= 1.0 {
        return (1.0, f64::INFINITY);
    }
    (r, r * r / (1.0 - r * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{
        bound_hellinger, bound_kl, bound_reverse_chi2, bound_reverse_kl, bound_vincze_lecam, hellinger_closed,
        ReverseKlMode,
    };

    #[test]
    fn kl_and_chi2_rows_coincide() {
        let ours = bound_kl(0.1, 0.3, None).unwrap().raw;
        let theirs = competitor_bound(0.1, DivergenceKind::Kl, 0.3, None).unwrap().raw;
        assert!((ours - theirs).abs() < 1e-12);
        let ours = bound_chi2(0.1, 0.3).unwrap().raw;
        let theirs = competitor_bound(0.1, DivergenceKind::Chi2, 0.3, None).unwrap().raw;
        assert_eq!(ours, theirs);
    }

    #[test]
    fn hellinger_closed_optimum() {
        for &(q, h2) in &[(0.04, 0.1), (0.1, 0.3), (0.2, 0.05)] {
            let x: f64 = 1.0 - h2;
            let b = competitor_bound(q, DivergenceKind::SquaredHellinger, h2, None).unwrap();
            let closed = (((1.0 - x * x) * (1.0 - q)).sqrt() + x * q.sqrt()).powi(2);
            assert!((b.raw - closed).abs() < 1e-10);
            let numeric = optim::minimize_positive(|c| competitor_hellinger_at(q, x, c));
            assert!(b.raw <= numeric.value + 1e-10);
            let ours = bound_hellinger(q, h2).unwrap().raw;
            assert!(ours <= b.raw + 1e-12);
            assert!((hellinger_closed(q, x) - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn dominance_on_reverse_rows() {
        for &q in &[0.02, 0.3, 0.7] {
            for &d in &[0.01, 0.2, 1.5] {
                let ours = bound_reverse_chi2(q, d).unwrap().raw;
                let theirs = competitor_bound(q, DivergenceKind::ReverseChi2, d, None).unwrap().raw;
                assert!(ours <= theirs + 1e-10, "rchi2 q={q} d={d}: {ours} vs {theirs}");
                let ours = bound_reverse_kl(q, d, ReverseKlMode::Exact).unwrap().raw;
                let theirs = competitor_bound(q, DivergenceKind::ReverseKl, d, None).unwrap().raw;
                assert!(ours <= theirs + 1e-10, "rkl q={q} d={d}: {ours} vs {theirs}");
                let v = d.min(2.0);
                let ours = bound_vincze_lecam(q, v).unwrap().raw;
                let theirs = competitor_bound(q, DivergenceKind::VinczeLeCam, v, None).unwrap().raw;
                assert!((ours - theirs).abs() < 1e-9, "vc q={q} v={v}: {ours} vs {theirs}");
            }
        }
    }

    #[test]
    fn vc_stationary_point_is_the_minimum() {
        let (q, v) = (0.2, 0.3);
        let (_, c) = vc_optimal_parameters(q, v);
        let at = competitor_vc_at(q, v, c);
        for &k in &[0.5, 0.9, 1.1, 2.0] {
            assert!(competitor_vc_at(q, v, c * k) >= at - 1e-14);
        }
    }

    #[test]
    fn power_row_is_convex_and_above_q() {
        let b = competitor_bound(0.1, DivergenceKind::PowerBeta { beta: 2.0 }, 0.0, None).unwrap();
        assert!(b.raw >= 0.1 - 1e-9 && b.raw <= 0.1 + 1e-6, "{}", b.raw);
        assert!(competitor_power_at(0.1, 0.0, 2.0, -3.0) >= 0.1);
        assert!(competitor_bound(0.1, DivergenceKind::Tv, 0.1, None).is_err());
    }
}
