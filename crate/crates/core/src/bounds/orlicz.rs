use crate::dist::{AbsContPair, EventMask, JointFinite};
use crate::divergences::{amemiya_norm, amemiya_norm_of, luxemburg_indicator_norm, luxemburg_norm_of, OrliczSpec};
use crate::error::{ensure, Error, Result};

use super::{check_q, degenerate, BoundResult};

/// `gamma Q(E) + ||1_E||_psi * ||[dP/dQ - gamma]_+||^A_{psi*}`.
pub fn bound_orlicz(pair: &AbsContPair, event: &EventMask, gamma: f64, spec: &OrliczSpec) -> Result<BoundResult> {
    ensure(event.len() == pair.len(), || {
        Error::Shape(format!("mask over {} atoms, pair over {}", event.len(), pair.len()))
    })?;
    ensure(gamma.is_finite(), || Error::Range(format!("gamma must be finite, got {gamma}")))?;
    let q = pair.q_of(event);
    let norm = amemiya_norm(pair, gamma, spec)?;
    bound_orlicz_with_norm(q, gamma, norm, spec)
}

/// Same bound from a precomputed Amemiya term, so one pair can serve many events.
pub fn bound_orlicz_with_norm(q: f64, gamma: f64, amemiya: f64, spec: &OrliczSpec) -> Result<BoundResult> {
    let q = check_q(q)?;
    let name = "orlicz";
    if let Some(b) = degenerate(name, q) {
        return Ok(b.param("gamma", gamma));
    }
    let ind = luxemburg_indicator_norm(q, spec)?;
    Ok(BoundResult::new(name, gamma * q + ind * amemiya)
        .param("gamma", gamma)
        .param("indicator_norm", ind)
        .param("amemiya_norm", amemiya))
}

/// Fiber-wise bound on a joint law. `event` indexes atoms `s * n_w + w`; the inner norms
/// use `phi` under `P_S` per output `w`, the outer norms use `psi` under `P_W`.
pub fn bound_orlicz_joint(
    joint: &JointFinite,
    event: &EventMask,
    gamma: f64,
    psi: &OrliczSpec,
    phi: &OrliczSpec,
) -> Result<BoundResult> {
    let (n_s, n_w) = (joint.n_s(), joint.n_w());
    ensure(event.len() == n_s * n_w, || {
        Error::Shape(format!("mask over {} atoms, joint has {}", event.len(), n_s * n_w))
    })?;
    ensure(gamma >= 0.0 && gamma.is_finite(), || {
        Error::Range(format!("gamma must be finite and nonnegative, got {gamma}"))
    })?;
    psi.validate()?;
    phi.validate()?;
    let ps = joint.marginal_s();
    let pw = joint.marginal_w();
    let product_mass: f64 = event.indices().map(|i| ps[i / n_w] * pw[i % n_w]).sum();

    let mut indicator = Vec::with_capacity(n_w);
    let mut tails = Vec::with_capacity(n_w);
    let mut weights = Vec::with_capacity(n_w);
    let mut skipped = 0usize;
    for w in 0..n_w {
        if pw[w] <= 0.0 {
            skipped += 1;
            continue;
        }
        let fiber_q: f64 = (0..n_s).filter(|&s| event.contains(s * n_w + w)).map(|s| ps[s]).sum();
        let ind = if fiber_q > 0.0 {
            luxemburg_indicator_norm(fiber_q.min(1.0), phi)?
        } else {
            0.0
        };
        let excess: Vec<f64> = (0..n_s)
            .map(|s| {
                if ps[s] > 0.0 {
                    (joint.mass(s, w) / (ps[s] * pw[w]) - gamma).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        indicator.push(ind);
        tails.push(amemiya_norm_of(&excess, ps, phi)?);
        weights.push(pw[w]);
    }
    let outer_ind = luxemburg_norm_of(&indicator, &weights, psi)?;
    let outer_tail = amemiya_norm_of(&tails, &weights, psi)?;
    let mut result = BoundResult::new("orlicz_joint", gamma * product_mass + outer_ind * outer_tail)
        .param("gamma", gamma)
        .param("product_mass", product_mass)
        .param("indicator_norm", outer_ind)
        .param("amemiya_norm", outer_tail)
        .precondition("all_fibers_nondegenerate", skipped == 0);
    if skipped > 0 {
        result = result.note(format!("{skipped} output(s) with P_W(w) = 0 skipped"));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::joint_from_matrix;

    fn pair() -> AbsContPair {
        AbsContPair::from_probs(vec![0.5, 0.3, 0.2, 0.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap()
    }

    #[test]
    fn gamma_at_max_ratio_leaves_only_linear_term() {
        let p = pair();
        let e = EventMask::from_indices(4, &[0, 1]).unwrap();
        let g = p.max_ratio();
        let b = bound_orlicz(&p, &e, g, &OrliczSpec::power(2.0).unwrap()).unwrap();
        assert!((b.raw - g * p.q_of(&e)).abs() < 1e-15);
        assert!(p.p_of(&e) <= b.raw + 1e-12);
    }

    #[test]
    fn gamma_zero_power_is_holder() {
        let p = pair();
        let e = EventMask::from_indices(4, &[0, 2]).unwrap();
        let b = bound_orlicz(&p, &e, 0.0, &OrliczSpec::power(2.0).unwrap()).unwrap();
        // kappa = alpha = 2: Amemiya norm of r under u^2/2 equals sqrt(2 E r^2), indicator sqrt(q/2).
        let second: f64 = p.support().map(|(r, q)| q * r * r).sum();
        let expect = (p.q_of(&e) / 2.0).sqrt() * (2.0 * second).sqrt();
        assert!((b.raw - expect).abs() < 1e-7, "{} vs {expect}", b.raw);
        assert!(p.p_of(&e) <= b.raw);
    }

    #[test]
    fn joint_bound_is_sound_on_all_events() {
        let j = joint_from_matrix(&[vec![0.1, 0.05, 0.1], vec![0.02, 0.3, 0.03], vec![0.2, 0.1, 0.1]]).unwrap();
        let psi = OrliczSpec::power(2.0).unwrap();
        let phi = OrliczSpec::power(3.0).unwrap();
        let flat = j.flat().to_vec();
        for e in crate::dist::enumerate_events(9).unwrap().step_by(7) {
            let truth: f64 = e.indices().map(|i| flat[i]).sum();
            for &g in &[0.0, 1.0, 2.0] {
                let b = bound_orlicz_joint(&j, &e, g, &psi, &phi).unwrap();
                assert!(truth <= b.raw + 1e-9, "{e}: {truth} > {}", b.raw);
            }
        }
    }

    #[test]
    fn joint_skips_empty_outputs() {
        let j = joint_from_matrix(&[vec![0.5, 0.0], vec![0.5, 0.0]]).unwrap();
        let e = EventMask::from_indices(4, &[0]).unwrap();
        let p = OrliczSpec::power(2.0).unwrap();
        let b = bound_orlicz_joint(&j, &e, 0.0, &p, &p).unwrap();
        assert!(!b.applicable());
        assert!(b.raw >= 0.5 - 1e-12);
    }
}
