use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{make_distribution, AbsContPair};
use crate::error::Result;

use super::gibbs::GibbsExperiment;

/// Chance that a random pair gets some `P` atoms zeroed.
pub const ZERO_PLANT_RATE: f64 = 0.2;

/// The private stream of trial `trial` under suite seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn exponentials(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect()
}

/// Normalized exponential weights for both measures. `Q` has full support; with
/// probability [`ZERO_PLANT_RATE`] a random proper subset of `P`'s atoms is zeroed.
pub fn random_pair(rng: &mut impl Rng, support: usize) -> Result<AbsContPair> {
    let q = make_distribution(&exponentials(rng, support))?;
    let mut p = exponentials(rng, support);
    if support > 1 && rng.gen_bool(ZERO_PLANT_RATE) {
        let zeros = rng.gen_range(1..support);
        for i in sample(rng, support, zeros).into_iter() {
            p[i] = 0.0;
        }
    }
    AbsContPair::new(make_distribution(&p)?, q)
}

/// A random Gibbs learner: losses uniform in `[0, 1]`, `P_Z` from normalized exponentials.
pub fn random_gibbs(rng: &mut impl Rng, n: usize, k: usize, m: usize, temperature: f64) -> Result<GibbsExperiment> {
    let p_z = make_distribution(&exponentials(rng, m))?.probs().to_vec();
    let loss = (0..k).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect();
    GibbsExperiment::new(n, p_z, loss, 0.0, 1.0, temperature)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = random_pair(&mut trial_rng(7, 3), 8).unwrap();
        let b = random_pair(&mut trial_rng(7, 3), 8).unwrap();
        let c = random_pair(&mut trial_rng(7, 4), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zeros_get_planted_sometimes() {
        let planted = (0..500)
            .filter(|&t| random_pair(&mut trial_rng(1, t), 8).unwrap().has_p_null_atom())
            .count();
        assert!((50..150).contains(&planted), "{planted}");
    }
}
