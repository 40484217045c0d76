//! Change-of-measure inequalities and information-theoretic generalization bounds,
//! evaluated and verified exactly on finite probability spaces.
//!
//! The crate is layered bottom-up:
//!
//! - [`dist`]: finite distributions, absolutely continuous pairs, events, joints
//! - [`divergences`]: f-divergences, Rényi, Sibson information, Orlicz norms
//! - [`bounds`]: upper bounds on `P(E)` from `Q(E)` and a divergence
//! - [`gen`]: tail, PAC-Bayes, CMI, privacy and average generalization bounds
//! - [`lab`]: exhaustive verification and exactly enumerable learning experiments

pub mod bounds;
pub mod dist;
pub mod divergences;
pub mod error;
pub mod gen;
pub mod lab;
pub mod optim;
pub mod serde_float;

pub use dist::{
    enumerate_events, event_probability, joint_from_matrix, make_distribution, make_pair,
    AbsContPair, EventMask, FiniteDistribution, JointFinite,
};
pub use divergences::{DivergenceKind, DivergenceValue};
pub use error::{Error, Result};
