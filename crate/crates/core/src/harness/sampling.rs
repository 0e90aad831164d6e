//! Deterministic rejection sampling of phase points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::scenario::Scenario;
use crate::spray::PhasePoint;

/// Draws after which a low acceptance rate is fatal.
pub const MIN_DRAWS: usize = 100_000;
/// Minimum acceptance rate, in percent.
pub const MIN_ACCEPT_PERCENT: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sampling exhausted: {accepted} of {draws} draws admitted")]
pub struct SamplingExhausted {
    pub accepted: usize,
    pub draws: usize,
}

/// Held-out points use a stream derived from the sample seed.
pub fn held_out_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

pub fn sample_points(sc: &Scenario) -> Result<Vec<PhasePoint>, SamplingExhausted> {
    sample_with(sc, sc.spec.samples.count, sc.spec.samples.seed)
}

pub fn sample_with(sc: &Scenario, count: usize, seed: u64) -> Result<Vec<PhasePoint>, SamplingExhausted> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut draws = 0usize;
    let draw = |rng: &mut ChaCha8Rng, b: &[[f64; 2]]| -> Vec<f64> {
        b.iter().map(|[lo, hi]| rng.gen_range(*lo..*hi)).collect()
    };
    while out.len() < count {
        let p = PhasePoint::new(draw(&mut rng, &sc.x_box), draw(&mut rng, &sc.y_box));
        draws += 1;
        if sc.admits(&p) {
            out.push(p);
        }
        if draws >= MIN_DRAWS && out.len() * 100 < draws * MIN_ACCEPT_PERCENT {
            return Err(SamplingExhausted { accepted: out.len(), draws });
        }
    }
    Ok(out)
}
