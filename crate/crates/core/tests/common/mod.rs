use rand::Rng;
use rand_chacha::ChaCha8Rng;

use trialbandit::{ArmId, TrialState};

/// A state reachable after initialization: every arm has at least `b` pulls,
/// with responses that are sometimes constant (σ̂ = 0) or tied across arms.
pub fn random_state(rng: &mut ChaCha8Rng) -> TrialState {
    let c = rng.random_range(1..=8);
    let k = rng.random_range(2..=4);
    let b = rng.random_range(2..=5);
    let extra = rng.random_range(0..200);
    let mut state = TrialState::new(c, k, b * c * k + extra).unwrap();
    let style = rng.random_range(0..4);
    let base: Vec<f64> = (0..c * k).map(|_| rng.random_range(-5.0..5.0)).collect();
    let respond = |rng: &mut ChaCha8Rng, a: usize| match style {
        0 => 1.0,
        1 => base[a].round(),
        _ => base[a] + rng.random_range(-3.0..3.0),
    };
    for _ in 0..b {
        for a in 0..c * k {
            let x = respond(rng, a);
            state.record(ArmId::from_flat(a, k), x).unwrap();
        }
    }
    for _ in 0..extra {
        let a = rng.random_range(0..c * k);
        let x = respond(rng, a);
        state.record(ArmId::from_flat(a, k), x).unwrap();
    }
    state
}
