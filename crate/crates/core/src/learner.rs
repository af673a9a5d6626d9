//! Greedy Boolean learning of the readout mask.
//!
//! Each epoch picks one mask position by the biased random rule
//! `argmax(rand(N) ⊙ w_bias)`, flips it, scores the new mask, and keeps the
//! flip only if the error strictly improves on the last accepted error.
//! Afterwards every bias grows by `1/N` and the tested position's bias is
//! reset to zero, so recently tested positions are unlikely to be picked
//! again for about `N` epochs.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::LearningCurve;
use crate::error::{Error, Result};
use crate::readout::BooleanReadout;
use crate::reservoir::seeded;

const STREAM_LEARNER: u64 = 0x1ea7;

/// Scores a candidate mask. Lower is better; `f64::INFINITY` marks a mask
/// that cannot be scored (for example an empty one).
pub trait Objective {
    /// `flipped` is the position that differs from the last accepted mask,
    /// or `None` when scoring the initial mask.
    fn evaluate(&mut self, mask: &BooleanReadout, flipped: Option<usize>) -> f64;

    /// Called after a flip at `flipped` has been accepted.
    fn accepted(&mut self, _flipped: usize) {}
}

impl<F: FnMut(&BooleanReadout) -> f64> Objective for F {
    fn evaluate(&mut self, mask: &BooleanReadout, _flipped: Option<usize>) -> f64 {
        self(mask)
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-indexed epoch.
    pub k: usize,
    pub position: usize,
    pub eps_tested: f64,
    pub eps_accepted: f64,
    pub reward: bool,
    /// Active mirrors in the accepted mask after this epoch.
    pub hamming_weight: usize,
}

#[derive(Debug, Clone)]
pub struct LearnerState {
    pub mask: BooleanReadout,
    pub w_bias: Vec<f64>,
    /// Last accepted error. `+∞` until the initial mask has been scored.
    pub eps_min: f64,
    pub k: usize,
    pub rng: ChaCha8Rng,
    pub history: Vec<EpochRecord>,
    draws: Vec<f64>,
}

pub fn init_learner(n: usize, seed: u64, initial_mask: BooleanReadout) -> Result<LearnerState> {
    if n == 0 || initial_mask.len() != n {
        return Err(Error::config(format!(
            "initial mask has {} entries, expected {n} > 0",
            initial_mask.len()
        )));
    }
    let mut rng = seeded(seed, STREAM_LEARNER);
    let w_bias = (0..n).map(|_| rng.gen::<f64>()).collect();
    Ok(LearnerState {
        mask: initial_mask,
        w_bias,
        eps_min: f64::INFINITY,
        k: 0,
        rng,
        history: Vec::new(),
        draws: vec![0.0; n],
    })
}

/// Position of the largest `rand_i · w_bias_i`; ties go to the lowest index.
pub fn select_position(state: &mut LearnerState) -> usize {
    for d in state.draws.iter_mut() {
        *d = state.rng.gen::<f64>();
    }
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, (r, b)) in state.draws.iter().zip(&state.w_bias).enumerate() {
        let v = r * b;
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// `true` iff `eps_k` strictly improves on `eps_prev`.
pub fn reward(eps_k: f64, eps_prev: f64) -> bool {
    eps_k < eps_prev
}

/// Keeps the already-applied flip at `position` when rewarded, otherwise
/// flips it back.
pub fn apply_reward(state: &mut LearnerState, position: usize, rewarded: bool, eps_k: f64) {
    if rewarded {
        state.eps_min = eps_k;
    } else {
        state.mask.flip(position);
    }
}

pub fn update_bias(state: &mut LearnerState, position: usize) {
    let step = 1.0 / state.w_bias.len() as f64;
    for b in state.w_bias.iter_mut() {
        *b += step;
    }
    state.w_bias[position] = 0.0;
}

/// One full learning epoch. Scores the initial mask first if that has not
/// happened yet.
pub fn epoch<O: Objective + ?Sized>(state: &mut LearnerState, objective: &mut O) -> EpochRecord {
    if state.k == 0 && state.eps_min == f64::INFINITY {
        state.eps_min = objective.evaluate(&state.mask, None);
    }
    let position = select_position(state);
    state.mask.flip(position);
    let eps_k = objective.evaluate(&state.mask, Some(position));
    let r = reward(eps_k, state.eps_min);
    apply_reward(state, position, r, eps_k);
    if r {
        objective.accepted(position);
    }
    update_bias(state, position);
    state.k += 1;
    let record = EpochRecord {
        k: state.k,
        position,
        eps_tested: eps_k,
        eps_accepted: state.eps_min,
        reward: r,
        hamming_weight: state.mask.weight(),
    };
    state.history.push(record);
    record
}

/// Runs `epochs` epochs and returns the tested and accepted error curves.
pub fn train<O: Objective + ?Sized>(
    objective: &mut O,
    epochs: usize,
    state: &mut LearnerState,
) -> Result<LearningCurve> {
    if epochs == 0 {
        return Err(Error::config("epochs must be >= 1"));
    }
    if state.k == 0 && state.eps_min == f64::INFINITY {
        state.eps_min = objective.evaluate(&state.mask, None);
    }
    let eps_initial = state.eps_min;
    let start = state.history.len();
    for _ in 0..epochs {
        epoch(state, objective);
    }
    let new = &state.history[start..];
    Ok(LearningCurve {
        eps_initial,
        eps_tested: new.iter().map(|r| r.eps_tested).collect(),
        eps_accepted: new.iter().map(|r| r.eps_accepted).collect(),
    })
}

/// Training log with columns `k, l_k, eps_tested, eps_accepted, reward, hamming_weight`.
pub fn write_log(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let col = |f: &dyn Fn(&EpochRecord) -> f64| history.iter().map(f).collect::<Vec<f64>>();
    let k = col(&|r| r.k as f64);
    let l = col(&|r| r.position as f64);
    let tested = col(&|r| r.eps_tested);
    let accepted = col(&|r| r.eps_accepted);
    let reward = col(&|r| if r.reward { 1.0 } else { 0.0 });
    let weight = col(&|r| r.hamming_weight as f64);
    crate::io::write_columns(
        path,
        &["k", "l_k", "eps_tested", "eps_accepted", "reward", "hamming_weight"],
        &[&k, &l, &tested, &accepted, &reward, &weight],
    )
}
