//! On a 16-neuron network every one of the 2^16 masks can be scored, so the
//! greedy result can be placed inside the full distribution.
//!
//!     cargo run --release --example exhaustive_search

use rgreedy::experiment::{EvalMode, Experiment, ExperimentConfig, FrozenObjective};
use rgreedy::learner::Objective;
use rgreedy::readout::BooleanReadout;
use rgreedy::stats::median;

fn main() -> rgreedy::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.reservoir.n = 16;
    cfg.reservoir.noise_state_sigma = 0.0;
    cfg.readout.detector_sigma = 0.0;
    cfg.learner.mode = EvalMode::FrozenStates;
    let exp = Experiment::new(cfg)?;

    let mut obj = FrozenObjective::new(&exp.reservoir, &exp.task, 0.0, 0);
    let all: Vec<f64> = (0..1u64 << 16)
        .map(|code| obj.evaluate(&BooleanReadout::from_code(16, code), None))
        .collect();
    let finite: Vec<f64> = all.iter().copied().filter(|e| e.is_finite()).collect();
    let best = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let med = median(&all).unwrap();
    println!("2^16 masks: best {best:.5}  median {med:.5}  worst {worst:.3}");

    for r in exp.ensemble(0, 5)? {
        let better = finite.iter().filter(|&&e| e < r.eps_opt).count();
        println!(
            "seed {}: greedy {:.5} after {} epochs, {} masks better ({:.2}%)",
            r.seed,
            r.eps_opt,
            r.k_opt,
            better,
            100.0 * better as f64 / finite.len() as f64
        );
    }
    Ok(())
}
