//! Improvement/degradation split of the per-epoch error change over an
//! ensemble, exponential fits to both, and the post-optimum trend check.
//!
//!     cargo run --release --example landscape

use rgreedy::commands::landscape;
use rgreedy::experiment::{Experiment, ExperimentConfig};

fn main() -> rgreedy::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.reservoir.n = 144;
    let exp = Experiment::new(cfg)?;
    let runs = exp.ensemble(0, 10)?;
    let curves: Vec<_> = runs.into_iter().map(|r| r.curve).collect();

    let (split, s) = landscape(&curves, exp.n())?;
    for i in (0..split.k.len()).step_by(split.k.len() / 8) {
        println!(
            "k={:>4}  +{:.2e} ({:>2} runs)  {:.2e} ({:>2} runs)",
            split.k[i], split.pos_mean[i], split.pos_count[i], split.neg_mean[i], split.neg_count[i]
        );
    }
    for (name, f) in [("mean curve", &s.mean_curve), ("improvements", &s.positive), ("|degradations|", &s.negative)] {
        match f.fit {
            Some(e) => println!("{name:>15}: a={:.3e} b={:.1} c={:.3e} decaying={}", e.amplitude, e.rate, e.floor, f.decaying),
            None => println!("{name:>15}: {}", f.error.as_deref().unwrap_or("no fit")),
        }
    }
    println!(
        "window {}: improvements rise after k_opt in {:.0}% of runs; ensemble {:.2e} -> {:.2e}",
        s.kink.window,
        100.0 * s.kink.rising_fraction,
        s.kink.ensemble.before,
        s.kink.ensemble.after
    );
    Ok(())
}
