//! One greedy learner: biased single-bit flips, kept only when the error
//! strictly improves. Prints the learning curve and writes the log.
//!
//!     cargo run --release --example greedy_learning [OUT_DIR]

use std::path::PathBuf;

use rgreedy::experiment::{Experiment, ExperimentConfig};
use rgreedy::learner::write_log;

fn main() -> rgreedy::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "target/examples/greedy".into());
    let mut cfg = ExperimentConfig::default();
    cfg.reservoir.n = 144;

    let exp = Experiment::new(cfg)?;
    let run = exp.run(0)?;
    let c = &run.curve;
    println!("n={} epochs={} initial error {:.4}", exp.n(), c.len(), c.eps_initial);
    for k in [1, 10, 50, 100, 200, c.len()] {
        println!("  k={k:>4}  accepted {:.5}", c.eps_accepted[k - 1]);
    }
    let accepted = run.history.iter().filter(|r| r.reward).count();
    println!("accepted {accepted} flips, mask weight {}", run.final_mask.weight());
    println!("k_opt {}  train {:.5}  test {:.5}", run.k_opt, run.eps_opt, run.eps_test);

    let path = out.join("training_log.csv");
    write_log(&path, &run.history)?;
    println!("wrote {}", path.display());
    Ok(())
}
