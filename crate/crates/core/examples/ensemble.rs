//! An ensemble of independent learners sharing one network, with per-run
//! logs, the mean learning curve and held-out errors. Same code path as
//! `rgreedy train`.
//!
//!     cargo run --release --example ensemble [OUT_DIR]

use std::path::PathBuf;

use rgreedy::commands::cmd_train;
use rgreedy::experiment::ExperimentConfig;

fn main() -> rgreedy::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "target/examples/ensemble".into());
    let mut cfg = ExperimentConfig::default();
    cfg.reservoir.n = 256;
    cfg.learner.ensemble = 20;

    let (s, _) = cmd_train(&cfg, &out, 0)?;
    for r in &s.runs {
        println!("seed {}  k_opt {:>4}  train {:.5}  test {:.5}", r.seed, r.k_opt, r.eps_opt, r.eps_test);
    }
    let gap = (s.mean_eps_test - s.mean_eps_opt) / s.mean_eps_opt;
    println!("mean k_opt/n {:.2}", s.mean_k_opt / s.n as f64);
    println!("mean train {:.5}  test {:.5}  gap {:+.1}%", s.mean_eps_opt, s.mean_eps_test, 100.0 * gap);
    println!("outputs in {}", out.display());
    Ok(())
}
