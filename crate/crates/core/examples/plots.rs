//! Full pipeline on a small network: train, landscape, and SVG rendering of
//! the learning curve, gradient split and held-out prediction.
//!
//!     cargo run --release --example plots [OUT_DIR]

use std::path::PathBuf;

use rgreedy::commands::{cmd_landscape, cmd_plot, cmd_train};
use rgreedy::experiment::ExperimentConfig;

fn main() -> rgreedy::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "target/examples/plots".into());
    let mut cfg = ExperimentConfig::default();
    cfg.reservoir.n = 100;
    cfg.learner.ensemble = 10;

    cmd_train(&cfg, &out, 0)?;
    cmd_landscape(&cfg, &out, 0)?;
    for p in cmd_plot(&out, &out)? {
        println!("{}", p.display());
    }
    Ok(())
}
