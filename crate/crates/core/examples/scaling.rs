//! Optimal epoch and error against network size, with the log-log slope.
//!
//!     cargo run --release --example scaling [OUT_DIR]

use std::path::PathBuf;

use rgreedy::commands::cmd_scaling;
use rgreedy::experiment::ExperimentConfig;

fn main() -> rgreedy::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "target/examples/scaling".into());
    let cfg = ExperimentConfig::default(); // sizes 16, 64, 144, 256; 10 runs each

    let r = cmd_scaling(&cfg, &out, 0)?;
    println!("{:>5} {:>9} {:>7} {:>9} {:>9}", "n", "k_opt", "k/n", "eps_opt", "eps_test");
    for p in &r.points {
        println!(
            "{:>5} {:>9.1} {:>7.2} {:>9.5} {:>9.5}",
            p.n,
            p.mean_k_opt,
            p.mean_k_opt / p.n as f64,
            p.mean_eps_opt,
            p.mean_eps_test
        );
    }
    println!("slope {:.3}  eps ratio {:.2}", r.slope.unwrap_or(f64::NAN), r.performance_ratio.unwrap_or(f64::NAN));
    Ok(())
}
