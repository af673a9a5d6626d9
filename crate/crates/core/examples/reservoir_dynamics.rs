//! Drive the cos² network with the Mackey-Glass series and look at what
//! it does: state ranges, fading memory of the initial condition, and a
//! state-matrix export.
//!
//!     cargo run --release --example reservoir_dynamics [OUT_DIR]

use std::path::PathBuf;

use rgreedy::experiment::{rng, Task, TaskParams};
use rgreedy::reservoir::{Reservoir, ReservoirParams, ReservoirState};
use rgreedy::timeseries::MackeyGlassParams;

fn main() -> rgreedy::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "target/examples/reservoir".into());

    let params = ReservoirParams { n: 64, ..Default::default() };
    let res = Reservoir::from_params(&params)?;
    let task = Task::build(&MackeyGlassParams::default(), &TaskParams::default())?;
    let drive = task.train_drive();

    let run = res.run(drive, task.warmup, &mut rng(3))?;
    let flat = &run.states.data;
    let lo = flat.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("n={} kept {} states, x in [{lo:.4}, {hi:.4}] (bound {})", res.n(), run.states.rows(), params.alpha * params.e0_sq);
    println!("coupling nnz in row 0: {}", res.wdoe.row_nnz(0));

    // Two noise-free copies from different starts converge onto the same
    // input-driven trajectory.
    let quiet = Reservoir::from_params(&ReservoirParams { noise_state_sigma: 0.0, ..params.clone() })?;
    let dark = ReservoirState { x: vec![0.0; quiet.n()], step: 0 };
    let a = quiet.run(drive, 0, &mut rng(0))?;
    let b = quiet.run_from(dark, drive, 0, &mut rng(0))?;
    for t in [0, 10, 50, 100, 200] {
        let d = a.states.row(t).iter().zip(b.states.row(t)).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        println!("step {t:>3}: max |dx| = {d:.3e}");
    }

    let path = out.join("states.csv");
    run.states.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
