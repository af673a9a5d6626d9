//! The 0/1 mirror readout: detector intensity for a mask, its
//! normalization, and the NMSE of a few masks against the target.
//!
//!     cargo run --release --example boolean_readout

use rand::Rng;
use rgreedy::experiment::{rng, Task, TaskParams};
use rgreedy::readout::{nmse, normalize_output, readout_output, BooleanReadout};
use rgreedy::reservoir::{Reservoir, ReservoirParams};
use rgreedy::timeseries::MackeyGlassParams;

fn main() -> rgreedy::Result<()> {
    let res = Reservoir::from_params(&ReservoirParams { n: 64, ..Default::default() })?;
    let task = Task::build(&MackeyGlassParams::default(), &TaskParams::default())?;
    let run = res.run(task.train_drive(), task.warmup, &mut rng(1))?;
    let e0 = res.cfg.e0();

    let score = |mask: &BooleanReadout| -> f64 {
        let raw = readout_output(&run.states, &e0, mask).unwrap();
        match normalize_output(raw) {
            Ok(t) => nmse(&t.normalized, &task.train_target).unwrap(),
            Err(_) => f64::INFINITY,
        }
    };

    println!("all off : {}", score(&BooleanReadout::all_off(64)));
    println!("all on  : {:.4}", score(&BooleanReadout::all_on(64)));
    let mut r = rng(5);
    let mut best = f64::INFINITY;
    for _ in 0..200 {
        let m = BooleanReadout::from_bits((0..64).map(|_| r.gen_bool(0.5)).collect());
        best = best.min(score(&m));
    }
    println!("best of 200 random masks: {best:.4}");

    let raw = readout_output(&run.states, &e0, &BooleanReadout::all_on(64))?;
    let t = normalize_output(raw)?;
    println!("all-on trace: mean {:.4}, std {:.4}", t.norm_mean, t.norm_std);
    Ok(())
}
