//! Generate the Mackey-Glass benchmark series, normalize it and cut the
//! one-step-ahead training and test windows.
//!
//!     cargo run --release --example mackey_glass [OUT_DIR]

use std::path::PathBuf;

use rgreedy::timeseries::{generate_mackey_glass, make_prediction_pairs, normalize, MackeyGlassParams};

fn main() -> rgreedy::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "target/examples/mackey_glass".into());

    let params = MackeyGlassParams::default();
    let raw = generate_mackey_glass(&params, 9400, 7)?;
    let (mean, std) = raw.stats();
    println!("raw: {} samples, mean {mean:.4}, std {std:.4}", raw.len());

    let min = raw.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("range [{min:.4}, {max:.4}]");

    let norm = normalize(&raw)?;
    let (m, s) = norm.stats();
    println!("normalized: mean {m:.1e}, std {s:.12}");

    let pairs = make_prediction_pairs(&norm, 200, 9000)?;
    println!(
        "train {} pairs, test {} pairs; first pair u={:.4} -> {:.4}",
        pairs.train_input.len(),
        pairs.test_input.len(),
        pairs.train_input[0],
        pairs.train_target[0]
    );

    let path = out.join("mackey_glass.csv");
    raw.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
