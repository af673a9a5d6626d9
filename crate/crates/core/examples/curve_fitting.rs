//! The two fits used on learning data, on synthetic input: a decaying
//! exponential with a floor, and a power law via a log-log line.
//!
//!     cargo run --release --example curve_fitting

use rand_distr::{Distribution, Normal};
use rgreedy::analysis::{fit_exponential, fit_loglog_slope};
use rgreedy::experiment::rng;

fn main() -> rgreedy::Result<()> {
    let ks: Vec<f64> = (1..=1000).map(f64::from).collect();
    let clean: Vec<f64> = ks.iter().map(|k| 0.5 * (-k / 180.0).exp() + 0.02).collect();
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut r = rng(11);
    let noisy: Vec<f64> = clean.iter().map(|y| y * (1.0 + noise.sample(&mut r))).collect();

    for (name, ys) in [("clean", &clean), ("1% noise", &noisy)] {
        let f = fit_exponential(&ks, ys)?;
        println!("{name:>8}: a={:.4} b={:.2} c={:.5} residual {:.2e}", f.amplitude, f.rate, f.floor, f.residual);
    }

    let pts: Vec<(f64, f64)> = [16.0, 64.0, 144.0, 256.0, 961.0].iter().map(|&n: &f64| (n, 1.3 * n.powf(1.08))).collect();
    let (slope, icpt) = fit_loglog_slope(&pts)?;
    println!("power law: slope {slope:.6}, prefactor {:.4}", icpt.exp());
    Ok(())
}
