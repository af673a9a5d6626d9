//! Mackey-Glass task data: generation, normalization and one-step-ahead
//! prediction windows.
//!
//! The generator integrates
//!
//! ```text
//! dx/dt = a·x(t−τ) / (1 + x(t−τ)^p) − b·x(t)
//! ```
//!
//! with a fixed-step RK4 scheme. The delayed value at the RK4 half step is the
//! linear interpolation of the two neighbouring history slots.

use std::collections::VecDeque;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::mean_std;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MackeyGlassParams {
    pub a: f64,
    pub b: f64,
    /// Delay in integration-time units. Must be an integer multiple of `dt`.
    pub tau: f64,
    pub exponent: f64,
    pub dt: f64,
    /// Integration steps per emitted sample.
    pub subsample: usize,
    /// Constant initial history value.
    pub x0: f64,
    /// Relative amplitude of the seeded multiplicative jitter applied to each
    /// history slot. Zero disables it. Being multiplicative, a zero history
    /// stays zero.
    pub jitter: f64,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self {
            a: 0.2,
            b: 0.1,
            tau: 17.0,
            exponent: 10.0,
            dt: 0.1,
            subsample: 10,
            x0: 1.2,
            jitter: 1e-3,
        }
    }
}

impl MackeyGlassParams {
    /// Number of integration steps spanned by the delay.
    pub fn delay_steps(&self) -> Result<usize> {
        self.validate()?;
        Ok((self.tau / self.dt).round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.tau, self.exponent, self.dt, self.x0, self.jitter];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("Mackey-Glass parameters must be finite"));
        }
        if self.dt <= 0.0 {
            return Err(Error::config(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.tau <= 0.0 {
            return Err(Error::config(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.subsample < 1 {
            return Err(Error::config("subsample must be >= 1"));
        }
        if self.x0 < 0.0 || self.jitter < 0.0 {
            return Err(Error::config("x0 and jitter must be non-negative"));
        }
        let ratio = self.tau / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::config(format!(
                "tau/dt must be a positive integer, got {ratio}"
            )));
        }
        Ok(())
    }

    fn rhs(&self, x: f64, delayed: f64) -> f64 {
        self.a * delayed / (1.0 + delayed.powf(self.exponent)) - self.b * x
    }
}

/// How the values of a [`TimeSeries`] relate to the data they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Origin {
    Raw,
    /// Values are `(raw − mean) / std` with the recorded statistics.
    Normalized { mean: f64, std: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub origin: Origin,
}

impl TimeSeries {
    pub fn raw(values: Vec<f64>) -> Self {
        Self {
            values,
            origin: Origin::Raw,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(mean, std)` of the current values.
    pub fn stats(&self) -> (f64, f64) {
        mean_std(&self.values)
    }

    /// Writes a single `value` column with header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_columns(path, &["value"], &[&self.values])
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let table = crate::io::read_table(path)?;
        Ok(Self::raw(table.column(path, "value")?.to_vec()))
    }
}

/// Integrates the delay equation and emits `n_points` samples after a
/// transient of `10·tau` time units.
pub fn generate_mackey_glass(
    params: &MackeyGlassParams,
    n_points: usize,
    seed: u64,
) -> Result<TimeSeries> {
    let delay = params.delay_steps()?;
    if n_points == 0 {
        return Err(Error::config("n_points must be >= 1"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // history[0] is x(t − τ), the back is x(t).
    let mut history: VecDeque<f64> = (0..=delay)
        .map(|_| {
            let xi: f64 = rng.gen_range(-1.0..1.0);
            params.x0 * (1.0 + params.jitter * xi)
        })
        .collect();

    let dt = params.dt;
    let step = |history: &mut VecDeque<f64>| {
        let x = *history.back().expect("history is never empty");
        let d0 = history[0];
        let d1 = history[1];
        let dmid = 0.5 * (d0 + d1);
        let k1 = params.rhs(x, d0);
        let k2 = params.rhs(x + 0.5 * dt * k1, dmid);
        let k3 = params.rhs(x + 0.5 * dt * k2, dmid);
        let k4 = params.rhs(x + dt * k3, d1);
        let next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        history.pop_front();
        history.push_back(next);
    };

    for _ in 0..10 * delay {
        step(&mut history);
    }
    let mut values = Vec::with_capacity(n_points);
    values.push(*history.back().unwrap());
    while values.len() < n_points {
        for _ in 0..params.subsample {
            step(&mut history);
        }
        values.push(*history.back().unwrap());
    }
    Ok(TimeSeries::raw(values))
}

/// Shifts and scales to zero mean and unit population standard deviation.
pub fn normalize(series: &TimeSeries) -> Result<TimeSeries> {
    let (mean, std) = series.stats();
    if series.len() < 2 || !(std > 0.0) || !std.is_finite() {
        return Err(Error::DegenerateSeries(format!(
            "cannot normalize a series of length {} with std {std}",
            series.len()
        )));
    }
    Ok(TimeSeries {
        values: series.values.iter().map(|v| (v - mean) / std).collect(),
        origin: Origin::Normalized { mean, std },
    })
}

/// One-step-ahead input/target windows. The input at step `n` is `u(n+1)`
/// and its target is `u(n+2)`; the test window starts where the training
/// inputs end.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPairs {
    pub train_input: Vec<f64>,
    pub train_target: Vec<f64>,
    pub test_input: Vec<f64>,
    pub test_target: Vec<f64>,
}

pub fn make_prediction_pairs(
    series: &TimeSeries,
    train_len: usize,
    test_len: usize,
) -> Result<PredictionPairs> {
    let needed = train_len + test_len + 2;
    if series.len() < needed {
        return Err(Error::config(format!(
            "series of length {} is too short for {train_len} training and {test_len} test pairs (need {needed})",
            series.len()
        )));
    }
    let v = &series.values;
    let test_start = train_len;
    Ok(PredictionPairs {
        train_input: v[..train_len].to_vec(),
        train_target: v[1..train_len + 1].to_vec(),
        test_input: v[test_start..test_start + test_len].to_vec(),
        test_target: v[test_start + 1..test_start + test_len + 1].to_vec(),
    })
}
