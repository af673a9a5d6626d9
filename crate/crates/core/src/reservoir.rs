//! The cos²-nonlinear recurrent network.
//!
//! Each neuron holds an intensity `x_i ≥ 0`; its field amplitude is taken as
//! `E_i = sqrt(x_i)`. One update is
//!
//! ```text
//! x_i(n+1) = α·|E⁰_i|²·cos²( β·α·|Σ_j W_ij E_j(n)|² + γ·w_i·u(n+1) + θ_i ) + η_i
//! ```
//!
//! where `W` is a sparse local coupling on a `g×g` grid, `w` are input
//! weights in `[0,1]` and `η_i` is optional Gaussian noise. Negative results
//! after noise are clamped to zero.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset applied to every neuron by default.
pub const THETA0: f64 = 0.44 * PI;
/// Second offset level, `θ₀ + Δθ₀`.
pub const THETA1: f64 = 0.95 * PI;

// RNG stream ids, so that one base seed yields independent draws.
const STREAM_INJECTION: u64 = 1;
const STREAM_COUPLING: u64 = 2;

pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Side length `g` when `n = g²`.
pub fn grid_side(n: usize) -> Result<usize> {
    let g = (n as f64).sqrt().round() as usize;
    if n == 0 || g * g != n {
        return Err(Error::config(format!("neuron count {n} is not a perfect square")));
    }
    Ok(g)
}

/// Which neurons receive the second phase offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaLayout {
    /// `θ₀` everywhere.
    #[default]
    Uniform,
    /// `θ₀ + Δθ₀` on grid cells with odd `row + col`.
    Checkerboard,
}

/// Config-file form of the reservoir: scalars only, expanded to per-neuron
/// vectors by [`ReservoirConfig::from_params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirParams {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub e0_sq: f64,
    pub theta0: f64,
    pub delta_theta: f64,
    pub theta_layout: ThetaLayout,
    /// Std of the additive state noise, as a fraction of `α·|E⁰|²`.
    pub noise_state_sigma: f64,
    pub kernel_radius: usize,
    /// Seed for the fixed input and coupling weights.
    pub seed: u64,
}

impl Default for ReservoirParams {
    fn default() -> Self {
        Self {
            n: 961,
            beta: 0.8,
            gamma: 0.25,
            alpha: 0.9,
            e0_sq: 1.0,
            theta0: THETA0,
            delta_theta: THETA1 - THETA0,
            theta_layout: ThetaLayout::Uniform,
            noise_state_sigma: 1e-2,
            kernel_radius: 1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirConfig {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub e0_sq: Vec<f64>,
    pub theta: Vec<f64>,
    pub noise_state_sigma: f64,
    pub seed: u64,
}

impl ReservoirConfig {
    pub fn from_params(p: &ReservoirParams) -> Result<Self> {
        let g = grid_side(p.n)?;
        let theta = (0..p.n)
            .map(|i| match p.theta_layout {
                ThetaLayout::Checkerboard if (i / g + i % g) % 2 == 1 => p.theta0 + p.delta_theta,
                _ => p.theta0,
            })
            .collect();
        let cfg = Self {
            n: p.n,
            beta: p.beta,
            gamma: p.gamma,
            alpha: p.alpha,
            e0_sq: vec![p.e0_sq; p.n],
            theta,
            noise_state_sigma: p.noise_state_sigma,
            seed: p.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        grid_side(self.n)?;
        let scalars = [self.beta, self.gamma, self.alpha, self.noise_state_sigma];
        if scalars.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config(
                "beta, gamma, alpha and noise_state_sigma must be finite and >= 0",
            ));
        }
        if self.theta.len() != self.n || self.e0_sq.len() != self.n {
            return Err(Error::config(format!(
                "theta ({}) and e0_sq ({}) must have {} entries",
                self.theta.len(),
                self.e0_sq.len(),
                self.n
            )));
        }
        if self.e0_sq.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config("e0_sq entries must be finite and >= 0"));
        }
        Ok(())
    }

    /// Illumination amplitudes `E⁰_i = sqrt(|E⁰_i|²)`.
    pub fn e0(&self) -> Vec<f64> {
        self.e0_sq.iter().map(|v| v.sqrt()).collect()
    }
}

/// Sparse row-major coupling matrix, row `i` holding the weights into neuron `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl CouplingMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            weights: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(column, weight)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, w)| w)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, w) in self.row(i) {
                row[j] = w;
            }
        }
        out
    }

    /// `Σ_j W_ij · v_j` for row `i`.
    #[inline]
    fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&j, &w)| w * v[j])
            .sum()
    }
}

/// Input weights `w_i`, i.i.d. uniform in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionWeights(pub Vec<f64>);

impl InjectionWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn build_injection_weights(n: usize, seed: u64) -> InjectionWeights {
    let mut rng = seeded(seed, STREAM_INJECTION);
    InjectionWeights((0..n).map(|_| rng.gen::<f64>()).collect())
}

/// Local grid coupling: each neuron receives from every cell within
/// Chebyshev distance `kernel_radius` (itself included). Weights follow a
/// Gaussian of the Euclidean grid distance with `σ = kernel_radius/2`, carry
/// a seeded ±20% multiplicative jitter and are normalized so each row sums
/// to one.
pub fn build_doe_coupling(n: usize, kernel_radius: usize, seed: u64) -> Result<CouplingMatrix> {
    let g = grid_side(n)?;
    if kernel_radius == 0 {
        return Ok(CouplingMatrix::identity(n));
    }
    let mut rng = seeded(seed, STREAM_COUPLING);
    let sigma = kernel_radius as f64 / 2.0;
    let r = kernel_radius as isize;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut weights = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        let (ri, ci) = ((i / g) as isize, (i % g) as isize);
        let start = weights.len();
        for dr in -r..=r {
            for dc in -r..=r {
                let (rr, cc) = (ri + dr, ci + dc);
                if rr < 0 || cc < 0 || rr >= g as isize || cc >= g as isize {
                    continue;
                }
                let d2 = (dr * dr + dc * dc) as f64;
                let jitter = 1.0 + rng.gen_range(-0.2..=0.2);
                cols.push(rr as usize * g + cc as usize);
                weights.push((-d2 / (2.0 * sigma * sigma)).exp() * jitter);
            }
        }
        let total: f64 = weights[start..].iter().sum();
        for w in &mut weights[start..] {
            *w /= total;
        }
        row_ptr.push(weights.len());
    }
    Ok(CouplingMatrix {
        n,
        row_ptr,
        cols,
        weights,
    })
}

/// Neuron intensities at discrete time `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub x: Vec<f64>,
    pub step: usize,
}

impl ReservoirState {
    /// Every neuron at half its maximum intensity `α·|E⁰_i|²/2`.
    pub fn mid_range(cfg: &ReservoirConfig) -> Self {
        Self {
            x: cfg.e0_sq.iter().map(|e| cfg.alpha * e / 2.0).collect(),
            step: 0,
        }
    }
}

/// Advances `state` by one step in place, driven by `u_next`.
///
/// `noise` is only consulted when `cfg.noise_state_sigma > 0`.
pub fn step<R: Rng + ?Sized>(
    state: &mut ReservoirState,
    u_next: f64,
    cfg: &ReservoirConfig,
    wdoe: &CouplingMatrix,
    winj: &InjectionWeights,
    noise: Option<&mut R>,
    scratch: &mut Vec<f64>,
) -> Result<()> {
    let n = cfg.n;
    if state.x.len() != n || wdoe.n() != n || winj.0.len() != n {
        return Err(Error::config(format!(
            "dimension mismatch: state {}, coupling {}, injection {}, config {n}",
            state.x.len(),
            wdoe.n(),
            winj.0.len()
        )));
    }
    scratch.clear();
    scratch.extend(state.x.iter().map(|v| v.sqrt()));
    let feedback = cfg.beta * cfg.alpha;
    for i in 0..n {
        let field = wdoe.row_dot(i, scratch);
        let arg = feedback * field * field + cfg.gamma * winj.0[i] * u_next + cfg.theta[i];
        let c = arg.cos();
        state.x[i] = cfg.alpha * cfg.e0_sq[i] * c * c;
    }
    if cfg.noise_state_sigma > 0.0 {
        if let Some(rng) = noise {
            for (x, e) in state.x.iter_mut().zip(&cfg.e0_sq) {
                let z: f64 = rng.sample(StandardNormal);
                *x = (*x + z * cfg.noise_state_sigma * cfg.alpha * e).max(0.0);
            }
        }
    }
    state.step += 1;
    Ok(())
}

/// Row-major `T × n` matrix of retained reservoir states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl StateMatrix {
    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.n).unwrap_or(0)
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.n..(t + 1) * self.n]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    /// CSV with header `x_0..x_{n-1}`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self.iter_rows().map(<[f64]>::to_vec).collect();
        crate::io::write_matrix(path, "x", &rows)
    }
}

/// Retained states plus the inputs that drove them, row for row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub states: StateMatrix,
    pub inputs: Vec<f64>,
}

/// A fully built network: configuration plus its fixed weights.
#[derive(Debug, Clone)]
pub struct Reservoir {
    pub cfg: ReservoirConfig,
    pub wdoe: CouplingMatrix,
    pub winj: InjectionWeights,
}

impl Reservoir {
    pub fn new(cfg: ReservoirConfig, kernel_radius: usize) -> Result<Self> {
        cfg.validate()?;
        let wdoe = build_doe_coupling(cfg.n, kernel_radius, cfg.seed)?;
        let winj = build_injection_weights(cfg.n, cfg.seed);
        Ok(Self { cfg, wdoe, winj })
    }

    pub fn from_params(p: &ReservoirParams) -> Result<Self> {
        Self::new(ReservoirConfig::from_params(p)?, p.kernel_radius)
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    /// Drives the network from the mid-range state over `inputs`, dropping
    /// the first `warmup` states.
    pub fn run<R: Rng + ?Sized>(
        &self,
        inputs: &[f64],
        warmup: usize,
        noise: &mut R,
    ) -> Result<RunOutput> {
        self.run_from(ReservoirState::mid_range(&self.cfg), inputs, warmup, noise)
    }

    pub fn run_from<R: Rng + ?Sized>(
        &self,
        mut state: ReservoirState,
        inputs: &[f64],
        warmup: usize,
        noise: &mut R,
    ) -> Result<RunOutput> {
        if inputs.len() < warmup + 1 {
            return Err(Error::config(format!(
                "{} inputs cannot cover a warmup of {warmup} plus one retained step",
                inputs.len()
            )));
        }
        let n = self.cfg.n;
        let kept = inputs.len() - warmup;
        let mut data = Vec::with_capacity(kept * n);
        let mut scratch = Vec::with_capacity(n);
        for (t, &u) in inputs.iter().enumerate() {
            step(
                &mut state,
                u,
                &self.cfg,
                &self.wdoe,
                &self.winj,
                Some(&mut *noise),
                &mut scratch,
            )?;
            if t >= warmup {
                data.extend_from_slice(&state.x);
            }
        }
        Ok(RunOutput {
            states: StateMatrix { n, data },
            inputs: inputs[warmup..].to_vec(),
        })
    }
}
