//! Experiment configuration and orchestration: the prediction task, the two
//! ways of scoring a mask, single runs, ensembles and size sweeps.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{LearningCurve, ScalingPoint, ScalingResult};
use crate::error::{Error, Result};
use crate::learner::{self, EpochRecord, Objective};
use crate::readout::{self, BooleanReadout, OutputTrace, ReadoutFeatures};
use crate::reservoir::{grid_side, seeded, Reservoir, ReservoirParams};
use crate::stats::mean_std;
use crate::timeseries::{self, MackeyGlassParams, TimeSeries};

const STREAM_NOISE: u64 = 0x5eed;
const STREAM_TEST_NOISE: u64 = 0x7e57;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskParams {
    /// Samples generated in total.
    pub series_len: usize,
    pub series_seed: u64,
    /// Reservoir steps run before the first training sample.
    pub warmup: usize,
    pub train_len: usize,
    pub test_len: usize,
    /// Amplitude of the reservoir drive: the normalized series times this.
    pub input_scale: f64,
}

impl Default for TaskParams {
    fn default() -> Self {
        Self {
            series_len: 9400,
            series_seed: 7,
            warmup: 100,
            train_len: 200,
            test_len: 9000,
            input_scale: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutParams {
    /// Detector noise std relative to the trace maximum.
    pub detector_sigma: f64,
}

impl Default for ReadoutParams {
    fn default() -> Self {
        Self { detector_sigma: 1e-3 }
    }
}

/// How the error of a tested mask is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Re-run the noisy reservoir over the training drive at every epoch.
    Fresh,
    /// Run the noisy reservoir once per learner and re-score only the
    /// readout; detector noise is still redrawn at every epoch.
    #[default]
    FrozenStates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialMask {
    #[default]
    AllOn,
    AllOff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerParams {
    /// Fixed epoch count; when absent `ceil(epochs_per_neuron · n)` is used.
    pub epochs: Option<usize>,
    pub epochs_per_neuron: f64,
    pub ensemble: usize,
    /// Run `r` of an ensemble uses learner and noise seed `seed + r`.
    pub seed: u64,
    pub mode: EvalMode,
    pub initial_mask: InitialMask,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            epochs: None,
            epochs_per_neuron: 2.0,
            ensemble: 20,
            seed: 1000,
            mode: EvalMode::FrozenStates,
            initial_mask: InitialMask::AllOn,
        }
    }
}

impl LearnerParams {
    pub fn epochs_for(&self, n: usize) -> usize {
        self.epochs
            .unwrap_or_else(|| (self.epochs_per_neuron * n as f64).ceil() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingParams {
    pub sizes: Vec<usize>,
    /// Ensemble size per network size.
    pub ensemble: usize,
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self {
            sizes: vec![16, 64, 144, 256],
            ensemble: 10,
        }
    }
}

/// Everything a command needs, loadable from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mackey_glass: MackeyGlassParams,
    pub task: TaskParams,
    pub reservoir: ReservoirParams,
    pub readout: ReadoutParams,
    pub learner: LearnerParams,
    pub scaling: ScalingParams,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.mackey_glass.validate()?;
        crate::reservoir::ReservoirConfig::from_params(&self.reservoir)?;
        for &n in &self.scaling.sizes {
            grid_side(n)?;
        }
        let t = &self.task;
        if !(t.input_scale.is_finite() && t.input_scale >= 0.0) {
            return Err(Error::config("input_scale must be finite and >= 0"));
        }
        if t.train_len < 2 {
            return Err(Error::config("train_len must be >= 2"));
        }
        if t.series_len < t.warmup + t.train_len + t.test_len + 2 {
            return Err(Error::config(format!(
                "series_len {} < warmup + train_len + test_len + 2 = {}",
                t.series_len,
                t.warmup + t.train_len + t.test_len + 2
            )));
        }
        let l = &self.learner;
        if l.ensemble < 1 || self.scaling.ensemble < 1 {
            return Err(Error::config("ensemble sizes must be >= 1"));
        }
        if l.epochs == Some(0) || (l.epochs.is_none() && !(l.epochs_per_neuron > 0.0)) {
            return Err(Error::config("epochs must be >= 1"));
        }
        if !(self.readout.detector_sigma >= 0.0) {
            return Err(Error::config("detector_sigma must be >= 0"));
        }
        Ok(())
    }

    /// Copy with a different network size.
    pub fn with_size(&self, n: usize) -> Self {
        let mut c = self.clone();
        c.reservoir.n = n;
        c
    }
}

/// Normalized Mackey-Glass drive and the training/test windows cut from it.
#[derive(Debug, Clone)]
pub struct Task {
    /// Normalized series.
    pub series: TimeSeries,
    /// Reservoir input: `input_scale` times the normalized series.
    pub drive: Vec<f64>,
    pub warmup: usize,
    pub train_len: usize,
    pub test_len: usize,
    /// Training targets normalized with their own statistics.
    pub train_target: Vec<f64>,
    /// Test targets normalized with the training-target statistics.
    pub test_target: Vec<f64>,
}

impl Task {
    pub fn build(mg: &MackeyGlassParams, p: &TaskParams) -> Result<Self> {
        let raw = timeseries::generate_mackey_glass(mg, p.series_len, p.series_seed)?;
        let series = timeseries::normalize(&raw)?;
        let after_warmup = TimeSeries::raw(series.values[p.warmup..].to_vec());
        let pairs = timeseries::make_prediction_pairs(&after_warmup, p.train_len, p.test_len)?;
        let (tm, ts) = mean_std(&pairs.train_target);
        if !(ts > 0.0) {
            return Err(Error::DegenerateSeries("constant training target".into()));
        }
        let drive = series.values.iter().map(|v| v * p.input_scale).collect();
        Ok(Self {
            series,
            drive,
            warmup: p.warmup,
            train_len: p.train_len,
            test_len: p.test_len,
            train_target: pairs.train_target.iter().map(|v| (v - tm) / ts).collect(),
            test_target: pairs.test_target.iter().map(|v| (v - tm) / ts).collect(),
        })
    }

    /// Drive covering warmup and training inputs.
    pub fn train_drive(&self) -> &[f64] {
        &self.drive[..self.warmup + self.train_len]
    }

    /// Drive covering warmup, training and test inputs.
    pub fn full_drive(&self) -> &[f64] {
        &self.drive[..self.warmup + self.train_len + self.test_len]
    }
}

/// Scores a raw trace against normalized targets; `+∞` when degenerate.
fn score(raw: Vec<f64>, target: &[f64]) -> (f64, Option<OutputTrace>) {
    match readout::normalize_output(raw) {
        Ok(trace) => {
            let e = readout::nmse(&trace.normalized, target).unwrap_or(f64::INFINITY);
            (e, Some(trace))
        }
        Err(_) => (f64::INFINITY, None),
    }
}

/// Re-runs the noisy reservoir over the training drive for every score.
pub struct FreshObjective<'a> {
    pub reservoir: &'a Reservoir,
    pub task: &'a Task,
    pub detector_sigma: f64,
    e0: Vec<f64>,
    noise: ChaCha8Rng,
}

impl<'a> FreshObjective<'a> {
    pub fn new(reservoir: &'a Reservoir, task: &'a Task, detector_sigma: f64, seed: u64) -> Self {
        Self {
            reservoir,
            task,
            detector_sigma,
            e0: reservoir.cfg.e0(),
            noise: seeded(seed, STREAM_NOISE),
        }
    }

    /// Scores `mask` and also returns the training trace used.
    pub fn trace(&mut self, mask: &BooleanReadout) -> (f64, Option<OutputTrace>) {
        let run = self
            .reservoir
            .run(self.task.train_drive(), self.task.warmup, &mut self.noise)
            .expect("task drive always covers the warmup");
        let mut raw = readout::readout_output(&run.states, &self.e0, mask)
            .expect("mask length matches the reservoir");
        readout::add_detector_noise(&mut raw, self.detector_sigma, &mut self.noise);
        score(raw, &self.task.train_target)
    }
}

impl Objective for FreshObjective<'_> {
    fn evaluate(&mut self, mask: &BooleanReadout, _flipped: Option<usize>) -> f64 {
        self.trace(mask).0
    }
}

/// Scores masks against one fixed set of training states, updating the
/// detector field sums incrementally for single-bit flips.
pub struct FrozenObjective<'a> {
    task: &'a Task,
    features: ReadoutFeatures,
    detector_sigma: f64,
    noise: ChaCha8Rng,
    accepted_sums: Option<Vec<f64>>,
    candidate: Vec<f64>,
}

impl<'a> FrozenObjective<'a> {
    pub fn new(reservoir: &Reservoir, task: &'a Task, detector_sigma: f64, seed: u64) -> Self {
        let mut noise = seeded(seed, STREAM_NOISE);
        let run = reservoir
            .run(task.train_drive(), task.warmup, &mut noise)
            .expect("task drive always covers the warmup");
        let features = ReadoutFeatures::new(&run.states, &reservoir.cfg.e0())
            .expect("E0 length matches the reservoir");
        Self {
            task,
            features,
            detector_sigma,
            noise,
            accepted_sums: None,
            candidate: Vec::new(),
        }
    }

    pub fn features(&self) -> &ReadoutFeatures {
        &self.features
    }

    fn score_sums(&mut self, sums: &[f64]) -> f64 {
        let mut raw = readout::intensity(sums);
        readout::add_detector_noise(&mut raw, self.detector_sigma, &mut self.noise);
        score(raw, &self.task.train_target).0
    }
}

impl Objective for FrozenObjective<'_> {
    fn evaluate(&mut self, mask: &BooleanReadout, flipped: Option<usize>) -> f64 {
        let mut candidate = std::mem::take(&mut self.candidate);
        match (flipped, &self.accepted_sums) {
            (Some(l), Some(acc)) => {
                candidate.clear();
                candidate.extend_from_slice(acc);
                let sign = if mask.get(l) { 1.0 } else { -1.0 };
                self.features.toggle(&mut candidate, l, sign);
            }
            _ => {
                candidate = self.features.field_sums(mask);
                if flipped.is_none() {
                    self.accepted_sums = Some(candidate.clone());
                }
            }
        }
        let e = self.score_sums(&candidate);
        self.candidate = candidate;
        e
    }

    fn accepted(&mut self, _flipped: usize) {
        if let Some(acc) = &mut self.accepted_sums {
            acc.copy_from_slice(&self.candidate);
        }
    }
}

/// Everything recorded by one learner.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub run_index: usize,
    pub seed: u64,
    pub n: usize,
    pub curve: LearningCurve,
    pub history: Vec<EpochRecord>,
    pub final_mask: BooleanReadout,
    pub k_opt: usize,
    pub eps_opt: f64,
    /// Final mask re-scored on a fresh noisy pass over the training drive.
    pub eps_train_final: f64,
    /// Held-out error using the training normalization of the final mask.
    pub eps_test: f64,
}

/// Shared, immutable inputs of every learner in an experiment.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub task: Task,
    pub reservoir: Reservoir,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let task = Task::build(&config.mackey_glass, &config.task)?;
        let reservoir = Reservoir::from_params(&config.reservoir)?;
        Ok(Self {
            config,
            task,
            reservoir,
        })
    }

    pub fn n(&self) -> usize {
        self.reservoir.n()
    }

    pub fn initial_mask(&self) -> BooleanReadout {
        match self.config.learner.initial_mask {
            InitialMask::AllOn => BooleanReadout::all_on(self.n()),
            InitialMask::AllOff => BooleanReadout::all_off(self.n()),
        }
    }

    pub fn epochs(&self) -> usize {
        self.config.learner.epochs_for(self.n())
    }

    /// Trains learner `run_index` of the ensemble.
    pub fn run(&self, run_index: usize) -> Result<RunResult> {
        let seed = self.config.learner.seed.wrapping_add(run_index as u64);
        let sigma = self.config.readout.detector_sigma;
        let mut state = learner::init_learner(self.n(), seed, self.initial_mask())?;
        let epochs = self.epochs();
        let curve = match self.config.learner.mode {
            EvalMode::Fresh => {
                let mut obj = FreshObjective::new(&self.reservoir, &self.task, sigma, seed);
                learner::train(&mut obj, epochs, &mut state)?
            }
            EvalMode::FrozenStates => {
                let mut obj = FrozenObjective::new(&self.reservoir, &self.task, sigma, seed);
                learner::train(&mut obj, epochs, &mut state)?
            }
        };
        let (eps_train_final, eps_test) = self.evaluate(&state.mask, seed);
        Ok(RunResult {
            run_index,
            seed,
            n: self.n(),
            k_opt: curve.k_opt(),
            eps_opt: curve.eps_opt(),
            curve,
            history: state.history,
            final_mask: state.mask,
            eps_train_final,
            eps_test,
        })
    }

    /// `(train, test)` errors of `mask` on fresh noisy passes. The test
    /// output is normalized with the statistics of the training output.
    pub fn evaluate(&self, mask: &BooleanReadout, seed: u64) -> (f64, f64) {
        let (train, test, _) = self.evaluate_with_trace(mask, seed);
        (train, test)
    }

    /// As [`Experiment::evaluate`], also returning the normalized test trace.
    pub fn evaluate_with_trace(&self, mask: &BooleanReadout, seed: u64) -> (f64, f64, Option<OutputTrace>) {
        let sigma = self.config.readout.detector_sigma;
        let mut fresh = FreshObjective::new(&self.reservoir, &self.task, sigma, seed ^ STREAM_TEST_NOISE);
        let (eps_train, trace) = fresh.trace(mask);
        let Some(trace) = trace else {
            return (f64::INFINITY, f64::INFINITY, None);
        };
        let mut rng = seeded(seed, STREAM_TEST_NOISE);
        let run = self
            .reservoir
            .run(self.task.full_drive(), self.task.warmup + self.task.train_len, &mut rng)
            .expect("full drive covers warmup and training");
        let mut raw = readout::readout_output(&run.states, &self.reservoir.cfg.e0(), mask)
            .expect("mask length matches the reservoir");
        readout::add_detector_noise(&mut raw, sigma, &mut rng);
        let test = trace.apply_to(raw);
        let eps_test = readout::nmse(&test.normalized, &self.task.test_target).unwrap_or(f64::INFINITY);
        (eps_train, eps_test, Some(test))
    }

    /// Runs `count` learners starting at `first_index`, in parallel on the
    /// current rayon pool. Results are ordered by run index.
    pub fn ensemble(&self, first_index: usize, count: usize) -> Result<Vec<RunResult>> {
        (first_index..first_index + count)
            .into_par_iter()
            .map(|i| self.run(i))
            .collect()
    }
}

/// Summary of one ensemble at one size.
pub fn scaling_point(n: usize, runs: &[RunResult]) -> ScalingPoint {
    let k: Vec<f64> = runs.iter().map(|r| r.k_opt as f64).collect();
    let (mean_k_opt, std_k_opt) = mean_std(&k);
    let eps: Vec<f64> = runs.iter().map(|r| r.eps_opt).collect();
    let test: Vec<f64> = runs.iter().map(|r| r.eps_test).collect();
    ScalingPoint {
        n,
        mean_k_opt,
        std_k_opt,
        mean_eps_opt: crate::stats::mean(&eps),
        mean_eps_test: crate::stats::mean(&test),
    }
}

/// Runs an ensemble of `config.scaling.ensemble` learners at every size.
pub fn scaling_sweep(config: &ExperimentConfig, seed_offset: usize) -> Result<(ScalingResult, Vec<Vec<RunResult>>)> {
    if config.scaling.sizes.is_empty() {
        return Err(Error::config("scaling.sizes must not be empty"));
    }
    let mut points = Vec::new();
    let mut all = Vec::new();
    for &n in &config.scaling.sizes {
        let exp = Experiment::new(config.with_size(n))?;
        let runs = exp.ensemble(seed_offset, config.scaling.ensemble)?;
        points.push(scaling_point(n, &runs));
        all.push(runs);
    }
    Ok((ScalingResult::from_points(points), all))
}

/// Deterministic RNG for callers outside the crate's stream layout.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.reservoir.n = 64;
        cfg.learner.epochs = Some(17);
        cfg.learner.mode = EvalMode::Fresh;
        cfg.reservoir.theta_layout = crate::reservoir::ThetaLayout::Checkerboard;
        cfg.output_dir = "results/a".into();
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn partial_file_takes_defaults() {
        let cfg = ExperimentConfig::from_toml("[reservoir]\nn = 16\n[learner]\nmode = \"fresh\"\n").unwrap();
        assert_eq!(cfg.reservoir.n, 16);
        assert_eq!(cfg.reservoir.beta, 0.8);
        assert_eq!(cfg.reservoir.gamma, 0.25);
        assert_eq!(cfg.task.train_len, 200);
        assert_eq!(cfg.task.test_len, 9000);
        assert_eq!(cfg.learner.mode, EvalMode::Fresh);
    }

    #[test]
    fn invalid_configs_rejected() {
        for text in [
            "[reservoir]\nn = 10\n",
            "[scaling]\nsizes = [16, 20]\n",
            "[learner]\nensemble = 0\n",
            "[learner]\nepochs = 0\n",
            "[task]\nseries_len = 0\n",
            "[reservoir]\nbogus = 1\n",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn test_targets_use_training_statistics() {
        let t = Task::build(&MackeyGlassParams::default(), &TaskParams::default()).unwrap();
        let (m, s) = mean_std(&t.train_target);
        assert!(m.abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        let (tm, _) = mean_std(&t.test_target);
        assert!(tm.abs() > 1e-6, "test targets are not renormalized on their own");
    }

    #[test]
    fn frozen_objective_matches_direct_scoring() {
        let mut cfg = ExperimentConfig::default().with_size(16);
        cfg.reservoir.noise_state_sigma = 0.0;
        cfg.readout.detector_sigma = 0.0;
        let exp = Experiment::new(cfg).unwrap();
        let mut frozen = FrozenObjective::new(&exp.reservoir, &exp.task, 0.0, 0);
        let mut fresh = FreshObjective::new(&exp.reservoir, &exp.task, 0.0, 0);
        let mut mask = BooleanReadout::all_on(16);
        let e0 = frozen.evaluate(&mask, None);
        assert!((e0 - fresh.evaluate(&mask, None)).abs() < 1e-12);
        mask.flip(3);
        let e1 = frozen.evaluate(&mask, Some(3));
        assert!((e1 - fresh.evaluate(&mask, None)).abs() < 1e-9);
    }

    #[test]
    fn runs_repeat_bit_for_bit() {
        let exp = Experiment::new(ExperimentConfig::default().with_size(16)).unwrap();
        let a = exp.run(2).unwrap();
        let b = exp.run(2).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.final_mask, b.final_mask);
        assert_eq!(a.eps_test.to_bits(), b.eps_test.to_bits());
        assert_ne!(exp.run(3).unwrap().curve, a.curve);
    }
}
