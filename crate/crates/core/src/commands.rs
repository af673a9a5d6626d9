//! File-producing operations behind the `rgreedy` binary. Each command is a
//! plain function of a config and an output directory, so the examples and
//! tests drive exactly the code the binary runs.
//!
//! Layout of an output directory:
//!
//! ```text
//! config.toml              effective configuration
//! mackey_glass.csv         generate: raw series, column `value`
//! run_seed<S>/             train: one directory per learner
//!     training_log.csv
//!     final_mask.txt
//! runs.csv                 train: per-run k_opt and train/test errors
//! mean_curve.csv           train: k, mean, std of the accepted error
//! trace.csv                train: held-out trace of the first run
//! train.json               train: summary
//! gradient_split.csv       landscape
//! landscape.json           landscape: exponential fits and kink diagnostic
//! scaling.csv              scaling: one row per size
//! scaling_runs.csv         scaling: one row per learner
//! scaling.json             scaling: slope, intercept, performance ratio
//! *.svg                    plot
//! ```

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{
    self, ensemble_gradient_split, fit_exponential, ExpFit, GradientSplit, KinkWindow, LearningCurve,
    MeanCurve, ScalingResult,
};
use crate::error::{Error, Result};
use crate::experiment::{scaling_sweep, Experiment, ExperimentConfig, RunResult, Task};
use crate::io::{read_table, write_columns, write_json, write_text};
use crate::learner::write_log;
use crate::plot::{self, Chart, Series, Style};
use crate::stats::{mean, mean_std};
use crate::timeseries::generate_mackey_glass;

/// Environment variable that overrides `--out`.
pub const OUT_ENV: &str = "RGREEDY_OUT";

/// Output directory: `RGREEDY_OUT`, else `cli`, else the config's
/// `output_dir`, else `out`.
pub fn resolve_out(cli: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    if let Some(env) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if config.output_dir.as_os_str().is_empty() {
        PathBuf::from("out")
    } else {
        config.output_dir.clone()
    }
}

pub fn run_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("run_seed{seed}"))
}

fn write_config(config: &ExperimentConfig, out: &Path) -> Result<()> {
    write_text(&out.join("config.toml"), &config.to_toml()?)
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateSummary {
    pub path: PathBuf,
    pub len: usize,
    pub mean: f64,
    pub std: f64,
}

/// Writes the raw Mackey-Glass series to `mackey_glass.csv`.
pub fn cmd_generate(config: &ExperimentConfig, out: &Path) -> Result<GenerateSummary> {
    config.validate()?;
    let series = generate_mackey_glass(&config.mackey_glass, config.task.series_len, config.task.series_seed)?;
    let path = out.join("mackey_glass.csv");
    series.write_csv(&path)?;
    write_config(config, out)?;
    let (mean, std) = series.stats();
    Ok(GenerateSummary {
        path,
        len: series.len(),
        mean,
        std,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run_index: usize,
    pub seed: u64,
    pub k_opt: usize,
    pub eps_opt: f64,
    pub eps_train_final: f64,
    pub eps_test: f64,
    pub mask_weight: usize,
}

impl From<&RunResult> for RunSummary {
    fn from(r: &RunResult) -> Self {
        Self {
            run_index: r.run_index,
            seed: r.seed,
            k_opt: r.k_opt,
            eps_opt: r.eps_opt,
            eps_train_final: r.eps_train_final,
            eps_test: r.eps_test,
            mask_weight: r.final_mask.weight(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub n: usize,
    pub epochs: usize,
    pub runs: Vec<RunSummary>,
    pub mean_k_opt: f64,
    pub std_k_opt: f64,
    pub mean_eps_opt: f64,
    pub mean_eps_train_final: f64,
    pub mean_eps_test: f64,
    /// Minimum of the ensemble mean curve.
    pub mean_curve_min: f64,
}

/// Pointwise mean and std; a single curve is its own mean with zero spread.
pub fn mean_curve(curves: &[&[f64]]) -> Result<MeanCurve> {
    match curves {
        [] => Err(Error::config("no curves to average")),
        [one] => Ok(MeanCurve {
            mean: one.to_vec(),
            std: vec![0.0; one.len()],
        }),
        _ => analysis::average_curves(curves),
    }
}

/// Trains `config.learner.ensemble` learners starting at run index
/// `seed_offset`, writing per-run logs and ensemble summaries.
pub fn cmd_train(config: &ExperimentConfig, out: &Path, seed_offset: usize) -> Result<(TrainSummary, Vec<RunResult>)> {
    let exp = Experiment::new(config.clone())?;
    let runs = exp.ensemble(seed_offset, config.learner.ensemble)?;
    write_config(config, out)?;

    // Per-run files are independent, so writing them in parallel is safe.
    use rayon::prelude::*;
    runs.par_iter().try_for_each(|r| -> Result<()> {
        let dir = run_dir(out, r.seed);
        write_log(&dir.join("training_log.csv"), &r.history)?;
        crate::io::write_mask(&dir.join("final_mask.txt"), &r.final_mask)
    })?;

    let col = |f: &dyn Fn(&RunResult) -> f64| runs.iter().map(f).collect::<Vec<f64>>();
    write_columns(
        &out.join("runs.csv"),
        &["run_index", "seed", "k_opt", "eps_opt", "eps_train_final", "eps_test"],
        &[
            &col(&|r| r.run_index as f64),
            &col(&|r| r.seed as f64),
            &col(&|r| r.k_opt as f64),
            &col(&|r| r.eps_opt),
            &col(&|r| r.eps_train_final),
            &col(&|r| r.eps_test),
        ],
    )?;

    let curves: Vec<&[f64]> = runs.iter().map(|r| r.curve.eps_accepted.as_slice()).collect();
    let mc = mean_curve(&curves)?;
    let ks: Vec<f64> = (1..=mc.mean.len()).map(|k| k as f64).collect();
    write_columns(&out.join("mean_curve.csv"), &["k", "mean", "std"], &[&ks, &mc.mean, &mc.std])?;

    let first = &runs[0];
    if let (_, _, Some(trace)) = exp.evaluate_with_trace(&first.final_mask, first.seed) {
        write_trace(&out.join("trace.csv"), &exp.task, &trace.raw, &trace.normalized)?;
    }

    let (mean_k_opt, std_k_opt) = mean_std(&col(&|r| r.k_opt as f64));
    let summary = TrainSummary {
        n: exp.n(),
        epochs: exp.epochs(),
        runs: runs.iter().map(RunSummary::from).collect(),
        mean_k_opt,
        std_k_opt,
        mean_eps_opt: mean(&col(&|r| r.eps_opt)),
        mean_eps_train_final: mean(&col(&|r| r.eps_train_final)),
        mean_eps_test: mean(&col(&|r| r.eps_test)),
        mean_curve_min: mc.mean.iter().copied().fold(f64::INFINITY, f64::min),
    };
    write_json(&out.join("train.json"), &summary)?;
    Ok((summary, runs))
}

/// Trace CSV with columns `step, target, y_raw, y_norm, error`.
fn write_trace(path: &Path, task: &Task, raw: &[f64], norm: &[f64]) -> Result<()> {
    let steps: Vec<f64> = (0..raw.len()).map(|i| i as f64).collect();
    let target = &task.test_target[..raw.len()];
    let err: Vec<f64> = norm.iter().zip(target).map(|(y, t)| y - t).collect();
    write_columns(path, &["step", "target", "y_raw", "y_norm", "error"], &[&steps, target, raw, norm, &err])
}

/// Reads the curve of one training log back.
pub fn read_log(path: &Path) -> Result<LearningCurve> {
    let t = read_table(path)?;
    Ok(LearningCurve {
        eps_initial: f64::NAN,
        eps_tested: t.column(path, "eps_tested")?.to_vec(),
        eps_accepted: t.column(path, "eps_accepted")?.to_vec(),
    })
}

/// Reads the training logs that `cmd_train` would have written for this
/// config and offset. Missing files are listed in the error.
pub fn read_ensemble_logs(config: &ExperimentConfig, out: &Path, seed_offset: usize) -> Result<Vec<LearningCurve>> {
    let paths: Vec<PathBuf> = (0..config.learner.ensemble)
        .map(|r| {
            let seed = config.learner.seed.wrapping_add((seed_offset + r) as u64);
            run_dir(out, seed).join("training_log.csv")
        })
        .collect();
    let missing: Vec<String> = paths
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Io {
            path: out.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!(
                    "missing {} training log(s); run `rgreedy train` with the same config and seed offset first. Expected: {}",
                    missing.len(),
                    missing.join(", ")
                ),
            ),
        });
    }
    paths.iter().map(|p| read_log(p)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub fit: Option<ExpFit>,
    pub decaying: bool,
    pub error: Option<String>,
}

impl FitReport {
    fn of(ks: &[f64], ys: &[f64]) -> Self {
        let (ks, ys): (Vec<f64>, Vec<f64>) = ks
            .iter()
            .zip(ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(k, y)| (*k, *y))
            .unzip();
        match fit_exponential(&ks, &ys) {
            Ok(f) => Self {
                decaying: f.is_decaying(),
                fit: Some(f),
                error: None,
            },
            Err(e) => Self {
                fit: None,
                decaying: false,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KinkReport {
    /// Window half-width in epochs, `max(1, n/10)`.
    pub window: usize,
    /// Improvement means around each run's own `k_opt`.
    pub per_run: Vec<KinkWindow>,
    /// Share of runs whose improvement mean rises after `k_opt`.
    pub rising_fraction: f64,
    /// The ensemble mean improvement curve around the rounded mean `k_opt`.
    pub ensemble: KinkWindow,
    /// Share of runs whose mean degradation magnitude rises after `k_opt`.
    pub degradation_rising_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeSummary {
    pub runs: usize,
    pub mean_k_opt: f64,
    pub mean_curve: FitReport,
    pub positive: FitReport,
    /// Fit of `|mean δ⁻|`.
    pub negative: FitReport,
    pub kink: KinkReport,
}

fn window_mean(values: &[f64], first_k: usize, lo: usize, hi: usize) -> f64 {
    let vals: Vec<f64> = (lo + 1..=hi)
        .filter(|&k| k >= first_k && k - first_k < values.len())
        .map(|k| values[k - first_k])
        .filter(|v| v.is_finite())
        .collect();
    if vals.is_empty() {
        f64::NAN
    } else {
        mean(&vals)
    }
}

/// Gradient split, exponential fits and kink diagnostic of an ensemble.
pub fn landscape(curves: &[LearningCurve], n: usize) -> Result<(GradientSplit, LandscapeSummary)> {
    if curves.is_empty() || curves.iter().any(|c| c.len() < 2) {
        return Err(Error::config("landscape needs at least one curve of length >= 2"));
    }
    let split = ensemble_gradient_split(curves)?;
    let window = (n / 10).max(1);
    let k_opts: Vec<f64> = curves.iter().map(|c| c.k_opt() as f64).collect();
    let mean_k_opt = mean(&k_opts);

    let accepted: Vec<&[f64]> = curves.iter().map(|c| c.eps_accepted.as_slice()).collect();
    let mc = mean_curve(&accepted)?;
    let ks: Vec<f64> = (1..=mc.mean.len()).map(|k| k as f64).collect();
    let split_ks: Vec<f64> = split.k.iter().map(|&k| k as f64).collect();
    let neg_abs: Vec<f64> = split.neg_mean.iter().map(|v| v.abs()).collect();

    let per_run: Vec<KinkWindow> = curves
        .iter()
        .map(|c| analysis::kink_window(c, c.k_opt(), window, |d| (d > 0.0).then_some(d)))
        .collect();
    let degr: Vec<KinkWindow> = curves
        .iter()
        .map(|c| analysis::kink_window(c, c.k_opt(), window, |d| (d <= 0.0).then_some(-d)))
        .collect();
    let frac = |w: &[KinkWindow]| w.iter().filter(|k| k.rises()).count() as f64 / w.len() as f64;
    let center = mean_k_opt.round() as usize;
    let ensemble = KinkWindow {
        k_opt: center,
        before: window_mean(&split.pos_mean, 2, center.saturating_sub(window), center),
        after: window_mean(&split.pos_mean, 2, center, center + window),
    };

    let summary = LandscapeSummary {
        runs: curves.len(),
        mean_k_opt,
        mean_curve: FitReport::of(&ks, &mc.mean),
        positive: FitReport::of(&split_ks, &split.pos_mean),
        negative: FitReport::of(&split_ks, &neg_abs),
        kink: KinkReport {
            window,
            rising_fraction: frac(&per_run),
            per_run,
            ensemble,
            degradation_rising_fraction: frac(&degr),
        },
    };
    Ok((split, summary))
}

pub fn write_gradient_split(path: &Path, split: &GradientSplit) -> Result<()> {
    let f = |v: &[usize]| v.iter().map(|&x| x as f64).collect::<Vec<f64>>();
    write_columns(
        path,
        &["k", "pos_mean", "pos_count", "neg_mean", "neg_count"],
        &[&f(&split.k), &split.pos_mean, &f(&split.pos_count), &split.neg_mean, &f(&split.neg_count)],
    )
}

/// Gradient split and fits from the training logs in `out`.
pub fn cmd_landscape(config: &ExperimentConfig, out: &Path, seed_offset: usize) -> Result<LandscapeSummary> {
    config.validate()?;
    let curves = read_ensemble_logs(config, out, seed_offset)?;
    let (split, summary) = landscape(&curves, config.reservoir.n)?;
    write_gradient_split(&out.join("gradient_split.csv"), &split)?;
    write_json(&out.join("landscape.json"), &summary)?;
    Ok(summary)
}

/// Size sweep with one ensemble per size.
pub fn cmd_scaling(config: &ExperimentConfig, out: &Path, seed_offset: usize) -> Result<ScalingResult> {
    config.validate()?;
    let (result, runs) = scaling_sweep(config, seed_offset)?;
    write_config(config, out)?;
    let p = &result.points;
    let col = |f: &dyn Fn(&analysis::ScalingPoint) -> f64| p.iter().map(f).collect::<Vec<f64>>();
    write_columns(
        &out.join("scaling.csv"),
        &["n", "mean_k_opt", "std_k_opt", "mean_eps_opt", "mean_eps_test"],
        &[
            &col(&|q| q.n as f64),
            &col(&|q| q.mean_k_opt),
            &col(&|q| q.std_k_opt),
            &col(&|q| q.mean_eps_opt),
            &col(&|q| q.mean_eps_test),
        ],
    )?;
    let flat: Vec<&RunResult> = runs.iter().flatten().collect();
    let rc = |f: &dyn Fn(&RunResult) -> f64| flat.iter().map(|r| f(r)).collect::<Vec<f64>>();
    write_columns(
        &out.join("scaling_runs.csv"),
        &["n", "run_index", "seed", "k_opt", "eps_opt", "eps_test"],
        &[
            &rc(&|r| r.n as f64),
            &rc(&|r| r.run_index as f64),
            &rc(&|r| r.seed as f64),
            &rc(&|r| r.k_opt as f64),
            &rc(&|r| r.eps_opt),
            &rc(&|r| r.eps_test),
        ],
    )?;
    write_json(&out.join("scaling.json"), &result)?;
    Ok(result)
}

fn points(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().copied().zip(y.iter().copied()).collect()
}

fn save(out: &Path, name: &str, chart: &Chart, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    write_text(&path, &plot::render(chart))?;
    written.push(path);
    Ok(())
}

/// Renders every known CSV found in `input` to an SVG in `out`.
pub fn cmd_plot(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();

    let p = input.join("mean_curve.csv");
    if p.exists() {
        let t = read_table(&p)?;
        let (k, m) = (t.column(&p, "k")?, t.column(&p, "mean")?);
        let mut series = vec![Series::new("ensemble mean", "#1f77b4", Style::Line, points(k, m))];
        if let Ok(f) = fit_exponential(k, m) {
            series.push(Series::new(
                "exponential fit",
                "#2ca02c",
                Style::Dashed,
                k.iter().map(|&x| (x, f.eval(x))).collect(),
            ));
        }
        let chart = Chart {
            title: "Learning curve".into(),
            x_label: "epoch k".into(),
            y_label: "NMSE".into(),
            log_y: true,
            series,
            ..Default::default()
        };
        save(out, "learning_curve.svg", &chart, &mut written)?;
    }

    let p = input.join("gradient_split.csv");
    if p.exists() {
        let t = read_table(&p)?;
        let k = t.column(&p, "k")?;
        let neg: Vec<f64> = t.column(&p, "neg_mean")?.iter().map(|v| v.abs()).collect();
        let chart = Chart {
            title: "Error gradients".into(),
            x_label: "epoch k".into(),
            y_label: "mean |δε/δk|".into(),
            log_y: true,
            series: vec![
                Series::new("improvements", "#d62728", Style::Markers, points(k, t.column(&p, "pos_mean")?)),
                Series::new("degradations", "#1f77b4", Style::Markers, points(k, &neg)),
            ],
            ..Default::default()
        };
        save(out, "gradient_split.svg", &chart, &mut written)?;
    }

    let p = input.join("scaling.csv");
    if p.exists() {
        let t = read_table(&p)?;
        let (n, k) = (t.column(&p, "n")?, t.column(&p, "mean_k_opt")?);
        let mut series = vec![Series::new("mean k_opt", "#1f77b4", Style::Markers, points(n, k))];
        if let Ok((slope, icpt)) = analysis::fit_loglog_slope(&points(n, k)) {
            series.push(Series::new(
                format!("fit, slope {slope:.3}"),
                "#ff7f0e",
                Style::Line,
                n.iter().map(|&x| (x, (icpt + slope * x.ln()).exp())).collect(),
            ));
        }
        let chart = Chart {
            title: "Optimal epoch vs network size".into(),
            x_label: "n".into(),
            y_label: "k_opt".into(),
            log_x: true,
            log_y: true,
            series,
        };
        save(out, "scaling.svg", &chart, &mut written)?;
    }

    let p = input.join("trace.csv");
    if p.exists() {
        let t = read_table(&p)?;
        let show = t.rows().min(300);
        let s = &t.column(&p, "step")?[..show];
        let chart = Chart {
            title: "Held-out prediction".into(),
            x_label: "step".into(),
            y_label: "normalized value".into(),
            series: vec![
                Series::new("target", "#7f7f7f", Style::Line, points(s, &t.column(&p, "target")?[..show])),
                Series::new("output", "#d62728", Style::Dashed, points(s, &t.column(&p, "y_norm")?[..show])),
            ],
            ..Default::default()
        };
        save(out, "prediction.svg", &chart, &mut written)?;
    }

    if written.is_empty() {
        return Err(Error::Io {
            path: input.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "nothing to plot: expected mean_curve.csv, gradient_split.csv, scaling.csv or trace.csv",
            ),
        });
    }
    Ok(written)
}
