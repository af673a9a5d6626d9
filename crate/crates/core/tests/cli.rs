//! End-to-end behaviour of the `rgreedy` binary and the command functions.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rgreedy::commands::{cmd_landscape, cmd_plot, cmd_scaling, cmd_train, run_dir};
use rgreedy::experiment::ExperimentConfig;
use rgreedy::Error;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rgreedy"));
    c.env_remove("RGREEDY_OUT");
    c
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

const SMALL: &str = "[reservoir]\nn = 16\n[learner]\nensemble = 3\n";

#[test]
fn generate_is_byte_identical_and_sized() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "");
    for out in ["a", "b"] {
        let o = run(bin().args(["generate", "--config"]).arg(&cfg).arg("--out").arg(d.path().join(out)));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("9400 samples"));
    }
    let a = fs::read(d.path().join("a/mackey_glass.csv")).unwrap();
    assert_eq!(a, fs::read(d.path().join("b/mackey_glass.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 9401);
}

#[test]
fn config_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    for text in ["[task]\nseries_len = 0\n", "[reservoir]\nn = 15\n", "[learner]\nensemble = 0\n", "not toml ["] {
        let cfg = write_config(d.path(), text);
        let out = d.path().join("never");
        let o = run(bin().args(["train", "--config"]).arg(&cfg).arg("--out").arg(&out));
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(!out.exists(), "no output before validation");
    }
    let o = run(bin().args(["frobnicate"]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_errors_exit_three() {
    let d = tempfile::tempdir().unwrap();
    let blocker = d.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(bin().args(["generate", "--out"]).arg(blocker.join("sub")));
    assert_eq!(o.status.code(), Some(3));
    let o = run(bin().args(["generate", "--config"]).arg(d.path().join("missing.toml")));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn env_overrides_out_flag() {
    let d = tempfile::tempdir().unwrap();
    let env_dir = d.path().join("from_env");
    let o = run(bin().args(["generate", "--out"]).arg(d.path().join("from_flag")).env("RGREEDY_OUT", &env_dir));
    assert!(o.status.success());
    assert!(env_dir.join("mackey_glass.csv").exists());
    assert!(!d.path().join("from_flag").exists());
}

#[test]
fn landscape_names_missing_logs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let o = run(bin().args(["landscape", "--config"]).arg(&cfg).arg("--out").arg(d.path()));
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    for seed in 1000..1003 {
        assert!(err.contains(&format!("run_seed{seed}/training_log.csv")), "{err}");
    }
    assert!(err.contains("rgreedy train"));
}

#[test]
fn train_then_landscape_then_plot() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let out = d.path().join("o");
    for cmd in ["train", "landscape", "plot"] {
        let o = run(bin().arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(&out).args(["--jobs", "2"]));
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["runs.csv", "mean_curve.csv", "trace.csv", "train.json", "gradient_split.csv", "landscape.json",
              "learning_curve.svg", "gradient_split.svg", "prediction.svg", "config.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    for seed in 1000..1003 {
        assert!(run_dir(&out, seed).join("training_log.csv").exists());
        assert!(run_dir(&out, seed).join("final_mask.txt").exists());
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("step,target,y_raw,y_norm,error\n"));
    assert_eq!(trace.lines().count(), 9001);
}

#[test]
fn jobs_and_offset_do_not_change_results() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let go = |out: &str, jobs: &str, offset: &str| {
        let o = run(bin().args(["train", "--jobs", jobs, "--seed-offset", offset, "--config"]).arg(&cfg).arg("--out").arg(d.path().join(out)));
        assert!(o.status.success());
    };
    go("one", "1", "0");
    go("four", "4", "0");
    go("shift", "2", "1");
    let log = |out: &str, seed: u64| fs::read(run_dir(&d.path().join(out), seed).join("training_log.csv")).unwrap();
    for seed in 1000..1003 {
        assert_eq!(log("one", seed), log("four", seed));
    }
    // offset 1 runs seeds 1001..=1003; the overlap is identical
    assert_eq!(log("one", 1001), log("shift", 1001));
    assert_eq!(fs::read(d.path().join("one/runs.csv")).unwrap(), fs::read(d.path().join("four/runs.csv")).unwrap());
}

#[test]
fn single_epoch_single_run() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default().with_size(9);
    cfg.learner.ensemble = 1;
    cfg.learner.epochs = Some(1);
    let (s, _) = cmd_train(&cfg, d.path(), 0).unwrap();
    assert_eq!(s.runs.len(), 1);
    let log = fs::read_to_string(run_dir(d.path(), 1000).join("training_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 2);
    assert!(log.starts_with("k,l_k,eps_tested,eps_accepted,reward,hamming_weight\n1,"));
    assert!(s.runs[0].eps_test.is_finite());
}

fn write_log(dir: &Path, tested: &[f64], accepted: &[f64]) {
    fs::create_dir_all(dir).unwrap();
    let mut s = String::from("k,l_k,eps_tested,eps_accepted,reward,hamming_weight\n");
    for (i, (t, a)) in tested.iter().zip(accepted).enumerate() {
        s += &format!("{},0,{t},{a},0,1\n", i + 1);
    }
    fs::write(dir.join("training_log.csv"), s).unwrap();
}

#[test]
fn landscape_of_synthetic_logs() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default().with_size(9);
    cfg.learner.ensemble = 2;
    write_log(&run_dir(d.path(), 1000), &[1.0, 0.8, 0.9, 0.5, 0.5], &[1.0, 0.8, 0.8, 0.5, 0.5]);
    write_log(&run_dir(d.path(), 1001), &[1.0, 1.5, 0.7, 0.75, 0.25], &[1.0, 1.0, 0.7, 0.7, 0.25]);
    cmd_landscape(&cfg, d.path(), 0).unwrap();
    let csv = fs::read_to_string(d.path().join("gradient_split.csv")).unwrap();
    // per epoch one improvement and one degradation, enumerated by hand
    let rows = [
        (2, 1.0 - 0.8, 1.0 - 1.5),
        (3, 1.0 - 0.7, 0.8 - 0.9),
        (4, 0.8 - 0.5, 0.7 - 0.75),
        (5, 0.7 - 0.25, 0.5 - 0.5),
    ];
    let mut want = String::from("k,pos_mean,pos_count,neg_mean,neg_count\n");
    for (k, pos, neg) in rows {
        want += &format!("{k},{pos},1,{neg},1\n");
    }
    assert_eq!(csv, want);
}

#[test]
fn monotone_run_has_empty_negative_column() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default().with_size(9);
    cfg.learner.ensemble = 1;
    let t = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5];
    write_log(&run_dir(d.path(), 1000), &t, &t);
    cmd_landscape(&cfg, d.path(), 0).unwrap();
    let csv = fs::read_to_string(d.path().join("gradient_split.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!((cells[3], cells[4]), ("", "0"), "{line}");
    }
}

#[test]
fn single_size_sweep_has_no_slope() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.scaling.sizes = vec![16];
    cfg.scaling.ensemble = 2;
    let r = cmd_scaling(&cfg, d.path(), 0).unwrap();
    assert_eq!(r.slope, None);
    assert_eq!(fs::read_to_string(d.path().join("scaling.csv")).unwrap().lines().count(), 2);
    let json = fs::read_to_string(d.path().join("scaling.json")).unwrap();
    assert!(json.contains("\"slope\": null"));
    cmd_plot(d.path(), d.path()).unwrap();
    assert!(d.path().join("scaling.svg").exists());
}

#[test]
fn plot_reports_bad_csv_line() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("mean_curve.csv"), "k,mean,std\n1,0.5,0\n2,oops,0\n").unwrap();
    match cmd_plot(d.path(), d.path()) {
        Err(Error::Parse { line, path, .. }) => {
            assert_eq!(line, 3);
            assert!(path.ends_with("mean_curve.csv"));
        }
        other => panic!("{other:?}"),
    }
    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(cmd_plot(empty.path(), empty.path()), Err(Error::Io { .. })));
}

#[test]
fn plot_is_deterministic_and_leaves_inputs_alone() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("scaling.csv"), "n,mean_k_opt,std_k_opt,mean_eps_opt,mean_eps_test\n16,20,1,0.1,0.1\n64,90,2,0.05,0.05\n256,400,3,0.03,0.03\n").unwrap();
    let before = fs::read(d.path().join("scaling.csv")).unwrap();
    cmd_plot(d.path(), &d.path().join("a")).unwrap();
    cmd_plot(d.path(), &d.path().join("b")).unwrap();
    let svg = fs::read(d.path().join("a/scaling.svg")).unwrap();
    assert_eq!(svg, fs::read(d.path().join("b/scaling.svg")).unwrap());
    assert_eq!(before, fs::read(d.path().join("scaling.csv")).unwrap());
    assert!(String::from_utf8_lossy(&svg).contains("slope"));
}
