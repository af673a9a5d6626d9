use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rgreedy::commands;
use rgreedy::experiment::ExperimentConfig;
use rgreedy::Error;

#[derive(Parser)]
#[command(name = "rgreedy", version, about = "Photonic reservoir with a greedily trained Boolean readout")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config. Omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for ensembles and sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; RGREEDY_OUT takes precedence.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Index of the first ensemble member.
    #[arg(long, global = true, default_value_t = 0)]
    seed_offset: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write the Mackey-Glass series
    Generate,
    /// Train an ensemble of learners
    Train,
    /// Gradient split and fits from existing training logs
    Landscape,
    /// Sweep network sizes
    Scaling,
    /// Render SVGs from the CSVs in a directory
    Plot {
        /// Directory holding the CSVs (default: the output directory)
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    config.validate()?;
    let out = commands::resolve_out(cli.out.as_deref(), &config);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be >= 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    let offset = cli.seed_offset;

    pool.install(|| match cli.command {
        Command::Generate => {
            let s = commands::cmd_generate(&config, &out)?;
            println!("{}: {} samples, mean {:.6}, std {:.6}", s.path.display(), s.len, s.mean, s.std);
            Ok(())
        }
        Command::Train => {
            let (s, _) = commands::cmd_train(&config, &out, offset)?;
            for r in &s.runs {
                println!(
                    "seed {:>6}  k_opt {:>6}  train {:.5}  test {:.5}",
                    r.seed, r.k_opt, r.eps_opt, r.eps_test
                );
            }
            println!(
                "n {}  epochs {}  mean k_opt {:.1}  mean train {:.5}  mean test {:.5}",
                s.n, s.epochs, s.mean_k_opt, s.mean_eps_opt, s.mean_eps_test
            );
            Ok(())
        }
        Command::Landscape => {
            let s = commands::cmd_landscape(&config, &out, offset)?;
            let rate = |f: &commands::FitReport| f.fit.map_or(f64::NAN, |f| f.rate);
            println!(
                "runs {}  mean k_opt {:.1}  decay: curve {:.1}  improvements {:.1}  degradations {:.1}",
                s.runs,
                s.mean_k_opt,
                rate(&s.mean_curve),
                rate(&s.positive),
                rate(&s.negative)
            );
            println!("kink: rising after k_opt in {:.0}% of runs", 100.0 * s.kink.rising_fraction);
            Ok(())
        }
        Command::Scaling => {
            let r = commands::cmd_scaling(&config, &out, offset)?;
            for p in &r.points {
                println!(
                    "n {:>5}  k_opt {:>8.1} ± {:<7.1}  eps_opt {:.5}  eps_test {:.5}",
                    p.n, p.mean_k_opt, p.std_k_opt, p.mean_eps_opt, p.mean_eps_test
                );
            }
            match r.slope {
                Some(s) => println!("log-log slope {s:.3}"),
                None => println!("log-log slope unavailable (fewer than 3 sizes)"),
            }
            if let Some(ratio) = r.performance_ratio {
                println!("eps_opt smallest/largest {ratio:.2}");
            }
            Ok(())
        }
        Command::Plot { input } => {
            let input = input.unwrap_or_else(|| out.clone());
            for p in commands::cmd_plot(&input, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rgreedy: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
