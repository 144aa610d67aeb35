use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use negmom_bench::checks::{theorem1_check, theorem3_check};
use negmom_bench::config::{load_game, parse_raw, LoadedGame, RawConfig, RawInterval};
use negmom_bench::experiment::{default_workers, preset_file_name, run_experiment, run_many, sweep_output};
use negmom_bench::presets::{all_presets, desk_presets, sweep};
use negmom_bench::{BenchError, ExperimentConfig, Result};
use negmom_core::games::builtin_matrix_games;
use serde::Serialize;

/// Negative-momentum game solvers: run experiments, presets, sweeps and
/// property checks. Exit status: 0 success, 2 configuration error,
/// 3 runtime failure (including a failed check).
#[derive(Debug, Parser)]
#[command(name = "negmom-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its CSV log.
    Solve(SolveArgs),
    /// Run a named preset (or `all`) into a directory.
    Preset {
        /// Preset key such as `table2/kuhn/mocfr+`, or `all`.
        #[arg(long, required_unless_present = "list")]
        name: Option<String>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        /// Use the long iteration budgets and include the largest games.
        #[arg(long)]
        full: bool,
        /// Print the preset keys and exit.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Property checks of the momentum dynamics on a matrix game.
    Check {
        /// 1: geometric decay without restarts; 3: convergence with restarts.
        #[arg(long)]
        theorem: u8,
        #[arg(long, default_value = "3x3")]
        game: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        iters: Option<u64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the raw payoffs instead of scaling them into [-1, 1].
        #[arg(long)]
        raw: bool,
    },
    /// Run a base experiment over a grid of one parameter.
    Sweep {
        /// `k`, `beta` or `eta`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        base: SolveArgs,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset to start from; flags override its values.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Restart interval: a positive integer or `inf`.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long, conflicts_with = "simultaneous")]
    alternating: bool,
    #[arg(long)]
    simultaneous: bool,
    /// `uniform`, `linear`, `quadratic` or `last`.
    #[arg(long)]
    averaging: Option<String>,
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scale payoffs into [-1, 1].
    #[arg(long)]
    normalize: bool,
    /// Use the long iteration budget when starting from a preset.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => parse_raw(&std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?)?,
            None => RawConfig::default(),
        };
        let k = self.k.as_ref().map(|s| match s.parse::<u64>() {
            Ok(n) => RawInterval::Count(n),
            Err(_) => RawInterval::Text(s.clone()),
        });
        let flags = RawConfig {
            preset: self.preset.clone(),
            game: self.game.clone(),
            algorithm: self.algo.clone(),
            eta: self.eta,
            beta: self.beta,
            k,
            iterations: self.iters,
            alternating: if self.alternating {
                Some(true)
            } else if self.simultaneous {
                Some(false)
            } else {
                None
            },
            averaging: self.averaging.clone(),
            eval_every: self.eval_every,
            seed: self.seed,
            normalize: self.normalize.then_some(true),
            output: self.out.clone(),
        };
        file.overlay(flags).resolve(self.full)
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn summarize(key: &str, log: &negmom_core::cfr::ConvergenceLog) -> String {
    match log.rows.last() {
        Some(r) => format!("{key}: {} rows, exploitability {:.3e} at iteration {}", log.rows.len(), r.exploitability, r.iteration),
        None => format!("{key}: no rows"),
    }
}

fn run_batch(jobs: Vec<(String, ExperimentConfig)>, workers: Option<usize>) -> Result<()> {
    let configs: Vec<ExperimentConfig> = jobs.iter().map(|(_, c)| c.clone()).collect();
    let mut failure = None;
    for ((key, _), outcome) in jobs.iter().zip(run_many(&configs, workers.unwrap_or_else(default_workers))) {
        match outcome {
            Ok(log) => println!("{}", summarize(key, &log)),
            Err(e) => {
                eprintln!("{key}: {e}");
                failure.get_or_insert(e);
            }
        }
    }
    failure.map_or(Ok(()), Err)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => {
            let config = args.resolve()?;
            let log = run_experiment(&config)?;
            match &config.output {
                Some(path) => println!("{} -> {}", summarize(&config.game, &log), path.display()),
                None => print!("{}", log.to_csv()),
            }
            Ok(())
        }
        Command::Preset { name, out_dir, full, list, workers } => {
            let presets = if full { all_presets(true) } else { desk_presets() };
            if list {
                presets.iter().for_each(|(k, _)| println!("{k}"));
                return Ok(());
            }
            let name = name.expect("clap requires --name without --list");
            let selected: Vec<(String, ExperimentConfig)> = if name == "all" {
                presets
            } else {
                vec![(name.clone(), negmom_bench::presets::preset(&name, full)?)]
            };
            let jobs = selected
                .into_iter()
                .map(|(key, mut c)| {
                    c.output = Some(out_dir.join(preset_file_name(&key)));
                    (key, c)
                })
                .collect();
            run_batch(jobs, workers)
        }
        Command::Check { theorem, game, beta, eta, k, iters, tol, seed, raw } => {
            let LoadedGame::Matrix { game: matrix, .. } = load_game(&game, seed, !raw)? else {
                return Err(BenchError::Config(format!("`{game}` is not a matrix game")));
            };
            let (passed, summary) = match theorem {
                1 => {
                    let report = theorem1_check(&matrix, beta.unwrap_or(-0.5), eta.unwrap_or(0.15), iters.unwrap_or(200))?;
                    print_json(&report);
                    (report.passed, format!("KL ratio {} exceeds the bound", report.max_ratio))
                }
                3 => {
                    let known = builtin_matrix_games().into_iter().find(|g| g.name == game).and_then(|g| g.equilibrium);
                    let report = theorem3_check(
                        &matrix,
                        beta.unwrap_or(-0.06),
                        eta.unwrap_or(1.0),
                        k.unwrap_or(50),
                        iters.unwrap_or(100_000),
                        tol,
                        known.as_ref().map(|(x, y)| (x.as_slice(), y.as_slice())),
                    )?;
                    print_json(&report);
                    (report.passed || !report.applicable, report.note)
                }
                other => return Err(BenchError::Config(format!("unknown theorem {other}; expected 1 or 3"))),
            };
            if passed {
                Ok(())
            } else {
                Err(BenchError::CheckFailed(summary))
            }
        }
        Command::Sweep { param, values, out_dir, workers, base } => {
            let config = base.resolve()?;
            let stem = config.output.as_ref().and_then(|p| p.file_stem()).map_or_else(
                || format!("{}_{}", config.game, config.algorithm),
                |s| s.to_string_lossy().into_owned(),
            );
            let jobs = sweep(&config, &param, &values)?
                .into_iter()
                .map(|mut c| {
                    let path = sweep_output(&out_dir, &stem, &param, &c);
                    c.output = Some(path.clone());
                    (path.display().to_string(), c)
                })
                .collect();
            run_batch(jobs, workers)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
