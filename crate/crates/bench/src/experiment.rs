use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use negmom_core::cfr::{run_solver, ConvergenceLog};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};

/// Runs the solver and, when `output` is set, writes the CSV log there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ConvergenceLog> {
    let game = config.load_game()?;
    let log = run_solver(game.as_ref(), &config.solve_config())?;
    if let Some(path) = &config.output {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        }
        log.write_csv(path).map_err(|e| BenchError::io(path, e))?;
    }
    Ok(log)
}

/// Runs independent experiments on up to `workers` threads. Results come
/// back in input order.
pub fn run_many(configs: &[ExperimentConfig], workers: usize) -> Vec<Result<ConvergenceLog>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<ConvergenceLog>>>> = Mutex::new((0..configs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, configs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(config) = configs.get(i) else { break };
                let outcome = run_experiment(config);
                results.lock().expect("result slot lock")[i] = Some(outcome);
            });
        }
    });
    results.into_inner().expect("result slot lock").into_iter().map(|r| r.expect("every job ran")).collect()
}

/// Worker count from the machine's available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

/// File name for a preset key: `table2/kuhn/mocfr+` becomes
/// `table2_kuhn_mocfr+.csv`.
pub fn preset_file_name(key: &str) -> String {
    format!("{}.csv", key.replace('/', "_"))
}

/// Output path for one point of a sweep over `param`.
pub fn sweep_output(dir: &Path, stem: &str, param: &str, config: &ExperimentConfig) -> PathBuf {
    let value = match param {
        "k" => config.k.to_string(),
        "beta" => config.beta.to_string(),
        _ => config.eta.to_string(),
    };
    dir.join(format!("{stem}_{param}{value}.csv"))
}
