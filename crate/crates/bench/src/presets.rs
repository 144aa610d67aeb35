//! Hyperparameter presets keyed `table1/<game>/<algorithm>` for matrix games
//! and `table2/<game>/<algorithm>` for extensive-form games.
//!
//! Every preset normalizes payoffs into `[−1, 1]`. Regret-matching+
//! algorithms (RM+, MoRM+, PRM+, CFR+, MoCFR+, PCFR+) alternate; all others
//! update simultaneously. Baselines without tuned values (RM, RM+, CFR,
//! CFR+, PCFR+) are included with their default averaging.

use negmom_core::cfr::Algorithm;
use negmom_core::momentum::RestartInterval;

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};

/// Whether the algorithm conventionally runs with alternating updates.
pub fn conventional_alternation(algorithm: Algorithm) -> bool {
    matches!(
        algorithm,
        Algorithm::RmPlus
            | Algorithm::MoRmPlus
            | Algorithm::PredictiveRmPlus
            | Algorithm::CfrPlus
            | Algorithm::MoCfrPlus
            | Algorithm::PcfrPlus
    )
}

/// Tuned `(algorithm, eta, beta, k)` per matrix game.
const TABLE1: &[(&str, &[(Algorithm, f64, f64, usize)])] = &[
    (
        "3x3",
        &[
            (Algorithm::MoRmPlus, 1.0, -0.04, 10),
            (Algorithm::MoMwu, 1.0, -0.06, 50),
            (Algorithm::Ogda, 1.0, 0.0, 1),
            (Algorithm::Omwu, 1.0, 0.0, 1),
        ],
    ),
    (
        "random25",
        &[
            (Algorithm::MoRmPlus, 1.0, -0.02, 70),
            (Algorithm::MoMwu, 7.0, -0.02, 100),
            (Algorithm::Ogda, 4.0, 0.0, 1),
            (Algorithm::Omwu, 5.0, 0.0, 1),
        ],
    ),
    (
        "random50",
        &[
            (Algorithm::MoRmPlus, 1.0, -0.005, 70),
            (Algorithm::MoMwu, 7.0, -0.02, 100),
            (Algorithm::Ogda, 5.0, 0.0, 1),
            (Algorithm::Omwu, 7.0, 0.0, 1),
        ],
    ),
    (
        "random75",
        &[
            (Algorithm::MoRmPlus, 1.0, -0.003, 35),
            (Algorithm::MoMwu, 9.0, -0.02, 100),
            (Algorithm::Ogda, 7.0, 0.0, 1),
            (Algorithm::Omwu, 9.0, 0.0, 1),
        ],
    ),
];

const TABLE1_BASELINES: [Algorithm; 2] = [Algorithm::Rm, Algorithm::RmPlus];

const TABLE2: &[(&str, &[(Algorithm, f64, f64, usize)])] = &[
    (
        "kuhn",
        &[(Algorithm::MoCfrPlus, 1.0, -0.2, 5), (Algorithm::DMoGda, 2.0, -0.1, 10), (Algorithm::Ogda, 1.5, 0.0, 1)],
    ),
    (
        "goofspiel4",
        &[(Algorithm::MoCfrPlus, 1.0, -0.02, 10), (Algorithm::DMoGda, 1.0, -0.04, 70), (Algorithm::Ogda, 0.5, 0.0, 1)],
    ),
    (
        "liars_dice4",
        &[(Algorithm::MoCfrPlus, 1.0, -0.02, 40), (Algorithm::DMoGda, 3.0, -0.005, 10), (Algorithm::Ogda, 3.0, 0.0, 1)],
    ),
    (
        "leduc",
        &[(Algorithm::MoCfrPlus, 1.0, -0.01, 30), (Algorithm::DMoGda, 4.0, -0.005, 100), (Algorithm::Ogda, 3.0, 0.0, 1)],
    ),
    (
        "goofspiel5",
        &[(Algorithm::MoCfrPlus, 1.0, -0.01, 50), (Algorithm::DMoGda, 0.8, -0.02, 100), (Algorithm::Ogda, 0.8, 0.0, 1)],
    ),
    (
        "liars_dice5",
        &[
            (Algorithm::MoCfrPlus, 1.0, -0.003, 100),
            (Algorithm::DMoGda, 4.0, -0.0005, 50),
            (Algorithm::Ogda, 3.0, 0.0, 1),
        ],
    ),
];

const TABLE2_BASELINES: [Algorithm; 3] = [Algorithm::Cfr, Algorithm::CfrPlus, Algorithm::PcfrPlus];

/// Iteration budget: desk scale by default, long runs with `full_scale`.
fn iterations(game: &str, full_scale: bool) -> u64 {
    match (game, full_scale) {
        ("kuhn", false) => 10_000,
        (_, false) if game.starts_with("random") || game == "3x3" => 10_000,
        (_, false) => 2_000,
        (_, true) => 100_000,
    }
}

fn build(table: &str, game: &str, algorithm: Algorithm, eta: f64, beta: f64, k: usize, full_scale: bool) -> (String, ExperimentConfig) {
    let matrix = table == "table1";
    let config = ExperimentConfig {
        game: game.to_string(),
        algorithm,
        eta,
        beta,
        k: RestartInterval::Finite(k),
        iterations: iterations(game, full_scale),
        alternating: conventional_alternation(algorithm),
        averaging: None,
        eval_every: if matrix { 1 } else { 10 },
        seed: game.starts_with("random").then_some(0),
        normalize: true,
        output: None,
    };
    (format!("{table}/{game}/{algorithm}"), config)
}

/// Every preset, in table order.
pub fn all_presets(full_scale: bool) -> Vec<(String, ExperimentConfig)> {
    let mut out = Vec::new();
    for (table, rows, baselines) in
        [("table1", TABLE1, &TABLE1_BASELINES[..]), ("table2", TABLE2, &TABLE2_BASELINES[..])]
    {
        for (game, tuned) in rows {
            for &(alg, eta, beta, k) in tuned.iter() {
                out.push(build(table, game, alg, eta, beta, k, full_scale));
            }
            for &alg in baselines {
                out.push(build(table, game, alg, 1.0, 0.0, 1, full_scale));
            }
        }
    }
    out
}

/// Desk-scale presets only: excludes the five-card Goofspiel and five-face
/// Liar's dice entries, which need `full_scale` runs to be meaningful.
pub fn desk_presets() -> Vec<(String, ExperimentConfig)> {
    all_presets(false)
        .into_iter()
        .filter(|(_, c)| !matches!(c.game.as_str(), "goofspiel5" | "liars_dice5"))
        .collect()
}

pub fn preset(key: &str, full_scale: bool) -> Result<ExperimentConfig> {
    all_presets(full_scale)
        .into_iter()
        .find(|(k, _)| k == key)
        .map(|(_, c)| c)
        .ok_or_else(|| BenchError::Config(format!("unknown preset `{key}`")))
}

/// Configurations for a one-parameter grid over `base`.
pub fn sweep(base: &ExperimentConfig, param: &str, values: &[f64]) -> Result<Vec<ExperimentConfig>> {
    values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            match param {
                "k" => {
                    if v.fract() != 0.0 || v < 1.0 {
                        return Err(BenchError::Config(format!("k must be a positive integer, got {v}")));
                    }
                    c.k = RestartInterval::Finite(v as usize);
                }
                "beta" => c.beta = v,
                "eta" => c.eta = v,
                other => return Err(BenchError::Config(format!("cannot sweep `{other}`; use k, beta or eta"))),
            }
            c.solve_config().validate()?;
            Ok(c)
        })
        .collect()
}

/// The restart intervals of the buffer-length ablation.
pub const ABLATION_K: [f64; 5] = [1.0, 5.0, 10.0, 50.0, 100.0];
