//! Experiment configuration: a flat JSON document, optionally seeded from a
//! named preset whose values the remaining keys override.
//!
//! ```json
//! { "preset": "table2/kuhn/mocfr+", "iterations": 500, "output": "kuhn.csv" }
//! ```
//!
//! Keys: `preset`, `game`, `algorithm`, `eta`, `beta`, `k` (a positive
//! integer or `"inf"`), `iterations`, `alternating`, `averaging`
//! (`uniform`, `linear`, `quadratic` or `last`), `eval_every`, `seed`,
//! `normalize`, `output`. Unknown keys are rejected.

use std::path::PathBuf;

use negmom_core::cfr::{Algorithm, GameKind, GameRef, SolveConfig};
use negmom_core::efg::EfgGame;
use negmom_core::games::{efg_by_name, matrix_game_by_name, random_nfg, EFG_NAMES};
use negmom_core::momentum::RestartInterval;
use negmom_core::nfg::MatrixGame;
use negmom_core::simplex::AveragingScheme;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::presets;

/// Matrix games available by name besides `random<n>` / `random<m>x<n>`.
pub const MATRIX_NAMES: [&str; 2] = ["3x3", "bias_rps"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub game: String,
    pub algorithm: Algorithm,
    pub eta: f64,
    pub beta: f64,
    pub k: RestartInterval,
    pub iterations: u64,
    pub alternating: bool,
    /// `None` selects the algorithm's conventional scheme.
    pub averaging: Option<AveragingScheme>,
    pub eval_every: u64,
    /// Seed for random matrix games; recorded in the log.
    pub seed: Option<u64>,
    /// Divide payoffs by their largest magnitude before solving.
    pub normalize: bool,
    pub output: Option<PathBuf>,
}

/// Serialized form. Every field is optional so that documents and CLI
/// flags can be layered over a preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<RawInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternating: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub averaging: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_every: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawInterval {
    Count(u64),
    Text(String),
}

impl RawInterval {
    fn resolve(&self) -> Result<RestartInterval> {
        match self {
            RawInterval::Count(n) => Ok(RestartInterval::finite(*n as usize)?),
            RawInterval::Text(s) => Ok(s.parse()?),
        }
    }
}

impl From<RestartInterval> for RawInterval {
    fn from(k: RestartInterval) -> Self {
        match k {
            RestartInterval::Finite(n) => RawInterval::Count(n as u64),
            RestartInterval::Infinite => RawInterval::Text("inf".into()),
        }
    }
}

impl RawConfig {
    /// Values set in `other` replace those in `self`.
    pub fn overlay(mut self, other: RawConfig) -> RawConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(preset, game, algorithm, eta, beta, k, iterations, alternating, averaging, eval_every, seed, normalize, output);
        self
    }

    /// Fills defaults, applies the preset (if any) underneath, and validates.
    pub fn resolve(&self, full_scale: bool) -> Result<ExperimentConfig> {
        let layered = match &self.preset {
            Some(key) => presets::preset(key, full_scale)?.to_raw().overlay(RawConfig { preset: None, ..self.clone() }),
            None => self.clone(),
        };
        let game = layered.game.clone().ok_or_else(|| BenchError::Config("missing key `game`".into()))?;
        let kind = game_kind(&game)?;
        let algorithm: Algorithm = layered
            .algorithm
            .as_deref()
            .ok_or_else(|| BenchError::Config("missing key `algorithm`".into()))?
            .parse()?;
        if !algorithm.supports(kind) {
            return Err(BenchError::Config(format!("algorithm `{algorithm}` does not run on game `{game}`")));
        }
        let config = ExperimentConfig {
            game,
            algorithm,
            eta: layered.eta.unwrap_or(1.0),
            beta: layered.beta.unwrap_or(0.0),
            k: layered.k.as_ref().map(RawInterval::resolve).transpose()?.unwrap_or(RestartInterval::Infinite),
            iterations: layered.iterations.ok_or_else(|| BenchError::Config("missing key `iterations`".into()))?,
            alternating: layered.alternating.unwrap_or_else(|| presets::conventional_alternation(algorithm)),
            averaging: layered.averaging.as_deref().map(str::parse).transpose()?,
            eval_every: layered.eval_every.unwrap_or(match kind {
                GameKind::Matrix => 1,
                GameKind::Extensive => 10,
            }),
            seed: layered.seed,
            normalize: layered.normalize.unwrap_or(false),
            output: layered.output,
        };
        config.solve_config().validate()?;
        Ok(config)
    }
}

/// Parses a JSON document in the schema above.
pub fn parse_config(source: &str) -> Result<ExperimentConfig> {
    parse_raw(source)?.resolve(false)
}

pub fn parse_raw(source: &str) -> Result<RawConfig> {
    serde_json::from_str(source).map_err(|e| BenchError::Config(e.to_string()))
}

impl ExperimentConfig {
    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            algorithm: self.algorithm,
            eta: self.eta,
            beta: self.beta,
            k: self.k,
            iterations: self.iterations,
            alternating: self.alternating,
            averaging: self.averaging,
            eval_every: self.eval_every,
            seed: self.seed,
        }
    }

    /// Fully explicit serialized form; parsing it gives back `self`.
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            preset: None,
            game: Some(self.game.clone()),
            algorithm: Some(self.algorithm.to_string()),
            eta: Some(self.eta),
            beta: Some(self.beta),
            k: Some(self.k.into()),
            iterations: Some(self.iterations),
            alternating: Some(self.alternating),
            averaging: self.averaging.map(|a| a.to_string()),
            eval_every: Some(self.eval_every),
            seed: self.seed,
            normalize: Some(self.normalize),
            output: self.output.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("config serializes")
    }

    pub fn load_game(&self) -> Result<LoadedGame> {
        load_game(&self.game, self.seed.unwrap_or(0), self.normalize)
    }
}

/// A constructed game, ready to hand to the solver.
#[derive(Debug, Clone)]
pub enum LoadedGame {
    Matrix { name: String, game: MatrixGame },
    Extensive(EfgGame),
}

impl LoadedGame {
    pub fn as_ref(&self) -> GameRef<'_> {
        match self {
            LoadedGame::Matrix { name, game } => GameRef::Matrix { name, game },
            LoadedGame::Extensive(g) => GameRef::Extensive(g),
        }
    }
}

fn random_dims(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("random")?;
    let (m, n) = rest.split_once('x').unwrap_or((rest, rest));
    Some((m.parse().ok().filter(|v| *v > 0)?, n.parse().ok().filter(|v| *v > 0)?))
}

pub fn game_kind(name: &str) -> Result<GameKind> {
    if MATRIX_NAMES.contains(&name) || random_dims(name).is_some() {
        Ok(GameKind::Matrix)
    } else if EFG_NAMES.contains(&name) {
        Ok(GameKind::Extensive)
    } else {
        Err(BenchError::Config(format!(
            "unknown game `{name}`; expected one of {}, {}, random<n> or random<m>x<n>",
            MATRIX_NAMES.join(", "),
            EFG_NAMES.join(", ")
        )))
    }
}

pub fn load_game(name: &str, seed: u64, normalize: bool) -> Result<LoadedGame> {
    match game_kind(name)? {
        GameKind::Matrix => {
            let game = match random_dims(name) {
                Some((m, n)) => random_nfg(seed, m, n)?,
                None => matrix_game_by_name(name)?,
            };
            let game = if normalize && !game.is_normalized() {
                MatrixGame::from_row_major(game.rows(), game.cols(), game.row_major().to_vec(), true)?
            } else {
                game
            };
            Ok(LoadedGame::Matrix { name: name.to_string(), game })
        }
        GameKind::Extensive => {
            let game = efg_by_name(name)?;
            Ok(LoadedGame::Extensive(if normalize { game.normalized() } else { game }))
        }
    }
}
