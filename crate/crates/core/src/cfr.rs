//! Regret-decomposition solvers on treeplexes (CFR, CFR+, PCFR+, MoCFR+)
//! and the solve loop shared by every learner.
//!
//! Each solver iteration feeds the `x` player the loss `G y` and the `y`
//! player the loss `−Gᵀ x`. In alternating mode `y` sees the freshly
//! updated `x`; otherwise both see the previous iterates. Iterate `t`
//! (1-based) is the strategy after the `t`-th update, and exploitability is
//! evaluated after both players have moved.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use crate::dilated::{dilated_prox_behavior, DilatedDgf};
use crate::efg::{
    behavior_to_sequence, counterfactual_values, BehaviorStrategy, EfgGame, SequenceFormStrategy, Treeplex,
};
use crate::error::{check_len, Error, Result};
use crate::momentum::{CumulativeLossState, MomentumState, RestartInterval};
use crate::nfg::MatrixGame;
use crate::simplex::{ftrl_argmin, AveragingScheme, ProxSetup, RegretMatcherState, RegretMode, Regularizer};

/// One regret-matching learner per decision point plus the behavior
/// strategy they currently induce.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRegretBank {
    states: Vec<RegretMatcherState>,
    behavior: BehaviorStrategy,
    sequence: SequenceFormStrategy,
}

impl LocalRegretBank {
    pub fn new(tp: &Treeplex, mode: RegretMode, beta: f64, k: RestartInterval) -> Self {
        let states = tp
            .points()
            .iter()
            .map(|p| RegretMatcherState::with_momentum(p.num_actions, mode, beta, k))
            .collect();
        let behavior = BehaviorStrategy::uniform(tp);
        let sequence = behavior_to_sequence(tp, &behavior);
        LocalRegretBank { states, behavior, sequence }
    }

    pub fn states(&self) -> &[RegretMatcherState] {
        &self.states
    }

    pub fn behavior(&self) -> &BehaviorStrategy {
        &self.behavior
    }

    pub fn sequence_form(&self) -> &SequenceFormStrategy {
        &self.sequence
    }

    /// `Σ_j [max_a R̂_j[a]]⁺`, the CFR bound on sequence-form regret.
    pub fn regret_bound(&self) -> f64 {
        self.states.iter().map(|s| s.regret().iter().fold(0.0f64, |m, r| m.max(*r))).sum()
    }
}

/// One CFR-style iteration: counterfactual losses bottom-up, a local regret
/// update at every decision point (with the attachment refresh for MoCFR+
/// banks), then fresh local strategies.
pub fn cfr_iteration<'a>(bank: &'a mut LocalRegretBank, tp: &Treeplex, loss: &[f64]) -> Result<&'a BehaviorStrategy> {
    if bank.states.len() != tp.num_points() || bank.behavior.values().len() != tp.seq_count() {
        return Err(Error::Config(format!(
            "regret bank covers {} decision points, treeplex has {}",
            bank.states.len(),
            tp.num_points()
        )));
    }
    check_len(tp.seq_count(), loss.len())?;
    let cf = counterfactual_values(tp, loss, &bank.behavior)?;
    let mut regret = Vec::new();
    let next = bank.behavior.values_mut();
    for (j, state) in bank.states.iter_mut().enumerate() {
        let p = tp.point(j);
        regret.clear();
        regret.extend(p.sequences().map(|s| cf.node_value[j] - cf.local[s]));
        state.absorb(&regret, &mut next[p.sequences()]);
    }
    bank.sequence = behavior_to_sequence(tp, &bank.behavior);
    Ok(&bank.behavior)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Rm,
    RmPlus,
    MoRmPlus,
    PredictiveRmPlus,
    Cfr,
    CfrPlus,
    MoCfrPlus,
    PcfrPlus,
    Mwu,
    Gda,
    MoMwu,
    MoGda,
    DMwu,
    DGda,
    DMoMwu,
    DMoGda,
    MoFtrlEntropy,
    MoFtrlL2,
    Omwu,
    Ogda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameKind {
    Matrix,
    Extensive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 20] = [
        Algorithm::Rm,
        Algorithm::RmPlus,
        Algorithm::MoRmPlus,
        Algorithm::PredictiveRmPlus,
        Algorithm::Cfr,
        Algorithm::CfrPlus,
        Algorithm::MoCfrPlus,
        Algorithm::PcfrPlus,
        Algorithm::Mwu,
        Algorithm::Gda,
        Algorithm::MoMwu,
        Algorithm::MoGda,
        Algorithm::DMwu,
        Algorithm::DGda,
        Algorithm::DMoMwu,
        Algorithm::DMoGda,
        Algorithm::MoFtrlEntropy,
        Algorithm::MoFtrlL2,
        Algorithm::Omwu,
        Algorithm::Ogda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rm => "rm",
            Algorithm::RmPlus => "rm+",
            Algorithm::MoRmPlus => "morm+",
            Algorithm::PredictiveRmPlus => "prm+",
            Algorithm::Cfr => "cfr",
            Algorithm::CfrPlus => "cfr+",
            Algorithm::MoCfrPlus => "mocfr+",
            Algorithm::PcfrPlus => "pcfr+",
            Algorithm::Mwu => "mwu",
            Algorithm::Gda => "gda",
            Algorithm::MoMwu => "momwu",
            Algorithm::MoGda => "mogda",
            Algorithm::DMwu => "dmwu",
            Algorithm::DGda => "dgda",
            Algorithm::DMoMwu => "dmomwu",
            Algorithm::DMoGda => "dmogda",
            Algorithm::MoFtrlEntropy => "moftrl-entropy",
            Algorithm::MoFtrlL2 => "moftrl-l2",
            Algorithm::Omwu => "omwu",
            Algorithm::Ogda => "ogda",
        }
    }

    /// Whether the algorithm runs on the given kind of game.
    pub fn supports(self, kind: GameKind) -> bool {
        use Algorithm::*;
        match self {
            Rm | RmPlus | MoRmPlus | PredictiveRmPlus | Mwu | Gda | MoMwu | MoGda | MoFtrlEntropy | MoFtrlL2 => {
                kind == GameKind::Matrix
            }
            Cfr | CfrPlus | MoCfrPlus | PcfrPlus | DMwu | DGda | DMoMwu | DMoGda => kind == GameKind::Extensive,
            Omwu | Ogda => true,
        }
    }

    pub fn uses_step_size(self) -> bool {
        !matches!(self.regret_mode(), Some(_))
    }

    pub fn uses_momentum(self) -> bool {
        use Algorithm::*;
        matches!(self, MoRmPlus | MoCfrPlus | MoMwu | MoGda | DMoMwu | DMoGda | MoFtrlEntropy | MoFtrlL2)
    }

    fn regret_mode(self) -> Option<RegretMode> {
        use Algorithm::*;
        match self {
            Rm | Cfr => Some(RegretMode::Rm),
            RmPlus | CfrPlus => Some(RegretMode::RmPlus),
            MoRmPlus | MoCfrPlus => Some(RegretMode::MoRmPlus),
            PredictiveRmPlus | PcfrPlus => Some(RegretMode::PredictiveRmPlus),
            _ => None,
        }
    }

    fn regularizer(self) -> Regularizer {
        use Algorithm::*;
        match self {
            Mwu | MoMwu | DMwu | DMoMwu | MoFtrlEntropy | Omwu => Regularizer::NegativeEntropy,
            _ => Regularizer::HalfSquaredL2,
        }
    }

    /// Uniform for CFR/RM, linear for the `+` variants, quadratic for the
    /// predictive ones and the last iterate for everything else.
    pub fn default_averaging(self) -> AveragingScheme {
        match self.regret_mode() {
            Some(RegretMode::Rm) => AveragingScheme::Uniform,
            Some(RegretMode::RmPlus) => AveragingScheme::Linear,
            Some(RegretMode::PredictiveRmPlus) => AveragingScheme::Quadratic,
            _ => AveragingScheme::LastIterate,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub algorithm: Algorithm,
    /// Step size for mirror-descent, FTRL and optimistic learners.
    pub eta: f64,
    pub beta: f64,
    pub k: RestartInterval,
    pub iterations: u64,
    pub alternating: bool,
    /// `None` selects [`Algorithm::default_averaging`].
    pub averaging: Option<AveragingScheme>,
    pub eval_every: u64,
    /// Recorded in the log; the solvers themselves are deterministic.
    pub seed: Option<u64>,
}

impl SolveConfig {
    pub fn new(algorithm: Algorithm, iterations: u64) -> Self {
        SolveConfig {
            algorithm,
            eta: 1.0,
            beta: 0.0,
            k: RestartInterval::Infinite,
            iterations,
            alternating: false,
            averaging: None,
            eval_every: 1,
            seed: None,
        }
    }

    pub fn averaging_scheme(&self) -> AveragingScheme {
        self.averaging.unwrap_or(self.algorithm.default_averaging())
    }

    /// Momentum coefficient actually used (zero for non-momentum algorithms).
    pub fn effective_beta(&self) -> f64 {
        if self.algorithm.uses_momentum() {
            self.beta
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithm.uses_step_size() && !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be finite, got {}", self.beta)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        Ok(())
    }

    pub fn metadata(&self, game: &str) -> RunMetadata {
        let momentum = self.algorithm.uses_momentum();
        RunMetadata {
            game: game.to_string(),
            algorithm: self.algorithm,
            eta: self.algorithm.uses_step_size().then_some(self.eta),
            beta: momentum.then_some(self.beta),
            k: momentum.then_some(self.k),
            alternating: self.alternating,
            averaging: self.averaging_scheme(),
            seed: self.seed,
        }
    }
}

/// Game handed to the solver; matrix games are embedded as one-decision-
/// point treeplexes.
#[derive(Debug, Clone, Copy)]
pub enum GameRef<'a> {
    Matrix { name: &'a str, game: &'a MatrixGame },
    Extensive(&'a EfgGame),
}

impl GameRef<'_> {
    pub fn kind(&self) -> GameKind {
        match self {
            GameRef::Matrix { .. } => GameKind::Matrix,
            GameRef::Extensive(_) => GameKind::Extensive,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            GameRef::Matrix { name, .. } => name,
            GameRef::Extensive(g) => &g.name,
        }
    }
}

#[derive(Debug, Clone)]
enum Learner {
    Regret(LocalRegretBank),
    // Dilated learners keep local strategies alongside the sequence form.
    Mirror { z: Vec<f64>, local: BehaviorStrategy, momentum: MomentumState, eta: f64, dgf: DilatedDgf },
    Ftrl { state: CumulativeLossState, setup: ProxSetup, z: Vec<f64> },
    Optimistic { z: Vec<f64>, local: BehaviorStrategy, prev: Vec<f64>, eta: f64, dgf: DilatedDgf },
}

impl Learner {
    fn new(tp: &Treeplex, config: &SolveConfig) -> Result<Self> {
        let alg = config.algorithm;
        let beta = config.effective_beta();
        let uniform = SequenceFormStrategy::uniform(tp).into_inner();
        let dgf = DilatedDgf { regularizer: alg.regularizer() };
        Ok(match alg {
            _ if alg.regret_mode().is_some() => {
                Learner::Regret(LocalRegretBank::new(tp, alg.regret_mode().expect("regret algorithm"), beta, config.k))
            }
            Algorithm::MoFtrlEntropy | Algorithm::MoFtrlL2 => Learner::Ftrl {
                state: CumulativeLossState::new(tp.seq_count() - 1, beta, config.k),
                setup: ProxSetup::new(config.eta, alg.regularizer())?,
                z: uniform,
            },
            Algorithm::Omwu | Algorithm::Ogda => {
                Learner::Optimistic {
                    prev: vec![0.0; uniform.len()],
                    z: uniform,
                    local: BehaviorStrategy::uniform(tp),
                    eta: config.eta,
                    dgf,
                }
            }
            _ => Learner::Mirror {
                z: uniform,
                local: BehaviorStrategy::uniform(tp),
                momentum: MomentumState::new(beta, config.k),
                eta: config.eta,
                dgf,
            },
        })
    }

    fn current(&self) -> &[f64] {
        match self {
            Learner::Regret(bank) => bank.sequence.values(),
            Learner::Mirror { z, .. } | Learner::Ftrl { z, .. } | Learner::Optimistic { z, .. } => z,
        }
    }

    fn update(&mut self, tp: &Treeplex, loss: &[f64]) -> Result<()> {
        match self {
            Learner::Regret(bank) => {
                cfr_iteration(bank, tp, loss)?;
            }
            Learner::Mirror { z, local, momentum, eta, dgf } => {
                let mu = momentum.update(loss)?;
                let g: Vec<f64> = mu.iter().map(|m| -m).collect();
                let (b, x) = dilated_prox_behavior(tp, local, &g, *eta, *dgf)?;
                *local = b;
                *z = x.into_inner();
            }
            Learner::Ftrl { state, setup, z } => {
                let cumulative = state.update(&loss[1..])?;
                let x = ftrl_argmin(cumulative, setup)?;
                z[1..].copy_from_slice(x.as_slice());
            }
            Learner::Optimistic { z, local, prev, eta, dgf } => {
                let g: Vec<f64> = loss.iter().zip(prev.iter()).map(|(l, p)| 2.0 * l - p).collect();
                let (b, x) = dilated_prox_behavior(tp, local, &g, *eta, *dgf)?;
                *local = b;
                *z = x.into_inner();
                prev.copy_from_slice(loss);
            }
        }
        Ok(())
    }
}

/// Incremental solver; [`run_solver`] drives it and records the log.
#[derive(Debug, Clone)]
pub struct Solver {
    game: EfgGame,
    config: SolveConfig,
    x: Learner,
    y: Learner,
    avg_x: crate::simplex::RunningAverage,
    avg_y: crate::simplex::RunningAverage,
    t: u64,
}

impl Solver {
    pub fn new(game: GameRef<'_>, config: &SolveConfig) -> Result<Self> {
        config.validate()?;
        if !config.algorithm.supports(game.kind()) {
            return Err(Error::Config(format!(
                "algorithm `{}` does not run on {} games",
                config.algorithm,
                match game.kind() {
                    GameKind::Matrix => "matrix",
                    GameKind::Extensive => "extensive-form",
                }
            )));
        }
        let efg = match game {
            GameRef::Matrix { name, game } => EfgGame::from_matrix_game(name, game)?,
            GameRef::Extensive(g) => g.clone(),
        };
        let x = Learner::new(&efg.treeplex_x, config)?;
        let y = Learner::new(&efg.treeplex_y, config)?;
        let scheme = config.averaging_scheme();
        Ok(Solver {
            game: efg,
            config: config.clone(),
            x,
            y,
            avg_x: crate::simplex::RunningAverage::new(scheme),
            avg_y: crate::simplex::RunningAverage::new(scheme),
            t: 0,
        })
    }

    pub fn game(&self) -> &EfgGame {
        &self.game
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self) -> Result<()> {
        let payoff = &self.game.payoff;
        let loss_x = payoff.row_loss(self.y.current())?;
        if self.config.alternating {
            self.x.update(&self.game.treeplex_x, &loss_x)?;
            let loss_y: Vec<f64> = payoff.col_gain(self.x.current())?.into_iter().map(|v| -v).collect();
            self.y.update(&self.game.treeplex_y, &loss_y)?;
        } else {
            let loss_y: Vec<f64> = payoff.col_gain(self.x.current())?.into_iter().map(|v| -v).collect();
            self.x.update(&self.game.treeplex_x, &loss_x)?;
            self.y.update(&self.game.treeplex_y, &loss_y)?;
        }
        self.avg_x.push(self.x.current())?;
        self.avg_y.push(self.y.current())?;
        self.t += 1;
        Ok(())
    }

    /// Current iterates in sequence form (for matrix games entry 0 is the
    /// root sequence and the mixed strategy follows).
    pub fn current(&self) -> (&[f64], &[f64]) {
        (self.x.current(), self.y.current())
    }

    /// The strategies the configured averaging scheme reports.
    pub fn reported(&self) -> (&[f64], &[f64]) {
        match (self.avg_x.current(), self.avg_y.current()) {
            (Some(x), Some(y)) => (x, y),
            _ => self.current(),
        }
    }

    pub fn exploitability(&self) -> Result<f64> {
        let (x, y) = self.reported();
        self.game.exploitability(x, y)
    }

    pub fn current_exploitability(&self) -> Result<f64> {
        let (x, y) = self.current();
        self.game.exploitability(x, y)
    }

    /// Regret banks of both players, for regret-based algorithms.
    pub fn regret_banks(&self) -> Option<(&LocalRegretBank, &LocalRegretBank)> {
        match (&self.x, &self.y) {
            (Learner::Regret(a), Learner::Regret(b)) => Some((a, b)),
            _ => None,
        }
    }
}

/// Runs `config.iterations` iterations and records exploitability every
/// `eval_every` iterations.
pub fn run_solver(game: GameRef<'_>, config: &SolveConfig) -> Result<ConvergenceLog> {
    let mut solver = Solver::new(game, config)?;
    let start = Instant::now();
    let mut rows = Vec::with_capacity((config.iterations / config.eval_every) as usize);
    for t in 1..=config.iterations {
        solver.step()?;
        if t % config.eval_every == 0 {
            let exploitability = solver.exploitability()?;
            if !exploitability.is_finite() {
                return Err(Error::Domain(format!("exploitability diverged at iteration {t}")));
            }
            rows.push(LogRow { iteration: t, exploitability, wall_ms: start.elapsed().as_secs_f64() * 1e3 });
        }
    }
    Ok(ConvergenceLog { metadata: config.metadata(game.name()), rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub game: String,
    pub algorithm: Algorithm,
    /// `None` when the algorithm ignores the parameter.
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub k: Option<RestartInterval>,
    pub alternating: bool,
    pub averaging: AveragingScheme,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iteration: u64,
    pub exploitability: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLog {
    pub metadata: RunMetadata,
    pub rows: Vec<LogRow>,
}

pub const CSV_HEADER: &str = "iteration,exploitability,wall_ms";

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl ConvergenceLog {
    /// `# key=value` metadata lines, the header, then one row per
    /// evaluation with reals printed to 17 significant digits.
    pub fn to_csv(&self) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        let _ = writeln!(out, "# game={}", m.game);
        let _ = writeln!(out, "# algorithm={}", m.algorithm);
        let _ = writeln!(out, "# eta={}", opt(&m.eta));
        let _ = writeln!(out, "# beta={}", opt(&m.beta));
        let _ = writeln!(out, "# k={}", opt(&m.k));
        let _ = writeln!(out, "# alternating={}", m.alternating);
        let _ = writeln!(out, "# averaging={}", m.averaging);
        let _ = writeln!(out, "# seed={}", opt(&m.seed));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.16e},{:.16e}", r.iteration, r.exploitability, r.wall_ms);
        }
        out
    }

    /// The iteration and exploitability columns only (wall-clock excluded).
    pub fn numeric_columns(&self) -> String {
        self.rows.iter().map(|r| format!("{},{:.16e}\n", r.iteration, r.exploitability)).collect()
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.insert(k.to_string(), v.to_string());
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                if line != CSV_HEADER {
                    return Err(parse_err(format!("expected header `{CSV_HEADER}`")));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 columns, found {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| parse_err(format!("cannot parse `{s}`")));
            rows.push(LogRow {
                iteration: fields[0].parse().map_err(|_| parse_err(format!("cannot parse `{}`", fields[0])))?,
                exploitability: num(fields[1])?,
                wall_ms: num(fields[2])?,
            });
        }
        if !header_seen {
            return Err(Error::Parse { line: 0, message: "missing header".into() });
        }
        let get = |k: &str| meta.get(k).cloned().ok_or_else(|| Error::Parse { line: 0, message: format!("missing `{k}`") });
        let maybe = |k: &str| -> Result<Option<String>> { get(k).map(|v| (v != "none").then_some(v)) };
        let bad = |k: &str| Error::Parse { line: 0, message: format!("bad `{k}` metadata") };
        Ok(ConvergenceLog {
            metadata: RunMetadata {
                game: get("game")?,
                algorithm: get("algorithm")?.parse()?,
                eta: maybe("eta")?.map(|v| v.parse().map_err(|_| bad("eta"))).transpose()?,
                beta: maybe("beta")?.map(|v| v.parse().map_err(|_| bad("beta"))).transpose()?,
                k: maybe("k")?.map(|v| v.parse()).transpose()?,
                alternating: get("alternating")?.parse().map_err(|_| bad("alternating"))?,
                averaging: get("averaging")?.parse()?,
                seed: maybe("seed")?.map(|v| v.parse().map_err(|_| bad("seed"))).transpose()?,
            },
            rows,
        })
    }

    pub fn write_csv(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}
