//! Online learners over a single probability simplex: prox oracles for
//! mirror descent / FTRL (plain and with momentum), the regret-matching
//! family, optimistic baselines and iterate averaging.

use crate::error::{check_len, Error, Result};
use crate::momentum::{CumulativeLossState, RestartInterval};
use crate::nfg::{instantaneous_regret, SimplexStrategy};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// `ψ(z) = Σ z log z`; mirror descent becomes multiplicative weights.
    NegativeEntropy,
    /// `ψ(z) = ½‖z‖²`; mirror descent becomes projected gradient.
    HalfSquaredL2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxSetup {
    eta: f64,
    regularizer: Regularizer,
}

impl ProxSetup {
    pub fn new(eta: f64, regularizer: Regularizer) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {eta}")));
        }
        Ok(ProxSetup { eta, regularizer })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidInput("empty vector".into()));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite entry {x}")));
    }
    Ok(())
}

/// Euclidean projection onto the simplex.
pub fn project_simplex(v: &[f64]) -> Result<SimplexStrategy> {
    check_finite(v)?;
    let mut out = vec![0.0; v.len()];
    vecops::project_simplex_into(v, &mut out);
    Ok(SimplexStrategy::from_normalized(out))
}

/// `argmin_{z'∈Δ} η⟨z', g⟩ + D_ψ(z', z)`.
///
/// The entropy form multiplies by `exp(−η g)` and renormalizes, so
/// coordinates that are exactly zero stay zero.
pub fn local_prox(z: &SimplexStrategy, g: &[f64], setup: &ProxSetup) -> Result<SimplexStrategy> {
    check_len(z.len(), g.len())?;
    check_finite(g)?;
    let mut out = vec![0.0; z.len()];
    prox_into(z.as_slice(), g, setup, &mut out);
    Ok(SimplexStrategy::from_normalized(out))
}

pub(crate) fn prox_into(z: &[f64], g: &[f64], setup: &ProxSetup, out: &mut [f64]) {
    let eta = setup.eta;
    match setup.regularizer {
        Regularizer::NegativeEntropy => {
            // Work in log space so large η·g cannot underflow every weight.
            let logits: Vec<f64> = z
                .iter()
                .zip(g)
                .map(|(&p, &gi)| if p > 0.0 { p.ln() - eta * gi } else { f64::NEG_INFINITY })
                .collect();
            vecops::softmax_into(&logits, out);
        }
        Regularizer::HalfSquaredL2 => {
            let shifted: Vec<f64> = z.iter().zip(g).map(|(p, gi)| p - eta * gi).collect();
            vecops::project_simplex_into(&shifted, out);
        }
    }
}

/// Mirror descent with momentum: a prox step against `−μ_t`.
pub fn momd_step(z: &SimplexStrategy, momentum: &[f64], setup: &ProxSetup) -> Result<SimplexStrategy> {
    let neg: Vec<f64> = momentum.iter().map(|m| -m).collect();
    local_prox(z, &neg, setup)
}

/// FTRL (with or without momentum) on the current cumulative loss:
/// `argmin_{z∈Δ} η⟨z, L_t⟩ + ψ(z)`.
pub fn moftrl_step(state: &CumulativeLossState, setup: &ProxSetup) -> Result<SimplexStrategy> {
    ftrl_argmin(state.cumulative(), setup)
}

pub fn ftrl_argmin(cumulative: &[f64], setup: &ProxSetup) -> Result<SimplexStrategy> {
    check_finite(cumulative)?;
    let mut out = vec![0.0; cumulative.len()];
    let scaled: Vec<f64> = cumulative.iter().map(|l| -setup.eta * l).collect();
    match setup.regularizer {
        Regularizer::NegativeEntropy => {
            vecops::softmax_into(&scaled, &mut out);
        }
        Regularizer::HalfSquaredL2 => vecops::project_simplex_into(&scaled, &mut out),
    }
    Ok(SimplexStrategy::from_normalized(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegretMode {
    /// Regret matching: unthresholded accumulation.
    Rm,
    /// RM+: the accumulated regret is thresholded every step.
    RmPlus,
    /// RM+ with a momentum pull toward a periodically refreshed attachment.
    MoRmPlus,
    /// Predictive RM+ using the last instantaneous regret as prediction.
    PredictiveRmPlus,
}

/// Cumulative-regret learner for the regret-matching family.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretMatcherState {
    regret: Vec<f64>,
    previous: Vec<f64>,
    attachment: Vec<f64>,
    prediction: Vec<f64>,
    mode: RegretMode,
    beta: f64,
    k: RestartInterval,
    t: u64,
}

impl RegretMatcherState {
    pub fn new(dim: usize, mode: RegretMode) -> Self {
        Self::with_momentum(dim, mode, 0.0, RestartInterval::Infinite)
    }

    pub fn with_momentum(dim: usize, mode: RegretMode, beta: f64, k: RestartInterval) -> Self {
        RegretMatcherState {
            regret: vec![0.0; dim],
            previous: vec![0.0; dim],
            attachment: vec![0.0; dim],
            prediction: vec![0.0; dim],
            mode,
            beta,
            k,
            t: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.regret.len()
    }

    pub fn mode(&self) -> RegretMode {
        self.mode
    }

    pub fn regret(&self) -> &[f64] {
        &self.regret
    }

    pub fn attachment(&self) -> &[f64] {
        &self.attachment
    }

    pub fn prediction(&self) -> &[f64] {
        &self.prediction
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    /// Current strategy implied by the state (before any new observation).
    pub fn strategy(&self) -> SimplexStrategy {
        let mut out = vec![0.0; self.dim()];
        self.strategy_into(&mut out);
        SimplexStrategy::from_normalized(out)
    }

    pub(crate) fn strategy_into(&self, out: &mut [f64]) {
        if self.mode == RegretMode::PredictiveRmPlus {
            let shifted: Vec<f64> = self.regret.iter().zip(&self.prediction).map(|(r, m)| r + m).collect();
            vecops::normalize_positive(&shifted, out);
        } else {
            vecops::normalize_positive(&self.regret, out);
        }
    }

    /// Folds an instantaneous regret vector into the state and writes the
    /// next strategy into `out`.
    pub(crate) fn absorb(&mut self, r: &[f64], out: &mut [f64]) {
        match self.mode {
            RegretMode::Rm => self.regret.iter_mut().zip(r).for_each(|(acc, x)| *acc += x),
            RegretMode::RmPlus => self.regret.iter_mut().zip(r).for_each(|(acc, x)| *acc = (*acc + x).max(0.0)),
            RegretMode::PredictiveRmPlus => {
                self.regret.iter_mut().zip(r).for_each(|(acc, x)| *acc = (*acc + x).max(0.0));
                self.prediction.copy_from_slice(r);
            }
            RegretMode::MoRmPlus => {
                let refresh = self.k.fires_at(self.t);
                for i in 0..self.regret.len() {
                    let current = self.regret[i];
                    let next = (current + r[i] - self.beta * (self.attachment[i] - current)).max(0.0);
                    if refresh {
                        self.attachment[i] = self.previous[i];
                    }
                    self.previous[i] = current;
                    self.regret[i] = next;
                }
            }
        }
        self.t += 1;
        self.strategy_into(out);
    }
}

/// One regret-matching step: forms `r = ⟨x_t, l⟩·1 − l` for the strategy
/// actually played and returns `x_{t+1}`.
pub fn regret_matcher_step(
    state: &mut RegretMatcherState,
    loss: &[f64],
    current: &SimplexStrategy,
) -> Result<SimplexStrategy> {
    check_len(state.dim(), loss.len())?;
    let r = instantaneous_regret(current.as_slice(), loss)?;
    let mut out = vec![0.0; state.dim()];
    state.absorb(&r, &mut out);
    Ok(SimplexStrategy::from_normalized(out))
}

/// Predictive RM+ step on an instantaneous regret vector.
pub fn pcfr_plus_local(state: &mut RegretMatcherState, r: &[f64]) -> Result<SimplexStrategy> {
    check_len(state.dim(), r.len())?;
    if state.mode != RegretMode::PredictiveRmPlus {
        return Err(Error::Config("predictive step requires a PredictiveRmPlus state".into()));
    }
    let mut out = vec![0.0; state.dim()];
    state.absorb(r, &mut out);
    Ok(SimplexStrategy::from_normalized(out))
}

/// One-memory optimistic learner: each step is a prox against `2F_t − F_{t−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimisticState {
    prev_loss: Vec<f64>,
    current: SimplexStrategy,
}

impl OptimisticState {
    pub fn new(initial: SimplexStrategy) -> Self {
        OptimisticState { prev_loss: vec![0.0; initial.len()], current: initial }
    }

    pub fn current(&self) -> &SimplexStrategy {
        &self.current
    }

    pub fn prev_loss(&self) -> &[f64] {
        &self.prev_loss
    }
}

pub fn optimistic_step(state: &mut OptimisticState, loss: &[f64], setup: &ProxSetup) -> Result<SimplexStrategy> {
    check_len(state.prev_loss.len(), loss.len())?;
    let predicted: Vec<f64> = loss.iter().zip(&state.prev_loss).map(|(l, p)| 2.0 * l - p).collect();
    let next = local_prox(&state.current, &predicted, setup)?;
    state.prev_loss.copy_from_slice(loss);
    state.current = next.clone();
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingScheme {
    Uniform,
    Linear,
    Quadratic,
    LastIterate,
}

impl AveragingScheme {
    pub fn name(self) -> &'static str {
        match self {
            AveragingScheme::Uniform => "uniform",
            AveragingScheme::Linear => "linear",
            AveragingScheme::Quadratic => "quadratic",
            AveragingScheme::LastIterate => "last",
        }
    }

    /// Weight of the `t`-th iterate (1-based).
    pub fn weight(self, t: u64) -> f64 {
        let t = t as f64;
        match self {
            AveragingScheme::Uniform => 1.0,
            AveragingScheme::Linear => t,
            AveragingScheme::Quadratic => t * t,
            AveragingScheme::LastIterate => 1.0,
        }
    }
}

impl std::fmt::Display for AveragingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AveragingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(AveragingScheme::Uniform),
            "linear" => Ok(AveragingScheme::Linear),
            "quadratic" => Ok(AveragingScheme::Quadratic),
            "last" | "last-iterate" => Ok(AveragingScheme::LastIterate),
            other => Err(Error::Config(format!("unknown averaging scheme `{other}`"))),
        }
    }
}

pub fn averaged_strategy(history: &[SimplexStrategy], scheme: AveragingScheme) -> Result<SimplexStrategy> {
    let mut avg = RunningAverage::new(scheme);
    for s in history {
        avg.push(s.as_slice())?;
    }
    avg.current().map(|v| SimplexStrategy::new(v.to_vec())).ok_or(Error::EmptyHistory)?
}

/// Streaming weighted average of iterates; works on any vector space point
/// (simplex or sequence-form strategies).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningAverage {
    scheme: AveragingScheme,
    sum: Vec<f64>,
    total: f64,
    t: u64,
    avg: Vec<f64>,
}

impl RunningAverage {
    pub fn new(scheme: AveragingScheme) -> Self {
        RunningAverage { scheme, sum: Vec::new(), total: 0.0, t: 0, avg: Vec::new() }
    }

    pub fn scheme(&self) -> AveragingScheme {
        self.scheme
    }

    pub fn push(&mut self, iterate: &[f64]) -> Result<()> {
        if self.t == 0 {
            self.sum = vec![0.0; iterate.len()];
        }
        check_len(self.sum.len(), iterate.len())?;
        self.t += 1;
        if self.scheme == AveragingScheme::LastIterate {
            self.sum.copy_from_slice(iterate);
            self.total = 1.0;
        } else {
            let w = self.scheme.weight(self.t);
            self.sum.iter_mut().zip(iterate).for_each(|(s, x)| *s += w * x);
            self.total += w;
        }
        self.avg.clear();
        self.avg.extend(self.sum.iter().map(|s| s / self.total));
        Ok(())
    }

    pub fn current(&self) -> Option<&[f64]> {
        (self.t > 0).then_some(self.avg.as_slice())
    }
}
