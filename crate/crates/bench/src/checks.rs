//! Property checks for the momentum dynamics on matrix games, plus the
//! heavy-ball discretization check.

use negmom_core::cfr::{Algorithm, GameRef, SolveConfig, Solver};
use negmom_core::momentum::{gdam_step, RestartInterval};
use negmom_core::nfg::{duality_gap, MatrixGame};
use serde::Serialize;

use crate::error::{BenchError, Result};

/// Iterations of the reference run for the modified equilibrium.
pub const REFERENCE_ITERATIONS: u64 = 1_000_000;

/// Allowed excess of the observed/predicted KL ratio over one.
pub const RATIO_TOLERANCE: f64 = 1e-6;

/// Largest step size covered by the geometric-decay guarantee for `beta`.
pub fn decay_step_bound(beta: f64) -> f64 {
    (-(1.0 + 1.5 * beta) * beta).sqrt() / 2.0
}

/// `(1 + β/2)`, the guaranteed per-step contraction of the KL divergence.
pub fn decay_factor(beta: f64) -> f64 {
    1.0 + beta / 2.0
}

fn check_decay_preconditions(beta: f64, eta: f64) -> Result<()> {
    let mut violated = Vec::new();
    if !(beta > -2.0 / 3.0 && beta < 0.0) {
        violated.push(format!("beta = {beta} is outside (-2/3, 0)"));
    }
    if !(eta > 0.0) {
        violated.push(format!("eta = {eta} is not positive"));
    } else if violated.is_empty() && eta > decay_step_bound(beta) {
        violated.push(format!("eta = {eta} exceeds sqrt(-(1 + 1.5 beta) beta)/2 = {}", decay_step_bound(beta)));
    }
    if violated.is_empty() {
        Ok(())
    } else {
        Err(BenchError::Config(violated.join("; ")))
    }
}

/// `Σ p ln(p/q)` written as `Σ q·h((p − q)/q)` with
/// `h(u) = (1 + u) ln(1 + u) − u ≥ 0`, which keeps every term nonnegative
/// and avoids cancellation when `p ≈ q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            if pi == 0.0 {
                return qi;
            }
            let u = (pi - qi) / qi;
            let h = if u.abs() < 1e-4 {
                u * u * (0.5 - u / 6.0 + u * u / 12.0)
            } else {
                (1.0 + u) * u.ln_1p() - u
            };
            qi * h
        })
        .sum()
}

fn softmax_neg(eta: f64, cumulative: &[f64]) -> Vec<f64> {
    let m = cumulative.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = cumulative.iter().map(|c| (-eta * (c - m)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Reference point of the unrestarted momentum dynamics. Iterates the
/// cumulative-loss recursion `L ← (1 + β)L + F(z)`, `z = softmax(−ηL)`
/// directly, independently of the solver's momentum buffer.
pub fn modified_equilibrium(game: &MatrixGame, beta: f64, eta: f64, iterations: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (game.rows(), game.cols());
    let (mut lx, mut ly) = (vec![0.0; m], vec![0.0; n]);
    let (mut x, mut y) = (vec![1.0 / m as f64; m], vec![1.0 / n as f64; n]);
    for _ in 0..iterations {
        let fx = game.row_loss(&y)?;
        let gy = game.col_gain(&x)?;
        lx.iter_mut().zip(&fx).for_each(|(l, f)| *l = (1.0 + beta) * *l + f);
        ly.iter_mut().zip(&gy).for_each(|(l, g)| *l = (1.0 + beta) * *l - g);
        x = softmax_neg(eta, &lx);
        y = softmax_neg(eta, &ly);
    }
    Ok((x, y))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub beta: f64,
    pub eta: f64,
    pub eta_bound: f64,
    pub decay_factor: f64,
    pub iterations: u64,
    /// `max_t D_KL(z_*, z_t) / (D_KL(z_*, z_0)·factor^t)`.
    pub max_ratio: f64,
    pub worst_iteration: u64,
    pub passed: bool,
    pub reference_x: Vec<f64>,
    pub reference_y: Vec<f64>,
    pub companion: GapBoundReport,
}

/// Distance of the reference point from equilibrium, compared with
/// `(−β/η)·diam·‖log(z_*/z_att)‖₂` where `z_att` is uniform and `diam = 2`
/// is the Euclidean diameter of the product of two simplices.
#[derive(Debug, Clone, Serialize)]
pub struct GapBoundReport {
    pub reference_gap: f64,
    pub final_gap: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Runs unrestarted MoMWU from uniform and checks the KL divergence to the
/// reference point contracts by at least `1 + β/2` per step.
pub fn theorem1_check(game: &MatrixGame, beta: f64, eta: f64, iterations: u64) -> Result<DecayReport> {
    check_decay_preconditions(beta, eta)?;
    let (rx, ry) = modified_equilibrium(game, beta, eta, REFERENCE_ITERATIONS)?;
    let reference: Vec<f64> = rx.iter().chain(&ry).copied().collect();
    let mut config = SolveConfig::new(Algorithm::MoMwu, iterations.max(1));
    config.eta = eta;
    config.beta = beta;
    config.k = RestartInterval::Infinite;
    let mut solver = Solver::new(GameRef::Matrix { name: "check", game }, &config)?;
    let joint = |solver: &Solver| -> Vec<f64> {
        let (x, y) = solver.current();
        x[1..].iter().chain(&y[1..]).copied().collect()
    };
    let initial = kl_divergence(&reference, &joint(&solver));
    let factor = decay_factor(beta);
    let (mut max_ratio, mut worst) = (if initial > 0.0 { 1.0 } else { 0.0 }, 0);
    for t in 1..=iterations {
        solver.step()?;
        if initial > 0.0 {
            let ratio = kl_divergence(&reference, &joint(&solver)) / (initial * factor.powi(t as i32));
            if ratio > max_ratio {
                max_ratio = ratio;
                worst = t;
            }
        }
    }
    let (x, y) = solver.current();
    let final_gap = duality_gap(game, &x[1..], &y[1..])?;
    let reference_gap = duality_gap(game, &rx, &ry)?;
    let log_norm = {
        let (m, n) = (game.rows() as f64, game.cols() as f64);
        let sq: f64 = rx.iter().map(|v| (v * m).ln().powi(2)).sum::<f64>() + ry.iter().map(|v| (v * n).ln().powi(2)).sum::<f64>();
        sq.sqrt()
    };
    let bound = (-beta / eta) * 2.0 * log_norm;
    Ok(DecayReport {
        beta,
        eta,
        eta_bound: decay_step_bound(beta),
        decay_factor: factor,
        iterations,
        max_ratio,
        worst_iteration: worst,
        passed: max_ratio <= 1.0 + RATIO_TOLERANCE,
        reference_x: rx,
        reference_y: ry,
        companion: GapBoundReport { reference_gap, final_gap, bound, within_bound: reference_gap <= bound },
    })
}

/// Number of attachment epochs ignored before monotonicity is required.
pub const BURN_IN_EPOCHS: usize = 3;

/// Quantity whose epoch-end values must not increase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochDistance {
    /// `D_KL(z_NE, z)` to a supplied equilibrium.
    KlToEquilibrium,
    /// Duality gap, used when no equilibrium is supplied.
    DualityGap,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub beta: f64,
    pub eta: f64,
    pub k: usize,
    pub tolerance: f64,
    /// `false` when momentum is disabled and the check does not apply.
    pub applicable: bool,
    pub note: String,
    /// First iteration whose duality gap is at most `tolerance`.
    pub reached_at: Option<u64>,
    pub final_gap: f64,
    pub distance: EpochDistance,
    /// Distance at the end of each attachment epoch (and at `reached_at`).
    pub epoch_distances: Vec<f64>,
    /// Duality gap at the same points.
    pub epoch_gaps: Vec<f64>,
    /// Epoch-end distances after the burn-in are non-increasing until the
    /// tolerance is reached.
    pub monotone: bool,
    pub passed: bool,
}

/// Runs restarted MoMWU and checks last-iterate convergence of the duality
/// gap to `tol` together with non-increasing distances across attachment
/// epochs. With `equilibrium` the distance is the KL divergence from that
/// equilibrium; without it the duality gap stands in.
pub fn theorem3_check(
    game: &MatrixGame,
    beta: f64,
    eta: f64,
    k: usize,
    iterations: u64,
    tol: f64,
    equilibrium: Option<(&[f64], &[f64])>,
) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport {
        beta,
        eta,
        k,
        tolerance: tol,
        applicable: true,
        note: String::new(),
        reached_at: None,
        final_gap: f64::NAN,
        distance: if equilibrium.is_some() { EpochDistance::KlToEquilibrium } else { EpochDistance::DualityGap },
        epoch_distances: Vec::new(),
        epoch_gaps: Vec::new(),
        monotone: true,
        passed: false,
    };
    if beta == 0.0 {
        report.applicable = false;
        report.note = "not applicable (beta=0): momentum disabled, the dynamics are plain MWU".into();
        return Ok(report);
    }
    let mut config = SolveConfig::new(Algorithm::MoMwu, iterations.max(1));
    config.eta = eta;
    config.beta = beta;
    config.k = RestartInterval::finite(k)?;
    if !(tol > 0.0) {
        return Err(BenchError::Config(format!("tolerance must be positive, got {tol}")));
    }
    let target: Option<Vec<f64>> = match equilibrium {
        Some((x, y)) if x.len() == game.rows() && y.len() == game.cols() => Some(x.iter().chain(y).copied().collect()),
        Some(_) => return Err(BenchError::Config("equilibrium dimensions do not match the game".into())),
        None => None,
    };
    let mut solver = Solver::new(GameRef::Matrix { name: "check", game }, &config)?;
    let measure = |solver: &Solver| -> Result<(f64, f64)> {
        let (x, y) = solver.current();
        let gap = duality_gap(game, &x[1..], &y[1..])?;
        let distance = match &target {
            Some(t) => kl_divergence(t, &x[1..].iter().chain(&y[1..]).copied().collect::<Vec<_>>()),
            None => gap,
        };
        Ok((gap, distance))
    };
    let (mut gap, _) = measure(&solver)?;
    if gap <= tol {
        report.reached_at = Some(0);
    }
    while report.reached_at.is_none() && solver.iteration() < iterations {
        solver.step()?;
        let (g, distance) = measure(&solver)?;
        gap = g;
        if gap <= tol {
            report.reached_at = Some(solver.iteration());
        }
        if solver.iteration() % k as u64 == 0 || report.reached_at.is_some() {
            report.epoch_gaps.push(gap);
            report.epoch_distances.push(distance);
        }
    }
    report.final_gap = gap;
    report.monotone = report
        .epoch_distances
        .iter()
        .skip(BURN_IN_EPOCHS)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1] <= w[0]);
    report.passed = report.reached_at.is_some() && report.monotone;
    report.note = match (report.reached_at, report.monotone) {
        (Some(t), true) => format!("gap <= {tol} at iteration {t}"),
        (Some(t), false) => format!("gap <= {tol} at iteration {t}, but epoch-end distances increased after burn-in"),
        (None, _) => format!("gap {gap:.3e} > {tol} after {iterations} iterations"),
    };
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeavyBallReport {
    pub friction: f64,
    pub horizon: f64,
    pub deltas: Vec<f64>,
    /// Euclidean distance to the reference solution at the horizon.
    pub errors: Vec<f64>,
    /// `errors[i] / errors[i + 1]`.
    pub ratios: Vec<f64>,
    pub band: (f64, f64),
    pub passed: bool,
}

/// Rotation field `F(Z) = AZ` with `A = [[0, 1], [−1, 0]]`.
fn rotation(z: [f64; 2]) -> [f64; 2] {
    [z[1], -z[0]]
}

/// `Z̈ = −F(Z) − μŻ` from `Z(0) = (1, 0)`, `Ż(0) = 0`, by classical RK4.
fn damped_rotation_reference(friction: f64, horizon: f64, steps: usize) -> [f64; 2] {
    let h = horizon / steps as f64;
    let deriv = |s: [f64; 4]| {
        let f = rotation([s[0], s[1]]);
        [s[2], s[3], -f[0] - friction * s[2], -f[1] - friction * s[3]]
    };
    let axpy = |s: [f64; 4], k: [f64; 4], a: f64| [s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2], s[3] + a * k[3]];
    let mut s = [1.0, 0.0, 0.0, 0.0];
    for _ in 0..steps {
        let k1 = deriv(s);
        let k2 = deriv(axpy(s, k1, h / 2.0));
        let k3 = deriv(axpy(s, k2, h / 2.0));
        let k4 = deriv(axpy(s, k3, h));
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    [s[0], s[1]]
}

/// Runs gradient descent with momentum `η = δ²`, `β = 1 − μδ` on the
/// rotation field and measures its distance to the damped ODE solution at
/// `horizon` for each `δ`. First-order consistency shows as error ratios
/// near 2 when `δ` halves.
pub fn heavy_ball_check(friction: f64, deltas: &[f64], horizon: f64, band: (f64, f64)) -> Result<HeavyBallReport> {
    if deltas.len() < 2 || deltas.iter().any(|d| !(*d > 0.0)) || !(horizon > 0.0) {
        return Err(BenchError::Config("need at least two positive step sizes and a positive horizon".into()));
    }
    let reference = damped_rotation_reference(friction, horizon, 500_000);
    let mut errors = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let steps = (horizon / delta).round() as usize;
        let (eta, beta) = (delta * delta, 1.0 - friction * delta);
        let mut prev = vec![1.0, 0.0];
        let mut curr = prev.clone();
        for _ in 0..steps {
            let f = rotation([curr[0], curr[1]]);
            let next = gdam_step(&prev, &curr, &f, eta, beta)?;
            prev = std::mem::replace(&mut curr, next);
        }
        errors.push(((curr[0] - reference[0]).powi(2) + (curr[1] - reference[1]).powi(2)).sqrt());
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let passed = ratios.iter().all(|r| *r >= band.0 && *r <= band.1);
    Ok(HeavyBallReport { friction, horizon, deltas: deltas.to_vec(), errors, ratios, band, passed })
}
