//! Negative-momentum buffers.
//!
//! [`MomentumState`] is the restarting aggregated momentum (RAM) buffer: each
//! step forms `μ_t = β·Σ_{μ∈profile} μ − F(z_t)`, clears the snapshot profile
//! once it holds `k` entries and then stores `μ_t`. [`CumulativeLossState`]
//! is the same recursion written on the cumulative loss `L_t = L_{t−1} − μ_t`
//! with a periodically refreshed attachment point. [`gdam_step`] is the
//! unconstrained heavy-ball reference dynamic.

use crate::error::{check_len, Error, Result};

/// Restart interval `k` of the momentum profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartInterval {
    Finite(usize),
    Infinite,
}

impl RestartInterval {
    pub fn finite(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("restart interval k must be positive".into()));
        }
        Ok(RestartInterval::Finite(k))
    }

    /// Whether the attachment trigger `t % k == 0` fires at iteration `t`.
    /// With an infinite interval only `t = 0` fires.
    pub fn fires_at(self, t: u64) -> bool {
        match self {
            RestartInterval::Finite(k) => t % k as u64 == 0,
            RestartInterval::Infinite => t == 0,
        }
    }
}

impl std::fmt::Display for RestartInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RestartInterval::Finite(k) => write!(f, "{k}"),
            RestartInterval::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for RestartInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinite" => Ok(RestartInterval::Infinite),
            _ => s
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("restart interval must be a positive integer or `inf`, got `{s}`")))
                .and_then(RestartInterval::finite),
        }
    }
}

/// RAM momentum buffer.
///
/// Only the aggregate `Σ_{μ∈profile} μ` and the profile length are kept;
/// they are all the update ever reads.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    beta: f64,
    k: RestartInterval,
    profile_sum: Vec<f64>,
    profile_len: usize,
    last_mu: Vec<f64>,
    t: u64,
}

impl MomentumState {
    pub fn new(beta: f64, k: RestartInterval) -> Self {
        MomentumState { beta, k, profile_sum: Vec::new(), profile_len: 0, last_mu: Vec::new(), t: 0 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn restart_interval(&self) -> RestartInterval {
        self.k
    }

    pub fn profile_len(&self) -> usize {
        self.profile_len
    }

    pub fn profile_sum(&self) -> &[f64] {
        &self.profile_sum
    }

    pub fn last_momentum(&self) -> &[f64] {
        &self.last_mu
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    /// Consumes `F(z_t)` and returns `μ_t`.
    pub fn update(&mut self, loss: &[f64]) -> Result<&[f64]> {
        if self.profile_sum.is_empty() && self.t == 0 {
            self.profile_sum = vec![0.0; loss.len()];
        }
        check_len(self.profile_sum.len(), loss.len())?;
        self.last_mu.clear();
        self.last_mu.extend(self.profile_sum.iter().zip(loss).map(|(s, l)| self.beta * s - l));
        if self.k == RestartInterval::Finite(self.profile_len) {
            self.profile_sum.iter_mut().for_each(|s| *s = 0.0);
            self.profile_len = 0;
        }
        self.profile_sum.iter_mut().zip(&self.last_mu).for_each(|(s, m)| *s += m);
        self.profile_len += 1;
        self.t += 1;
        Ok(&self.last_mu)
    }
}

/// Free-function form of [`MomentumState::update`].
pub fn ram_momentum_update(state: &mut MomentumState, loss: &[f64]) -> Result<Vec<f64>> {
    state.update(loss).map(<[f64]>::to_vec)
}

/// Cumulative loss with an attachment point:
/// `L_t = L_{t−1} + F(z_t) − β(L_att − L_{t−1})`, after which `L_att ← L_{t−1}`
/// whenever `t % k == 0`. `L_att` and `L_{−1}` start at zero.
///
/// Applying the refresh after forming `L_t` keeps `L_t = −Σ_{τ≤t} μ_τ` for
/// the RAM buffer with the same `(β, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeLossState {
    cumulative: Vec<f64>,
    attachment: Vec<f64>,
    beta: f64,
    k: RestartInterval,
    t: u64,
}

impl CumulativeLossState {
    pub fn new(dim: usize, beta: f64, k: RestartInterval) -> Self {
        CumulativeLossState { cumulative: vec![0.0; dim], attachment: vec![0.0; dim], beta, k, t: 0 }
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn attachment(&self) -> &[f64] {
        &self.attachment
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn update(&mut self, loss: &[f64]) -> Result<&[f64]> {
        check_len(self.cumulative.len(), loss.len())?;
        let refresh = self.k.fires_at(self.t);
        for ((c, a), l) in self.cumulative.iter_mut().zip(self.attachment.iter_mut()).zip(loss) {
            let previous = *c;
            *c = previous + l - self.beta * (*a - previous);
            if refresh {
                *a = previous;
            }
        }
        self.t += 1;
        Ok(&self.cumulative)
    }
}

pub fn attachment_loss_update(state: &mut CumulativeLossState, loss: &[f64]) -> Result<Vec<f64>> {
    state.update(loss).map(<[f64]>::to_vec)
}

/// Heavy-ball step `z_t − η·F + β(z_t − z_{t−1})`, unconstrained.
pub fn gdam_step(z_prev: &[f64], z_curr: &[f64], loss: &[f64], eta: f64, beta: f64) -> Result<Vec<f64>> {
    check_len(z_curr.len(), z_prev.len())?;
    check_len(z_curr.len(), loss.len())?;
    if !(eta > 0.0) {
        return Err(Error::InvalidInput(format!("step size must be positive, got {eta}")));
    }
    Ok(z_curr.iter().zip(z_prev).zip(loss).map(|((c, p), l)| c - eta * l + beta * (c - p)).collect())
}

/// Momentum coefficient of the heavy-ball discretization of
/// `Z̈ = −F(Z) − friction·Ż` with step `δ` (and step size `η = δ²`).
pub fn friction_to_beta(friction: f64, delta: f64) -> f64 {
    1.0 - friction * delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_beta_is_negated_loss() {
        let mut st = MomentumState::new(0.0, RestartInterval::Finite(3));
        assert_eq!(ram_momentum_update(&mut st, &[0.3, -0.2]).unwrap(), vec![-0.3, 0.2]);
    }

    #[test]
    fn k_one_reduces_to_heavy_ball_buffer() {
        let mut st = MomentumState::new(-0.5, RestartInterval::Finite(1));
        assert_eq!(ram_momentum_update(&mut st, &[1., 0.]).unwrap(), vec![-1.0, 0.0]);
        assert_eq!(ram_momentum_update(&mut st, &[0., 1.]).unwrap(), vec![0.5, -1.0]);
    }

    /// Reset is checked before appending, so with k = 2 the profile at
    /// t = 2 still holds {μ0, μ1} and afterwards only {μ2}.
    #[test]
    fn profile_resets_before_append() {
        let mut st = MomentumState::new(-1.0, RestartInterval::Finite(2));
        assert_eq!(ram_momentum_update(&mut st, &[1.0]).unwrap(), vec![-1.0]);
        assert_eq!(st.profile_len(), 1);
        assert_eq!(ram_momentum_update(&mut st, &[1.0]).unwrap(), vec![0.0]);
        assert_eq!(st.profile_len(), 2);
        assert_eq!(ram_momentum_update(&mut st, &[1.0]).unwrap(), vec![0.0]);
        assert_eq!(st.profile_len(), 1);
        assert_eq!(st.profile_sum(), &[0.0]);
        assert!(st.update(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn infinite_interval_never_resets() {
        let mut st = MomentumState::new(-0.1, RestartInterval::Infinite);
        for _ in 0..50 {
            st.update(&[1.0]).unwrap();
        }
        assert_eq!(st.profile_len(), 50);
    }

    #[test]
    fn attachment_hand_recursion() {
        let mut st = CumulativeLossState::new(1, -0.5, RestartInterval::Infinite);
        assert_eq!(attachment_loss_update(&mut st, &[1.0]).unwrap(), vec![1.0]);
        assert_eq!(attachment_loss_update(&mut st, &[1.0]).unwrap(), vec![1.5]);
        assert!(st.update(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn gdam_examples() {
        assert_eq!(gdam_step(&[1., 0.], &[1., 0.], &[0., 1.], 0.1, 0.0).unwrap(), vec![1.0, -0.1]);
        let (p, c, l) = ([0.3, -1.0], [0.5, 2.0], [1.0, -0.25]);
        let out = gdam_step(&p, &c, &l, 0.2, 1.0).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(out[i], 2.0 * c[i] - p[i] - 0.2 * l[i], epsilon = 1e-15);
        }
        assert_abs_diff_eq!(friction_to_beta(12.0, 0.1), -0.2, epsilon = 1e-15);
        assert!(gdam_step(&p, &c, &l, 0.0, 0.0).is_err());
    }

    fn interval() -> impl Strategy<Value = RestartInterval> {
        prop_oneof![(1usize..8).prop_map(RestartInterval::Finite), Just(RestartInterval::Infinite)]
    }

    proptest! {
        #[test]
        fn zero_beta_cumulative_is_running_sum(
            losses in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..40),
            k in interval(),
        ) {
            let mut st = CumulativeLossState::new(3, 0.0, k);
            let mut sum = [0.0; 3];
            for l in &losses {
                let got = st.update(l).unwrap().to_vec();
                for i in 0..3 {
                    sum[i] += l[i];
                    prop_assert!((got[i] - sum[i]).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn cumulative_form_matches_ram_buffer(
            losses in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 20),
            beta in -0.9f64..0.0,
            k in interval(),
        ) {
            let mut ram = MomentumState::new(beta, k);
            let mut cum = CumulativeLossState::new(2, beta, k);
            let mut neg_sum = [0.0; 2];
            for l in &losses {
                let mu = ram.update(l).unwrap().to_vec();
                let big_l = cum.update(l).unwrap();
                for i in 0..2 {
                    neg_sum[i] -= mu[i];
                    prop_assert!((big_l[i] - neg_sum[i]).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn k_one_is_geometric_recursion(
            losses in prop::collection::vec(-1.0f64..1.0, 1..30),
            beta in -1.0f64..1.0,
        ) {
            let mut ram = MomentumState::new(beta, RestartInterval::Finite(1));
            let mut prev = 0.0;
            for &l in &losses {
                let mu = ram.update(&[l]).unwrap()[0];
                prop_assert_eq!(mu, beta * prev - l);
                prev = mu;
            }
        }
    }
}
