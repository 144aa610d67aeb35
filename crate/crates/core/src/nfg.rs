//! Normal-form zero-sum games: the bilinear problem `min_x max_y xᵀGy` over
//! a pair of probability simplices, its loss field, duality gap and regret
//! accounting.
//!
//! The row player `x` minimizes and observes the loss `f = G y`; the column
//! player `y` maximizes and observes the gain `g = Gᵀ x`. Learners that
//! minimize losses are handed `-g` for the column player.

use std::fmt::Write as _;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::error::{check_len, Error, Result};
use crate::vecops;

/// Payoff matrix of a two-player zero-sum game, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    rows: usize,
    cols: usize,
    payoff: Vec<f64>,
    normalized: bool,
}

impl MatrixGame {
    /// Builds a game from nested rows. With `normalize`, every entry is
    /// divided by the largest absolute entry (no-op for the zero matrix).
    pub fn new(entries: &[Vec<f64>], normalize: bool) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map_or(0, Vec::len);
        if entries.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidGame("ragged payoff matrix".into()));
        }
        let data = entries.iter().flatten().copied().collect();
        Self::from_row_major(rows, cols, data, normalize)
    }

    pub fn from_row_major(rows: usize, cols: usize, payoff: Vec<f64>, normalize: bool) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGame("empty payoff matrix".into()));
        }
        check_len(rows * cols, payoff.len())?;
        if let Some(bad) = payoff.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGame(format!("non-finite entry {bad}")));
        }
        let mut game = MatrixGame { rows, cols, payoff, normalized: false };
        if normalize {
            let scale = game.max_abs_entry();
            if scale > 0.0 {
                game.payoff.iter_mut().for_each(|v| *v /= scale);
            }
            game.normalized = true;
        }
        Ok(game)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.payoff[row * self.cols + col]
    }

    pub fn row_major(&self) -> &[f64] {
        &self.payoff
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.payoff.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `G y`, the loss vector of the row player.
    pub fn row_loss(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, y.len())?;
        Ok(self.payoff.chunks(self.cols).map(|row| vecops::dot(row, y)).collect())
    }

    /// `Gᵀ x`, the gain vector of the column player.
    pub fn col_gain(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, x.len())?;
        let mut out = vec![0.0; self.cols];
        for (row, &xi) in self.payoff.chunks(self.cols).zip(x) {
            if xi != 0.0 {
                for (o, &g) in out.iter_mut().zip(row) {
                    *o += xi * g;
                }
            }
        }
        Ok(out)
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(vecops::dot(x, &self.row_loss(y)?))
    }

    /// CSV layout: a `# matrix M N` header line followed by `M` rows of `N`
    /// comma-separated values. Values use the shortest round-trip decimal
    /// form.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# matrix {} {}\n", self.rows, self.cols);
        for row in self.payoff.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// Parses the [`MatrixGame::to_csv`] layout. The result is stored
    /// verbatim, with the normalized flag set iff every entry lies in
    /// `[-1, 1]` and some entry has magnitude one.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let (rows, cols) = match dims.as_slice() {
            ["#", "matrix", m, n] => (parse_usize(m, 1)?, parse_usize(n, 1)?),
            _ => return Err(Error::Parse { line: 1, message: format!("bad header `{header}`") }),
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen_rows = 0;
        for (idx, line) in lines {
            let values = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != cols {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {cols} values, found {}", values.len()),
                });
            }
            data.extend(values);
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(Error::Parse { line: 0, message: format!("expected {rows} rows, found {seen_rows}") });
        }
        let mut game = Self::from_row_major(rows, cols, data, false)?;
        game.normalized = game.max_abs_entry() == 1.0;
        Ok(game)
    }
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse { line, message: format!("expected integer, got `{s}`") })
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexStrategy(Vec<f64>);

impl SimplexStrategy {
    /// Validates and renormalizes `probs`. Entries must be finite and
    /// nonnegative (round-off down to `-1e-12` is clamped to zero) with a
    /// positive sum.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty strategy".into()));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -1e-12 {
                return Err(Error::InvalidInput(format!("invalid probability {p}")));
            }
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("probabilities sum to zero".into()));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(SimplexStrategy(probs))
    }

    pub fn uniform(dim: usize) -> Self {
        SimplexStrategy(vec![1.0 / dim as f64; dim])
    }

    pub fn vertex(dim: usize, index: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        SimplexStrategy(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Wraps a vector already known to lie on the simplex.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        SimplexStrategy(probs)
    }
}

impl AsRef<[f64]> for SimplexStrategy {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// The loss field `F(z) = (G y, -Gᵀ x)` returned as the pair `(f, g)` with
/// `g = Gᵀ x` (the sign flip belongs to the maximizing learner).
#[derive(Debug, Clone, PartialEq)]
pub struct JointLoss {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

pub fn joint_loss(game: &MatrixGame, x: &SimplexStrategy, y: &SimplexStrategy) -> Result<JointLoss> {
    Ok(JointLoss { f: game.row_loss(y.as_slice())?, g: game.col_gain(x.as_slice())? })
}

/// `max_y' xᵀGy' - min_x' x'ᵀGy`, evaluated exactly over simplex vertices.
pub fn duality_gap(game: &MatrixGame, x: &[f64], y: &[f64]) -> Result<f64> {
    let f = game.row_loss(y)?;
    let g = game.col_gain(x)?;
    Ok(vecops::max(&g) - vecops::min(&f))
}

/// `⟨x, l⟩·1 - l`.
pub fn instantaneous_regret(strategy: &[f64], loss: &[f64]) -> Result<Vec<f64>> {
    check_len(strategy.len(), loss.len())?;
    let v = vecops::dot(strategy, loss);
    Ok(loss.iter().map(|l| v - l).collect())
}

/// Loss vectors paired with the strategies played against them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretLedger {
    losses: Vec<Vec<f64>>,
    plays: Vec<SimplexStrategy>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, loss: Vec<f64>, play: SimplexStrategy) -> Result<()> {
        check_len(play.len(), loss.len())?;
        if let Some(first) = self.losses.first() {
            check_len(first.len(), loss.len())?;
        }
        self.losses.push(loss);
        self.plays.push(play);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn losses(&self) -> &[Vec<f64>] {
        &self.losses
    }

    pub fn plays(&self) -> &[SimplexStrategy] {
        &self.plays
    }

    /// `Σ_t ⟨l_t, x_t⟩ - Σ_t ⟨l_t, x̂⟩` for a fixed comparator `x̂`.
    pub fn regret_against(&self, comparator: &[f64]) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyHistory);
        }
        check_len(self.losses[0].len(), comparator.len())?;
        Ok(self
            .losses
            .iter()
            .zip(&self.plays)
            .map(|(l, x)| vecops::dot(l, x.as_slice()) - vecops::dot(l, comparator))
            .sum())
    }
}

/// External regret against the best fixed vertex in hindsight.
pub fn external_regret(ledger: &RegretLedger) -> Result<f64> {
    if ledger.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let dim = ledger.losses[0].len();
    let mut cumulative = vec![0.0; dim];
    let mut incurred = 0.0;
    for (l, x) in ledger.losses.iter().zip(&ledger.plays) {
        incurred += vecops::dot(l, x.as_slice());
        cumulative.iter_mut().zip(l).for_each(|(c, v)| *c += v);
    }
    Ok(incurred - vecops::min(&cumulative))
}

/// Deterministic standard-normal stream.
///
/// The state is a xoshiro256** generator whose four state words are the
/// first four outputs of SplitMix64 started at `seed`. Each uniform is
/// `u = ((next_u64() >> 11) + 1) · 2⁻⁵³ ∈ (0, 1]`. Normals come in pairs
/// from two consecutive uniforms `(u1, u2)` via Box–Muller:
/// `r = sqrt(-2 ln u1)`, emitting `r·cos(2π u2)` then `r·sin(2π u2)`.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: Xoshiro256StarStar,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream { rng: Xoshiro256StarStar::seed_from_u64(seed), spare: None }
    }

    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// An `m × n` game with i.i.d. standard-normal entries drawn row-major from
/// [`GaussianStream`], normalized to unit max magnitude.
pub fn random_nfg(seed: u64, m: usize, n: usize) -> Result<MatrixGame> {
    let mut stream = GaussianStream::new(seed);
    let data = (0..m * n).map(|_| stream.next_gaussian()).collect();
    MatrixGame::from_row_major(m, n, data, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rps() -> MatrixGame {
        MatrixGame::new(&[vec![0., -1., 1.], vec![1., 0., -1.], vec![-1., 1., 0.]], false).unwrap()
    }

    fn s(v: &[f64]) -> SimplexStrategy {
        SimplexStrategy::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction_and_normalization() {
        let raw = vec![vec![3., 0., -3.], vec![0., 3., -4.], vec![0., 0., 1.]];
        let g = MatrixGame::new(&raw, false).unwrap();
        assert_eq!(g.entry(1, 2), -4.0);
        assert!(!g.is_normalized());

        let z = MatrixGame::new(&[vec![0.0]], true).unwrap();
        assert_eq!(z.entry(0, 0), 0.0);
        assert!(z.is_normalized());

        let h = MatrixGame::new(&[vec![2., -4.]], true).unwrap();
        assert_eq!(h.row_major(), &[0.5, -1.0]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(MatrixGame::new(&[], false), Err(Error::InvalidGame(_))));
        assert!(matches!(MatrixGame::new(&[vec![f64::NAN]], false), Err(Error::InvalidGame(_))));
        assert!(matches!(MatrixGame::new(&[vec![1.0], vec![]], false), Err(Error::InvalidGame(_))));
    }

    #[test]
    fn joint_loss_examples() {
        let u = SimplexStrategy::uniform(3);
        let jl = joint_loss(&rps(), &u, &u).unwrap();
        for v in jl.f.iter().chain(&jl.g) {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-15);
        }
        let one = MatrixGame::new(&[vec![1.0]], false).unwrap();
        let jl = joint_loss(&one, &s(&[1.0]), &s(&[1.0])).unwrap();
        assert_eq!((jl.f, jl.g), (vec![1.0], vec![1.0]));

        let g = MatrixGame::new(&[vec![0., -1.], vec![1., 0.]], false).unwrap();
        assert_eq!(g.row_loss(&[0.0, 1.0]).unwrap(), vec![-1.0, 0.0]);
        assert!(matches!(joint_loss(&g, &u, &u), Err(Error::Dimension { .. })));
    }

    #[test]
    fn duality_gap_examples() {
        let g = MatrixGame::new(&[vec![3., 0., -3.], vec![0., 3., -4.], vec![0., 0., 1.]], false).unwrap();
        let x = [1. / 12., 1. / 12., 5. / 6.];
        let y = [1. / 3., 5. / 12., 1. / 4.];
        assert!(duality_gap(&g, &x, &y).unwrap().abs() <= 1e-12);

        let u = [1. / 3.; 3];
        assert_abs_diff_eq!(duality_gap(&rps(), &u, &u).unwrap(), 0.0, epsilon = 1e-15);

        // Vertex enumeration: x = e0, y = e1 in [[0,-1],[1,0]]:
        // max_y' e0ᵀGy' = max(0,-1) = 0, min_x' x'ᵀG e1 = min(-1, 0) = -1.
        let h = MatrixGame::new(&[vec![0., -1.], vec![1., 0.]], false).unwrap();
        assert_eq!(duality_gap(&h, &[1., 0.], &[0., 1.]).unwrap(), 1.0);
    }

    #[test]
    fn instantaneous_regret_examples() {
        let u = [1. / 3.; 3];
        let r = instantaneous_regret(&u, &[1., 0., -1.]).unwrap();
        for (a, b) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(instantaneous_regret(&[0.2, 0.8], &[0., 0.]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(instantaneous_regret(&[1., 0.], &[2., 5.]).unwrap(), vec![0.0, -3.0]);
        assert!(instantaneous_regret(&[1.0], &[1., 2.]).is_err());
    }

    #[test]
    fn external_regret_examples() {
        let mut ledger = RegretLedger::new();
        assert_eq!(external_regret(&ledger), Err(Error::EmptyHistory));
        for _ in 0..5 {
            ledger.push(vec![1., 0.], s(&[0., 1.])).unwrap();
        }
        assert_eq!(external_regret(&ledger).unwrap(), 0.0);

        let mut ledger = RegretLedger::new();
        for _ in 0..5 {
            ledger.push(vec![1., 0.], s(&[1., 0.])).unwrap();
        }
        assert_eq!(external_regret(&ledger).unwrap(), 5.0);

        let mut ledger = RegretLedger::new();
        ledger.push(vec![1., 0.], s(&[0., 1.])).unwrap();
        ledger.push(vec![0., 1.], s(&[0., 1.])).unwrap();
        assert_eq!(external_regret(&ledger).unwrap(), 0.0);
    }

    #[test]
    fn random_games_are_deterministic_and_normalized() {
        let a = random_nfg(0, 25, 25).unwrap();
        let b = random_nfg(0, 25, 25).unwrap();
        let c = random_nfg(1, 25, 25).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.max_abs_entry(), 1.0);
        assert!(a.row_major().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    /// Independent SplitMix64 + xoshiro256** transcription used to pin the
    /// stream documented on [`GaussianStream`].
    #[test]
    fn gaussian_stream_matches_reference_recurrence() {
        fn splitmix(state: &mut u64) -> u64 {
            *state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = *state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        }
        let mut sm = 42u64;
        let mut s = [splitmix(&mut sm), splitmix(&mut sm), splitmix(&mut sm), splitmix(&mut sm)];
        let mut next = move || {
            let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
            let t = s[1] << 17;
            s[2] ^= s[0];
            s[3] ^= s[1];
            s[1] ^= s[2];
            s[0] ^= s[3];
            s[2] ^= t;
            s[3] = s[3].rotate_left(45);
            result
        };
        let mut stream = GaussianStream::new(42);
        for _ in 0..8 {
            let u1 = ((next() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
            let u2 = ((next() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
            let r = (-2.0 * u1.ln()).sqrt();
            let th = 2.0 * std::f64::consts::PI * u2;
            assert_eq!(stream.next_gaussian().to_bits(), (r * th.cos()).to_bits());
            assert_eq!(stream.next_gaussian().to_bits(), (r * th.sin()).to_bits());
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = random_nfg(7, 3, 4).unwrap();
        let text = g.to_csv();
        assert!(text.starts_with("# matrix 3 4\n"));
        assert_eq!(MatrixGame::from_csv(&text).unwrap(), g);
        assert!(matches!(MatrixGame::from_csv("# matrix 1 2\n1.0\n"), Err(Error::Parse { line: 2, .. })));
    }
}
