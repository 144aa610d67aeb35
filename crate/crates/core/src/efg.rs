//! Sequential decision processes in sequence form.
//!
//! A [`Treeplex`] numbers its sequences `0..seq_count`. Sequence `0` is the
//! root sequence (`x[p_o] = 1`); decision point `j` owns the contiguous
//! block `first_j .. first_j + n_j`, with blocks laid out in decision-point
//! order. A process with several initial decision points is treated as if a
//! dummy root with a single action sat above them: that action's sequence
//! is identified with sequence `0`, so it always carries probability one.
//!
//! The bilinear game is `min_x max_y xᵀGy` with `G` a [`SparsePayoff`] whose
//! entries already fold in chance probabilities; the `x` player minimizes.

use std::fmt::Write as _;
use std::ops::Range;

use crate::error::{check_len, Error, Result};
use crate::nfg::{MatrixGame, SimplexStrategy};
use crate::vecops;

pub const ROOT_SEQUENCE: usize = 0;

/// Child-map description of a decision point: `children[a]` lists the
/// decision points that may follow action `a` (the set `C_{j,a}`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDecisionPoint {
    pub num_actions: usize,
    pub children: Vec<Vec<usize>>,
}

impl RawDecisionPoint {
    pub fn leaf(num_actions: usize) -> Self {
        RawDecisionPoint { num_actions, children: vec![Vec::new(); num_actions] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionPoint {
    pub parent: usize,
    pub first: usize,
    pub num_actions: usize,
}

impl DecisionPoint {
    pub fn sequences(&self) -> Range<usize> {
        self.first..self.first + self.num_actions
    }
}

/// A validated sequential decision process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Treeplex {
    points: Vec<DecisionPoint>,
    seq_count: usize,
    children: Vec<Vec<usize>>,
    owner: Vec<usize>,
    top_down: Vec<usize>,
}

/// Checks perfect recall and acyclicity, assigns sequence blocks and
/// caches a top-down order (its reverse is the bottom-up order).
pub fn validate_treeplex(raw: &[RawDecisionPoint]) -> Result<Treeplex> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::MalformedTree("no decision points".into()));
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    for (j, point) in raw.iter().enumerate() {
        if point.num_actions == 0 {
            return Err(Error::MalformedTree(format!("decision point {j} has no actions")));
        }
        if point.children.len() != point.num_actions {
            return Err(Error::MalformedTree(format!(
                "decision point {j} has {} actions but {} child sets",
                point.num_actions,
                point.children.len()
            )));
        }
        for (a, set) in point.children.iter().enumerate() {
            for &c in set {
                if c >= n {
                    return Err(Error::MalformedTree(format!("decision point {j} references unknown child {c}")));
                }
                if parent[c].is_some() {
                    return Err(Error::PerfectRecallViolation(c));
                }
                parent[c] = Some((j, a));
            }
        }
    }

    let mut firsts = Vec::with_capacity(n);
    let mut next = 1;
    for point in raw {
        firsts.push(next);
        next += point.num_actions;
    }
    let seq_count = next;

    let points: Vec<DecisionPoint> = raw
        .iter()
        .enumerate()
        .map(|(j, p)| DecisionPoint {
            parent: parent[j].map_or(ROOT_SEQUENCE, |(pj, a)| firsts[pj] + a),
            first: firsts[j],
            num_actions: p.num_actions,
        })
        .collect();

    let mut children = vec![Vec::new(); seq_count];
    for (j, par) in parent.iter().enumerate() {
        if par.is_none() {
            children[ROOT_SEQUENCE].push(j);
        }
    }
    for (j, point) in raw.iter().enumerate() {
        for (a, set) in point.children.iter().enumerate() {
            children[firsts[j] + a].extend(set.iter().copied());
        }
    }
    if children[ROOT_SEQUENCE].is_empty() {
        return Err(Error::MalformedTree("every decision point has a parent (cycle)".into()));
    }

    let mut top_down = Vec::with_capacity(n);
    let mut queue: std::collections::VecDeque<usize> = children[ROOT_SEQUENCE].iter().copied().collect();
    while let Some(j) = queue.pop_front() {
        top_down.push(j);
        for s in points[j].sequences() {
            queue.extend(children[s].iter().copied());
        }
    }
    if top_down.len() != n {
        return Err(Error::MalformedTree("decision points unreachable from the root (cycle)".into()));
    }

    let mut owner = vec![usize::MAX; seq_count];
    for (j, p) in points.iter().enumerate() {
        for s in p.sequences() {
            owner[s] = j;
        }
    }
    Ok(Treeplex { points, seq_count, children, owner, top_down })
}

impl Treeplex {
    pub fn new(raw: &[RawDecisionPoint]) -> Result<Self> {
        validate_treeplex(raw)
    }

    /// Builds from `(parent sequence, action count)` pairs listed in
    /// decision-point order, using the block layout described at module
    /// level.
    pub fn from_parents(spec: &[(usize, usize)]) -> Result<Self> {
        let mut firsts = Vec::with_capacity(spec.len());
        let mut next = 1;
        for &(_, n) in spec {
            firsts.push(next);
            next += n;
        }
        let mut raw: Vec<RawDecisionPoint> = spec.iter().map(|&(_, n)| RawDecisionPoint::leaf(n)).collect();
        for (j, &(parent, _)) in spec.iter().enumerate() {
            if parent == ROOT_SEQUENCE {
                continue;
            }
            let owner = firsts
                .iter()
                .zip(spec)
                .position(|(&f, &(_, n))| parent >= f && parent < f + n)
                .ok_or_else(|| Error::MalformedTree(format!("decision point {j} has unknown parent sequence {parent}")))?;
            raw[owner].children[parent - firsts[owner]].push(j);
        }
        validate_treeplex(&raw)
    }

    /// A single decision point with `n` actions: the simplex.
    pub fn simplex(n: usize) -> Result<Self> {
        validate_treeplex(&[RawDecisionPoint::leaf(n)])
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn seq_count(&self) -> usize {
        self.seq_count
    }

    pub fn point(&self, j: usize) -> &DecisionPoint {
        &self.points[j]
    }

    pub fn points(&self) -> &[DecisionPoint] {
        &self.points
    }

    /// Decision points reached right after sequence `s`.
    pub fn children_of(&self, s: usize) -> &[usize] {
        &self.children[s]
    }

    pub fn roots(&self) -> &[usize] {
        &self.children[ROOT_SEQUENCE]
    }

    /// Decision point owning sequence `s` (`None` for the root sequence).
    pub fn owner(&self, s: usize) -> Option<usize> {
        (s != ROOT_SEQUENCE).then(|| self.owner[s])
    }

    pub fn top_down(&self) -> &[usize] {
        &self.top_down
    }

    pub fn bottom_up(&self) -> impl Iterator<Item = usize> + '_ {
        self.top_down.iter().rev().copied()
    }

    /// Line format: `treeplex <points> <sequences>` followed by one
    /// `<id> <parent sequence> <actions>` line per decision point.
    pub fn to_text(&self) -> String {
        let mut out = format!("treeplex {} {}\n", self.points.len(), self.seq_count);
        for (j, p) in self.points.iter().enumerate() {
            let _ = writeln!(out, "{j} {} {}", p.parent, p.num_actions);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = TextLines::new(text);
        let tp = Self::read(&mut lines)?;
        lines.expect_end()?;
        Ok(tp)
    }

    fn read(lines: &mut TextLines<'_>) -> Result<Self> {
        let (line_no, header) = lines.next_line()?;
        let [points, seqs] = parse_header(header, "treeplex", line_no)?;
        let mut spec = Vec::with_capacity(points);
        for expected in 0..points {
            let (line_no, line) = lines.next_line()?;
            let fields = parse_fields::<3>(line, line_no)?;
            let [id, parent, n] = fields.map(|f| parse_num::<usize>(f, line_no));
            if id? != expected {
                return Err(Error::Parse { line: line_no, message: format!("expected decision point {expected}") });
            }
            spec.push((parent?, n?));
        }
        let tp = Self::from_parents(&spec)?;
        if tp.seq_count != seqs {
            return Err(Error::Parse { line: line_no, message: format!("sequence count {seqs} != {}", tp.seq_count) });
        }
        Ok(tp)
    }
}

/// Probabilities over sequences with `x[0] = 1` and flow conservation.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFormStrategy(Vec<f64>);

impl SequenceFormStrategy {
    pub const FLOW_TOLERANCE: f64 = 1e-9;

    pub fn new(tp: &Treeplex, values: Vec<f64>) -> Result<Self> {
        check_len(tp.seq_count(), values.len())?;
        let bad = |m: String| Err(Error::InvalidSequenceForm(m));
        if (values[ROOT_SEQUENCE] - 1.0).abs() > Self::FLOW_TOLERANCE {
            return bad(format!("root sequence has mass {}", values[ROOT_SEQUENCE]));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= -Self::FLOW_TOLERANCE && **v <= 1.0 + Self::FLOW_TOLERANCE)) {
            return bad(format!("entry {v} outside [0, 1]"));
        }
        for (j, p) in tp.points().iter().enumerate() {
            let mass: f64 = values[p.sequences()].iter().sum();
            if (mass - values[p.parent]).abs() > Self::FLOW_TOLERANCE {
                return bad(format!("decision point {j}: actions sum to {mass}, parent has {}", values[p.parent]));
            }
        }
        Ok(SequenceFormStrategy(values))
    }

    pub(crate) fn from_trusted(values: Vec<f64>) -> Self {
        SequenceFormStrategy(values)
    }

    pub fn uniform(tp: &Treeplex) -> Self {
        behavior_to_sequence(tp, &BehaviorStrategy::uniform(tp))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for SequenceFormStrategy {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Local strategies `x̂_j` laid out on the sequence index space: entry
/// `first_j + a` holds `x̂_j[a]`; entry 0 is unused and fixed at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorStrategy(Vec<f64>);

impl BehaviorStrategy {
    pub fn uniform(tp: &Treeplex) -> Self {
        let mut v = vec![1.0; tp.seq_count()];
        for p in tp.points() {
            let u = 1.0 / p.num_actions as f64;
            v[p.sequences()].iter_mut().for_each(|x| *x = u);
        }
        BehaviorStrategy(v)
    }

    pub(crate) fn from_trusted(values: Vec<f64>) -> Self {
        BehaviorStrategy(values)
    }

    /// One local simplex strategy per decision point, in decision-point order.
    pub fn from_locals(tp: &Treeplex, locals: &[SimplexStrategy]) -> Result<Self> {
        if locals.len() != tp.num_points() {
            return Err(Error::IncompleteStrategy(format!(
                "{} local strategies for {} decision points",
                locals.len(),
                tp.num_points()
            )));
        }
        let mut v = vec![1.0; tp.seq_count()];
        for (j, (p, local)) in tp.points().iter().zip(locals).enumerate() {
            if local.len() != p.num_actions {
                return Err(Error::IncompleteStrategy(format!(
                    "decision point {j} expects {} actions, got {}",
                    p.num_actions,
                    local.len()
                )));
            }
            v[p.sequences()].copy_from_slice(local.as_slice());
        }
        Ok(BehaviorStrategy(v))
    }

    pub fn local<'a>(&'a self, tp: &Treeplex, j: usize) -> &'a [f64] {
        &self.0[tp.point(j).sequences()]
    }

    pub fn locals(&self, tp: &Treeplex) -> Vec<SimplexStrategy> {
        (0..tp.num_points()).map(|j| SimplexStrategy::from_normalized(self.local(tp, j).to_vec())).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// `x[j,a] = x[p_j]·x̂_j[a]`, computed top-down.
pub fn behavior_to_sequence(tp: &Treeplex, behavior: &BehaviorStrategy) -> SequenceFormStrategy {
    let b = behavior.values();
    let mut x = vec![0.0; tp.seq_count()];
    x[ROOT_SEQUENCE] = 1.0;
    for &j in tp.top_down() {
        let p = tp.point(j);
        let reach = x[p.parent];
        for s in p.sequences() {
            x[s] = reach * b[s];
        }
    }
    SequenceFormStrategy(x)
}

/// `x̂_j = x[j] / x[p_j]`; decision points with zero reach get the uniform
/// strategy.
pub fn sequence_to_behavior(tp: &Treeplex, x: &SequenceFormStrategy) -> Result<BehaviorStrategy> {
    check_len(tp.seq_count(), x.values().len())?;
    Ok(behavior_from_values(tp, x.values()))
}

pub(crate) fn behavior_from_values(tp: &Treeplex, x: &[f64]) -> BehaviorStrategy {
    let mut b = vec![1.0; tp.seq_count()];
    for p in tp.points() {
        let reach = x[p.parent];
        let mass: f64 = x[p.sequences()].iter().sum();
        if reach > 0.0 && mass > 0.0 {
            // Divide by the local mass rather than the parent entry so that
            // accumulated round-off never leaves the simplex.
            for s in p.sequences() {
                b[s] = x[s].max(0.0) / mass;
            }
        } else {
            let u = 1.0 / p.num_actions as f64;
            b[p.sequences()].iter_mut().for_each(|v| *v = u);
        }
    }
    BehaviorStrategy(b)
}

/// Counterfactual losses `l̂_j` (laid out on the sequence index space) and
/// node values `⟨l̂_j, x̂_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualValues {
    pub local: Vec<f64>,
    pub node_value: Vec<f64>,
    /// `l[root] + Σ_{initial j} ⟨l̂_j, x̂_j⟩`; equals `⟨l, x⟩`.
    pub root_value: f64,
}

impl CounterfactualValues {
    pub fn local_loss<'a>(&'a self, tp: &Treeplex, j: usize) -> &'a [f64] {
        &self.local[tp.point(j).sequences()]
    }
}

pub fn counterfactual_values(tp: &Treeplex, loss: &[f64], behavior: &BehaviorStrategy) -> Result<CounterfactualValues> {
    check_len(tp.seq_count(), loss.len())?;
    check_len(tp.seq_count(), behavior.values().len())?;
    let b = behavior.values();
    let mut local = vec![0.0; tp.seq_count()];
    let mut node_value = vec![0.0; tp.num_points()];
    for j in tp.bottom_up() {
        let p = tp.point(j);
        let mut v = 0.0;
        for s in p.sequences() {
            let cf = loss[s] + tp.children_of(s).iter().map(|&c| node_value[c]).sum::<f64>();
            local[s] = cf;
            v += b[s] * cf;
        }
        node_value[j] = v;
    }
    let root_value = loss[ROOT_SEQUENCE] + tp.roots().iter().map(|&j| node_value[j]).sum::<f64>();
    Ok(CounterfactualValues { local, node_value, root_value })
}

/// Pure best response minimizing `⟨l, x⟩`; ties go to the lowest action
/// index. Returns the optimal value and the sequence-form strategy.
pub fn best_response(tp: &Treeplex, loss: &[f64]) -> Result<(f64, SequenceFormStrategy)> {
    check_len(tp.seq_count(), loss.len())?;
    let mut value = vec![0.0; tp.num_points()];
    let mut choice = vec![0usize; tp.num_points()];
    let mut scratch = Vec::new();
    for j in tp.bottom_up() {
        let p = tp.point(j);
        scratch.clear();
        scratch.extend(p.sequences().map(|s| loss[s] + tp.children_of(s).iter().map(|&c| value[c]).sum::<f64>()));
        let a = vecops::argmin(&scratch);
        choice[j] = a;
        value[j] = scratch[a];
    }
    let total = loss[ROOT_SEQUENCE] + tp.roots().iter().map(|&j| value[j]).sum::<f64>();
    let mut b = vec![0.0; tp.seq_count()];
    b[ROOT_SEQUENCE] = 1.0;
    for (j, p) in tp.points().iter().enumerate() {
        b[p.first + choice[j]] = 1.0;
    }
    Ok((total, behavior_to_sequence(tp, &BehaviorStrategy(b))))
}

/// Sparse bilinear payoff `G` between the sequences of two treeplexes.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePayoff {
    x_dim: usize,
    y_dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparsePayoff {
    /// Entries are sorted by `(x, y)`; duplicate pairs are rejected.
    pub fn new(x_dim: usize, y_dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::InvalidGame(format!("duplicate payoff entry ({}, {})", w[0].0, w[0].1)));
            }
        }
        for &(i, j, v) in &entries {
            if i >= x_dim || j >= y_dim {
                return Err(Error::InvalidGame(format!("payoff entry ({i}, {j}) out of range")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidGame(format!("non-finite payoff at ({i}, {j})")));
            }
        }
        Ok(SparsePayoff { x_dim, y_dim, entries })
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.2.abs()))
    }

    /// `G y`: loss of the minimizing player over its sequences.
    pub fn row_loss(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.y_dim, y.len())?;
        let mut out = vec![0.0; self.x_dim];
        for &(i, j, v) in &self.entries {
            out[i] += v * y[j];
        }
        Ok(out)
    }

    /// `Gᵀ x`: gain of the maximizing player over its sequences.
    pub fn col_gain(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.x_dim, x.len())?;
        let mut out = vec![0.0; self.y_dim];
        for &(i, j, v) in &self.entries {
            out[j] += v * x[i];
        }
        Ok(out)
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(self.x_dim, x.len())?;
        check_len(self.y_dim, y.len())?;
        Ok(self.entries.iter().map(|&(i, j, v)| x[i] * v * y[j]).sum())
    }

    /// `−Gᵀ`: the same game seen with the roles of the players exchanged.
    pub fn negated_transpose(&self) -> Self {
        let entries = self.entries.iter().map(|&(i, j, v)| (j, i, -v)).collect();
        SparsePayoff::new(self.y_dim, self.x_dim, entries).expect("transpose of a valid payoff")
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SparsePayoff {
            x_dim: self.x_dim,
            y_dim: self.y_dim,
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * factor)).collect(),
        }
    }

    /// `payoff <x dim> <y dim> <entries>` followed by one `<x> <y> <value>`
    /// triple per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("payoff {} {} {}\n", self.x_dim, self.y_dim, self.entries.len());
        for &(i, j, v) in &self.entries {
            let _ = writeln!(out, "{i} {j} {v:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = TextLines::new(text);
        let p = Self::read(&mut lines)?;
        lines.expect_end()?;
        Ok(p)
    }

    fn read(lines: &mut TextLines<'_>) -> Result<Self> {
        let (line_no, header) = lines.next_line()?;
        let [x_dim, y_dim, count] = parse_header(header, "payoff", line_no)?;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (line_no, line) = lines.next_line()?;
            let [i, j, v] = parse_fields::<3>(line, line_no)?;
            entries.push((parse_num(i, line_no)?, parse_num(j, line_no)?, parse_num(v, line_no)?));
        }
        SparsePayoff::new(x_dim, y_dim, entries)
    }
}

/// `max_{y'}⟨x, G y'⟩ − min_{x'}⟨x', G y⟩` via best responses on both sides.
pub fn efg_exploitability(
    payoff: &SparsePayoff,
    tx: &Treeplex,
    ty: &Treeplex,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    check_len(tx.seq_count(), payoff.x_dim())?;
    check_len(ty.seq_count(), payoff.y_dim())?;
    let neg_gain: Vec<f64> = payoff.col_gain(x)?.into_iter().map(|v| -v).collect();
    let (y_best, _) = best_response(ty, &neg_gain)?;
    let (x_best, _) = best_response(tx, &payoff.row_loss(y)?)?;
    Ok(-y_best - x_best)
}

/// A two-player zero-sum extensive-form game in sequence form. Payoff
/// entries are losses of the `x` player (equivalently gains of `y`).
#[derive(Debug, Clone, PartialEq)]
pub struct EfgGame {
    pub name: String,
    pub treeplex_x: Treeplex,
    pub treeplex_y: Treeplex,
    pub payoff: SparsePayoff,
    /// Largest absolute leaf payoff before any normalization.
    pub payoff_scale: f64,
}

impl EfgGame {
    pub fn new(name: impl Into<String>, treeplex_x: Treeplex, treeplex_y: Treeplex, payoff: SparsePayoff, payoff_scale: f64) -> Result<Self> {
        check_len(treeplex_x.seq_count(), payoff.x_dim())?;
        check_len(treeplex_y.seq_count(), payoff.y_dim())?;
        if !(payoff_scale > 0.0) {
            return Err(Error::InvalidGame(format!("payoff scale must be positive, got {payoff_scale}")));
        }
        Ok(EfgGame { name: name.into(), treeplex_x, treeplex_y, payoff, payoff_scale })
    }

    /// The matrix game as a pair of single-decision-point treeplexes.
    pub fn from_matrix_game(name: impl Into<String>, game: &MatrixGame) -> Result<Self> {
        let tx = Treeplex::simplex(game.rows())?;
        let ty = Treeplex::simplex(game.cols())?;
        let mut entries = Vec::new();
        for i in 0..game.rows() {
            for j in 0..game.cols() {
                let v = game.entry(i, j);
                if v != 0.0 {
                    entries.push((i + 1, j + 1, v));
                }
            }
        }
        let payoff = SparsePayoff::new(tx.seq_count(), ty.seq_count(), entries)?;
        let scale = game.max_abs_entry();
        Self::new(name, tx, ty, payoff, if scale > 0.0 { scale } else { 1.0 })
    }

    pub fn exploitability(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        efg_exploitability(&self.payoff, &self.treeplex_x, &self.treeplex_y, x, y)
    }

    /// Expected payoff to the first (minimizing) player, `−⟨x, G y⟩`.
    pub fn value_to_first_player(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(-self.payoff.value(x, y)?)
    }

    /// Same game with the players' roles exchanged and payoffs negated.
    pub fn swapped(&self) -> Self {
        EfgGame {
            name: format!("{}-swapped", self.name),
            treeplex_x: self.treeplex_y.clone(),
            treeplex_y: self.treeplex_x.clone(),
            payoff: self.payoff.negated_transpose(),
            payoff_scale: self.payoff_scale,
        }
    }

    /// Payoffs divided by `payoff_scale`, so every entry magnitude is at
    /// most one.
    pub fn normalized(&self) -> Self {
        EfgGame { payoff: self.payoff.scaled(1.0 / self.payoff_scale), payoff_scale: 1.0, ..self.clone() }
    }

    /// `# game <name>` and `# scale <scale>` comment lines, then both
    /// treeplexes (x first) and the payoff.
    pub fn to_text(&self) -> String {
        format!(
            "# game {}\n# scale {:?}\n{}{}{}",
            self.name,
            self.payoff_scale,
            self.treeplex_x.to_text(),
            self.treeplex_y.to_text(),
            self.payoff.to_text()
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut name = String::new();
        let mut scale = 1.0;
        for (idx, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix("# game ") {
                name = rest.trim().to_string();
            } else if let Some(rest) = line.strip_prefix("# scale ") {
                scale = parse_num(rest.trim(), idx + 1)?;
            }
        }
        let mut lines = TextLines::new(text);
        let tx = Treeplex::read(&mut lines)?;
        let ty = Treeplex::read(&mut lines)?;
        let payoff = SparsePayoff::read(&mut lines)?;
        lines.expect_end()?;
        Self::new(name, tx, ty, payoff, scale)
    }
}

/// Non-empty, non-comment lines with 1-based line numbers.
struct TextLines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> TextLines<'a> {
    fn new(text: &'a str) -> Self {
        TextLines { inner: text.lines().enumerate() }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (idx, line) in self.inner.by_ref() {
            let trimmed = line.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                return Ok((idx + 1, trimmed));
            }
        }
        Err(Error::Parse { line: 0, message: "unexpected end of input".into() })
    }

    fn expect_end(&mut self) -> Result<()> {
        match self.next_line() {
            Ok((line, _)) => Err(Error::Parse { line, message: "trailing content".into() }),
            Err(_) => Ok(()),
        }
    }
}

fn parse_fields<const N: usize>(line: &str, line_no: usize) -> Result<[&str; N]> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    fields
        .try_into()
        .map_err(|f: Vec<&str>| Error::Parse { line: line_no, message: format!("expected {N} fields, found {}", f.len()) })
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, message: format!("cannot parse `{s}`") })
}

fn parse_header<const N: usize>(line: &str, keyword: &str, line_no: usize) -> Result<[usize; N]> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(keyword) {
        return Err(Error::Parse { line: line_no, message: format!("expected `{keyword}` header") });
    }
    let rest: Vec<&str> = fields.collect();
    let arr: [&str; N] = rest
        .try_into()
        .map_err(|_| Error::Parse { line: line_no, message: format!("`{keyword}` header needs {N} numbers") })?;
    let mut out = [0usize; N];
    for (o, f) in out.iter_mut().zip(arr) {
        *o = parse_num(f, line_no)?;
    }
    Ok(out)
}
