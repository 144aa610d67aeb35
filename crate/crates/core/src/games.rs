//! Benchmark games.
//!
//! Extensive-form games are described by a [`GameTree`] and turned into a
//! sequence-form [`EfgGame`] by [`build_game`], which walks the full tree
//! once, keys information sets by `(player, key)` and folds chance
//! probabilities into the payoff entries.

use std::collections::{BTreeMap, HashMap};

use crate::efg::{EfgGame, SparsePayoff, Treeplex, ROOT_SEQUENCE};
use crate::error::{Error, Result};
use crate::nfg::MatrixGame;

pub use crate::nfg::random_nfg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    /// Minimizes the payoff loss; owns `treeplex_x`.
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Payoff to the first player.
    Terminal(f64),
    Chance(Vec<f64>),
    Decision { player: Player, infoset: String, actions: usize },
}

/// A finite two-player zero-sum game tree with perfect recall.
pub trait GameTree {
    type State: Clone;

    fn root(&self) -> Self::State;
    fn node(&self, state: &Self::State) -> Node;
    /// Successor after the given action or chance outcome index.
    fn next(&self, state: &Self::State, action: usize) -> Self::State;
}

/// Result of [`build_game`], with the bookkeeping needed to relate
/// information sets back to decision points.
#[derive(Debug, Clone)]
pub struct BuiltGame {
    pub game: EfgGame,
    pub infosets: HashMap<(Player, String), usize>,
    pub terminal_count: usize,
}

struct Side {
    spec: Vec<(usize, usize)>,
    firsts: Vec<usize>,
    next_seq: usize,
}

impl Side {
    fn new() -> Self {
        Side { spec: Vec::new(), firsts: Vec::new(), next_seq: 1 }
    }
}

struct Builder {
    sides: [Side; 2],
    infosets: HashMap<(Player, String), usize>,
    entries: BTreeMap<(usize, usize), f64>,
    terminals: usize,
    scale: f64,
}

fn side_index(p: Player) -> usize {
    match p {
        Player::First => 0,
        Player::Second => 1,
    }
}

impl Builder {
    fn walk<G: GameTree>(&mut self, tree: &G, state: &G::State, seqs: [usize; 2], reach: f64) -> Result<()> {
        match tree.node(state) {
            Node::Terminal(u) => {
                self.terminals += 1;
                self.scale = self.scale.max(u.abs());
                *self.entries.entry((seqs[0], seqs[1])).or_insert(0.0) -= reach * u;
            }
            Node::Chance(probs) => {
                for (o, p) in probs.iter().enumerate() {
                    if *p > 0.0 {
                        self.walk(tree, &tree.next(state, o), seqs, reach * p)?;
                    }
                }
            }
            Node::Decision { player, infoset, actions } => {
                let side = side_index(player);
                let parent = seqs[side];
                let key = (player, infoset);
                let j = match self.infosets.get(&key) {
                    Some(&j) => {
                        let (p, n) = self.sides[side].spec[j];
                        if p != parent || n != actions {
                            return Err(Error::PerfectRecallViolation(j));
                        }
                        j
                    }
                    None => {
                        // Blocks are laid out in creation order, matching
                        // `Treeplex::from_parents`.
                        let s = &mut self.sides[side];
                        s.spec.push((parent, actions));
                        s.firsts.push(s.next_seq);
                        s.next_seq += actions;
                        let j = s.spec.len() - 1;
                        self.infosets.insert(key, j);
                        j
                    }
                };
                let first = self.sides[side].firsts[j];
                for a in 0..actions {
                    let mut child = seqs;
                    child[side] = first + a;
                    self.walk(tree, &tree.next(state, a), child, reach)?;
                }
            }
        }
        Ok(())
    }
}

/// Walks the whole tree and produces the sequence-form game.
pub fn build_game<G: GameTree>(name: &str, tree: &G) -> Result<BuiltGame> {
    let mut b = Builder {
        sides: [Side::new(), Side::new()],
        infosets: HashMap::new(),
        entries: BTreeMap::new(),
        terminals: 0,
        scale: 0.0,
    };
    b.walk(tree, &tree.root(), [ROOT_SEQUENCE; 2], 1.0)?;
    let tx = Treeplex::from_parents(&b.sides[0].spec)?;
    let ty = Treeplex::from_parents(&b.sides[1].spec)?;
    let entries = b.entries.into_iter().filter(|e| e.1 != 0.0).map(|((i, j), v)| (i, j, v)).collect();
    let payoff = SparsePayoff::new(tx.seq_count(), ty.seq_count(), entries)?;
    let scale = if b.scale > 0.0 { b.scale } else { 1.0 };
    Ok(BuiltGame {
        game: EfgGame::new(name, tx, ty, payoff, scale)?,
        infosets: b.infosets,
        terminal_count: b.terminals,
    })
}

/// Three-card Kuhn poker with an ante of one and a single bet size of one.
#[derive(Debug, Clone, Copy, Default)]
pub struct KuhnPoker;

#[derive(Debug, Clone)]
pub struct KuhnState {
    cards: Option<(usize, usize)>,
    history: Vec<u8>,
}

const KUHN_DEALS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

impl GameTree for KuhnPoker {
    type State = KuhnState;

    fn root(&self) -> KuhnState {
        KuhnState { cards: None, history: Vec::new() }
    }

    fn node(&self, s: &KuhnState) -> Node {
        let Some((c1, c2)) = s.cards else {
            return Node::Chance(vec![1.0 / 6.0; 6]);
        };
        let showdown = |stake: f64| if c1 > c2 { stake } else { -stake };
        match s.history.as_slice() {
            b"pp" => Node::Terminal(showdown(1.0)),
            b"pbp" => Node::Terminal(-1.0),
            b"pbb" | b"bb" => Node::Terminal(showdown(2.0)),
            b"bp" => Node::Terminal(1.0),
            h => {
                let (player, card) = if h.len() == 1 { (Player::Second, c2) } else { (Player::First, c1) };
                let infoset = format!("{}:{}", card, String::from_utf8_lossy(h));
                Node::Decision { player, infoset, actions: 2 }
            }
        }
    }

    fn next(&self, s: &KuhnState, action: usize) -> KuhnState {
        let mut n = s.clone();
        match s.cards {
            None => n.cards = Some(KUHN_DEALS[action]),
            Some(_) => n.history.push(if action == 0 { b'p' } else { b'b' }),
        }
        n
    }
}

pub fn kuhn_poker() -> EfgGame {
    build_game("kuhn", &KuhnPoker).expect("kuhn poker is well formed").game
}

/// Leduc hold'em: six cards (three ranks, two suits), ante one, bet sizes
/// one and two in the two rounds, at most two raises per round.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeducPoker;

#[derive(Debug, Clone)]
pub struct LeducState {
    private: Vec<usize>,
    public: Option<usize>,
    rounds: [Vec<u8>; 2],
    round: usize,
    contrib: [f64; 2],
    done: Option<Outcome>,
}

#[derive(Debug, Clone, Copy)]
enum Outcome {
    Fold(usize),
    Showdown,
}

impl LeducState {
    /// Player to act, whether they face a bet, and raises so far in the round.
    fn betting(&self) -> (usize, bool, usize) {
        let h = &self.rounds[self.round];
        let raises = h.iter().filter(|&&a| a == b'r').count();
        (h.len() % 2, h.last() == Some(&b'r'), raises)
    }
}

const LEDUC_MAX_RAISES: usize = 2;

impl GameTree for LeducPoker {
    type State = LeducState;

    fn root(&self) -> LeducState {
        LeducState {
            private: Vec::new(),
            public: None,
            rounds: [Vec::new(), Vec::new()],
            round: 0,
            contrib: [1.0, 1.0],
            done: None,
        }
    }

    fn node(&self, s: &LeducState) -> Node {
        match s.done {
            Some(Outcome::Fold(p)) => {
                return Node::Terminal(if p == 0 { -s.contrib[0] } else { s.contrib[1] });
            }
            Some(Outcome::Showdown) => {
                let public = s.public.expect("showdown after the public card") / 2;
                let (r1, r2) = (s.private[0] / 2, s.private[1] / 2);
                let winner = if r1 == public {
                    1
                } else if r2 == public {
                    -1
                } else {
                    (r1 as i32 - r2 as i32).signum()
                };
                return Node::Terminal(match winner {
                    1 => s.contrib[1],
                    -1 => -s.contrib[0],
                    _ => 0.0,
                });
            }
            None => {}
        }
        if s.private.len() < 2 {
            return Node::Chance(vec![1.0 / (6 - s.private.len()) as f64; 6 - s.private.len()]);
        }
        if s.round == 1 && s.public.is_none() {
            return Node::Chance(vec![0.25; 4]);
        }
        let (to_act, facing, raises) = s.betting();
        let actions = if !facing { 2 } else if raises < LEDUC_MAX_RAISES { 3 } else { 2 };
        let public = s.public.map_or("-".to_string(), |c| (c / 2).to_string());
        let infoset = format!(
            "{}|{}|{}|{}",
            s.private[to_act] / 2,
            public,
            String::from_utf8_lossy(&s.rounds[0]),
            String::from_utf8_lossy(&s.rounds[1])
        );
        let player = if to_act == 0 { Player::First } else { Player::Second };
        Node::Decision { player, infoset, actions }
    }

    fn next(&self, s: &LeducState, action: usize) -> LeducState {
        let mut n = s.clone();
        if s.private.len() < 2 {
            let remaining: Vec<usize> = (0..6).filter(|c| !s.private.contains(c)).collect();
            n.private.push(remaining[action]);
            return n;
        }
        if s.round == 1 && s.public.is_none() {
            let remaining: Vec<usize> = (0..6).filter(|c| !s.private.contains(c)).collect();
            n.public = Some(remaining[action]);
            return n;
        }
        let (to_act, facing, _) = s.betting();
        let bet = if s.round == 0 { 1.0 } else { 2.0 };
        let other = 1 - to_act;
        // Action codes: c = check/call, r = bet/raise, f = fold.
        let code = match (facing, action) {
            (false, 0) => b'c',
            (false, _) => b'r',
            (true, 0) => b'f',
            (true, 1) => b'c',
            (true, _) => b'r',
        };
        match code {
            b'f' => n.done = Some(Outcome::Fold(to_act)),
            b'c' => {
                n.contrib[to_act] = n.contrib[other];
            }
            _ => {
                n.contrib[to_act] = n.contrib[other] + bet;
            }
        }
        n.rounds[s.round].push(code);
        let h = &n.rounds[s.round];
        let closed = code == b'c' && (facing || h.len() >= 2);
        if closed && n.done.is_none() {
            if s.round == 0 {
                n.round = 1;
            } else {
                n.done = Some(Outcome::Showdown);
            }
        }
        n
    }
}

pub fn leduc_poker() -> EfgGame {
    build_game("leduc", &LeducPoker).expect("leduc poker is well formed").game
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrizeOrder {
    Descending,
    Ascending,
}

/// Goofspiel with a fixed prize order. Simultaneous bids are encoded as
/// the first player moving first with the second unable to see that card.
/// The payoff is the sign of the score difference.
#[derive(Debug, Clone, Copy)]
pub struct Goofspiel {
    ranks: usize,
    limited_info: bool,
    order: PrizeOrder,
}

#[derive(Debug, Clone)]
pub struct GoofspielState {
    played: Vec<(usize, usize)>,
    pending: Option<usize>,
}

impl Goofspiel {
    pub fn new(ranks: usize, limited_info: bool, order: PrizeOrder) -> Result<Self> {
        if !(2..=6).contains(&ranks) {
            return Err(Error::Config(format!("goofspiel supports 2 to 6 ranks, got {ranks}")));
        }
        Ok(Goofspiel { ranks, limited_info, order })
    }

    fn prize(&self, round: usize) -> usize {
        match self.order {
            PrizeOrder::Descending => self.ranks - round,
            PrizeOrder::Ascending => round + 1,
        }
    }

    fn hand(&self, played: &[(usize, usize)], side: usize) -> Vec<usize> {
        (1..=self.ranks)
            .filter(|c| !played.iter().any(|p| if side == 0 { p.0 == *c } else { p.1 == *c }))
            .collect()
    }

    fn view(&self, played: &[(usize, usize)], side: usize) -> String {
        played
            .iter()
            .map(|&(a, b)| {
                if self.limited_info {
                    let (own, other) = if side == 0 { (a, b) } else { (b, a) };
                    let outcome = match own.cmp(&other) {
                        std::cmp::Ordering::Greater => 'w',
                        std::cmp::Ordering::Less => 'l',
                        std::cmp::Ordering::Equal => 't',
                    };
                    format!("{own}{outcome}")
                } else {
                    format!("{a}-{b}")
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl GameTree for Goofspiel {
    type State = GoofspielState;

    fn root(&self) -> GoofspielState {
        GoofspielState { played: Vec::new(), pending: None }
    }

    fn node(&self, s: &GoofspielState) -> Node {
        let round = s.played.len();
        if round == self.ranks {
            let diff: i64 = s
                .played
                .iter()
                .enumerate()
                .map(|(r, &(a, b))| match a.cmp(&b) {
                    std::cmp::Ordering::Greater => self.prize(r) as i64,
                    std::cmp::Ordering::Less => -(self.prize(r) as i64),
                    std::cmp::Ordering::Equal => 0,
                })
                .sum();
            return Node::Terminal(diff.signum() as f64);
        }
        let side = usize::from(s.pending.is_some());
        let player = if side == 0 { Player::First } else { Player::Second };
        Node::Decision { player, infoset: self.view(&s.played, side), actions: self.ranks - round }
    }

    fn next(&self, s: &GoofspielState, action: usize) -> GoofspielState {
        let mut n = s.clone();
        match s.pending {
            None => n.pending = Some(self.hand(&s.played, 0)[action]),
            Some(a) => {
                n.played.push((a, self.hand(&s.played, 1)[action]));
                n.pending = None;
            }
        }
        n
    }
}

pub fn goofspiel(ranks: usize, limited_info: bool) -> Result<EfgGame> {
    if ranks != 4 && ranks != 5 {
        return Err(Error::Config(format!("goofspiel benchmark uses 4 or 5 ranks, got {ranks}")));
    }
    goofspiel_with_order(ranks, limited_info, PrizeOrder::Descending)
}

pub fn goofspiel_with_order(ranks: usize, limited_info: bool, order: PrizeOrder) -> Result<EfgGame> {
    let suffix = if limited_info { "-limited" } else { "" };
    Ok(build_game(&format!("goofspiel{ranks}{suffix}"), &Goofspiel::new(ranks, limited_info, order)?)?.game)
}

/// Liar's dice with one die per player. Bids `(quantity, face)` with
/// quantity 1 or 2 are ordered by quantity, then face; the first player
/// must open with a bid.
#[derive(Debug, Clone, Copy)]
pub struct LiarsDice {
    faces: usize,
}

#[derive(Debug, Clone)]
pub struct LiarsDiceState {
    dice: Vec<usize>,
    bids: Vec<usize>,
    called: bool,
}

impl LiarsDice {
    pub fn new(faces: usize) -> Result<Self> {
        if !(2..=6).contains(&faces) {
            return Err(Error::Config(format!("liar's dice supports 2 to 6 faces, got {faces}")));
        }
        Ok(LiarsDice { faces })
    }

    pub fn bid_count(&self) -> usize {
        2 * self.faces
    }

    /// `(quantity, face)` of a bid index, faces counted from 1.
    pub fn bid(&self, index: usize) -> (usize, usize) {
        (index / self.faces + 1, index % self.faces + 1)
    }
}

impl GameTree for LiarsDice {
    type State = LiarsDiceState;

    fn root(&self) -> LiarsDiceState {
        LiarsDiceState { dice: Vec::new(), bids: Vec::new(), called: false }
    }

    fn node(&self, s: &LiarsDiceState) -> Node {
        if s.dice.len() < 2 {
            return Node::Chance(vec![1.0 / self.faces as f64; self.faces]);
        }
        let to_act = s.bids.len() % 2;
        if s.called {
            let bidder = 1 - to_act;
            let (q, v) = self.bid(*s.bids.last().expect("a call follows a bid"));
            let count = s.dice.iter().filter(|&&d| d == v).count();
            let bidder_wins = count >= q;
            let first_wins = bidder_wins == (bidder == 0);
            return Node::Terminal(if first_wins { 1.0 } else { -1.0 });
        }
        let actions = match s.bids.last() {
            None => self.bid_count(),
            Some(&last) => self.bid_count() - last,
        };
        let history: Vec<String> = s.bids.iter().map(usize::to_string).collect();
        let player = if to_act == 0 { Player::First } else { Player::Second };
        Node::Decision { player, infoset: format!("{}|{}", s.dice[to_act], history.join(",")), actions }
    }

    /// After an opening bid, action 0 calls "liar" and action `i ≥ 1`
    /// raises to the `i`-th bid above the standing one.
    fn next(&self, s: &LiarsDiceState, action: usize) -> LiarsDiceState {
        let mut n = s.clone();
        if s.dice.len() < 2 {
            n.dice.push(action + 1);
            return n;
        }
        match s.bids.last() {
            None => n.bids.push(action),
            Some(_) if action == 0 => n.called = true,
            Some(&last) => n.bids.push(last + action),
        }
        n
    }
}

pub fn liars_dice(faces: usize) -> Result<EfgGame> {
    if faces != 4 && faces != 5 {
        return Err(Error::Config(format!("liar's dice benchmark uses 4 or 5 faces, got {faces}")));
    }
    Ok(build_game(&format!("liars_dice{faces}"), &LiarsDice::new(faces)?)?.game)
}

/// Extensive-form game by its harness name.
pub fn efg_by_name(name: &str) -> Result<EfgGame> {
    match name {
        "kuhn" => Ok(kuhn_poker()),
        "leduc" => Ok(leduc_poker()),
        "goofspiel4" => goofspiel(4, false),
        "goofspiel5" => goofspiel(5, false),
        "goofspiel4-limited" => goofspiel(4, true),
        "goofspiel5-limited" => goofspiel(5, true),
        "liars_dice4" => liars_dice(4),
        "liars_dice5" => liars_dice(5),
        other => Err(Error::Config(format!("unknown extensive-form game `{other}`"))),
    }
}

pub const EFG_NAMES: [&str; 8] = [
    "kuhn",
    "leduc",
    "goofspiel4",
    "goofspiel5",
    "goofspiel4-limited",
    "goofspiel5-limited",
    "liars_dice4",
    "liars_dice5",
];

#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrixGame {
    pub name: &'static str,
    pub game: MatrixGame,
    /// Known equilibrium `(x*, y*)` and its value, when available.
    pub equilibrium: Option<(Vec<f64>, Vec<f64>)>,
    pub value: Option<f64>,
}

/// Bias rock-paper-scissors and the 3×3 game with a unique interior
/// equilibrium, both unnormalized.
pub fn builtin_matrix_games() -> Vec<NamedMatrixGame> {
    let bias_rps = MatrixGame::new(&[vec![0., -1., 3.], vec![1., 0., -1.], vec![-3., 1., 0.]], false)
        .expect("static matrix");
    let three = MatrixGame::new(&[vec![3., 0., -3.], vec![0., 3., -4.], vec![0., 0., 1.]], false)
        .expect("static matrix");
    vec![
        NamedMatrixGame { name: "bias_rps", game: bias_rps, equilibrium: None, value: None },
        NamedMatrixGame {
            name: "3x3",
            game: three,
            equilibrium: Some((vec![1. / 12., 1. / 12., 5. / 6.], vec![1. / 3., 5. / 12., 1. / 4.])),
            value: Some(0.25),
        },
    ]
}

pub fn matrix_game_by_name(name: &str) -> Result<MatrixGame> {
    builtin_matrix_games()
        .into_iter()
        .find(|g| g.name == name)
        .map(|g| g.game)
        .ok_or_else(|| Error::Config(format!("unknown matrix game `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kuhn_shape() {
        let built = build_game("kuhn", &KuhnPoker).unwrap();
        assert_eq!(built.terminal_count, 30);
        assert_eq!(built.game.treeplex_x.seq_count(), 13);
        assert_eq!(built.game.treeplex_y.seq_count(), 13);
        assert_eq!(built.game.treeplex_x.num_points(), 6);
        assert_eq!(built.game.payoff_scale, 2.0);
    }

    #[test]
    fn leduc_shape() {
        let built = build_game("leduc", &LeducPoker).unwrap();
        assert_eq!(built.game.payoff_scale, 7.0);
        assert!(built.terminal_count > 0);
        let root = LeducPoker.root();
        assert_eq!(LeducPoker.node(&root), Node::Chance(vec![1.0 / 6.0; 6]));
    }

    #[test]
    fn size_arguments() {
        assert!(matches!(goofspiel(3, false), Err(Error::Config(_))));
        assert!(matches!(liars_dice(6), Err(Error::Config(_))));
        let d = LiarsDice::new(4).unwrap();
        assert_eq!(d.bid_count(), 8);
        assert_eq!(d.bid(0), (1, 1));
        assert_eq!(d.bid(7), (2, 4));
    }
}
