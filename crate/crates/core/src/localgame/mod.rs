//! The one-stage game `Q(o, β¹, β²) = r(o, β) + γ·B(T(o, β))` played at an
//! occupancy state against a value bound `B` at the next depth.
//!
//! With the opponent's rule fixed, the payoff is separable across the
//! responder's histories, and each cone contributes a sum of absolute
//! values that is convex (upper bounds) or concave (lower bounds) in the
//! responder's probabilities. A responder whose objective agrees with the
//! envelope (player 2 against an upper bound, player 1 against a lower
//! bound) is solved exactly by a greedy over linear segments; otherwise it
//! is solved by DOO with vertex bounds. The outer player is always searched
//! by DOO, and games whose next bound has no cones are bilinear and go to
//! an LP.

pub mod doo;
pub mod grid;
mod terminal;
mod view;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::bounds::{Side, ValueBound};
use crate::error::{Error, Result};
use crate::model::{Player, PosgModel};
use crate::occupancy::{marginal_private_histories, History, OccKey, OccupancyState};
use crate::par::Execution;
use crate::strategy::DecisionRule;

pub use doo::{Profile, TraceRow};
use doo::{Cell, DooParams};
use view::View;

/// Default outer node budget.
pub const DEFAULT_BUDGET: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverTag {
    TerminalLp,
    NestedDoo,
    Grid,
}

#[derive(Clone, Debug)]
pub struct LocalConfig {
    pub tol: f64,
    pub budget: usize,
    pub inner_budget: usize,
    pub exec: Execution,
    pub trace: bool,
}

impl Default for LocalConfig {
    fn default() -> Self {
        LocalConfig {
            tol: 0.01,
            budget: DEFAULT_BUDGET,
            inner_budget: DEFAULT_BUDGET,
            exec: Execution::default(),
            trace: false,
        }
    }
}

impl LocalConfig {
    pub fn with_tol(tol: f64) -> Self {
        LocalConfig {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub beta1: DecisionRule,
    pub beta2: DecisionRule,
    pub value_lo: f64,
    pub value_hi: f64,
    pub solver: SolverTag,
    pub nodes: usize,
    pub budget_exhausted: bool,
    pub trace: Vec<TraceRow>,
}

impl LocalSolution {
    pub fn gap(&self) -> f64 {
        self.value_hi - self.value_lo
    }
}

/// Joint-action block `(θ¹, a¹, θ², a²)`: mass-weighted reward, the next
/// occupancy entries it feeds, and their initial-bound value.
#[derive(Clone, Debug)]
struct Block {
    g: f64,
    init: f64,
    entries: Vec<(u32, f64)>,
}

/// A cone restricted to the keys reachable from `o`.
#[derive(Clone, Debug)]
struct Piece {
    value: f64,
    slope: f64,
    /// Vertex mass on keys no block reaches.
    outside: f64,
    /// Dense vertex masses over the reachable keys.
    c: Vec<f64>,
    c_total: f64,
}

#[derive(Clone, Debug)]
pub struct LocalGame {
    side: Side,
    depth: usize,
    gamma: f64,
    lambda_q: f64,
    hist: [Vec<History>; 2],
    marg: [Vec<f64>; 2],
    na: [usize; 2],
    blocks: Vec<Block>,
    keys: Vec<OccKey>,
    pieces: Vec<Piece>,
}

fn sign(p: Player) -> f64 {
    match p {
        Player::One => 1.0,
        Player::Two => -1.0,
    }
}

impl LocalGame {
    /// Builds the game at `o` against `bound` at depth `o.depth() + 1`.
    pub fn new(m: &PosgModel, o: &OccupancyState, bound: &ValueBound) -> Result<LocalGame> {
        let depth = o.depth();
        if depth + 1 > bound.cap() {
            return Err(Error::Config(format!(
                "no bound beyond depth {} for a local game at depth {depth}",
                bound.cap()
            )));
        }
        let marg1 = marginal_private_histories(o, Player::One);
        let marg2 = marginal_private_histories(o, Player::Two);
        let hist = [marg1.keys().copied().collect::<Vec<_>>(), marg2.keys().copied().collect::<Vec<_>>()];
        let marg = [marg1.values().copied().collect::<Vec<_>>(), marg2.values().copied().collect::<Vec<_>>()];
        let index: [HashMap<History, usize>; 2] = [
            hist[0].iter().enumerate().map(|(i, h)| (*h, i)).collect(),
            hist[1].iter().enumerate().map(|(i, h)| (*h, i)).collect(),
        ];
        let na = [m.num_actions(Player::One), m.num_actions(Player::Two)];
        let n2 = hist[1].len();
        let nblocks = hist[0].len() * na[0] * n2 * na[1];
        let mut acc: Vec<BTreeMap<OccKey, f64>> = vec![BTreeMap::new(); nblocks];
        let mut g = vec![0.0; nblocks];
        for (k, p) in o.entries() {
            let i1 = index[0][&k.h1];
            let i2 = index[1][&k.h2];
            let s = k.state as usize;
            for a1 in 0..na[0] {
                for a2 in 0..na[1] {
                    let b = ((i1 * na[0] + a1) * n2 + i2) * na[1] + a2;
                    g[b] += p * m.reward(s, a1, a2);
                    for out in m.outcomes(s, a1, a2) {
                        if out.p <= 0.0 {
                            continue;
                        }
                        let key = OccKey {
                            state: out.next as u32,
                            h1: k.h1.extend(m, Player::One, a1, out.z1)?,
                            h2: k.h2.extend(m, Player::Two, a2, out.z2)?,
                        };
                        *acc[b].entry(key).or_insert(0.0) += p * out.p;
                    }
                }
            }
        }
        let next_init = bound.init_values(depth + 1);
        let mut keys = Vec::new();
        let mut key_index = HashMap::new();
        let mut blocks = Vec::with_capacity(nblocks);
        for (b, entries) in acc.into_iter().enumerate() {
            let mut out = Vec::with_capacity(entries.len());
            let mut init = 0.0;
            for (key, mass) in entries {
                init += mass * next_init[key.state as usize];
                let idx = *key_index.entry(key).or_insert_with(|| {
                    keys.push(key);
                    keys.len() - 1
                });
                out.push((idx as u32, mass));
            }
            blocks.push(Block { g: g[b], init, entries: out });
        }

        // a cone can only matter where it may undercut the initial piece
        let init_hi = keys.iter().map(|k| next_init[k.state as usize]).fold(f64::NEG_INFINITY, f64::max);
        let init_lo = keys.iter().map(|k| next_init[k.state as usize]).fold(f64::INFINITY, f64::min);
        let mut pieces = Vec::new();
        for cone in bound.cones(depth + 1) {
            let mut c = vec![0.0; keys.len()];
            let mut outside = 0.0;
            for (k, p) in cone.vertex.entries() {
                match key_index.get(k) {
                    Some(&i) => c[i] = *p,
                    None => outside += p,
                }
            }
            let useless = match bound.side() {
                Side::Upper => cone.value + cone.slope * outside >= init_hi,
                Side::Lower => cone.value - cone.slope * outside <= init_lo,
            };
            if useless {
                continue;
            }
            let c_total = c.iter().sum();
            pieces.push(Piece {
                value: cone.value,
                slope: cone.slope,
                outside,
                c,
                c_total,
            });
        }
        let rb = m.reward_bounds();
        let lambda_q = rb.lambda_r + m.gamma() * bound.envelope_slope(depth + 1);
        Ok(LocalGame {
            side: bound.side(),
            depth,
            gamma: m.gamma(),
            lambda_q,
            hist,
            marg,
            na,
            blocks,
            keys,
            pieces,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Lipschitz constant of the payoff in either rule under the
    /// marginal-weighted L1 metric.
    pub fn lambda_q(&self) -> f64 {
        self.lambda_q
    }

    pub fn histories(&self, p: Player) -> &[History] {
        &self.hist[p.index()]
    }

    pub fn marginals(&self, p: Player) -> &[f64] {
        &self.marg[p.index()]
    }

    pub fn num_actions(&self, p: Player) -> usize {
        self.na[p.index()]
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// True when the next bound contributes no cones, so the payoff is
    /// bilinear in the two rules.
    pub fn is_bilinear(&self) -> bool {
        self.pieces.is_empty()
    }

    fn block(&self, i1: usize, a1: usize, i2: usize, a2: usize) -> &Block {
        let n2 = self.hist[1].len();
        &self.blocks[((i1 * self.na[0] + a1) * n2 + i2) * self.na[1] + a2]
    }

    /// Marginal-weighted L1 distance between two rules of player `p`.
    pub fn rule_distance(&self, p: Player, a: &Profile, b: &Profile) -> f64 {
        self.marg[p.index()]
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x.iter().zip(y).map(|(u, v)| (u - v).abs()).sum::<f64>())
            .sum()
    }

    /// `Q(x, y)` evaluated directly from the next occupancy.
    pub fn payoff(&self, x: &Profile, y: &Profile) -> f64 {
        let mut reward = 0.0;
        let mut init = 0.0;
        let mut next = vec![0.0; self.keys.len()];
        for i1 in 0..self.hist[0].len() {
            for a1 in 0..self.na[0] {
                if x[i1][a1] == 0.0 {
                    continue;
                }
                for i2 in 0..self.hist[1].len() {
                    for a2 in 0..self.na[1] {
                        let w = x[i1][a1] * y[i2][a2];
                        if w == 0.0 {
                            continue;
                        }
                        let b = self.block(i1, a1, i2, a2);
                        reward += w * b.g;
                        init += w * b.init;
                        for &(k, mass) in &b.entries {
                            next[k as usize] += w * mass;
                        }
                    }
                }
            }
        }
        let env = self.pieces.iter().fold(init, |acc, p| {
            let d = p.outside + p.c.iter().zip(&next).map(|(c, n)| (n - c).abs()).sum::<f64>();
            match self.side {
                Side::Upper => acc.min(p.value + p.slope * d),
                Side::Lower => acc.max(p.value - p.slope * d),
            }
        })
        ;
        reward + self.gamma * env
    }

    /// Whether `p`'s objective agrees with the envelope's min/max.
    fn aligned(&self, p: Player) -> bool {
        matches!((self.side, p), (Side::Upper, Player::Two) | (Side::Lower, Player::One))
    }

    fn view(&self, responder: Player, other: &Profile) -> View<'_> {
        View::new(self, responder, other)
    }

    /// Bracket on `responder`'s best value against the fixed `other` rule,
    /// with the response attaining the certified end.
    pub fn respond(&self, responder: Player, other: &Profile, tol: f64, cfg: &LocalConfig) -> (f64, f64, Profile) {
        let v = self.view(responder, other);
        if self.aligned(responder) || self.is_bilinear() {
            let (val, t) = v.best_response();
            return (val, val, t);
        }
        let r = self.inner_doo(&v, tol, f64::INFINITY, cfg);
        let d = sign(responder);
        // r.lo is achieved by r.best in the responder's orientation
        let (a, b) = (d * r.lo, d * r.hi);
        (a.min(b), a.max(b), r.best_center)
    }

    fn inner_doo(&self, v: &View<'_>, tol: f64, abort_at: f64, cfg: &LocalConfig) -> doo::DooResult<()> {
        let resp = v.responder();
        let d = sign(resp);
        let params = DooParams {
            tol,
            budget: cfg.inner_budget,
            exec: cfg.exec,
            trace: false,
            abort_at,
        };
        let lq = self.lambda_q;
        doo::maximize(
            Cell::root(self.hist[resp.index()].len(), self.na[resp.index()]),
            &self.marg[resp.index()],
            &params,
            |cell, center, radius, _| {
                let lo = d * v.value(center);
                let hi = (d * v.vertex_bound(cell)).min(lo + lq * radius);
                doo::NodeEval { lo, hi, payload: () }
            },
        )
    }

    fn rule(&self, p: Player, profile: &Profile) -> DecisionRule {
        let table = self.hist[p.index()]
            .iter()
            .zip(profile)
            .map(|(h, dist)| {
                let clean: Vec<f64> = dist.iter().map(|x| x.max(0.0)).collect();
                let total: f64 = clean.iter().sum();
                if total > 0.0 {
                    (*h, clean.iter().map(|x| x / total).collect())
                } else {
                    (*h, vec![1.0 / dist.len() as f64; dist.len()])
                }
            })
            .collect();
        DecisionRule::from_parts(p, self.depth, table)
    }

    /// The profile of `rule` on this game's support.
    pub fn profile_of(&self, rule: &DecisionRule) -> Option<Profile> {
        self.hist[rule.player().index()]
            .iter()
            .map(|h| rule.get(*h).map(<[f64]>::to_vec))
            .collect()
    }

    /// Maximin for player 1: `β¹` guarantees `value_lo`; `β²` is the
    /// response found against it.
    pub fn solve_maximin(&self, cfg: &LocalConfig) -> Result<LocalSolution> {
        if self.is_bilinear() {
            return self.solve_terminal_lp(Player::One);
        }
        Ok(self.nested_doo(Player::One, cfg))
    }

    /// Minimax for player 2: `β²` holds player 1 to `value_hi`.
    pub fn solve_minimax(&self, cfg: &LocalConfig) -> Result<LocalSolution> {
        if self.is_bilinear() {
            return self.solve_terminal_lp(Player::Two);
        }
        Ok(self.nested_doo(Player::Two, cfg))
    }

    /// LP solution of a bilinear game: `value_lo` is what player 1's LP rule
    /// guarantees and `value_hi` what player 2's concedes.
    pub fn solve_terminal_lp(&self, outer: Player) -> Result<LocalSolution> {
        if !self.is_bilinear() {
            return Err(Error::Config("the LP solver needs a bilinear local game".into()));
        }
        // both LPs are solved and each profile's exact best-response value
        // certifies one end, so the bracket is sound however accurate the
        // simplex was
        let cfg = LocalConfig::default();
        let (_, x) = terminal::solve(self, Player::One)?;
        let (_, y) = terminal::solve(self, Player::Two)?;
        let (lo, _, y_resp) = self.respond(Player::Two, &x, 0.0, &cfg);
        let (hi, _, x_resp) = self.respond(Player::One, &y, 0.0, &cfg);
        let (p1, p2) = match outer {
            Player::One => (x, y_resp),
            Player::Two => (x_resp, y),
        };
        Ok(LocalSolution {
            beta1: self.rule(Player::One, &p1),
            beta2: self.rule(Player::Two, &p2),
            value_lo: lo,
            value_hi: hi.max(lo),
            solver: SolverTag::TerminalLp,
            nodes: 0,
            budget_exhausted: false,
            trace: Vec::new(),
        })
    }

    /// Nested DOO with `outer` searching and the other player responding.
    pub fn nested_doo(&self, outer: Player, cfg: &LocalConfig) -> LocalSolution {
        let resp = outer.other();
        let d = sign(outer);
        let lq = self.lambda_q;
        let params = DooParams {
            tol: cfg.tol,
            budget: cfg.budget,
            exec: cfg.exec,
            trace: cfg.trace,
            abort_at: f64::INFINITY,
        };
        let root = Cell::root(self.hist[outer.index()].len(), self.na[outer.index()]);
        let weights = &self.marg[outer.index()];
        let result = if self.aligned(resp) {
            doo::maximize(root, weights, &params, |cell, center, radius, _| {
                let (val, y) = self.view(resp, center).best_response();
                let lo = d * val;
                // the outer player cannot beat the center's best response
                // anywhere in the cell by more than its vertex bound
                let vb = d * self.view(outer, &y).vertex_bound(cell);
                doo::NodeEval {
                    lo,
                    hi: vb.min(lo + lq * radius),
                    payload: y,
                }
            })
        } else {
            doo::maximize(root, weights, &params, |_cell, center, radius, best_lo| {
                let v = self.view(resp, center);
                // stop the inner search once this node cannot beat best_lo
                let abort_at = lq * radius - best_lo;
                let inner = self.inner_doo(&v, cfg.tol / 2.0, abort_at, cfg);
                doo::NodeEval {
                    lo: -inner.hi,
                    hi: -inner.lo + lq * radius,
                    payload: inner.best_center,
                }
            })
        };
        let (lo, hi) = if d > 0.0 { (result.lo, result.hi) } else { (-result.hi, -result.lo) };
        let (p1, p2) = match outer {
            Player::One => (&result.best_center, &result.best),
            Player::Two => (&result.best, &result.best_center),
        };
        LocalSolution {
            beta1: self.rule(Player::One, p1),
            beta2: self.rule(Player::Two, p2),
            value_lo: lo,
            value_hi: hi,
            solver: SolverTag::NestedDoo,
            nodes: result.nodes,
            budget_exhausted: result.exhausted,
            trace: result.trace,
        }
    }
}
