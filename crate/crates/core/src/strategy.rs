//! Behavioral decision rules and strategies, reduced pure strategies, and
//! exact evaluation of strategy profiles through occupancy states.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Player, PosgModel};
use crate::occupancy::{expected_reward, marginal_private_histories, transition, History, OccupancyState};

/// Largest number of pure strategies `enumerate_pure` will produce.
pub const PURE_STRATEGY_LIMIT: f64 = 1e6;

/// One player's map from private histories at a single depth to action
/// distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRule {
    player: Player,
    depth: usize,
    table: BTreeMap<History, Vec<f64>>,
}

impl DecisionRule {
    pub fn new(
        m: &PosgModel,
        player: Player,
        depth: usize,
        table: BTreeMap<History, Vec<f64>>,
    ) -> Result<DecisionRule> {
        let na = m.num_actions(player);
        for (h, dist) in &table {
            if h.len() != depth {
                return Err(Error::DepthMismatch(depth, h.len()));
            }
            if dist.len() != na {
                return Err(Error::Validation(format!(
                    "rule for {} has {} actions, expected {na}",
                    h.render(m, player),
                    dist.len()
                )));
            }
            let sum: f64 = dist.iter().sum();
            if dist.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!(
                    "rule for {} is not a distribution (sum {sum})",
                    h.render(m, player)
                )));
            }
        }
        Ok(DecisionRule { player, depth, table })
    }

    /// Uniform distribution on every given history.
    pub fn uniform(
        m: &PosgModel,
        player: Player,
        depth: usize,
        histories: impl IntoIterator<Item = History>,
    ) -> DecisionRule {
        let na = m.num_actions(player);
        let table = histories
            .into_iter()
            .map(|h| (h, vec![1.0 / na as f64; na]))
            .collect();
        DecisionRule { player, depth, table }
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn table(&self) -> &BTreeMap<History, Vec<f64>> {
        &self.table
    }

    pub fn get(&self, h: History) -> Option<&[f64]> {
        self.table.get(&h).map(Vec::as_slice)
    }

    pub fn require(&self, m: &PosgModel, h: History) -> Result<&[f64]> {
        self.get(h).ok_or_else(|| Error::MissingRule {
            player: self.player.number(),
            depth: self.depth,
            history: h.render(m, self.player),
        })
    }

    /// Unchecked constructor for rules produced by the solvers.
    pub(crate) fn from_parts(player: Player, depth: usize, table: BTreeMap<History, Vec<f64>>) -> DecisionRule {
        DecisionRule { player, depth, table }
    }

    pub(crate) fn insert(&mut self, h: History, dist: Vec<f64>) {
        self.table.insert(h, dist);
    }

    /// `alpha * self + (1 - alpha) * other` on a shared domain.
    pub fn mix(&self, other: &DecisionRule, alpha: f64) -> Result<DecisionRule> {
        if self.player != other.player || self.depth != other.depth {
            return Err(Error::Validation("mixing rules of different players or depths".into()));
        }
        if self.table.keys().ne(other.table.keys()) {
            return Err(Error::Validation("mixing rules with different domains".into()));
        }
        let table = self
            .table
            .iter()
            .zip(other.table.values())
            .map(|((h, a), b)| {
                (
                    *h,
                    a.iter().zip(b).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect(),
                )
            })
            .collect();
        Ok(DecisionRule {
            player: self.player,
            depth: self.depth,
            table,
        })
    }
}

/// Uniform rule over the player's histories in the support of `o`.
pub fn uniform_rule(m: &PosgModel, o: &OccupancyState, player: Player) -> DecisionRule {
    DecisionRule::uniform(m, player, o.depth(), marginal_private_histories(o, player).into_keys())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRuleProfile {
    pub beta1: DecisionRule,
    pub beta2: DecisionRule,
}

impl DecisionRuleProfile {
    pub fn new(beta1: DecisionRule, beta2: DecisionRule) -> Result<Self> {
        if beta1.player != Player::One || beta2.player != Player::Two {
            return Err(Error::Validation("profile rules are for the wrong players".into()));
        }
        if beta1.depth != beta2.depth {
            return Err(Error::DepthMismatch(beta1.depth, beta2.depth));
        }
        Ok(Self { beta1, beta2 })
    }
}

/// Consecutive decision rules for one player starting at `start_depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct BehavioralStrategy {
    player: Player,
    start_depth: usize,
    rules: Vec<DecisionRule>,
}

impl BehavioralStrategy {
    pub fn new(player: Player, start_depth: usize, rules: Vec<DecisionRule>) -> Result<Self> {
        for (i, r) in rules.iter().enumerate() {
            if r.player != player {
                return Err(Error::Validation("strategy mixes players".into()));
            }
            if r.depth != start_depth + i {
                return Err(Error::DepthMismatch(start_depth + i, r.depth));
            }
        }
        Ok(Self {
            player,
            start_depth,
            rules,
        })
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn start_depth(&self) -> usize {
        self.start_depth
    }

    /// One past the last covered depth.
    pub fn end_depth(&self) -> usize {
        self.start_depth + self.rules.len()
    }

    pub fn rules(&self) -> &[DecisionRule] {
        &self.rules
    }

    pub fn rule_at(&self, depth: usize) -> Option<&DecisionRule> {
        depth
            .checked_sub(self.start_depth)
            .and_then(|i| self.rules.get(i))
    }

    pub fn rule_at_mut(&mut self, depth: usize) -> Option<&mut DecisionRule> {
        depth
            .checked_sub(self.start_depth)
            .and_then(|i| self.rules.get_mut(i))
    }

    /// Fills every history reachable from `roots` under the strategy's own
    /// actions with a uniform rule where none is defined, up to `horizon`.
    pub fn complete_uniform(&mut self, m: &PosgModel, roots: &[History], horizon: usize) {
        let p = self.player;
        let na = m.num_actions(p);
        while self.end_depth() < horizon {
            let d = self.end_depth();
            self.rules.push(DecisionRule::uniform(m, p, d, []));
        }
        let mut frontier: Vec<History> = roots.to_vec();
        for depth in self.start_depth..horizon {
            let rule = self.rule_at_mut(depth).expect("depth covered");
            let mut next = Vec::new();
            for h in frontier {
                let dist = rule
                    .table
                    .entry(h)
                    .or_insert_with(|| vec![1.0 / na as f64; na])
                    .clone();
                for (a, pa) in dist.iter().enumerate() {
                    if *pa > 0.0 {
                        for z in 0..m.num_observations(p) {
                            next.push(h.extend(m, p, a, z).expect("history fits"));
                        }
                    }
                }
            }
            frontier = next;
        }
    }
}

/// Value of the profile from `o` to the horizon, by the occupancy recursion
/// `V(o) = r(o, β) + γ V(T(o, β))`.
///
/// Finite-horizon models are evaluated to `H`; infinite-horizon ones to the
/// last depth both strategies cover.
pub fn evaluate_profile(
    m: &PosgModel,
    o: &OccupancyState,
    s1: &BehavioralStrategy,
    s2: &BehavioralStrategy,
) -> Result<f64> {
    let end = m
        .horizon()
        .finite()
        .unwrap_or_else(|| s1.end_depth().min(s2.end_depth()));
    let gamma = m.gamma();
    let mut occ = o.clone();
    let mut value = 0.0;
    let mut discount = 1.0;
    for depth in o.depth()..end {
        let missing = |p: Player| Error::MissingRule {
            player: p.number(),
            depth,
            history: "*".into(),
        };
        let b1 = s1.rule_at(depth).ok_or_else(|| missing(Player::One))?;
        let b2 = s2.rule_at(depth).ok_or_else(|| missing(Player::Two))?;
        let d = DecisionRuleProfile::new(b1.clone(), b2.clone())?;
        value += discount * expected_reward(m, &occ, &d)?;
        if depth + 1 < end {
            occ = transition(m, &occ, &d)?;
        }
        discount *= gamma;
    }
    Ok(value)
}

/// A deterministic strategy defined on self-reachable histories only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PureStrategy {
    pub player: Player,
    pub table: BTreeMap<History, usize>,
}

/// Number of reduced pure strategies for one subtree rooted at `depth`.
fn subtree_count(m: &PosgModel, player: Player, depth: usize, horizon: usize) -> f64 {
    let na = m.num_actions(player) as f64;
    let nz = m.num_observations(player) as i32;
    let mut n: f64 = 1.0;
    for _ in depth..horizon {
        n = na * n.powi(nz);
    }
    n
}

/// Every reduced pure strategy for `player` from the empty history.
pub fn enumerate_pure(m: &PosgModel, player: Player, horizon: usize) -> Result<Vec<PureStrategy>> {
    enumerate_pure_from(m, player, &[History::EMPTY], 0, horizon)
}

/// Every reduced pure strategy over the subtrees below `roots` (histories
/// of length `depth`).
pub fn enumerate_pure_from(
    m: &PosgModel,
    player: Player,
    roots: &[History],
    depth: usize,
    horizon: usize,
) -> Result<Vec<PureStrategy>> {
    let count = subtree_count(m, player, depth, horizon).powi(roots.len() as i32);
    if count > PURE_STRATEGY_LIMIT {
        return Err(Error::ExplosionGuard {
            what: "pure strategies",
            count,
            limit: PURE_STRATEGY_LIMIT,
        });
    }
    let mut combos: Vec<Vec<(History, usize)>> = vec![Vec::new()];
    for &root in roots {
        let sub = subtree(m, player, root, depth, horizon)?;
        combos = product(&combos, &sub);
    }
    Ok(combos
        .into_iter()
        .map(|entries| PureStrategy {
            player,
            table: entries.into_iter().collect(),
        })
        .collect())
}

fn product(left: &[Vec<(History, usize)>], right: &[Vec<(History, usize)>]) -> Vec<Vec<(History, usize)>> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for l in left {
        for r in right {
            let mut v = l.clone();
            v.extend_from_slice(r);
            out.push(v);
        }
    }
    out
}

fn subtree(
    m: &PosgModel,
    player: Player,
    h: History,
    depth: usize,
    horizon: usize,
) -> Result<Vec<Vec<(History, usize)>>> {
    if depth >= horizon {
        return Ok(vec![Vec::new()]);
    }
    let mut out = Vec::new();
    for a in 0..m.num_actions(player) {
        let mut combos: Vec<Vec<(History, usize)>> = vec![vec![(h, a)]];
        for z in 0..m.num_observations(player) {
            let child = h.extend(m, player, a, z)?;
            let sub = subtree(m, player, child, depth + 1, horizon)?;
            combos = product(&combos, &sub);
        }
        out.extend(combos);
    }
    Ok(out)
}

/// Point-mass rules replicating `p`, one rule per depth it covers.
pub fn pure_to_behavioral(m: &PosgModel, p: &PureStrategy) -> BehavioralStrategy {
    let na = m.num_actions(p.player);
    let start = p.table.keys().map(|h| h.len()).min().unwrap_or(0);
    let end = p.table.keys().map(|h| h.len() + 1).max().unwrap_or(start);
    let mut rules: Vec<DecisionRule> = (start..end)
        .map(|d| DecisionRule::uniform(m, p.player, d, []))
        .collect();
    for (h, &a) in &p.table {
        let mut dist = vec![0.0; na];
        dist[a] = 1.0;
        rules[h.len() - start].insert(*h, dist);
    }
    BehavioralStrategy {
        player: p.player,
        start_depth: start,
        rules,
    }
}

/// On-disk strategy format: depth → history string → action distribution.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct StrategyFile(pub BTreeMap<String, BTreeMap<String, Vec<f64>>>);

impl StrategyFile {
    pub fn from_strategy(m: &PosgModel, s: &BehavioralStrategy) -> StrategyFile {
        let mut out = BTreeMap::new();
        for rule in &s.rules {
            let rows = rule
                .table
                .iter()
                .map(|(h, d)| (h.render(m, s.player), d.clone()))
                .collect();
            out.insert(rule.depth.to_string(), rows);
        }
        StrategyFile(out)
    }

    pub fn into_strategy(self, m: &PosgModel, player: Player) -> Result<BehavioralStrategy> {
        let mut by_depth: BTreeMap<usize, BTreeMap<History, Vec<f64>>> = BTreeMap::new();
        for (depth, rows) in self.0 {
            let depth: usize = depth
                .parse()
                .map_err(|_| Error::Parse(format!("depth key `{depth}` is not an integer")))?;
            let mut table = BTreeMap::new();
            for (h, dist) in rows {
                let hist = History::parse(&h, m, player)?;
                if hist.len() != depth {
                    return Err(Error::DepthMismatch(depth, hist.len()));
                }
                table.insert(hist, dist);
            }
            by_depth.insert(depth, table);
        }
        let start = by_depth.keys().next().copied().unwrap_or(0);
        let rules = by_depth
            .into_iter()
            .map(|(d, table)| DecisionRule::new(m, player, d, table))
            .collect::<Result<Vec<_>>>()?;
        BehavioralStrategy::new(player, start, rules)
    }
}
