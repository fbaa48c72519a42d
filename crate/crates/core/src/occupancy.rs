//! Occupancy states and the deterministic dynamics of the occupancy game.
//!
//! An occupancy state at depth `τ` is a distribution over
//! `(state, joint history)` pairs. Private histories are interned as
//! mixed-radix integer codes, so keys are small `Copy` values and
//! supports stay cheap to sort and compare.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Player, PosgModel};
use crate::strategy::DecisionRuleProfile;

/// Mass below this is dropped after a transition.
pub const PRUNE_EPS: f64 = 1e-12;

/// A private action-observation history, interned as a mixed-radix code.
///
/// Step `t` contributes the digit `a * |Z| + z` in base `|A| * |Z|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History {
    len: u32,
    code: u64,
}

impl History {
    pub const EMPTY: History = History { len: 0, code: 0 };

    pub fn len(self) -> usize {
        self.len as usize
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    pub fn code(self) -> u64 {
        self.code
    }

    /// Appends `(a, z)` for `player` under `m`'s action/observation counts.
    pub fn extend(self, m: &PosgModel, player: Player, a: usize, z: usize) -> Result<History> {
        let base = m.branching(player) as u64;
        let digit = (a * m.num_observations(player) + z) as u64;
        let code = self
            .code
            .checked_mul(base)
            .and_then(|c| c.checked_add(digit))
            .ok_or(Error::HistoryOverflow(self.len() + 1))?;
        Ok(History {
            len: self.len + 1,
            code,
        })
    }

    /// Decodes the `(action, observation)` steps, oldest first.
    pub fn steps(self, m: &PosgModel, player: Player) -> Vec<(usize, usize)> {
        let base = m.branching(player) as u64;
        let nz = m.num_observations(player);
        let mut code = self.code;
        let mut out = Vec::with_capacity(self.len());
        for _ in 0..self.len {
            let digit = (code % base) as usize;
            code /= base;
            out.push((digit / nz, digit % nz));
        }
        out.reverse();
        out
    }

    /// The history without its last step.
    pub fn parent(self, m: &PosgModel, player: Player) -> Option<(History, usize, usize)> {
        if self.len == 0 {
            return None;
        }
        let base = m.branching(player) as u64;
        let nz = m.num_observations(player);
        let digit = (self.code % base) as usize;
        Some((
            History {
                len: self.len - 1,
                code: self.code / base,
            },
            digit / nz,
            digit % nz,
        ))
    }

    /// Renders as `a0z1.a1z0`; the empty history renders as `-`.
    pub fn render(self, m: &PosgModel, player: Player) -> String {
        if self.len == 0 {
            return "-".into();
        }
        let parts: Vec<String> = self
            .steps(m, player)
            .into_iter()
            .map(|(a, z)| format!("a{a}z{z}"))
            .collect();
        parts.join(".")
    }

    pub fn parse(text: &str, m: &PosgModel, player: Player) -> Result<History> {
        let bad = || Error::Parse(format!("malformed history `{text}`"));
        let mut h = History::EMPTY;
        if text == "-" || text.is_empty() {
            return Ok(h);
        }
        for step in text.split('.') {
            let rest = step.strip_prefix('a').ok_or_else(bad)?;
            let (a, z) = rest.split_once('z').ok_or_else(bad)?;
            let a: usize = a.parse().map_err(|_| bad())?;
            let z: usize = z.parse().map_err(|_| bad())?;
            if a >= m.num_actions(player) || z >= m.num_observations(player) {
                return Err(bad());
            }
            h = h.extend(m, player, a, z)?;
        }
        Ok(h)
    }
}

/// `(state, θ¹, θ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccKey {
    pub state: u32,
    pub h1: History,
    pub h2: History,
}

impl OccKey {
    pub fn history(&self, p: Player) -> History {
        match p {
            Player::One => self.h1,
            Player::Two => self.h2,
        }
    }
}

/// A sparse distribution over `(state, joint history)` at a fixed depth.
///
/// Entries are kept sorted by key with strictly positive mass.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyState {
    depth: usize,
    entries: Vec<(OccKey, f64)>,
}

impl OccupancyState {
    /// Builds an occupancy state from arbitrary entries: duplicates are
    /// merged, nonpositive mass dropped, and keys checked against `depth`.
    pub fn from_entries(depth: usize, entries: Vec<(OccKey, f64)>) -> Result<OccupancyState> {
        for (k, p) in &entries {
            if k.h1.len() != depth || k.h2.len() != depth {
                return Err(Error::DepthMismatch(depth, k.h1.len().max(k.h2.len())));
            }
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::Validation(format!("occupancy mass {p} is invalid")));
            }
        }
        let entries = merge_sorted(entries, 0.0);
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("occupancy mass sums to {total}")));
        }
        Ok(OccupancyState { depth, entries })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn entries(&self) -> &[(OccKey, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn get(&self, key: &OccKey) -> f64 {
        self.entries
            .binary_search_by(|(k, _)| k.cmp(key))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Cache equality: identical key sets and masses within 1e-12.
    pub fn approx_eq(&self, other: &OccupancyState) -> bool {
        self.depth == other.depth
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= 1e-12)
    }

    /// `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &OccupancyState, alpha: f64) -> Result<OccupancyState> {
        if self.depth != other.depth {
            return Err(Error::DepthMismatch(self.depth, other.depth));
        }
        let mut entries: Vec<(OccKey, f64)> = self.entries.iter().map(|&(k, p)| (k, alpha * p)).collect();
        entries.extend(other.entries.iter().map(|&(k, p)| (k, (1.0 - alpha) * p)));
        Ok(OccupancyState {
            depth: self.depth,
            entries: merge_sorted(entries, 0.0),
        })
    }

    /// One line per entry: `state<TAB>θ¹<TAB>θ²<TAB>prob`.
    pub fn dump(&self, m: &PosgModel) -> String {
        let mut out = String::new();
        for (k, p) in &self.entries {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                m.state_names()[k.state as usize],
                k.h1.render(m, Player::One),
                k.h2.render(m, Player::Two),
                p
            );
        }
        out
    }
}

fn merge_sorted(mut entries: Vec<(OccKey, f64)>, drop_below: f64) -> Vec<(OccKey, f64)> {
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(OccKey, f64)> = Vec::with_capacity(entries.len());
    for (k, p) in entries {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += p,
            _ => out.push((k, p)),
        }
    }
    out.retain(|e| e.1 > drop_below);
    out
}

/// `o₀`: the initial belief with empty histories.
pub fn initial_occupancy(m: &PosgModel) -> OccupancyState {
    let entries = m
        .b0()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(s, &p)| {
            (
                OccKey {
                    state: s as u32,
                    h1: History::EMPTY,
                    h2: History::EMPTY,
                },
                p,
            )
        })
        .collect();
    OccupancyState { depth: 0, entries }
}

fn check_profile(o: &OccupancyState, d: &DecisionRuleProfile) -> Result<()> {
    if d.beta1.depth() != o.depth() {
        return Err(Error::DepthMismatch(o.depth(), d.beta1.depth()));
    }
    if d.beta2.depth() != o.depth() {
        return Err(Error::DepthMismatch(o.depth(), d.beta2.depth()));
    }
    Ok(())
}

/// The occupancy reached from `o` when both players follow `d` for one step.
pub fn transition(m: &PosgModel, o: &OccupancyState, d: &DecisionRuleProfile) -> Result<OccupancyState> {
    check_profile(o, d)?;
    let mut next = Vec::new();
    for (key, mass) in &o.entries {
        let b1 = d.beta1.require(m, key.h1)?;
        let b2 = d.beta2.require(m, key.h2)?;
        for (a1, &p1) in b1.iter().enumerate() {
            if p1 <= 0.0 {
                continue;
            }
            for (a2, &p2) in b2.iter().enumerate() {
                if p2 <= 0.0 {
                    continue;
                }
                let w = mass * p1 * p2;
                for out in m.outcomes(key.state as usize, a1, a2) {
                    if out.p <= 0.0 {
                        continue;
                    }
                    next.push((
                        OccKey {
                            state: out.next as u32,
                            h1: key.h1.extend(m, Player::One, a1, out.z1)?,
                            h2: key.h2.extend(m, Player::Two, a2, out.z2)?,
                        },
                        w * out.p,
                    ));
                }
            }
        }
    }
    let mut entries = merge_sorted(next, PRUNE_EPS);
    let total: f64 = entries.iter().map(|e| e.1).sum();
    if total > 0.0 && total != 1.0 {
        for e in &mut entries {
            e.1 /= total;
        }
    }
    Ok(OccupancyState {
        depth: o.depth + 1,
        entries,
    })
}

/// `Σ_{s,θ} o(s,θ) Σ_{a¹,a²} β¹(θ¹,a¹) β²(θ²,a²) r(s,a¹,a²)`.
pub fn expected_reward(m: &PosgModel, o: &OccupancyState, d: &DecisionRuleProfile) -> Result<f64> {
    check_profile(o, d)?;
    let mut total = 0.0;
    for (key, mass) in &o.entries {
        let b1 = d.beta1.require(m, key.h1)?;
        let b2 = d.beta2.require(m, key.h2)?;
        let mut inner = 0.0;
        for (a1, &p1) in b1.iter().enumerate() {
            if p1 == 0.0 {
                continue;
            }
            for (a2, &p2) in b2.iter().enumerate() {
                inner += p1 * p2 * m.reward(key.state as usize, a1, a2);
            }
        }
        total += mass * inner;
    }
    Ok(total)
}

/// `‖a − b‖₁` over the union of supports.
pub fn l1_distance(a: &OccupancyState, b: &OccupancyState) -> Result<f64> {
    if a.depth != b.depth {
        return Err(Error::DepthMismatch(a.depth, b.depth));
    }
    Ok(l1_sorted(&a.entries, &b.entries))
}

pub(crate) fn l1_sorted(a: &[(OccKey, f64)], b: &[(OccKey, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                sum += a[i].1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                sum += b[j].1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                sum += (a[i].1 - b[j].1).abs();
                i += 1;
                j += 1;
            }
        }
    }
    sum += a[i..].iter().map(|e| e.1).sum::<f64>();
    sum += b[j..].iter().map(|e| e.1).sum::<f64>();
    sum
}

/// Marginal distribution over one player's private histories.
pub fn marginal_private_histories(o: &OccupancyState, player: Player) -> BTreeMap<History, f64> {
    let mut out = BTreeMap::new();
    for (k, p) in &o.entries {
        *out.entry(k.history(player)).or_insert(0.0) += p;
    }
    out.retain(|_, p| *p > 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin;
    use crate::strategy::DecisionRule;
    use approx::assert_abs_diff_eq;

    fn rule(m: &PosgModel, o: &OccupancyState, p: Player, dist: &[f64]) -> DecisionRule {
        let table = marginal_private_histories(o, p)
            .keys()
            .map(|h| (*h, dist.to_vec()))
            .collect();
        DecisionRule::new(m, p, o.depth(), table).unwrap()
    }

    fn profile(m: &PosgModel, o: &OccupancyState, d1: &[f64], d2: &[f64]) -> DecisionRuleProfile {
        DecisionRuleProfile::new(rule(m, o, Player::One, d1), rule(m, o, Player::Two, d2)).unwrap()
    }

    #[test]
    fn history_codes_round_trip() {
        let m = builtin("adversarial-tiger").unwrap();
        let h = History::EMPTY
            .extend(&m, Player::One, 2, 1)
            .unwrap()
            .extend(&m, Player::One, 0, 0)
            .unwrap();
        assert_eq!(h.steps(&m, Player::One), vec![(2, 1), (0, 0)]);
        assert_eq!(h.render(&m, Player::One), "a2z1.a0z0");
        assert_eq!(History::parse("a2z1.a0z0", &m, Player::One).unwrap(), h);
        assert_eq!(h.parent(&m, Player::One).unwrap().1, 0);
        assert!(History::parse("a9z0", &m, Player::One).is_err());
        assert_eq!(History::EMPTY.render(&m, Player::Two), "-");
    }

    #[test]
    fn initial_occupancy_examples() {
        let mp = builtin("matching-pennies").unwrap();
        let o = initial_occupancy(&mp);
        assert_eq!(o.depth(), 0);
        assert_eq!(o.len(), 1);
        assert_eq!(o.entries()[0].1, 1.0);

        let tiger = builtin("adversarial-tiger").unwrap();
        let o = initial_occupancy(&tiger);
        assert_eq!(o.entries().iter().map(|e| e.1).collect::<Vec<_>>(), vec![0.5, 0.5]);

        let mut file = tiger.to_file();
        file.b0 = vec![0.0, 1.0];
        let o = initial_occupancy(&file.into_model().unwrap());
        assert_eq!(o.len(), 1);
        assert_eq!(o.entries()[0].0.state, 1);
    }

    #[test]
    fn pennies_uniform_step_has_four_quarter_entries() {
        let m = builtin("matching-pennies").unwrap();
        let o = initial_occupancy(&m);
        let next = transition(&m, &o, &profile(&m, &o, &[0.5, 0.5], &[0.5, 0.5])).unwrap();
        assert_eq!(next.depth(), 1);
        assert_eq!(next.len(), 4);
        for (k, p) in next.entries() {
            assert_eq!(k.state, 0);
            assert_abs_diff_eq!(*p, 0.25, epsilon = 1e-15);
        }
        let marg = marginal_private_histories(&next, Player::One);
        assert_eq!(marg.len(), 2);
        for p in marg.values() {
            assert_abs_diff_eq!(*p, 0.5, epsilon = 1e-15);
        }
        assert_eq!(
            marginal_private_histories(&o, Player::Two).into_iter().collect::<Vec<_>>(),
            vec![(History::EMPTY, 1.0)]
        );
    }

    #[test]
    fn deterministic_profile_keeps_one_successor_per_entry() {
        let m = builtin("matching-pennies").unwrap();
        let o = initial_occupancy(&m);
        let next = transition(&m, &o, &profile(&m, &o, &[1.0, 0.0], &[0.0, 1.0])).unwrap();
        assert_eq!(next.len(), o.len());
    }

    #[test]
    fn tiger_listen_splits_085_015() {
        let m = builtin("adversarial-tiger").unwrap();
        let o = initial_occupancy(&m);
        let next = transition(&m, &o, &profile(&m, &o, &[1.0, 0.0, 0.0], &[1.0, 0.0])).unwrap();
        assert_eq!(next.len(), 4);
        for (k, p) in next.entries() {
            let (_, z1) = k.h1.steps(&m, Player::One)[0];
            let expected = if z1 as u32 == k.state { 0.5 * 0.85 } else { 0.5 * 0.15 };
            assert_abs_diff_eq!(*p, expected, epsilon = 1e-12);
        }
        let dump = next.dump(&m);
        assert_eq!(dump.lines().count(), 4);
        assert!(dump.starts_with("tiger-left\ta0z0\ta0z0\t0.425"), "{dump}");
    }

    #[test]
    fn expected_reward_examples() {
        let m = builtin("matching-pennies").unwrap();
        let o = initial_occupancy(&m);
        assert_abs_diff_eq!(
            expected_reward(&m, &o, &profile(&m, &o, &[0.5, 0.5], &[0.5, 0.5])).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            expected_reward(&m, &o, &profile(&m, &o, &[1.0, 0.0], &[1.0, 0.0])).unwrap(),
            1.0
        );
        let t = builtin("adversarial-tiger").unwrap();
        let o = initial_occupancy(&t);
        let r = expected_reward(&t, &o, &profile(&t, &o, &[0.0, 1.0, 0.0], &[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r, 0.5 * (t.reward(0, 1, 0) + t.reward(1, 1, 0)), epsilon = 1e-15);
    }

    #[test]
    fn missing_rule_is_an_error() {
        let m = builtin("matching-pennies").unwrap();
        let o = initial_occupancy(&m);
        let next = transition(&m, &o, &profile(&m, &o, &[0.5, 0.5], &[0.5, 0.5])).unwrap();
        let d = profile(&m, &o, &[0.5, 0.5], &[0.5, 0.5]);
        assert!(matches!(transition(&m, &next, &d), Err(Error::DepthMismatch(1, 0))));
        let empty1 = DecisionRule::new(&m, Player::One, 1, BTreeMap::new()).unwrap();
        let d = DecisionRuleProfile::new(empty1, rule(&m, &next, Player::Two, &[0.5, 0.5])).unwrap();
        assert!(matches!(expected_reward(&m, &next, &d), Err(Error::MissingRule { .. })));
    }

    #[test]
    fn l1_distance_examples() {
        let key = |s| OccKey {
            state: s,
            h1: History::EMPTY,
            h2: History::EMPTY,
        };
        let a = OccupancyState::from_entries(0, vec![(key(0), 0.7), (key(1), 0.3)]).unwrap();
        let b = OccupancyState::from_entries(0, vec![(key(0), 0.4), (key(1), 0.6)]).unwrap();
        assert_abs_diff_eq!(l1_distance(&a, &b).unwrap(), 0.6, epsilon = 1e-15);
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        let c = OccupancyState::from_entries(0, vec![(key(2), 1.0)]).unwrap();
        assert_abs_diff_eq!(l1_distance(&a, &c).unwrap(), 2.0);
        let m = builtin("matching-pennies").unwrap();
        let o = initial_occupancy(&m);
        let next = transition(&m, &o, &profile(&m, &o, &[0.5, 0.5], &[0.5, 0.5])).unwrap();
        assert!(matches!(l1_distance(&o, &next), Err(Error::DepthMismatch(0, 1))));
    }

    #[test]
    fn mixing_and_cache_equality() {
        let key = |s| OccKey {
            state: s,
            h1: History::EMPTY,
            h2: History::EMPTY,
        };
        let a = OccupancyState::from_entries(0, vec![(key(0), 1.0)]).unwrap();
        let b = OccupancyState::from_entries(0, vec![(key(1), 1.0)]).unwrap();
        let mid = a.mix(&b, 0.25).unwrap();
        assert_abs_diff_eq!(mid.get(&key(0)), 0.25);
        assert_abs_diff_eq!(mid.get(&key(1)), 0.75);
        let nudged = OccupancyState::from_entries(0, vec![(key(0), 0.25 + 1e-13), (key(1), 0.75 - 1e-13)]).unwrap();
        assert!(mid.approx_eq(&nudged));
        assert!(!mid.approx_eq(&a));
    }
}
