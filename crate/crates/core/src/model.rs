//! zs-POSG models: the tuple of states, per-player actions and
//! observations, joint dynamics, reward to player 1, horizon, discount
//! and initial belief.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;

/// The two players. Player 1 maximizes, player 2 minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Player> {
        match n {
            1 => Some(Player::One),
            2 => Some(Player::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    pub fn finite(self) -> Option<usize> {
        match self {
            Horizon::Finite(h) => Some(h),
            Horizon::Infinite => None,
        }
    }
}

/// One successor outcome `(s', z1, z2)` with its probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub z1: usize,
    pub z2: usize,
    pub p: f64,
}

/// A validated zs-POSG. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct PosgModel {
    name: String,
    states: Vec<String>,
    actions: [Vec<String>; 2],
    observations: [Vec<String>; 2],
    /// Indexed by `(s * |A1| + a1) * |A2| + a2`.
    transition: Vec<Vec<Outcome>>,
    reward: Vec<f64>,
    horizon: Horizon,
    gamma: f64,
    b0: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardBounds {
    pub r_min: f64,
    pub r_max: f64,
    pub lambda_r: f64,
}

impl PosgModel {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn num_states(&self) -> usize {
        self.states.len()
    }
    pub fn num_actions(&self, p: Player) -> usize {
        self.actions[p.index()].len()
    }
    pub fn num_observations(&self, p: Player) -> usize {
        self.observations[p.index()].len()
    }
    pub fn state_names(&self) -> &[String] {
        &self.states
    }
    pub fn action_names(&self, p: Player) -> &[String] {
        &self.actions[p.index()]
    }
    pub fn observation_names(&self, p: Player) -> &[String] {
        &self.observations[p.index()]
    }
    pub fn horizon(&self) -> Horizon {
        self.horizon
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn b0(&self) -> &[f64] {
        &self.b0
    }

    #[inline]
    fn idx(&self, s: usize, a1: usize, a2: usize) -> usize {
        (s * self.actions[0].len() + a1) * self.actions[1].len() + a2
    }

    #[inline]
    pub fn outcomes(&self, s: usize, a1: usize, a2: usize) -> &[Outcome] {
        &self.transition[self.idx(s, a1, a2)]
    }

    #[inline]
    pub fn reward(&self, s: usize, a1: usize, a2: usize) -> f64 {
        self.reward[self.idx(s, a1, a2)]
    }

    /// Number of (action, observation) pairs a player's history can branch into.
    pub fn branching(&self, p: Player) -> usize {
        self.num_actions(p) * self.num_observations(p)
    }

    /// Same model with a different horizon.
    pub fn with_horizon(&self, horizon: Horizon) -> PosgModel {
        let mut m = self.clone();
        m.horizon = horizon;
        m
    }

    pub fn reward_bounds(&self) -> RewardBounds {
        let r_min = self.reward.iter().copied().fold(f64::INFINITY, f64::min);
        let r_max = self.reward.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        RewardBounds {
            r_min,
            r_max,
            lambda_r: (r_max - r_min) / 2.0,
        }
    }

    /// Builds a model from raw tables and validates every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        states: Vec<String>,
        actions: [Vec<String>; 2],
        observations: [Vec<String>; 2],
        mut transition: Vec<Vec<Outcome>>,
        reward: Vec<f64>,
        horizon: Horizon,
        gamma: f64,
        b0: Vec<f64>,
    ) -> Result<PosgModel> {
        for row in &mut transition {
            row.sort_by_key(|o| (o.next, o.z1, o.z2));
        }
        let m = PosgModel {
            name: name.into(),
            states,
            actions,
            observations,
            transition,
            reward,
            horizon,
            gamma,
            b0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let v = |msg: String| Err(Error::Validation(msg));
        let ns = self.states.len();
        let (na1, na2) = (self.actions[0].len(), self.actions[1].len());
        let (nz1, nz2) = (self.observations[0].len(), self.observations[1].len());
        if ns == 0 || na1 == 0 || na2 == 0 || nz1 == 0 || nz2 == 0 {
            return v("states, actions and observations must all be nonempty".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return v(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if self.horizon == Horizon::Finite(0) {
            return v("horizon must be positive".into());
        }
        if self.b0.len() != ns {
            return v(format!("b0 has {} entries for {} states", self.b0.len(), ns));
        }
        if let Some((s, p)) = self.b0.iter().enumerate().find(|(_, p)| !(**p >= 0.0)) {
            return v(format!("b0({s}) = {p} is negative"));
        }
        let total: f64 = self.b0.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return v(format!("b0 sums to {total}"));
        }
        let n = ns * na1 * na2;
        if self.transition.len() != n || self.reward.len() != n {
            return v("transition/reward tables have the wrong size".into());
        }
        for s in 0..ns {
            for a1 in 0..na1 {
                for a2 in 0..na2 {
                    let row = self.outcomes(s, a1, a2);
                    let mut sum = 0.0;
                    for o in row {
                        if o.next >= ns || o.z1 >= nz1 || o.z2 >= nz2 {
                            return v(format!(
                                "transition({s},{a1},{a2}) references out-of-range outcome ({}, {}, {})",
                                o.next, o.z1, o.z2
                            ));
                        }
                        if !(0.0..=1.0).contains(&o.p) {
                            return v(format!(
                                "transition({s},{a1},{a2}) has probability {} outside [0,1]",
                                o.p
                            ));
                        }
                        sum += o.p;
                    }
                    if (sum - 1.0).abs() > SUM_TOL {
                        return v(format!("transition({s},{a1},{a2}) sums to {sum}"));
                    }
                    let r = self.reward(s, a1, a2);
                    if !r.is_finite() {
                        return v(format!("reward({s},{a1},{a2}) is not finite"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<PosgModel> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_model()
    }

    pub fn to_file(&self) -> ModelFile {
        let mut transition = Vec::new();
        let mut reward = Vec::new();
        for s in 0..self.num_states() {
            for a1 in 0..self.actions[0].len() {
                for a2 in 0..self.actions[1].len() {
                    let mut next: Vec<NextRecord> = self
                        .outcomes(s, a1, a2)
                        .iter()
                        .map(|o| NextRecord {
                            s2: o.next,
                            z1: o.z1,
                            z2: o.z2,
                            p: o.p,
                        })
                        .collect();
                    next.sort_by_key(|n| (n.s2, n.z1, n.z2));
                    transition.push(TransitionRecord { s, a1, a2, next });
                    reward.push(RewardRecord {
                        s,
                        a1,
                        a2,
                        r: self.reward(s, a1, a2),
                    });
                }
            }
        }
        ModelFile {
            name: Some(self.name.clone()),
            states: self.states.clone(),
            actions: self.actions.clone(),
            observations: self.observations.clone(),
            transition,
            reward,
            horizon: match self.horizon {
                Horizon::Finite(h) => HorizonField::Steps(h),
                Horizon::Infinite => HorizonField::Named("infinite".into()),
            },
            gamma: self.gamma,
            b0: self.b0.clone(),
        }
    }

    /// Canonical JSON rendering: records sorted, every reward explicit.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_canonical_json() + "\n")?;
        Ok(())
    }
}

/// Reads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<PosgModel> {
    let text = std::fs::read_to_string(path)?;
    PosgModel::from_json_str(&text)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub states: Vec<String>,
    pub actions: [Vec<String>; 2],
    pub observations: [Vec<String>; 2],
    pub transition: Vec<TransitionRecord>,
    #[serde(default)]
    pub reward: Vec<RewardRecord>,
    pub horizon: HorizonField,
    pub gamma: f64,
    pub b0: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRecord {
    pub s: usize,
    pub a1: usize,
    pub a2: usize,
    pub next: Vec<NextRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NextRecord {
    pub s2: usize,
    pub z1: usize,
    pub z2: usize,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardRecord {
    pub s: usize,
    pub a1: usize,
    pub a2: usize,
    pub r: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HorizonField {
    Steps(usize),
    Named(String),
}

impl ModelFile {
    pub fn into_model(self) -> Result<PosgModel> {
        let ns = self.states.len();
        let (na1, na2) = (self.actions[0].len(), self.actions[1].len());
        let n = ns * na1 * na2;
        let idx = |s: usize, a1: usize, a2: usize| (s * na1 + a1) * na2 + a2;
        let in_range = |s: usize, a1: usize, a2: usize| s < ns && a1 < na1 && a2 < na2;

        let mut transition: Vec<Option<Vec<Outcome>>> = vec![None; n];
        for rec in self.transition {
            if !in_range(rec.s, rec.a1, rec.a2) {
                return Err(Error::Validation(format!(
                    "transition record ({},{},{}) is out of range",
                    rec.s, rec.a1, rec.a2
                )));
            }
            let slot = &mut transition[idx(rec.s, rec.a1, rec.a2)];
            if slot.is_some() {
                return Err(Error::Validation(format!(
                    "transition({},{},{}) is listed twice",
                    rec.s, rec.a1, rec.a2
                )));
            }
            *slot = Some(
                rec.next
                    .into_iter()
                    .map(|n| Outcome {
                        next: n.s2,
                        z1: n.z1,
                        z2: n.z2,
                        p: n.p,
                    })
                    .collect(),
            );
        }
        let mut table = Vec::with_capacity(n);
        for s in 0..ns {
            for a1 in 0..na1 {
                for a2 in 0..na2 {
                    match transition[idx(s, a1, a2)].take() {
                        Some(row) => table.push(row),
                        None => {
                            return Err(Error::Validation(format!(
                                "transition({s},{a1},{a2}) is not listed"
                            )))
                        }
                    }
                }
            }
        }

        let mut reward = vec![0.0; n];
        for rec in self.reward {
            if !in_range(rec.s, rec.a1, rec.a2) {
                return Err(Error::Validation(format!(
                    "reward record ({},{},{}) is out of range",
                    rec.s, rec.a1, rec.a2
                )));
            }
            reward[idx(rec.s, rec.a1, rec.a2)] = rec.r;
        }

        let horizon = match self.horizon {
            HorizonField::Steps(h) => Horizon::Finite(h),
            HorizonField::Named(ref s) if s == "infinite" => Horizon::Infinite,
            HorizonField::Named(s) => {
                return Err(Error::Parse(format!("horizon must be an integer or \"infinite\", got {s:?}")))
            }
        };

        PosgModel::new(
            self.name.unwrap_or_else(|| "unnamed".into()),
            self.states,
            self.actions,
            self.observations,
            table,
            reward,
            horizon,
            self.gamma,
            self.b0,
        )
    }
}

/// A one-state, one-step game with the given payoff matrix (rows are
/// player 1's actions) and a single dummy observation per player.
pub fn matrix_game(name: &str, payoff: &[Vec<f64>]) -> Result<PosgModel> {
    let rows = payoff.len();
    let cols = payoff.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || payoff.iter().any(|r| r.len() != cols) {
        return Err(Error::Validation("payoff matrix must be rectangular and nonempty".into()));
    }
    let names = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    PosgModel::new(
        name,
        vec!["s0".into()],
        [names("r", rows), names("c", cols)],
        [vec!["none".into()], vec!["none".into()]],
        vec![vec![Outcome { next: 0, z1: 0, z2: 0, p: 1.0 }]; rows * cols],
        payoff.iter().flatten().copied().collect(),
        Horizon::Finite(1),
        0.5,
        vec![1.0],
    )
}

pub const BUILTIN_NAMES: [&str; 3] = ["matching-pennies", "matching-pennies-2step", "adversarial-tiger"];

/// Returns one of the hardcoded instances.
pub fn builtin(name: &str) -> Result<PosgModel> {
    match name {
        "matching-pennies" => Ok(matching_pennies(1)),
        "matching-pennies-2step" => Ok(matching_pennies_2step()),
        "adversarial-tiger" => Ok(adversarial_tiger()),
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn pennies_reward(a1: usize, a2: usize) -> f64 {
    if a1 == a2 {
        1.0
    } else {
        -1.0
    }
}

fn matching_pennies(h: usize) -> PosgModel {
    let mut transition = Vec::new();
    let mut reward = Vec::new();
    for a1 in 0..2 {
        for a2 in 0..2 {
            transition.push(vec![Outcome {
                next: 0,
                z1: 0,
                z2: 0,
                p: 1.0,
            }]);
            reward.push(pennies_reward(a1, a2));
        }
    }
    PosgModel::new(
        "matching-pennies",
        names(&["s0"]),
        [names(&["heads", "tails"]), names(&["heads", "tails"])],
        [names(&["none"]), names(&["none"])],
        transition,
        reward,
        Horizon::Finite(h),
        0.5,
        vec![1.0],
    )
    .expect("builtin is valid")
}

/// Each player sees the opponent's last coin correctly with probability 0.8.
fn matching_pennies_2step() -> PosgModel {
    const ACCURACY: f64 = 0.8;
    let seen = |actual: usize, z: usize| if z == actual { ACCURACY } else { 1.0 - ACCURACY };
    let mut transition = Vec::new();
    let mut reward = Vec::new();
    for a1 in 0..2 {
        for a2 in 0..2 {
            let mut row = Vec::new();
            for z1 in 0..2 {
                for z2 in 0..2 {
                    row.push(Outcome {
                        next: 0,
                        z1,
                        z2,
                        p: seen(a2, z1) * seen(a1, z2),
                    });
                }
            }
            transition.push(row);
            reward.push(pennies_reward(a1, a2));
        }
    }
    PosgModel::new(
        "matching-pennies-2step",
        names(&["s0"]),
        [names(&["heads", "tails"]), names(&["heads", "tails"])],
        [names(&["saw-heads", "saw-tails"]), names(&["saw-heads", "saw-tails"])],
        transition,
        reward,
        Horizon::Finite(2),
        0.5,
        vec![1.0],
    )
    .expect("builtin is valid")
}

/// Tiger problem where player 2 may scream to spoil player 1's listening.
///
/// States: tiger behind the left or right door. Player 1 listens or opens a
/// door; opening resets the tiger uniformly and yields an uninformative
/// observation. Listening hears the tiger's side with accuracy 0.85, or 0.5
/// when player 2 screams. Each scream costs player 2 a penalty of 0.5 paid to
/// player 1. Player 2 observes nothing.
fn adversarial_tiger() -> PosgModel {
    const LISTEN: usize = 0;
    const OPEN_LEFT: usize = 1;
    const QUIET: usize = 0;
    let mut transition = Vec::new();
    let mut reward = Vec::new();
    for s in 0..2 {
        for a1 in 0..3 {
            for a2 in 0..2 {
                let row = if a1 == LISTEN {
                    let acc = if a2 == QUIET { 0.85 } else { 0.5 };
                    vec![
                        Outcome { next: s, z1: s, z2: 0, p: acc },
                        Outcome { next: s, z1: 1 - s, z2: 0, p: 1.0 - acc },
                    ]
                } else {
                    let mut row = Vec::new();
                    for next in 0..2 {
                        for z1 in 0..2 {
                            row.push(Outcome { next, z1, z2: 0, p: 0.25 });
                        }
                    }
                    row
                };
                transition.push(row);
                let base = match a1 {
                    LISTEN => -0.1,
                    // opening the door the tiger is behind
                    a if (a == OPEN_LEFT) == (s == 0) => -1.0,
                    _ => 1.0,
                };
                let penalty = if a2 == QUIET { 0.0 } else { 0.5 };
                reward.push(base + penalty);
            }
        }
    }
    PosgModel::new(
        "adversarial-tiger",
        names(&["tiger-left", "tiger-right"]),
        [names(&["listen", "open-left", "open-right"]), names(&["quiet", "scream"])],
        [names(&["hear-left", "hear-right"]), names(&["none"])],
        transition,
        reward,
        Horizon::Finite(3),
        0.9,
        vec![0.5, 0.5],
    )
    .expect("builtin is valid")
}
