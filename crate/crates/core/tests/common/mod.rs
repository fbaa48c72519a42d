#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use zsomg::occupancy::{initial_occupancy, marginal_private_histories, transition};
use zsomg::oracle::Golden;
use zsomg::strategy::{DecisionRule, DecisionRuleProfile};
use zsomg::{OccupancyState, Player, PosgModel};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> Golden {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// A random distribution over `n` actions; every third one is a vertex.
pub fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if rng.gen_ratio(1, 3) {
        let mut d = vec![0.0; n];
        d[rng.gen_range(0..n)] = 1.0;
        return d;
    }
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn random_rule(rng: &mut ChaCha8Rng, m: &PosgModel, o: &OccupancyState, p: Player) -> DecisionRule {
    let na = m.num_actions(p);
    let table: BTreeMap<_, _> = marginal_private_histories(o, p)
        .into_keys()
        .map(|h| (h, random_dist(rng, na)))
        .collect();
    DecisionRule::new(m, p, o.depth(), table).unwrap()
}

pub fn random_profile(rng: &mut ChaCha8Rng, m: &PosgModel, o: &OccupancyState) -> DecisionRuleProfile {
    DecisionRuleProfile::new(random_rule(rng, m, o, Player::One), random_rule(rng, m, o, Player::Two)).unwrap()
}

/// An occupancy state reached from `o₀` by `depth` random profiles.
pub fn random_occupancy(rng: &mut ChaCha8Rng, m: &PosgModel, depth: usize) -> OccupancyState {
    let mut o = initial_occupancy(m);
    for _ in 0..depth {
        let d = random_profile(rng, m, &o);
        o = transition(m, &o, &d).unwrap();
    }
    o
}
