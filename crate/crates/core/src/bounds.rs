//! Lipschitz value bounds over occupancy states.
//!
//! A bound is the envelope of an initial linear piece (per-state values
//! lifted through the occupancy) and L1 cones added by point-based updates.
//! Upper bounds take the minimum of their pieces, lower bounds the maximum.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::{Horizon, PosgModel};
use crate::occupancy::{l1_sorted, OccupancyState};

/// Cones are pruned each time this many have been inserted at a depth.
pub const PRUNE_EVERY: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LipschitzMode {
    #[default]
    Static,
    Refined,
}

/// Largest discounted return over `n` remaining steps with per-step
/// reward `r`; `None` means an unbounded number of steps.
pub fn discounted_sum(r: f64, gamma: f64, n: Option<usize>) -> f64 {
    match n {
        Some(n) => (1.0 - gamma.powi(n as i32)) / (1.0 - gamma) * r,
        None => r / (1.0 - gamma),
    }
}

/// Per-depth Lipschitz constants of the optimal value function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSchedule {
    pub mode: LipschitzMode,
    pub lambda_r: f64,
    /// `(V_max − V_min) / 2` for the steps left at each depth.
    pub static_lambda: Vec<f64>,
    /// Constants in force; equal to `static_lambda` in static mode.
    pub lambda: Vec<f64>,
}

impl LipschitzSchedule {
    /// Static constants for depths `0..=cap`.
    pub fn new(m: &PosgModel, cap: usize, mode: LipschitzMode) -> LipschitzSchedule {
        let rb = m.reward_bounds();
        let static_lambda: Vec<f64> = (0..=cap)
            .map(|t| {
                let left = match m.horizon() {
                    Horizon::Finite(h) => Some(h.saturating_sub(t)),
                    Horizon::Infinite => None,
                };
                discounted_sum(rb.lambda_r, m.gamma(), left)
            })
            .collect();
        LipschitzSchedule {
            mode,
            lambda_r: rb.lambda_r,
            lambda: static_lambda.clone(),
            static_lambda,
        }
    }

    pub fn at(&self, depth: usize) -> f64 {
        self.lambda.get(depth).copied().unwrap_or(0.0)
    }

    pub fn max_static(&self) -> f64 {
        self.static_lambda.iter().copied().fold(0.0, f64::max)
    }
}

/// One L1 cone: `value ± slope · ‖vertex − o‖₁`.
#[derive(Clone, Debug)]
pub struct Cone {
    pub id: usize,
    pub vertex: Arc<OccupancyState>,
    pub value: f64,
    pub slope: f64,
}

/// An upper or lower Lipschitz approximator for depths `0..=cap`.
///
/// Cloning is cheap: cone lists are shared and copied on write.
#[derive(Clone, Debug)]
pub struct ValueBound {
    side: Side,
    init: Arc<Vec<Vec<f64>>>,
    cones: Vec<Arc<Vec<Cone>>>,
    inserted: Vec<usize>,
    next_id: usize,
}

/// Cooperative (max-max or min-min) MDP values `V_τ(s)` for `τ = 0..=cap`.
///
/// Finite horizons use the steps left at each depth. Infinite horizons use
/// the stationary fixed point at every depth.
pub fn mdp_values(m: &PosgModel, cap: usize, side: Side) -> Vec<Vec<f64>> {
    let ns = m.num_states();
    let pick = |a: f64, b: f64| match side {
        Side::Upper => a.max(b),
        Side::Lower => a.min(b),
    };
    let backup = |next: &[f64]| -> Vec<f64> {
        (0..ns)
            .map(|s| {
                let mut best = match side {
                    Side::Upper => f64::NEG_INFINITY,
                    Side::Lower => f64::INFINITY,
                };
                for a1 in 0..m.num_actions(crate::Player::One) {
                    for a2 in 0..m.num_actions(crate::Player::Two) {
                        let future: f64 = m.outcomes(s, a1, a2).iter().map(|o| o.p * next[o.next]).sum();
                        best = pick(best, m.reward(s, a1, a2) + m.gamma() * future);
                    }
                }
                best
            })
            .collect()
    };
    match m.horizon() {
        Horizon::Finite(h) => {
            let mut by_left = vec![vec![0.0; ns]];
            for _ in 0..h {
                let next = backup(by_left.last().expect("nonempty"));
                by_left.push(next);
            }
            (0..=cap).map(|t| by_left[h.saturating_sub(t)].clone()).collect()
        }
        Horizon::Infinite => {
            let mut v = vec![0.0; ns];
            loop {
                let next = backup(&v);
                let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                v = next;
                if delta <= 1e-13 * (1.0 + v.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
                    break;
                }
            }
            vec![v; cap + 1]
        }
    }
}

/// `max_{τ,s} (V̄_τ(s) − V̲_τ(s))`.
pub fn initial_width(upper: &ValueBound, lower: &ValueBound) -> f64 {
    upper
        .init
        .iter()
        .zip(lower.init.iter())
        .flat_map(|(u, l)| u.iter().zip(l).map(|(a, b)| a - b))
        .fold(0.0, f64::max)
}

impl ValueBound {
    fn from_init(side: Side, init: Vec<Vec<f64>>) -> ValueBound {
        let depths = init.len();
        ValueBound {
            side,
            init: Arc::new(init),
            cones: (0..depths).map(|_| Arc::new(Vec::new())).collect(),
            inserted: vec![0; depths],
            next_id: 0,
        }
    }

    /// Upper bound from the cooperative relaxation (both players maximize).
    pub fn init_upper(m: &PosgModel, cap: usize) -> ValueBound {
        Self::from_init(Side::Upper, mdp_values(m, cap, Side::Upper))
    }

    /// Lower bound from the cooperative relaxation (both players minimize).
    pub fn init_lower(m: &PosgModel, cap: usize) -> ValueBound {
        Self::from_init(Side::Lower, mdp_values(m, cap, Side::Lower))
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Last depth covered.
    pub fn cap(&self) -> usize {
        self.init.len() - 1
    }

    pub fn init_values(&self, depth: usize) -> &[f64] {
        &self.init[depth]
    }

    pub fn cones(&self, depth: usize) -> &[Cone] {
        &self.cones[depth]
    }

    pub fn num_cones(&self) -> usize {
        self.cones.iter().map(|c| c.len()).sum()
    }

    /// Insertions at `depth` so far; changes whenever the envelope may have.
    pub fn version(&self, depth: usize) -> usize {
        self.inserted[depth]
    }

    /// Lipschitz constant of the initial piece: half the range of its values.
    pub fn init_slope(&self, depth: usize) -> f64 {
        let v = &self.init[depth];
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        ((hi - lo) / 2.0).max(0.0)
    }

    /// A Lipschitz constant of the whole envelope at `depth`.
    pub fn envelope_slope(&self, depth: usize) -> f64 {
        self.cones[depth]
            .iter()
            .map(|c| c.slope)
            .fold(self.init_slope(depth), f64::max)
    }

    pub fn init_eval(&self, o: &OccupancyState) -> f64 {
        let v = &self.init[o.depth()];
        o.entries().iter().map(|(k, p)| p * v[k.state as usize]).sum()
    }

    fn cone_eval(&self, c: &Cone, o: &OccupancyState) -> f64 {
        let d = l1_sorted(c.vertex.entries(), o.entries());
        match self.side {
            Side::Upper => c.value + c.slope * d,
            Side::Lower => c.value - c.slope * d,
        }
    }

    fn tighter(&self, a: f64, b: f64) -> f64 {
        match self.side {
            Side::Upper => a.min(b),
            Side::Lower => a.max(b),
        }
    }

    /// Envelope value at `o`.
    pub fn eval(&self, o: &OccupancyState) -> f64 {
        self.cones[o.depth()]
            .iter()
            .fold(self.init_eval(o), |acc, c| self.tighter(acc, self.cone_eval(c, o)))
    }

    /// Adds the cone `⟨o, v, slope⟩`; every `PRUNE_EVERY` insertions at a
    /// depth, cones dominated by another piece are dropped.
    pub fn add_cone(&mut self, o: &OccupancyState, v: f64, slope: f64) {
        let depth = o.depth();
        let cone = Cone {
            id: self.next_id,
            vertex: Arc::new(o.clone()),
            value: v,
            slope,
        };
        self.next_id += 1;
        self.inserted[depth] += 1;
        Arc::make_mut(&mut self.cones[depth]).push(cone);
        if self.inserted[depth].is_multiple_of(PRUNE_EVERY) {
            self.prune(depth);
        }
    }

    /// Removes cone `j` when some piece `i` with slope no steeper already
    /// beats it at its vertex by 1e-12: then `i` beats `j` everywhere.
    pub fn prune(&mut self, depth: usize) {
        let cones = &self.cones[depth];
        let init_slope = self.init_slope(depth);
        let sign = match self.side {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        };
        let mut keep = vec![true; cones.len()];
        for j in 0..cones.len() {
            let cj = &cones[j];
            // sign * value: smaller is tighter on both sides
            let target = sign * cj.value - 1e-12;
            let mut dominated = init_slope <= cj.slope && sign * self.init_eval(&cj.vertex) <= target;
            for (i, ci) in cones.iter().enumerate() {
                if dominated {
                    break;
                }
                if i == j || !keep[i] || ci.slope > cj.slope {
                    continue;
                }
                dominated = sign * self.cone_eval(ci, &cj.vertex) <= target;
            }
            if dominated {
                keep[j] = false;
            }
        }
        if keep.iter().all(|k| *k) {
            return;
        }
        let mut it = keep.iter();
        Arc::make_mut(&mut self.cones[depth]).retain(|_| *it.next().expect("same length"));
    }

    /// `max_s V_τ(s)` and cone summits for an upper bound (`min` for a lower
    /// one): an outer estimate of the envelope's range at `depth`.
    pub fn extreme(&self, depth: usize) -> f64 {
        let values = self.init[depth].iter().copied().chain(self.cones[depth].iter().map(|c| c.value));
        match self.side {
            Side::Upper => values.fold(f64::NEG_INFINITY, f64::max),
            Side::Lower => values.fold(f64::INFINITY, f64::min),
        }
    }

    /// CSV rows `depth,kind,vertex_id,value,slope`; init rows use the state
    /// index as vertex id.
    pub fn dump_csv(&self) -> String {
        let mut out = String::from("depth,kind,vertex_id,value,slope\n");
        for (d, vals) in self.init.iter().enumerate() {
            let slope = self.init_slope(d);
            for (s, v) in vals.iter().enumerate() {
                let _ = writeln!(out, "{d},init,{s},{v},{slope}");
            }
            for c in self.cones[d].iter() {
                let _ = writeln!(out, "{d},cone,{},{},{}", c.id, c.value, c.slope);
            }
        }
        out
    }
}

/// Refined constants `λ^{LU}_τ = (U_max_τ − L_min_τ)/2`, capped by the static
/// value and by the constants already in force so they never increase.
pub fn refresh_refined_constants(
    upper: &ValueBound,
    lower: &ValueBound,
    schedule: &LipschitzSchedule,
) -> LipschitzSchedule {
    let mut next = schedule.clone();
    if schedule.mode != LipschitzMode::Refined {
        return next;
    }
    for t in 0..next.lambda.len().min(upper.cap() + 1) {
        let refined = ((upper.extreme(t) - lower.extreme(t)) / 2.0).max(0.0);
        next.lambda[t] = next.lambda[t].min(refined).min(next.static_lambda[t]);
    }
    next
}
