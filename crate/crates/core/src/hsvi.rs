//! Heuristic search value iteration over occupancy states.
//!
//! Each trial descends from `o₀` while the bound width exceeds the depth
//! threshold, following player 1's maximin rule of the upper-bound game and
//! player 2's minimax rule of the lower-bound game, and adds one cone to
//! each bound at every visited state on the way down and on the way back.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{initial_width, refresh_refined_constants, LipschitzMode, LipschitzSchedule, Side, ValueBound};
use crate::error::{Error, Result};
use crate::localgame::{LocalConfig, LocalGame, LocalSolution, DEFAULT_BUDGET};
use crate::model::{Horizon, Player, PosgModel};
use crate::occupancy::{initial_occupancy, l1_distance, transition, History, OccupancyState};
use crate::par::Execution;
use crate::strategy::{BehavioralStrategy, DecisionRule, DecisionRuleProfile};

/// Default cap on the number of trials.
pub const DEFAULT_MAX_TRIALS: usize = 10_000;

/// Points sampled around a state for each ball-coverage check.
const COVERAGE_SAMPLES: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    /// Ball radius; half the admissible maximum when unset.
    pub rho: Option<f64>,
    /// Local-game tolerance; `epsilon / 10` when unset.
    pub local_tol: Option<f64>,
    pub max_trials: usize,
    pub lipschitz: LipschitzMode,
    /// Seeds the sampling of the ball-coverage monitor.
    pub seed: u64,
    pub exec: Execution,
    /// Outer node budget of each local solve.
    pub local_budget: usize,
    /// Keep every visited occupancy state with its bounds.
    pub record_visits: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 0.01,
            rho: None,
            local_tol: None,
            max_trials: DEFAULT_MAX_TRIALS,
            lipschitz: LipschitzMode::Static,
            seed: 0,
            exec: Execution::default(),
            local_budget: DEFAULT_BUDGET,
            record_visits: false,
        }
    }
}

impl SolverConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SolverConfig {
            epsilon,
            ..Self::default()
        }
    }

    pub fn local_tol(&self) -> f64 {
        self.local_tol.unwrap_or(self.epsilon / 10.0)
    }
}

/// `thr(τ)` from `thr(0) = ε` and `γ·thr(τ) = thr(τ−1) − 2ρλ_τ`.
pub fn threshold(epsilon: f64, gamma: f64, rho: f64, lambda: &[f64], tau: usize) -> f64 {
    let mut thr = epsilon;
    for t in 1..=tau {
        let l = lambda.get(t).copied().unwrap_or(0.0);
        thr = (thr - 2.0 * rho * l) / gamma;
    }
    thr
}

/// Open upper limit `(1−γ)ε/(2λ)` on ρ; infinite when `λ = 0`.
pub fn max_rho(epsilon: f64, gamma: f64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 - gamma) * epsilon / (2.0 * lambda)
    }
}

/// Longest possible trial: `⌈log_γ((ε − c)/(W − c))⌉` with
/// `c = 2ρλ/(1−γ)`, and 0 when `W ≤ ε`.
pub fn t_max(epsilon: f64, gamma: f64, rho: f64, lambda: f64, width: f64) -> usize {
    if width <= epsilon {
        return 0;
    }
    if gamma <= 0.0 {
        return 1;
    }
    let c = 2.0 * rho * lambda / (1.0 - gamma);
    let ratio = (epsilon - c) / (width - c);
    // tiny slack so exact powers of γ do not round up a step
    let steps = (ratio.ln() / gamma.ln() - 1e-9).ceil();
    steps.max(1.0) as usize
}

/// Derived constants of a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConstants {
    pub epsilon: f64,
    pub rho: f64,
    pub max_rho: f64,
    pub local_tol: f64,
    /// Largest static Lipschitz constant, used for `ρ` and `t_max`.
    pub lambda: f64,
    /// Initial width `W`.
    pub width: f64,
    pub t_max: usize,
    /// Deepest depth the bounds cover: `min(H, t_max)`.
    pub h_max: usize,
}

/// Checks the configuration against `m` and derives the run constants.
pub fn plan(m: &PosgModel, cfg: &SolverConfig) -> Result<RunConstants> {
    let gamma = m.gamma();
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("discount {gamma} must lie in [0, 1)")));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon {} must be positive", cfg.epsilon)));
    }
    let local_tol = cfg.local_tol();
    if !(local_tol > 0.0 && local_tol.is_finite()) {
        return Err(Error::Config(format!("local tolerance {local_tol} must be positive")));
    }
    if cfg.max_trials == 0 {
        return Err(Error::Config("max_trials must be positive".into()));
    }
    // stationary values are the same at every depth, so depth 1 is enough
    let probe = m.horizon().finite().unwrap_or(1);
    let lambda = LipschitzSchedule::new(m, probe, LipschitzMode::Static).max_static();
    let width = initial_width(&ValueBound::init_upper(m, probe), &ValueBound::init_lower(m, probe));
    let limit = max_rho(cfg.epsilon, gamma, lambda);
    let rho = match cfg.rho {
        Some(r) => r,
        None if limit.is_finite() => 0.5 * limit,
        None => 0.0,
    };
    if cfg.rho.is_some() && !(rho > 0.0 && rho < limit) {
        return Err(Error::Config(format!("rho {rho} must lie in (0, {limit})")));
    }
    let t = t_max(cfg.epsilon, gamma, rho, lambda, width);
    let h_max = match m.horizon() {
        Horizon::Finite(h) => h.min(t),
        Horizon::Infinite => t,
    };
    Ok(RunConstants {
        epsilon: cfg.epsilon,
        rho,
        max_rho: limit,
        local_tol,
        lambda,
        width,
        t_max: t,
        h_max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub trial: usize,
    pub depth: usize,
    pub width: f64,
    pub threshold: f64,
    pub u_value: f64,
    pub l_value: f64,
    pub occupancy_support: usize,
}

/// The deepest backward update of a trial, where the contraction law applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    pub trial: usize,
    pub depth: usize,
    pub width: f64,
    /// `thr(τ) − 2ρλ_{τ+1} + 2·local_tol`.
    pub limit: f64,
}

impl ContractionCheck {
    pub fn violated(&self) -> bool {
        self.width > self.limit + 1e-9
    }
}

/// A visited occupancy state with both bounds right after its update.
#[derive(Clone, Debug)]
pub struct Visit {
    pub trial: usize,
    pub occupancy: Arc<OccupancyState>,
    pub upper: f64,
    pub lower: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub converged: bool,
    pub trials: usize,
    pub max_trial_len: usize,
    /// Length of each trial.
    pub trial_lengths: Vec<usize>,
    pub constants: RunConstants,
    pub trace: Vec<TraceRow>,
    /// Width at `o₀` after each trial.
    pub widths: Vec<f64>,
    pub contraction: Vec<ContractionCheck>,
    pub coverage_checks: usize,
    pub coverage_violations: usize,
    /// Constants in force during each trial.
    pub lambda_history: Vec<Vec<f64>>,
    pub schedule: LipschitzSchedule,
    pub local_budget_hits: usize,
    pub local_solves: usize,
    pub visits: Vec<Visit>,
    pub upper_bound: ValueBound,
    pub lower_bound: ValueBound,
    pub wallclock_ms: u128,
}

impl SolveResult {
    pub fn contraction_violations(&self) -> usize {
        self.contraction.iter().filter(|c| c.violated()).count()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            lower: self.lower,
            upper: self.upper,
            gap: self.gap,
            converged: self.converged,
            trials: self.trials,
            max_trial_len: self.max_trial_len,
            t_max: self.constants.t_max,
            rho: self.constants.rho,
            local_tol: self.constants.local_tol,
            contraction_violations: self.contraction_violations(),
            coverage_violations: self.coverage_violations,
            local_budget_hits: self.local_budget_hits,
            cones_upper: self.upper_bound.num_cones(),
            cones_lower: self.lower_bound.num_cones(),
            wallclock_ms: self.wallclock_ms,
        }
    }

    /// CSV `trial,depth,width,threshold,u_value,l_value,occupancy_support`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("trial,depth,width,threshold,u_value,l_value,occupancy_support\n");
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.trial, r.depth, r.width, r.threshold, r.u_value, r.l_value, r.occupancy_support
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub converged: bool,
    pub trials: usize,
    pub max_trial_len: usize,
    pub t_max: usize,
    pub rho: f64,
    pub local_tol: f64,
    pub contraction_violations: usize,
    pub coverage_violations: usize,
    pub local_budget_hits: usize,
    pub cones_upper: usize,
    pub cones_lower: usize,
    pub wallclock_ms: u128,
}

/// Local solutions at one state and the next-depth versions they used.
struct Solved {
    upper: LocalSolution,
    lower: LocalSolution,
    versions: (usize, usize),
}

struct Run<'a> {
    m: &'a PosgModel,
    cfg: &'a SolverConfig,
    k: RunConstants,
    local: LocalConfig,
    upper: ValueBound,
    lower: ValueBound,
    schedule: LipschitzSchedule,
    rng: ChaCha8Rng,
    trial: usize,
    trial_len: usize,
    trace: Vec<TraceRow>,
    contraction: Vec<ContractionCheck>,
    coverage_checks: usize,
    coverage_violations: usize,
    budget_hits: usize,
    solves: usize,
    visits: Vec<Visit>,
}

impl Run<'_> {
    fn threshold(&self, tau: usize) -> f64 {
        threshold(self.k.epsilon, self.m.gamma(), self.k.rho, &self.schedule.lambda, tau)
    }

    fn width(&self, o: &OccupancyState) -> f64 {
        self.upper.eval(o) - self.lower.eval(o)
    }

    fn solve_local(&mut self, o: &OccupancyState) -> Result<Solved> {
        let depth = o.depth();
        let versions = (self.upper.version(depth + 1), self.lower.version(depth + 1));
        let (m, local) = (self.m, &self.local);
        let (up, lo) = (&self.upper, &self.lower);
        let (u, l) = self.cfg.exec.join(
            || LocalGame::new(m, o, up)?.solve_maximin(local),
            || LocalGame::new(m, o, lo)?.solve_minimax(local),
        );
        let (upper, lower) = (u?, l?);
        self.solves += 2;
        for s in [&upper, &lower] {
            if s.budget_exhausted {
                self.budget_hits += 1;
                log::warn!(
                    "local solve at depth {depth} hit its budget with gap {:.3e} (tolerance {:.3e})",
                    s.gap(),
                    self.local.tol
                );
            }
        }
        Ok(Solved {
            upper,
            lower,
            versions,
        })
    }

    /// Adds the cones of `s` at `o`, never looser than the current envelope.
    fn insert(&mut self, o: &OccupancyState, s: &Solved) {
        let slope = self.schedule.at(o.depth());
        let u = s.upper.value_hi.min(self.upper.eval(o));
        let l = s.lower.value_lo.max(self.lower.eval(o));
        if !has_cone(&self.upper, o, u, slope) {
            self.upper.add_cone(o, u, slope);
        }
        if !has_cone(&self.lower, o, l, slope) {
            self.lower.add_cone(o, l, slope);
        }
        if self.cfg.record_visits {
            self.visits.push(Visit {
                trial: self.trial,
                occupancy: Arc::new(o.clone()),
                upper: self.upper.eval(o),
                lower: self.lower.eval(o),
            });
        }
    }

    fn explore(&mut self, o: &OccupancyState) -> Result<bool> {
        let depth = o.depth();
        let thr = self.threshold(depth);
        let width = self.width(o);
        self.trace.push(TraceRow {
            trial: self.trial,
            depth,
            width,
            threshold: thr,
            u_value: self.upper.eval(o),
            l_value: self.lower.eval(o),
            occupancy_support: o.len(),
        });
        self.trial_len = self.trial_len.max(depth);
        if width <= thr || depth >= self.k.h_max {
            return Ok(false);
        }
        let first = self.solve_local(o)?;
        self.insert(o, &first);
        let d = DecisionRuleProfile::new(first.upper.beta1.clone(), first.lower.beta2.clone())?;
        let next = transition(self.m, o, &d)?;
        let child_updated = self.explore(&next)?;
        let unchanged = first.versions == (self.upper.version(depth + 1), self.lower.version(depth + 1));
        // the games only change through the next depth's bounds
        let second = if unchanged { first } else { self.solve_local(o)? };
        self.insert(o, &second);
        if !child_updated {
            let limit = thr - 2.0 * self.k.rho * self.schedule.at(depth + 1) + 2.0 * self.k.local_tol;
            let check = ContractionCheck {
                trial: self.trial,
                depth,
                width: self.width(o),
                limit,
            };
            if check.violated() {
                log::warn!(
                    "contraction missed at depth {depth}: width {:.6} > {:.6}",
                    check.width,
                    check.limit
                );
            }
            self.contraction.push(check);
            self.check_coverage(o, thr);
        }
        Ok(true)
    }

    /// Samples points within ρ of `o` and checks their width against
    /// `thr(τ) + 2·local_tol`.
    fn check_coverage(&mut self, o: &OccupancyState, thr: f64) {
        if self.k.rho <= 0.0 {
            return;
        }
        for _ in 0..COVERAGE_SAMPLES {
            let q = random_on_support(&mut self.rng, o);
            let dist = l1_distance(o, &q).unwrap_or(0.0);
            if dist <= 0.0 {
                continue;
            }
            let alpha = (self.k.rho * self.rng.gen::<f64>() / dist).min(1.0);
            let Ok(p) = q.mix(o, alpha) else { continue };
            self.coverage_checks += 1;
            if self.width(&p) > thr + 2.0 * self.k.local_tol + 1e-9 {
                self.coverage_violations += 1;
            }
        }
    }
}

/// Whether an existing cone at `o` is already at least as tight and as flat.
fn has_cone(b: &ValueBound, o: &OccupancyState, v: f64, slope: f64) -> bool {
    b.cones(o.depth()).iter().any(|c| {
        let tight = match b.side() {
            Side::Upper => c.value <= v,
            Side::Lower => c.value >= v,
        };
        tight && c.slope <= slope && c.vertex.approx_eq(o)
    })
}

fn random_on_support(rng: &mut ChaCha8Rng, o: &OccupancyState) -> OccupancyState {
    let raw: Vec<f64> = o.entries().iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    let entries = o.entries().iter().zip(&raw).map(|((k, _), w)| (*k, w / total)).collect();
    OccupancyState::from_entries(o.depth(), entries).expect("normalized")
}

/// Runs trials from `o₀` until the gap there is at most `ε` or the trial
/// budget runs out.
pub fn solve(m: &PosgModel, cfg: &SolverConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let k = plan(m, cfg)?;
    let local = LocalConfig {
        tol: k.local_tol,
        budget: cfg.local_budget,
        inner_budget: cfg.local_budget,
        exec: cfg.exec,
        trace: false,
    };
    let mut run = Run {
        m,
        cfg,
        upper: ValueBound::init_upper(m, k.h_max),
        lower: ValueBound::init_lower(m, k.h_max),
        schedule: LipschitzSchedule::new(m, k.h_max, cfg.lipschitz),
        k,
        local,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        trial: 0,
        trial_len: 0,
        trace: Vec::new(),
        contraction: Vec::new(),
        coverage_checks: 0,
        coverage_violations: 0,
        budget_hits: 0,
        solves: 0,
        visits: Vec::new(),
    };
    let o0 = initial_occupancy(m);
    let mut widths = Vec::new();
    let mut lengths = Vec::new();
    let mut lambda_history = Vec::new();
    while run.width(&o0) > run.k.epsilon && run.trial < cfg.max_trials {
        run.trial += 1;
        run.trial_len = 0;
        lambda_history.push(run.schedule.lambda.clone());
        run.explore(&o0)?;
        lengths.push(run.trial_len);
        widths.push(run.width(&o0));
        log::debug!("trial {} length {} width {:.6}", run.trial, run.trial_len, run.width(&o0));
        run.schedule = refresh_refined_constants(&run.upper, &run.lower, &run.schedule);
    }
    let (upper, lower) = (run.upper.eval(&o0), run.lower.eval(&o0));
    let gap = upper - lower;
    Ok(SolveResult {
        lower,
        upper,
        gap,
        converged: gap <= run.k.epsilon,
        trials: run.trial,
        max_trial_len: lengths.iter().copied().max().unwrap_or(0),
        trial_lengths: lengths,
        constants: run.k,
        trace: run.trace,
        widths,
        contraction: run.contraction,
        coverage_checks: run.coverage_checks,
        coverage_violations: run.coverage_violations,
        lambda_history,
        schedule: run.schedule,
        local_budget_hits: run.budget_hits,
        local_solves: run.solves,
        visits: run.visits,
        upper_bound: run.upper,
        lower_bound: run.lower,
        wallclock_ms: start.elapsed().as_millis(),
    })
}

/// Local-game solutions at `o` for `upper` and `lower` bounds; exposed so
/// that a single update can be inspected in isolation.
pub fn update_at(
    m: &PosgModel,
    o: &OccupancyState,
    upper: &mut ValueBound,
    lower: &mut ValueBound,
    slope: f64,
    cfg: &LocalConfig,
) -> Result<(LocalSolution, LocalSolution, f64)> {
    let (u, l) = cfg.exec.join(
        || LocalGame::new(m, o, upper)?.solve_maximin(cfg),
        || LocalGame::new(m, o, lower)?.solve_minimax(cfg),
    );
    let (u, l) = (u?, l?);
    let uv = u.value_hi.min(upper.eval(o));
    let lv = l.value_lo.max(lower.eval(o));
    upper.add_cone(o, uv, slope);
    lower.add_cone(o, lv, slope);
    Ok((u, l, upper.eval(o) - lower.eval(o)))
}

/// Pessimistic strategies from the final bounds: player 1 follows the
/// maximin rule of the lower-bound game and player 2 the minimax rule of the
/// upper-bound game along the occupancy states they reach together.
/// Unreached histories, and depths past the bounds' last depth, get
/// uniform rules.
pub fn extract_strategies(
    m: &PosgModel,
    result: &SolveResult,
    cfg: &SolverConfig,
) -> Result<(BehavioralStrategy, BehavioralStrategy)> {
    let local = LocalConfig {
        tol: result.constants.local_tol,
        budget: cfg.local_budget,
        inner_budget: cfg.local_budget,
        exec: cfg.exec,
        trace: false,
    };
    let horizon = m.horizon().finite().unwrap_or(result.constants.h_max);
    let mut rules1 = Vec::new();
    let mut rules2 = Vec::new();
    let mut o = initial_occupancy(m);
    for depth in 0..horizon {
        let (b1, b2) = if depth < result.constants.h_max {
            let (l, u) = cfg.exec.join(
                || LocalGame::new(m, &o, &result.lower_bound)?.solve_maximin(&local),
                || LocalGame::new(m, &o, &result.upper_bound)?.solve_minimax(&local),
            );
            (l?.beta1, u?.beta2)
        } else {
            let h1 = crate::occupancy::marginal_private_histories(&o, Player::One).into_keys();
            let h2 = crate::occupancy::marginal_private_histories(&o, Player::Two).into_keys();
            (DecisionRule::uniform(m, Player::One, depth, h1), DecisionRule::uniform(m, Player::Two, depth, h2))
        };
        let d = DecisionRuleProfile::new(b1.clone(), b2.clone())?;
        if depth + 1 < horizon {
            o = transition(m, &o, &d)?;
        }
        rules1.push(b1);
        rules2.push(b2);
    }
    let mut s1 = BehavioralStrategy::new(Player::One, 0, rules1)?;
    let mut s2 = BehavioralStrategy::new(Player::Two, 0, rules2)?;
    s1.complete_uniform(m, &[History::EMPTY], horizon);
    s2.complete_uniform(m, &[History::EMPTY], horizon);
    Ok((s1, s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin, matrix_game};
    use approx::assert_abs_diff_eq;

    #[test]
    fn threshold_examples() {
        assert_abs_diff_eq!(threshold(0.1, 0.5, 0.0, &[1.0; 3], 2), 0.4, epsilon = 1e-15);
        assert_eq!(threshold(0.1, 0.5, 0.3, &[1.0; 3], 0), 0.1);
        assert_abs_diff_eq!(threshold(0.1, 0.5, 0.01, &[1.0; 3], 1), 0.16, epsilon = 1e-15);
    }

    #[test]
    fn threshold_matches_closed_form() {
        let (eps, g, rho, l): (f64, f64, f64, f64) = (0.07, 0.8, 0.004, 1.3);
        for tau in 0..10 {
            let gi = g.powi(-(tau as i32));
            let closed = gi * eps - 2.0 * rho * l * (gi - 1.0) / (1.0 - g);
            assert_abs_diff_eq!(threshold(eps, g, rho, &[l; 12], tau), closed, epsilon = 1e-12);
        }
    }

    #[test]
    fn max_rho_examples() {
        assert_abs_diff_eq!(max_rho(0.1, 0.5, 1.0), 0.025);
        assert_abs_diff_eq!(max_rho(0.1, 0.0, 2.0), 0.1 / 4.0);
        assert!(max_rho(0.1, 0.5, 0.0).is_infinite());
    }

    #[test]
    fn t_max_examples() {
        assert_eq!(t_max(0.1, 0.5, 0.0, 1.0, 2.0), 5);
        assert_eq!(t_max(0.1, 0.5, 0.01, 1.0, 0.1), 0);
        assert_eq!(t_max(0.1, 0.5, 0.01, 1.0, 0.05), 0);
        for (eps, g, w) in [(0.05f64, 0.9f64, 3.0f64), (0.01, 0.3, 1.0)] {
            let classical = (f64::ln(eps / w) / f64::ln(g)).ceil() as usize;
            assert_eq!(t_max(eps, g, 0.0, 1.0, w), classical);
        }
    }

    #[test]
    fn config_errors() {
        let m = builtin("matching-pennies").unwrap();
        let mut cfg = SolverConfig::with_epsilon(0.05);
        cfg.rho = Some(1.0);
        assert!(matches!(plan(&m, &cfg), Err(Error::Config(_))));
        cfg.rho = Some(0.0);
        assert!(matches!(plan(&m, &cfg), Err(Error::Config(_))));
        let cfg = SolverConfig::with_epsilon(0.0);
        assert!(matches!(plan(&m, &cfg), Err(Error::Config(_))));
        let k = plan(&m, &SolverConfig::with_epsilon(0.05)).unwrap();
        // λ₀ = 1 at H = 1, so the limit is 0.5·0.05/2
        assert_abs_diff_eq!(k.max_rho, 0.0125);
        assert_abs_diff_eq!(k.rho, 0.00625);
        assert_abs_diff_eq!(k.local_tol, 0.005);
    }

    #[test]
    fn matching_pennies_converges() {
        let m = builtin("matching-pennies").unwrap();
        let r = solve(&m, &SolverConfig::with_epsilon(0.05)).unwrap();
        assert!(r.converged);
        assert!(r.lower <= 1e-9 && r.upper >= -1e-9);
        assert!(r.max_trial_len <= 1);
        assert_eq!(r.contraction_violations(), 0);
    }

    #[test]
    fn terminal_update_is_exact() {
        let m = matrix_game("g", &[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut up = ValueBound::init_upper(&m, 1);
        let mut lo = ValueBound::init_lower(&m, 1);
        let o = initial_occupancy(&m);
        let (u, l, w) = update_at(&m, &o, &mut up, &mut lo, 1.0, &LocalConfig::with_tol(0.01)).unwrap();
        assert_abs_diff_eq!(u.value_hi, 2.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(l.value_lo, 2.0 / 3.0, epsilon = 1e-9);
        assert!(w <= 2e-9);
    }

    #[test]
    fn constant_game_needs_no_trials() {
        let m = matrix_game("c", &[vec![0.4, 0.4], vec![0.4, 0.4]]).unwrap();
        let cfg = SolverConfig::with_epsilon(0.01);
        let r = solve(&m, &cfg).unwrap();
        assert_eq!(r.trials, 0);
        assert_eq!(r.constants.t_max, 0);
        let (s1, s2) = extract_strategies(&m, &r, &cfg).unwrap();
        assert_eq!(s1.rules().len(), 1);
        assert_eq!(s2.rules().len(), 1);
    }

    #[test]
    fn gamma_one_is_rejected() {
        let mut file = builtin("matching-pennies").unwrap().to_file();
        file.gamma = 1.0;
        if let Ok(m) = file.into_model() {
            assert!(matches!(plan(&m, &SolverConfig::default()), Err(Error::Config(_))));
        }
    }
}
