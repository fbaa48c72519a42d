//! Ground truth at desk scale: the normal form over reduced pure
//! strategies, solved as a matrix game, plus best responses and
//! exploitability by enumeration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::model::{Horizon, Player, PosgModel};
use crate::occupancy::{marginal_private_histories, History, OccupancyState};
use crate::par::Execution;
use crate::strategy::{
    enumerate_pure_from, evaluate_profile, pure_to_behavioral, BehavioralStrategy, DecisionRule, PureStrategy,
};

/// Payoffs to player 1; rows are player 1's pure strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixGame {
    pub payoff: Vec<Vec<f64>>,
}

impl MatrixGame {
    pub fn new(payoff: Vec<Vec<f64>>) -> Result<MatrixGame> {
        let cols = payoff.first().map_or(0, Vec::len);
        if cols == 0 {
            return Err(Error::Validation("matrix game needs at least one row and column".into()));
        }
        if payoff.iter().any(|r| r.len() != cols) {
            return Err(Error::Validation("matrix game rows differ in length".into()));
        }
        if payoff.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Validation("matrix game has a non-finite entry".into()));
        }
        Ok(MatrixGame { payoff })
    }

    pub fn rows(&self) -> usize {
        self.payoff.len()
    }

    pub fn cols(&self) -> usize {
        self.payoff[0].len()
    }

    /// `min_j x·A_j`: what the row mix guarantees.
    pub fn row_guarantee(&self, x: &[f64]) -> f64 {
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| x[i] * self.payoff[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_i A_i·y`: what the column mix concedes.
    pub fn col_guarantee(&self, y: &[f64]) -> f64 {
        self.payoff
            .iter()
            .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub value: f64,
    pub row_mix: Vec<f64>,
    pub col_mix: Vec<f64>,
    /// Optimum of the column player's own LP; equals `value` by duality.
    pub col_value: f64,
}

fn clean_mix(raw: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = raw.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    clipped.iter().map(|x| x / total).collect()
}

/// One LP per player: `max v s.t. xᵀA ≥ v` and `min w s.t. Ay ≤ w`.
pub fn solve_matrix_game(g: &MatrixGame) -> Result<OracleSolution> {
    let (r, c) = (g.rows(), g.cols());
    let mut obj = vec![0.0; r + 1];
    obj[r] = 1.0;
    let mut row_lp = LinearProgram::new(Sense::Maximize, obj);
    row_lp.set_free(r);
    for j in 0..c {
        let mut coeffs: Vec<f64> = (0..r).map(|i| g.payoff[i][j]).collect();
        coeffs.push(-1.0);
        row_lp.add_constraint(coeffs, Relation::Ge, 0.0);
    }
    let mut simplex = vec![1.0; r];
    simplex.push(0.0);
    row_lp.add_constraint(simplex, Relation::Eq, 1.0);
    let row = row_lp.solve()?;

    let mut obj = vec![0.0; c + 1];
    obj[c] = 1.0;
    let mut col_lp = LinearProgram::new(Sense::Minimize, obj);
    col_lp.set_free(c);
    for i in 0..r {
        let mut coeffs = g.payoff[i].clone();
        coeffs.push(-1.0);
        col_lp.add_constraint(coeffs, Relation::Le, 0.0);
    }
    let mut simplex = vec![1.0; c];
    simplex.push(0.0);
    col_lp.add_constraint(simplex, Relation::Eq, 1.0);
    let col = col_lp.solve()?;

    Ok(OracleSolution {
        value: row.objective,
        row_mix: clean_mix(&row.x[..r]),
        col_mix: clean_mix(&col.x[..c]),
        col_value: col.objective,
    })
}

/// The subgame rooted at `o` in normal form, with the pure strategies
/// indexing its rows and columns.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub game: MatrixGame,
    pub rows: Vec<PureStrategy>,
    pub cols: Vec<PureStrategy>,
    /// The model with its horizon set to the one the subgame was built for.
    pub model: PosgModel,
}

fn truncated(m: &PosgModel, horizon: usize) -> PosgModel {
    if m.horizon() == Horizon::Finite(horizon) {
        m.clone()
    } else {
        m.with_horizon(Horizon::Finite(horizon))
    }
}

/// Private histories of `p` with positive mass in `o`.
pub fn roots(o: &OccupancyState, p: Player) -> Vec<History> {
    marginal_private_histories(o, p).into_keys().collect()
}

/// Reduced pure strategies of `p` for the subgame rooted at `o`.
pub fn subgame_strategies(m: &PosgModel, o: &OccupancyState, p: Player, horizon: usize) -> Result<Vec<PureStrategy>> {
    enumerate_pure_from(m, p, &roots(o, p), o.depth(), horizon)
}

/// Entry `(i, j)` is the value of pure strategy `i` against `j` from `o`.
pub fn normal_form(m: &PosgModel, o: &OccupancyState, horizon: usize, exec: Execution) -> Result<NormalForm> {
    let model = truncated(m, horizon);
    let rows = subgame_strategies(&model, o, Player::One, horizon)?;
    let cols = subgame_strategies(&model, o, Player::Two, horizon)?;
    let cells = rows.len() as f64 * cols.len() as f64;
    if cells > crate::strategy::PURE_STRATEGY_LIMIT {
        return Err(Error::ExplosionGuard {
            what: "normal-form cells",
            count: cells,
            limit: crate::strategy::PURE_STRATEGY_LIMIT,
        });
    }
    let b1: Vec<BehavioralStrategy> = rows.iter().map(|p| pure_to_behavioral(&model, p)).collect();
    let b2: Vec<BehavioralStrategy> = cols.iter().map(|p| pure_to_behavioral(&model, p)).collect();
    let payoff = exec
        .map(&b1, |s1| b2.iter().map(|s2| evaluate_profile(&model, o, s1, s2)).collect::<Result<Vec<f64>>>())
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalForm {
        game: MatrixGame::new(payoff)?,
        rows,
        cols,
        model,
    })
}

/// Exact value of the subgame rooted at `o` with `horizon` as the last depth.
pub fn oracle_value(m: &PosgModel, o: &OccupancyState, horizon: usize, exec: Execution) -> Result<f64> {
    Ok(solve_matrix_game(&normal_form(m, o, horizon, exec)?.game)?.value)
}

/// Best value `responder` can reach against `opponent` from `o`: a max for
/// player 1, a min for player 2.
pub fn best_response_value(
    m: &PosgModel,
    o: &OccupancyState,
    opponent: &BehavioralStrategy,
    responder: Player,
    horizon: usize,
    exec: Execution,
) -> Result<f64> {
    let model = truncated(m, horizon);
    let pures = subgame_strategies(&model, o, responder, horizon)?;
    let values = exec
        .map(&pures, |p| {
            let s = pure_to_behavioral(&model, p);
            match responder {
                Player::One => evaluate_profile(&model, o, &s, opponent),
                Player::Two => evaluate_profile(&model, o, opponent, &s),
            }
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    Ok(match responder {
        Player::One => values.into_iter().fold(f64::NEG_INFINITY, f64::max),
        Player::Two => values.into_iter().fold(f64::INFINITY, f64::min),
    })
}

/// `BR₁(s2) − BR₂(s1)`; zero exactly at an equilibrium.
pub fn exploitability(
    m: &PosgModel,
    o: &OccupancyState,
    s1: &BehavioralStrategy,
    s2: &BehavioralStrategy,
    horizon: usize,
    exec: Execution,
) -> Result<f64> {
    let (b1, b2) = exec.join(
        || best_response_value(m, o, s2, Player::One, horizon, exec),
        || best_response_value(m, o, s1, Player::Two, horizon, exec),
    );
    Ok(b1? - b2?)
}

/// Behavioral strategy induced by a mix over reduced pure strategies:
/// each history gets the conditional action frequencies among the pure
/// strategies that reach it, and unreached histories stay uniform.
pub fn mixed_to_behavioral(
    m: &PosgModel,
    player: Player,
    roots: &[History],
    start: usize,
    horizon: usize,
    pures: &[PureStrategy],
    weights: &[f64],
) -> Result<BehavioralStrategy> {
    let na = m.num_actions(player);
    let mut acc: BTreeMap<History, Vec<f64>> = BTreeMap::new();
    for (p, &w) in pures.iter().zip(weights) {
        if w <= 0.0 {
            continue;
        }
        for (h, &a) in &p.table {
            acc.entry(*h).or_insert_with(|| vec![0.0; na])[a] += w;
        }
    }
    let mut rules: Vec<DecisionRule> = (start..horizon).map(|d| DecisionRule::uniform(m, player, d, [])).collect();
    for (h, counts) in acc {
        let total: f64 = counts.iter().sum();
        let dist = counts.iter().map(|c| c / total).collect();
        if let Some(rule) = rules.get_mut(h.len() - start) {
            rule.insert(h, dist);
        }
    }
    let mut s = BehavioralStrategy::new(player, start, rules)?;
    s.complete_uniform(m, roots, horizon);
    Ok(s)
}

/// Value of two pure strategies by enumerating trajectories directly,
/// without occupancy states.
pub fn rollout_value(m: &PosgModel, o: &OccupancyState, p1: &PureStrategy, p2: &PureStrategy, horizon: usize) -> Result<f64> {
    fn go(
        m: &PosgModel,
        p1: &PureStrategy,
        p2: &PureStrategy,
        (s, h1, h2): (usize, History, History),
        left: usize,
    ) -> Result<f64> {
        if left == 0 {
            return Ok(0.0);
        }
        let missing = |p: Player, h: History| Error::MissingRule {
            player: p.number(),
            depth: h.len(),
            history: h.render(m, p),
        };
        let a1 = *p1.table.get(&h1).ok_or_else(|| missing(Player::One, h1))?;
        let a2 = *p2.table.get(&h2).ok_or_else(|| missing(Player::Two, h2))?;
        let mut v = m.reward(s, a1, a2);
        if left > 1 {
            for out in m.outcomes(s, a1, a2) {
                let next = (out.next, h1.extend(m, Player::One, a1, out.z1)?, h2.extend(m, Player::Two, a2, out.z2)?);
                v += m.gamma() * out.p * go(m, p1, p2, next, left - 1)?;
            }
        }
        Ok(v)
    }
    let left = horizon.saturating_sub(o.depth());
    let mut total = 0.0;
    for (k, p) in o.entries() {
        total += p * go(m, p1, p2, (k.state as usize, k.h1, k.h2), left)?;
    }
    Ok(total)
}

/// Frozen oracle output used as a test golden.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Golden {
    pub model: String,
    pub horizon: usize,
    pub value: f64,
    pub row_mix: Vec<f64>,
    pub col_mix: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin, matrix_game};
    use crate::occupancy::initial_occupancy;
    use crate::strategy::enumerate_pure;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SEQ: Execution = Execution::Sequential;

    #[test]
    fn matrix_game_examples() {
        let mp = solve_matrix_game(&MatrixGame::new(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()).unwrap();
        assert_abs_diff_eq!(mp.value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mp.row_mix[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(mp.col_mix[0], 0.5, epsilon = 1e-12);

        let g = solve_matrix_game(&MatrixGame::new(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap()).unwrap();
        assert_abs_diff_eq!(g.value, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.row_mix[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.col_mix[0], 1.0 / 3.0, epsilon = 1e-12);

        let single = solve_matrix_game(&MatrixGame::new(vec![vec![0.7]]).unwrap()).unwrap();
        assert_abs_diff_eq!(single.value, 0.7);
        assert!(MatrixGame::new(vec![]).is_err());
        assert!(MatrixGame::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn lp_duality_and_certificates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (r, c) = (rng.gen_range(1..7), rng.gen_range(1..7));
            let a: Vec<Vec<f64>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let g = MatrixGame::new(a).unwrap();
            let s = solve_matrix_game(&g).unwrap();
            assert_abs_diff_eq!(s.value, s.col_value, epsilon = 1e-9);
            assert!(g.row_guarantee(&s.row_mix) >= s.value - 1e-9);
            assert!(g.col_guarantee(&s.col_mix) <= s.value + 1e-9);
        }
    }

    #[test]
    fn normal_form_examples() {
        let mp = builtin("matching-pennies").unwrap();
        let o = initial_occupancy(&mp);
        let nf = normal_form(&mp, &o, 1, SEQ).unwrap();
        assert_eq!(nf.game.payoff, vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert_abs_diff_eq!(oracle_value(&mp, &o, 1, SEQ).unwrap(), 0.0, epsilon = 1e-12);

        // one observation each and two steps: 2 · 2 strategies per player
        let blind = mp.with_horizon(Horizon::Finite(2));
        assert_eq!(normal_form(&blind, &o, 2, SEQ).unwrap().game.rows(), 4);
        assert_eq!(normal_form(&blind, &o, 2, SEQ).unwrap().game.cols(), 4);

        let c = matrix_game("constant", &[vec![0.3, 0.3], vec![0.3, 0.3]]).unwrap();
        let nf = normal_form(&c, &initial_occupancy(&c), 1, SEQ).unwrap();
        assert!(nf.game.payoff.iter().flatten().all(|&x| (x - 0.3).abs() < 1e-15));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let m = builtin("matching-pennies-2step").unwrap();
        let o = initial_occupancy(&m);
        let a = normal_form(&m, &o, 2, Execution::Sequential).unwrap();
        let b = normal_form(&m, &o, 2, Execution::Parallel).unwrap();
        assert_eq!(a.game, b.game);
    }

    #[test]
    fn best_response_examples() {
        let mp = builtin("matching-pennies").unwrap();
        let o = initial_occupancy(&mp);
        let uniform = mixed_to_behavioral(&mp, Player::Two, &[History::EMPTY], 0, 1, &[], &[]).unwrap();
        assert_abs_diff_eq!(best_response_value(&mp, &o, &uniform, Player::One, 1, SEQ).unwrap(), 0.0);
        let heads = enumerate_pure(&mp, Player::Two, 1).unwrap().remove(0);
        let heads = pure_to_behavioral(&mp, &heads);
        assert_abs_diff_eq!(best_response_value(&mp, &o, &heads, Player::One, 1, SEQ).unwrap(), 1.0);
    }

    fn equilibrium(m: &PosgModel, horizon: usize) -> (BehavioralStrategy, BehavioralStrategy, f64) {
        let o = initial_occupancy(m);
        let nf = normal_form(m, &o, horizon, SEQ).unwrap();
        let s = solve_matrix_game(&nf.game).unwrap();
        let r = [History::EMPTY];
        let s1 = mixed_to_behavioral(&nf.model, Player::One, &r, 0, horizon, &nf.rows, &s.row_mix).unwrap();
        let s2 = mixed_to_behavioral(&nf.model, Player::Two, &r, 0, horizon, &nf.cols, &s.col_mix).unwrap();
        (s1, s2, s.value)
    }

    #[test]
    fn oracle_equilibria_are_unexploitable() {
        for (name, h) in [("matching-pennies", 1), ("matching-pennies-2step", 2), ("adversarial-tiger", 2)] {
            let m = builtin(name).unwrap();
            let (s1, s2, value) = equilibrium(&m, h);
            let o = initial_occupancy(&m);
            let e = exploitability(&m, &o, &s1, &s2, h, SEQ).unwrap();
            assert!(e.abs() <= 1e-6, "{name}: {e}");
            let v = evaluate_profile(&m.with_horizon(Horizon::Finite(h)), &o, &s1, &s2).unwrap();
            assert_abs_diff_eq!(v, value, epsilon = 1e-9);
        }
    }

    #[test]
    fn mixed_and_behavioral_evaluations_agree() {
        let m = builtin("matching-pennies-2step").unwrap();
        let o = initial_occupancy(&m);
        let nf = normal_form(&m, &o, 2, SEQ).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = [History::EMPTY];
        for _ in 0..20 {
            let mut w1: Vec<f64> = (0..nf.rows.len()).map(|_| rng.gen::<f64>()).collect();
            let mut w2: Vec<f64> = (0..nf.cols.len()).map(|_| rng.gen::<f64>()).collect();
            let (t1, t2): (f64, f64) = (w1.iter().sum(), w2.iter().sum());
            w1.iter_mut().for_each(|x| *x /= t1);
            w2.iter_mut().for_each(|x| *x /= t2);
            let mixed: f64 = (0..nf.rows.len())
                .flat_map(|i| (0..nf.cols.len()).map(move |j| (i, j)))
                .map(|(i, j)| w1[i] * w2[j] * nf.game.payoff[i][j])
                .sum();
            let s1 = mixed_to_behavioral(&m, Player::One, &r, 0, 2, &nf.rows, &w1).unwrap();
            let s2 = mixed_to_behavioral(&m, Player::Two, &r, 0, 2, &nf.cols, &w2).unwrap();
            assert_abs_diff_eq!(evaluate_profile(&m, &o, &s1, &s2).unwrap(), mixed, epsilon = 1e-9);
        }
    }

    #[test]
    fn fifty_fifty_mix_is_the_mean() {
        let mp = builtin("matching-pennies").unwrap();
        let o = initial_occupancy(&mp);
        let nf = normal_form(&mp, &o, 1, SEQ).unwrap();
        let s1 = mixed_to_behavioral(&mp, Player::One, &[History::EMPTY], 0, 1, &nf.rows, &[0.5, 0.5]).unwrap();
        let s2 = pure_to_behavioral(&mp, &nf.cols[0]);
        let mean = 0.5 * (nf.game.payoff[0][0] + nf.game.payoff[1][0]);
        assert_abs_diff_eq!(evaluate_profile(&mp, &o, &s1, &s2).unwrap(), mean);
    }

    #[test]
    fn rollouts_match_occupancy_evaluation() {
        for name in ["matching-pennies", "matching-pennies-2step"] {
            let m = builtin(name).unwrap();
            let h = m.horizon().finite().unwrap();
            let o = initial_occupancy(&m);
            let nf = normal_form(&m, &o, h, SEQ).unwrap();
            for (i, p1) in nf.rows.iter().enumerate() {
                for (j, p2) in nf.cols.iter().enumerate() {
                    let v = rollout_value(&m, &o, p1, p2, h).unwrap();
                    assert_abs_diff_eq!(v, nf.game.payoff[i][j], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn values_sit_between_initial_bounds() {
        use crate::bounds::ValueBound;
        for (name, h) in [("matching-pennies", 1), ("matching-pennies-2step", 2), ("adversarial-tiger", 2)] {
            let m = builtin(name).unwrap().with_horizon(Horizon::Finite(h));
            let o = initial_occupancy(&m);
            let v = oracle_value(&m, &o, h, SEQ).unwrap();
            assert!(ValueBound::init_lower(&m, h).eval(&o) <= v + 1e-12);
            assert!(v <= ValueBound::init_upper(&m, h).eval(&o) + 1e-12);
        }
    }

    #[test]
    fn subgame_values_nest() {
        // the value at o₀ is the stage payoff of the equilibrium rules plus
        // γ times the value of the subgame they induce
        use crate::occupancy::{expected_reward, transition};
        use crate::strategy::DecisionRuleProfile;
        for name in ["matching-pennies-2step", "adversarial-tiger"] {
            let m = builtin(name).unwrap().with_horizon(Horizon::Finite(2));
            let (s1, s2, value) = equilibrium(&m, 2);
            let o = initial_occupancy(&m);
            let d = DecisionRuleProfile::new(s1.rules()[0].clone(), s2.rules()[0].clone()).unwrap();
            let next = transition(&m, &o, &d).unwrap();
            let sub = oracle_value(&m, &next, 2, SEQ).unwrap();
            assert_abs_diff_eq!(expected_reward(&m, &o, &d).unwrap() + m.gamma() * sub, value, epsilon = 1e-6);
        }
    }
}
