//! Exhaustive maximin over a regular grid of player 1's rules, used to
//! cross-check the other solvers.

use super::doo::Profile;
use super::{LocalConfig, LocalGame, LocalSolution, SolverTag};
use crate::error::{Error, Result};
use crate::model::Player;

/// Largest number of joint grid points `grid_solve` will evaluate.
pub const GRID_LIMIT: f64 = 1e6;

/// All points of the simplex over `n` actions with denominator `k`.
pub fn simplex_grid(n: usize, k: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, k: usize, prefix: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if n == 1 {
            prefix.push(left as f64 / k as f64);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in (0..=left).rev() {
            prefix.push(i as f64 / k as f64);
            rec(n - 1, left - i, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, k, &mut Vec::new(), &mut out);
    out
}

/// Largest L1 distance from a simplex point to the nearest grid point.
pub fn covering_radius(n: usize, k: usize) -> f64 {
    2.0 * ((n / 2) * n.div_ceil(2)) as f64 / (n as f64 * k as f64)
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Maximin over the grid with denominator `k`. `value_lo` is the best
/// certified grid value; `value_hi` adds twice the payoff constant times
/// the covering radius.
pub fn grid_solve(game: &LocalGame, k: usize, cfg: &LocalConfig) -> Result<LocalSolution> {
    if k == 0 {
        return Err(Error::Config("grid resolution must be positive".into()));
    }
    let n1 = game.histories(Player::One).len();
    let na = game.num_actions(Player::One);
    let per = binomial(k + na - 1, na - 1);
    let count = per.powi(n1 as i32);
    if count > GRID_LIMIT {
        return Err(Error::ExplosionGuard {
            what: "grid points",
            count,
            limit: GRID_LIMIT,
        });
    }
    let base = simplex_grid(na, k);
    let mut points: Vec<Profile> = vec![Vec::new()];
    for _ in 0..n1 {
        points = points
            .into_iter()
            .flat_map(|p| {
                base.iter().map(move |b| {
                    let mut q = p.clone();
                    q.push(b.clone());
                    q
                })
            })
            .collect();
    }
    let inner_tol = cfg.tol / 2.0;
    let evals = cfg.exec.map(&points, |x| game.respond(Player::Two, x, inner_tol, cfg));
    let (mut best, mut best_lo, mut best_hi) = (0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, (lo, hi, _)) in evals.iter().enumerate() {
        if *lo > best_lo {
            best = i;
            best_lo = *lo;
        }
        best_hi = best_hi.max(*hi);
    }
    let radius = covering_radius(na, k);
    let x = &points[best];
    let y = &evals[best].2;
    Ok(LocalSolution {
        beta1: game.rule(Player::One, x),
        beta2: game.rule(Player::Two, y),
        value_lo: best_lo,
        value_hi: best_hi + 2.0 * game.lambda_q() * radius,
        solver: SolverTag::Grid,
        nodes: points.len(),
        budget_exhausted: false,
        trace: Vec::new(),
    })
}
