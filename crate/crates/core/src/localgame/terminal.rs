//! Exact solution of bilinear local games by linear programming.
//!
//! For player 1: maximize `Σ_{θ²} t_{θ²}` subject to
//! `t_{θ²} ≤ Σ_{θ¹,a¹} x(θ¹,a¹)·G(θ¹,a¹,θ²,a²)` for every `a²`, with one
//! simplex per `θ¹`. Player 2's problem is the mirror image.
//!
//! Each `t_{θ²}` is stored divided by the marginal of `θ²` so that every row
//! holds conditional rather than joint masses; rare histories would
//! otherwise produce coefficients near the pivot tolerance.

use super::doo::Profile;
use super::LocalGame;
use crate::error::Result;
use crate::lp::{LinearProgram, Relation, Sense};
use crate::model::Player;

/// Optimal value and rule for `outer`.
pub(super) fn solve(game: &LocalGame, outer: Player) -> Result<(f64, Profile)> {
    let inner = outer.other();
    let (no, nao) = (game.hist[outer.index()].len(), game.na[outer.index()]);
    let (ni, nai) = (game.hist[inner.index()].len(), game.na[inner.index()]);
    let coef = |io: usize, ao: usize, ii: usize, ai: usize| {
        let b = match outer {
            Player::One => game.block(io, ao, ii, ai),
            Player::Two => game.block(ii, ai, io, ao),
        };
        b.g + game.gamma * b.init
    };
    let nx = no * nao;
    let nvars = nx + ni;
    let weights = &game.marg[inner.index()];
    let mut objective = vec![0.0; nvars];
    for (o, w) in objective[nx..].iter_mut().zip(weights) {
        *o = *w;
    }
    let sense = match outer {
        Player::One => Sense::Maximize,
        Player::Two => Sense::Minimize,
    };
    let mut lp = LinearProgram::new(sense, objective);
    for v in nx..nvars {
        lp.set_free(v);
    }
    for ii in 0..ni {
        for ai in 0..nai {
            let mut row = vec![0.0; nvars];
            row[nx + ii] = 1.0;
            for io in 0..no {
                for ao in 0..nao {
                    row[io * nao + ao] = -coef(io, ao, ii, ai) / weights[ii];
                }
            }
            let rel = match outer {
                Player::One => Relation::Le,
                Player::Two => Relation::Ge,
            };
            lp.add_constraint(row, rel, 0.0);
        }
    }
    for io in 0..no {
        let mut row = vec![0.0; nvars];
        for ao in 0..nao {
            row[io * nao + ao] = 1.0;
        }
        lp.add_constraint(row, Relation::Eq, 1.0);
    }
    let sol = lp.solve()?;
    let profile = (0..no)
        .map(|io| {
            let raw: Vec<f64> = (0..nao).map(|ao| sol.x[io * nao + ao].max(0.0)).collect();
            let total: f64 = raw.iter().sum();
            if total > 0.0 {
                raw.iter().map(|x| x / total).collect()
            } else {
                vec![1.0 / nao as f64; nao]
            }
        })
        .collect();
    Ok((sol.objective, profile))
}
