//! The local payoff seen by one player while the other's rule is fixed.

use super::doo::{Cell, Profile};
use super::{sign, LocalGame};
use crate::bounds::Side;
use crate::model::Player;

pub(super) struct View<'g> {
    game: &'g LocalGame,
    resp: Player,
    /// `[history][action]` reward coefficient.
    lin: Vec<Vec<f64>>,
    /// `[history][action]` initial-bound coefficient.
    init: Vec<Vec<f64>>,
    /// `[history][action]` reachable keys with the opponent's weight folded in.
    ent: Vec<Vec<Vec<(u32, f64)>>>,
    /// Per cone: L1 mass that no choice of the responder can move.
    konst: Vec<f64>,
}

impl<'g> View<'g> {
    pub(super) fn new(game: &'g LocalGame, resp: Player, other: &Profile) -> View<'g> {
        let ni = game.hist[resp.index()].len();
        let na = game.na[resp.index()];
        let mut lin = vec![vec![0.0; na]; ni];
        let mut init = vec![vec![0.0; na]; ni];
        let mut ent: Vec<Vec<Vec<(u32, f64)>>> = vec![vec![Vec::new(); na]; ni];
        let mut covered = vec![false; game.keys.len()];
        let no = game.hist[resp.other().index()].len();
        let nao = game.na[resp.other().index()];
        for i in 0..ni {
            for a in 0..na {
                for j in 0..no {
                    for b in 0..nao {
                        let w = other[j][b];
                        if w <= 0.0 {
                            continue;
                        }
                        let blk = match resp {
                            Player::One => game.block(i, a, j, b),
                            Player::Two => game.block(j, b, i, a),
                        };
                        lin[i][a] += w * blk.g;
                        init[i][a] += w * blk.init;
                        for &(k, mass) in &blk.entries {
                            ent[i][a].push((k, w * mass));
                            covered[k as usize] = true;
                        }
                    }
                }
            }
        }
        let konst = game
            .pieces
            .iter()
            .map(|p| {
                let moved: f64 = p.c.iter().zip(&covered).filter(|(_, c)| **c).map(|(x, _)| x).sum();
                p.outside + (p.c_total - moved).max(0.0)
            })
            .collect();
        View {
            game,
            resp,
            lin,
            init,
            ent,
            konst,
        }
    }

    pub(super) fn responder(&self) -> Player {
        self.resp
    }

    fn cone_sign(&self) -> f64 {
        match self.game.side {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }

    fn tighter(&self, a: f64, b: f64) -> f64 {
        match self.game.side {
            Side::Upper => a.min(b),
            Side::Lower => a.max(b),
        }
    }

    /// `Σ_a Σ_e |t_a w_e − c_e|` for cone `p` at history `i`.
    fn part(&self, p: usize, i: usize, t: &[f64]) -> f64 {
        let c = &self.game.pieces[p].c;
        self.ent[i]
            .iter()
            .zip(t)
            .map(|(es, &ta)| es.iter().map(|&(k, w)| (ta * w - c[k as usize]).abs()).sum::<f64>())
            .sum()
    }

    fn dot(coef: &[f64], t: &[f64]) -> f64 {
        coef.iter().zip(t).map(|(c, x)| c * x).sum()
    }

    /// Exact payoff at the responder's rule `t`.
    pub(super) fn value(&self, t: &Profile) -> f64 {
        let g = self.game.gamma;
        let s = self.cone_sign();
        let reward: f64 = self.lin.iter().zip(t).map(|(l, x)| Self::dot(l, x)).sum();
        let init: f64 = self.init.iter().zip(t).map(|(l, x)| Self::dot(l, x)).sum();
        let env = self.game.pieces.iter().enumerate().fold(init, |acc, (p, piece)| {
            let d = self.konst[p] + (0..t.len()).map(|i| self.part(p, i, &t[i])).sum::<f64>();
            self.tighter(acc, piece.value + s * piece.slope * d)
        });
        reward + g * env
    }

    /// Bound on the responder's best payoff over `cell`, valid when the
    /// responder's objective opposes the envelope: each piece is then
    /// optimized at the vertices history by history, and the envelope of
    /// those optima bounds the envelope's optimum.
    pub(super) fn vertex_bound(&self, cell: &Cell) -> f64 {
        let g = self.game.gamma;
        let s = self.cone_sign();
        let d = sign(self.resp);
        let best = |vals: &mut dyn Iterator<Item = f64>| vals.map(|v| d * v).fold(f64::NEG_INFINITY, f64::max) * d;
        let mut env: f64 = cell
            .simplices
            .iter()
            .enumerate()
            .map(|(i, verts)| {
                best(&mut verts.iter().map(|v| Self::dot(&self.lin[i], v) + g * Self::dot(&self.init[i], v)))
            })
            .sum();
        for (p, piece) in self.game.pieces.iter().enumerate() {
            let k = s * piece.slope;
            let total: f64 = cell
                .simplices
                .iter()
                .enumerate()
                .map(|(i, verts)| best(&mut verts.iter().map(|v| Self::dot(&self.lin[i], v) + g * k * self.part(p, i, v))))
                .sum();
            env = self.tighter(env, total + g * (piece.value + k * self.konst[p]));
        }
        env
    }

    /// Exact best response when the responder's objective agrees with the
    /// envelope (or there are no cones): the optimum over the envelope is
    /// the best optimum over its pieces, each solved greedily.
    pub(super) fn best_response(&self) -> (f64, Profile) {
        let g = self.game.gamma;
        let d = sign(self.resp);
        let na = self.game.na[self.resp.index()];
        // initial piece: linear, pick the best action per history
        let mut best_t: Profile = Vec::with_capacity(self.lin.len());
        let mut best_val = 0.0;
        for i in 0..self.lin.len() {
            let (mut arg, mut top) = (0, f64::NEG_INFINITY);
            for a in 0..na {
                let v = d * (self.lin[i][a] + g * self.init[i][a]);
                if v > top {
                    top = v;
                    arg = a;
                }
            }
            let mut t = vec![0.0; na];
            t[arg] = 1.0;
            best_t.push(t);
            best_val += d * top;
        }
        let s = self.cone_sign();
        for (p, piece) in self.game.pieces.iter().enumerate() {
            // minimize −d·f with f = lin·t + γ s λ Σ|t w − c|; convex since d·s = −1
            let beta = g * piece.slope;
            let c = &piece.c;
            let mut val = g * (piece.value + s * piece.slope * self.konst[p]);
            let mut ts = Vec::with_capacity(self.lin.len());
            for i in 0..self.lin.len() {
                let alpha: Vec<f64> = self.lin[i].iter().map(|l| -d * l).collect();
                let (m, t) = min_convex_separable(&alpha, beta, &self.ent[i], c);
                val += -d * m;
                ts.push(t);
            }
            if d * val > d * best_val {
                best_val = val;
                best_t = ts;
            }
        }
        (best_val, best_t)
    }
}

/// Minimizes `Σ_a [α_a t_a + β Σ_e |t_a w_e − c_e|]` over the simplex,
/// `β ≥ 0`, by filling the cheapest linear segments first.
pub(super) fn min_convex_separable(alpha: &[f64], beta: f64, ent: &[Vec<(u32, f64)>], c: &[f64]) -> (f64, Vec<f64>) {
    let na = alpha.len();
    let mut value = 0.0;
    // (slope, action, order, length)
    let mut segs: Vec<(f64, usize, usize, f64)> = Vec::new();
    for a in 0..na {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(ent[a].len());
        let mut w_total = 0.0;
        for &(k, w) in &ent[a] {
            let ck = c[k as usize];
            value += beta * ck;
            w_total += w;
            pts.push((ck / w, w));
        }
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        // slope just right of t is α + β (Σ_{b ≤ t} w − Σ_{b > t} w)
        let mut below = 0.0;
        let mut start = 0.0;
        let mut order = 0;
        let mut j = 0;
        while start < 1.0 {
            while j < pts.len() && pts[j].0 <= start {
                below += pts[j].1;
                j += 1;
            }
            let end = if j < pts.len() { pts[j].0.min(1.0) } else { 1.0 };
            let slope = alpha[a] + beta * (below - (w_total - below));
            segs.push((slope, a, order, end - start));
            order += 1;
            start = end;
        }
    }
    segs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut t = vec![0.0; na];
    let mut left = 1.0;
    for (slope, a, _, len) in segs {
        if left <= 0.0 {
            break;
        }
        let take = len.min(left);
        t[a] += take;
        value += slope * take;
        left -= take;
    }
    (value, t)
}
