//! Deterministic optimistic optimization over products of simplices.
//!
//! A cell holds one sub-simplex (as a vertex list) per private history.
//! Cells are split by bisecting the longest edge of the sub-simplex with
//! the largest marginal-weighted diameter. The search maximizes; callers
//! negate for minimization.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::par::Execution;

/// Per-history action distributions.
pub type Profile = Vec<Vec<f64>>;

/// Nodes evaluated together per expansion round.
const BATCH: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// Path of child indices from the root; orders ties.
    pub id: Vec<u8>,
    /// `[history][vertex][action]`.
    pub simplices: Vec<Vec<Vec<f64>>>,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

impl Cell {
    /// The full product of simplices.
    pub fn root(num_histories: usize, num_actions: usize) -> Cell {
        let simplex: Vec<Vec<f64>> = (0..num_actions)
            .map(|a| {
                let mut v = vec![0.0; num_actions];
                v[a] = 1.0;
                v
            })
            .collect();
        Cell {
            id: Vec::new(),
            simplices: vec![simplex; num_histories],
        }
    }

    pub fn center(&self) -> Profile {
        self.simplices
            .iter()
            .map(|verts| {
                let n = verts.len() as f64;
                let mut c = vec![0.0; verts[0].len()];
                for v in verts {
                    for (ci, vi) in c.iter_mut().zip(v) {
                        *ci += vi / n;
                    }
                }
                c
            })
            .collect()
    }

    /// `Σ_i w_i · max_v ‖v − center_i‖₁`.
    pub fn radius(&self, weights: &[f64]) -> f64 {
        self.center()
            .iter()
            .zip(&self.simplices)
            .zip(weights)
            .map(|((c, verts), w)| w * verts.iter().map(|v| l1(v, c)).fold(0.0, f64::max))
            .sum()
    }

    fn longest_edge(verts: &[Vec<f64>]) -> (f64, usize, usize) {
        let mut best = (0.0, 0, 0);
        for a in 0..verts.len() {
            for b in a + 1..verts.len() {
                let d = l1(&verts[a], &verts[b]);
                if d > best.0 {
                    best = (d, a, b);
                }
            }
        }
        best
    }

    /// Bisects the longest edge of the sub-simplex with the largest
    /// weighted diameter; `None` for a single point.
    pub fn split(&self, weights: &[f64]) -> Option<(Cell, Cell)> {
        let mut pick: Option<(f64, usize, usize, usize)> = None;
        for (i, verts) in self.simplices.iter().enumerate() {
            let (d, a, b) = Self::longest_edge(verts);
            let score = d * weights[i];
            if score > 0.0 && pick.is_none_or(|p| score > p.0) {
                pick = Some((score, i, a, b));
            }
        }
        let (_, i, a, b) = pick?;
        let mid: Vec<f64> = self.simplices[i][a]
            .iter()
            .zip(&self.simplices[i][b])
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        let mut left = self.clone();
        left.simplices[i][b] = mid.clone();
        left.id.push(0);
        let mut right = self.clone();
        right.simplices[i][a] = mid;
        right.id.push(1);
        Some((left, right))
    }
}

/// What a node evaluation reports, in maximization orientation.
pub struct NodeEval<P> {
    /// Certified value achievable at the cell center.
    pub lo: f64,
    /// Upper bound over the whole cell.
    pub hi: f64,
    pub payload: P,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub node_id: usize,
    pub depth: usize,
    pub radius: f64,
    pub lo: f64,
    pub hi: f64,
}

pub struct DooResult<P> {
    pub lo: f64,
    pub hi: f64,
    pub best: P,
    pub best_center: Profile,
    pub nodes: usize,
    pub exhausted: bool,
    pub trace: Vec<TraceRow>,
}

struct Open {
    hi: f64,
    cell: Cell,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // max-heap on hi, then the lexicographically smallest id
    fn cmp(&self, other: &Self) -> Ordering {
        self.hi
            .total_cmp(&other.hi)
            .then_with(|| other.cell.id.cmp(&self.cell.id))
    }
}

pub struct DooParams {
    pub tol: f64,
    pub budget: usize,
    pub exec: Execution,
    pub trace: bool,
    /// Stop as soon as the best certified value reaches this.
    pub abort_at: f64,
}

/// Maximizes over `root`. `eval(cell, center, radius, best_lo)` bounds a
/// cell; children inherit their parent's upper bound when it is tighter.
pub fn maximize<P, F>(root: Cell, weights: &[f64], params: &DooParams, eval: F) -> DooResult<P>
where
    P: Send + Clone,
    F: Fn(&Cell, &Profile, f64, f64) -> NodeEval<P> + Sync + Send,
{
    let run = |cell: &Cell, best_lo: f64| {
        let center = cell.center();
        let radius = cell.radius(weights);
        let e = eval(cell, &center, radius, best_lo);
        (e, center, radius)
    };
    let mut trace = Vec::new();
    let (e, center, radius) = run(&root, f64::NEG_INFINITY);
    if params.trace {
        trace.push(TraceRow {
            node_id: 0,
            depth: 0,
            radius,
            lo: e.lo,
            hi: e.hi,
        });
    }
    let mut best_lo = e.lo;
    let mut best = e.payload;
    let mut best_center = center;
    let mut frozen_hi = f64::NEG_INFINITY;
    let mut heap = BinaryHeap::new();
    heap.push(Open {
        hi: e.hi.max(e.lo),
        cell: root,
    });
    let mut nodes = 1;
    let mut exhausted = false;
    loop {
        let top = heap.peek().map_or(f64::NEG_INFINITY, |o| o.hi);
        let global_hi = top.max(frozen_hi).max(best_lo);
        if global_hi - best_lo <= params.tol || best_lo >= params.abort_at {
            break;
        }
        if nodes >= params.budget {
            exhausted = true;
            break;
        }
        let mut batch = Vec::new();
        while batch.len() < BATCH {
            match heap.peek() {
                Some(o) if o.hi - best_lo > params.tol => batch.push(heap.pop().expect("peeked")),
                _ => break,
            }
        }
        let mut children = Vec::new();
        for parent in batch {
            match parent.cell.split(weights) {
                Some((l, r)) => {
                    children.push((l, parent.hi));
                    children.push((r, parent.hi));
                }
                None => frozen_hi = frozen_hi.max(parent.hi),
            }
        }
        // only frozen points remain above tolerance: nothing left to refine
        if children.is_empty() && heap.peek().is_none_or(|o| o.hi - best_lo <= params.tol) {
            break;
        }
        let lo_now = best_lo;
        let evaluated = params.exec.map(&children, |(cell, _)| run(cell, lo_now));
        for ((cell, parent_hi), (e, center, radius)) in children.into_iter().zip(evaluated) {
            let hi = e.hi.min(parent_hi).max(e.lo);
            if params.trace {
                trace.push(TraceRow {
                    node_id: nodes,
                    depth: cell.id.len(),
                    radius,
                    lo: e.lo,
                    hi,
                });
            }
            nodes += 1;
            if e.lo > best_lo {
                best_lo = e.lo;
                best = e.payload;
                best_center = center;
            }
            heap.push(Open { hi, cell });
        }
    }
    let top = heap.peek().map_or(f64::NEG_INFINITY, |o| o.hi);
    DooResult {
        lo: best_lo,
        hi: top.max(frozen_hi).max(best_lo),
        best,
        best_center,
        nodes,
        exhausted,
        trace,
    }
}
