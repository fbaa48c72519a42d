//! Small dense linear programs, solved with `microlp`.
//!
//! The backend is a revised simplex with LU factorization. It copes with the
//! badly scaled local games that deep, sparse occupancy states produce,
//! where a plain dense tableau loses feasibility.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

/// A linear program over `n` variables, each either nonnegative or free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            free: vec![false; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars(), "constraint width");
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpSolution> {
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Lp("non-finite objective".into()));
        }
        let direction = match self.sense {
            Sense::Minimize => OptimizationDirection::Minimize,
            Sense::Maximize => OptimizationDirection::Maximize,
        };
        let mut p = Problem::new(direction);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.free)
            .map(|(&c, &free)| {
                let lower = if free { f64::NEG_INFINITY } else { 0.0 };
                p.add_var(c, (lower, f64::INFINITY))
            })
            .collect();
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Lp(format!("non-finite data in row {i}")));
            }
            let terms: Vec<_> = vars
                .iter()
                .zip(&row.coeffs)
                .filter(|(_, c)| **c != 0.0)
                .map(|(v, c)| (*v, *c))
                .collect();
            let op = match row.relation {
                Relation::Le => ComparisonOp::Le,
                Relation::Ge => ComparisonOp::Ge,
                Relation::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(terms.as_slice(), op, row.rhs);
        }
        let sol = p
            .solve()
            .map_err(|e| Error::Lp(e.to_string()))?
            .into_solution()
            .map_err(|_| Error::Lp("solve was interrupted".into()))?;
        Ok(LpSolution {
            x: vars.iter().map(|v| sol.var_value(*v)).collect(),
            objective: sol.objective(),
        })
    }
}
