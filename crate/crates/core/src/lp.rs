//! Minimal LP interface: maximize/minimize cᵀx subject to linear
//! constraints and variable bounds.
//!
//! Backed by the `microlp` simplex solver.  The wrapper exists so callers
//! build problems in one shot and pattern-match on a three-way outcome;
//! the solver choice stays an implementation detail.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::Error;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpBuilder {
    direction: Direction,
    vars: Vec<(f64, (f64, f64))>,
    constraints: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

pub const FREE: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);
pub const NONNEG: (f64, f64) = (0.0, f64::INFINITY);

impl LpBuilder {
    pub fn new(direction: Direction) -> Self {
        LpBuilder {
            direction,
            vars: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable with objective coefficient and (lower, upper) bounds;
    /// returns its index.
    pub fn add_var(&mut self, obj: f64, bounds: (f64, f64)) -> usize {
        self.vars.push((obj, bounds));
        self.vars.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.constraints.push((terms, cmp, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let dir = match self.direction {
            Direction::Maximize => OptimizationDirection::Maximize,
            Direction::Minimize => OptimizationDirection::Minimize,
        };
        let mut problem = Problem::new(dir);
        let vars: Vec<_> = self
            .vars
            .iter()
            .map(|(obj, bounds)| problem.add_var(*obj, *bounds))
            .collect();
        for (terms, cmp, rhs) in &self.constraints {
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            let expr: Vec<(microlp::Variable, f64)> =
                terms.iter().map(|(i, c)| (vars[*i], *c)).collect();
            problem.add_constraint(expr.as_slice(), op, *rhs);
        }
        match problem.solve() {
            Ok(outcome) => {
                let solution = outcome
                    .solution()
                    .ok_or_else(|| Error::Lp("solver returned no solution".into()))?;
                let values = vars.iter().map(|v| solution.var_value(*v)).collect();
                Ok(LpOutcome::Optimal(LpSolution {
                    objective: solution.objective(),
                    values,
                }))
            }
            Err(microlp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(microlp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
            Err(e) => Err(Error::Lp(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximize_with_free_vars() {
        let mut lp = LpBuilder::new(Direction::Maximize);
        let x = lp.add_var(1.0, FREE);
        let y = lp.add_var(1.0, FREE);
        lp.add_constraint(vec![(x, 1.0)], Cmp::Le, 1.0);
        lp.add_constraint(vec![(y, 1.0)], Cmp::Le, 2.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Cmp::Le, 2.5);
        match lp.solve().unwrap() {
            LpOutcome::Optimal(s) => {
                assert!((s.objective - 2.5).abs() < 1e-9);
                assert!((s.values[0] - 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_equalities() {
        let mut lp = LpBuilder::new(Direction::Minimize);
        let w1 = lp.add_var(1.0, NONNEG);
        let w2 = lp.add_var(1.0, NONNEG);
        lp.add_constraint(vec![(w1, 1.0), (w2, 1.0)], Cmp::Eq, 1.0);
        lp.add_constraint(vec![(w1, 1.0), (w2, 1.0)], Cmp::Eq, 2.0);
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Infeasible));
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LpBuilder::new(Direction::Maximize);
        let _ = lp.add_var(1.0, NONNEG);
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Unbounded));
    }
}
