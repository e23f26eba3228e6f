//! Dense two-phase simplex for the tiny feasibility LPs behind Tverberg
//! points. Equality constraints, nonnegative variables, Bland's pivoting
//! rule throughout: deterministic and cycle-free. Problems here have at
//! most a dozen rows, so the full-tableau method with a recomputed
//! objective row each pivot is the robust choice.

use crate::error::{Error, Result};

/// Phase-1 objective above this value means infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 10_000;

/// minimize objective . x  subject to  rows . x = rhs,  x >= 0.
pub struct SimplexProblem {
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub objective: Vec<f64>,
}

pub enum SimplexOutcome {
    Optimal(Vec<f64>),
    Infeasible,
}

struct Tableau {
    /// constraint rows, each `n_total` coefficients then implicit rhs kept
    /// separately
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    n_original: usize,
    n_total: usize,
}

impl Tableau {
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.a.len();
        let mut out = vec![0.0; self.n_total];
        for (j, out_j) in out.iter_mut().enumerate() {
            let mut z = 0.0;
            for i in 0..m {
                z += cost[self.basis[i]] * self.a[i][j];
            }
            *out_j = cost[j] - z;
        }
        out
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.b)
            .map(|(&var, &val)| cost[var] * val)
            .sum()
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        self.b[row] /= p;
        for i in 0..self.a.len() {
            if i == row {
                continue;
            }
            let factor = self.a[i][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..self.n_total {
                self.a[i][j] -= factor * self.a[row][j];
            }
            self.b[i] -= factor * self.b[row];
        }
        self.basis[row] = col;
    }

    /// Bland's rule iteration until no entering column improves `cost`.
    /// Columns >= `col_limit` are never allowed to enter.
    fn optimize(&mut self, cost: &[f64], col_limit: usize) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let reduced = self.reduced_costs(cost);
            let entering = (0..col_limit).find(|&j| reduced[j] < -FEASIBILITY_TOL);
            let Some(col) = entering else {
                return Ok(());
            };
            // leaving: minimum ratio; ties broken by smallest basis index
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                if self.a[i][col] > PIVOT_TOL {
                    let ratio = self.b[i] / self.a[i][col];
                    let better = match leave {
                        None => true,
                        Some((best_i, best_r)) => {
                            ratio < best_r - PIVOT_TOL
                                || (ratio <= best_r + PIVOT_TOL
                                    && self.basis[i] < self.basis[best_i])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                // feasible region of these LPs is compact, so an unbounded
                // direction means the tableau is corrupt
                return Err(Error::LpInternal("unbounded direction".into()));
            };
            self.pivot(row, col);
        }
        Err(Error::LpInternal("pivot limit exceeded".into()))
    }
}

pub fn solve(problem: &SimplexProblem) -> Result<SimplexOutcome> {
    let m = problem.rows.len();
    let n = problem.objective.len();
    debug_assert!(problem.rows.iter().all(|r| r.len() == n));
    debug_assert_eq!(problem.rhs.len(), m);

    // phase 1: artificial basis, rhs made nonnegative
    let n_total = n + m;
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if problem.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row: Vec<f64> = problem.rows[i].iter().map(|&v| sign * v).collect();
        row.resize(n_total, 0.0);
        row[n + i] = 1.0;
        a.push(row);
        b.push(sign * problem.rhs[i]);
    }
    let mut t = Tableau {
        a,
        b,
        basis: (n..n_total).collect(),
        n_original: n,
        n_total,
    };

    let mut phase1_cost = vec![0.0; n_total];
    for c in phase1_cost.iter_mut().skip(n) {
        *c = 1.0;
    }
    t.optimize(&phase1_cost, n_total)?;
    if t.objective_value(&phase1_cost) > FEASIBILITY_TOL {
        return Ok(SimplexOutcome::Infeasible);
    }

    // drive any artificial still basic (at zero) out on an original column
    for row in 0..m {
        if t.basis[row] < n {
            continue;
        }
        if let Some(col) = (0..n).find(|&j| t.a[row][j].abs() > PIVOT_TOL) {
            t.pivot(row, col);
        }
        // otherwise the row is redundant; the artificial stays basic at
        // zero and, being barred from entering, never moves again
    }

    // phase 2 on the original objective
    let mut phase2_cost = problem.objective.clone();
    phase2_cost.resize(n_total, 0.0);
    let limit = t.n_original;
    t.optimize(&phase2_cost, limit)?;

    let mut x = vec![0.0; n];
    for (i, &var) in t.basis.iter().enumerate() {
        if var < n {
            x[var] = t.b[i];
        }
    }
    Ok(SimplexOutcome::Optimal(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_ok(p: &SimplexProblem) -> Option<Vec<f64>> {
        match solve(p).unwrap() {
            SimplexOutcome::Optimal(x) => Some(x),
            SimplexOutcome::Infeasible => None,
        }
    }

    #[test]
    fn solves_a_plain_equality_program() {
        // min x0 + 2 x1  s.t.  x0 + x1 = 1
        let x = solve_ok(&SimplexProblem {
            rows: vec![vec![1.0, 1.0]],
            rhs: vec![1.0],
            objective: vec![1.0, 2.0],
        })
        .unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && x[1].abs() < 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        // x0 = 1 and x0 = 2 cannot both hold
        let out = solve(&SimplexProblem {
            rows: vec![vec![1.0], vec![1.0]],
            rhs: vec![1.0, 2.0],
            objective: vec![0.0],
        })
        .unwrap();
        assert!(matches!(out, SimplexOutcome::Infeasible));
    }

    #[test]
    fn handles_redundant_rows() {
        // duplicated constraint leaves an artificial basic at zero
        let x = solve_ok(&SimplexProblem {
            rows: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            rhs: vec![1.0, 1.0],
            objective: vec![3.0, 1.0],
        })
        .unwrap();
        assert!(x[0].abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // -x0 = -0.5
        let x = solve_ok(&SimplexProblem {
            rows: vec![vec![-1.0, 0.0]],
            rhs: vec![-0.5],
            objective: vec![1.0, 1.0],
        })
        .unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12);
    }
}
