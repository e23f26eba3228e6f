//! Failure-free matrix replay.
//!
//! With no faults, the failure-free rule's log-ratio dynamics are the fixed
//! linear recursion psi_t = A psi_{t-1} + sum_{k<=t} L_k with
//! A_ij = 1/(|I_i|+1) on j in I_i ∪ {i}. Replaying that recursion from the
//! recorded signals and comparing against the simulated trajectory is an
//! exactness check on the whole engine.

use crate::error::{Error, Result};
use crate::graph::Digraph;

#[derive(Debug, Clone)]
pub struct MatrixReplay {
    /// The equal-weight averaging matrix of the failure-free rule.
    pub a: Vec<Vec<f64>>,
    /// Limit row of A^k, from powering until successive powers agree.
    pub pi: Vec<f64>,
    /// Steps until the powers converged.
    pub convergence_steps: usize,
    /// (1 - n^{-n})^{1/n}, the per-step contraction factor of the bound.
    pub lambda: f64,
}

const POWER_TOL: f64 = 1e-9;

impl MatrixReplay {
    /// Requires a strongly connected graph, where the power limit exists
    /// and has strictly positive entries.
    pub fn build(g: &Digraph) -> Result<MatrixReplay> {
        if !g.is_strongly_connected() {
            return Err(Error::AssumptionFailed {
                check: "strong connectivity".into(),
                detail: "matrix replay requires a strongly connected graph".into(),
            });
        }
        let n = g.n();
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            let weight = 1.0 / (g.incoming(i).len() + 1) as f64;
            row[i] = weight;
            for &j in g.incoming(i) {
                row[j] = weight;
            }
        }

        // power A until consecutive powers agree entrywise
        let max_steps = 10 * n * n;
        let mut power = a.clone();
        let mut steps = 0;
        loop {
            let next = mat_mul(&power, &a);
            let diff = power
                .iter()
                .flatten()
                .zip(next.iter().flatten())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            steps += 1;
            power = next;
            if diff <= POWER_TOL {
                break;
            }
            if steps > max_steps {
                return Err(Error::AssumptionFailed {
                    check: "matrix power convergence".into(),
                    detail: format!("A^k did not settle within {max_steps} steps"),
                });
            }
        }
        let pi = power[0].clone();
        let nf = n as f64;
        let lambda = (1.0 - nf.powi(-(n as i32))).powf(1.0 / nf);
        Ok(MatrixReplay {
            a,
            pi,
            convergence_steps: steps,
            lambda,
        })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// Max row-sum deviation from 1.
    pub fn row_stochastic_defect(&self) -> f64 {
        self.a
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Replay psi_t = A psi_{t-1} + sum_{k<=t} L_k from zero initial state.
    /// `increments[t-1][i]` is agent i's round-t log-likelihood-ratio
    /// increment L_t^i; returns the psi trajectory for t = 1..=T.
    pub fn replay(&self, increments: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut psi = vec![0.0; n];
        let mut cumulative = vec![0.0; n];
        let mut out = Vec::with_capacity(increments.len());
        for l_t in increments {
            debug_assert_eq!(l_t.len(), n);
            for (c, l) in cumulative.iter_mut().zip(l_t) {
                *c += l;
            }
            let next: Vec<f64> = self
                .a
                .iter()
                .zip(&cumulative)
                .map(|(row, &cum)| row.iter().zip(&psi).map(|(a, p)| a * p).sum::<f64>() + cum)
                .collect();
            psi = next;
            out.push(psi.clone());
        }
        out
    }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}
