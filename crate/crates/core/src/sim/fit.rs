//! Least-squares quadratic fits for convergence-rate diagnostics.
//!
//! The learning theorems predict log-belief decay like -C t^2; runs are
//! checked by regressing the trailing half of a trajectory on {t^2, t, 1}
//! and looking at the t^2 coefficient and the fit quality.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFit {
    /// t^2 coefficient.
    pub a: f64,
    /// t coefficient.
    pub b: f64,
    /// Constant term.
    pub c: f64,
    pub r_squared: f64,
}

/// Fit y = a t^2 + b t + c by least squares over the given points.
/// The abscissa is centered internally, so round indices in the hundreds
/// stay well conditioned.
pub fn fit_quadratic(ts: &[f64], ys: &[f64]) -> Result<QuadFit> {
    let n = ts.len();
    if n < 3 || n != ys.len() {
        return Err(Error::InsufficientData {
            needed: 3,
            got: n.min(ys.len()),
        });
    }
    let t_mean = ts.iter().sum::<f64>() / n as f64;
    let u: Vec<f64> = ts.iter().map(|t| t - t_mean).collect();

    // normal equations for [u^2, u, 1]
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (ui, yi) in u.iter().zip(ys) {
        let basis = [ui * ui, *ui, 1.0];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
            rhs[r] += basis[r] * yi;
        }
    }
    let coeffs = solve3(m, rhs)?;
    let (au, bu, cu) = (coeffs[0], coeffs[1], coeffs[2]);
    // a u^2 + b u + c with u = t - t_mean, expanded back to t
    let a = au;
    let b = bu - 2.0 * au * t_mean;
    let c = cu - bu * t_mean + au * t_mean * t_mean;

    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let ss_res: f64 = u
        .iter()
        .zip(ys)
        .map(|(ui, yi)| {
            let fitted = au * ui * ui + bu * ui + cu;
            (yi - fitted).powi(2)
        })
        .sum();
    let r_squared = if ss_tot <= f64::MIN_POSITIVE {
        if ss_res <= 1e-18 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(QuadFit { a, b, c, r_squared })
}

fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return Err(Error::InsufficientData { needed: 3, got: 0 });
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in 0..3 {
            if row == col {
                continue;
            }
            let factor = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (v, p) in m[row].iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    Ok([rhs[0] / m[0][0], rhs[1] / m[1][1], rhs[2] / m[2][2]])
}

/// Quadratic decay fit of agent `agent`'s log-belief on hypothesis `theta`
/// over the trailing half of the trace. Requires at least 20 simulated
/// rounds and a belief trace (ratio traces are fitted through
/// [`crate::sim::RoundTrace::series`] with the caller choosing sign and pair).
pub fn fit_quadratic_decay(
    trace: &crate::sim::RoundTrace,
    agent: usize,
    theta: usize,
) -> Result<QuadFit> {
    if trace.kind != crate::sim::TraceKind::Beliefs {
        return Err(Error::InvalidConfig(
            "decay fits are defined on log-belief traces".into(),
        ));
    }
    let rounds = trace.rounds();
    if rounds < 20 {
        return Err(Error::InsufficientData {
            needed: 20,
            got: rounds,
        });
    }
    let series = trace.series(agent, theta);
    let (ts, ys) = trailing_half(&series[1..]);
    fit_quadratic(&ts, &ys)
}

/// The trailing half of a trajectory: points with t > T/2.
pub fn trailing_half(series: &[(usize, f64)]) -> (Vec<f64>, Vec<f64>) {
    let t_max = series.iter().map(|(t, _)| *t).max().unwrap_or(0);
    let cutoff = t_max / 2;
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for &(t, y) in series {
        if t > cutoff {
            ts.push(t as f64);
            ys.push(y);
        }
    }
    (ts, ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_an_exact_quadratic() {
        let ts: Vec<f64> = (1..=200).map(|t| t as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| -0.01 * t * t).collect();
        let fit = fit_quadratic(&ts, &ys).unwrap();
        assert!((fit.a + 0.01).abs() < 1e-9);
        assert!(fit.b.abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recovers_an_exact_line() {
        let ts: Vec<f64> = (1..=100).map(|t| t as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| -3.0 * t + 0.5).collect();
        let fit = fit_quadratic(&ts, &ys).unwrap();
        assert!(fit.a.abs() < 1e-9);
        assert!((fit.b + 3.0).abs() < 1e-9);
        assert!((fit.c - 0.5).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_tiny_samples() {
        assert!(fit_quadratic(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn trailing_half_keeps_late_rounds() {
        let series: Vec<(usize, f64)> = (1..=10).map(|t| (t, t as f64)).collect();
        let (ts, _) = trailing_half(&series);
        assert_eq!(ts, vec![6.0, 7.0, 8.0, 9.0, 10.0]);
    }
}
