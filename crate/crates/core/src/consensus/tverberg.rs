//! Tverberg points: given (m+1)f + 1 points in R^m, find a partition into
//! f + 1 nonempty parts whose convex hulls share a point, and return such a
//! point. Existence is guaranteed for this multiset size.
//!
//! Determinism contract: partitions are tried as restricted-growth strings
//! in lexicographic order and the first feasible one is taken; within a
//! partition the point minimizes the sum of its coordinates over the hull
//! intersection, solved by the fixed-pivot simplex.

use super::simplex::{solve, SimplexOutcome, SimplexProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TverbergResult {
    pub point: Vec<f64>,
    /// The partition used, as index lists into the input multiset.
    pub partition: Vec<Vec<usize>>,
    /// Smallest slack over the per-part hull-membership residuals and the
    /// convex weights; at least -1e-9 for a healthy solve.
    pub feasibility_margin: f64,
}

/// A Tverberg point of `points` for fault budget `f`.
///
/// Requires exactly (m+1)f + 1 points, the multiset size used by the
/// One-Iter subset loop.
pub fn tverberg_point(points: &[Vec<f64>], f: usize) -> Result<TverbergResult> {
    let count = points.len();
    if count == 0 {
        return Err(Error::DegenerateInput {
            what: "tverberg_point",
            needed: 1,
            got: 0,
        });
    }
    let m = points[0].len();
    if m == 0 || points.iter().any(|p| p.len() != m) {
        return Err(Error::InvalidConfig(
            "tverberg_point: inconsistent point dimensions".into(),
        ));
    }
    let required = (m + 1) * f + 1;
    if count != required {
        return Err(Error::DegenerateInput {
            what: "tverberg_point",
            needed: required,
            got: count,
        });
    }

    if f == 0 {
        // single point, single part
        return Ok(TverbergResult {
            point: points[0].clone(),
            partition: vec![vec![0]],
            feasibility_margin: 0.0,
        });
    }

    let mut rgs = RestrictedGrowth::new(count, f + 1);
    while let Some(assignment) = rgs.next() {
        let mut parts: Vec<Vec<usize>> = vec![Vec::new(); f + 1];
        for (idx, &block) in assignment.iter().enumerate() {
            parts[block].push(idx);
        }
        if let Some(lambda) = solve_partition(points, &parts, m)? {
            let point = combination(points, &parts[0], &lambda[0]);
            let margin = margin_of(points, &parts, &lambda, &point);
            return Ok(TverbergResult {
                point,
                partition: parts,
                feasibility_margin: margin,
            });
        }
    }
    Err(Error::LpInternal(
        "no feasible Tverberg partition found; guaranteed to exist, so the LP is defective".into(),
    ))
}

/// Feasibility LP for one candidate partition. Variables are the convex
/// weights of every part, grouped part by part; the candidate point is
/// eliminated as part 0's combination. Returns the per-part weights when
/// the hulls intersect.
#[allow(clippy::needless_range_loop)]
fn solve_partition(
    points: &[Vec<f64>],
    parts: &[Vec<usize>],
    m: usize,
) -> Result<Option<Vec<Vec<f64>>>> {
    let n_vars: usize = parts.iter().map(|p| p.len()).sum();
    let offsets: Vec<usize> = parts
        .iter()
        .scan(0, |acc, p| {
            let off = *acc;
            *acc += p.len();
            Some(off)
        })
        .collect();

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    // hull agreement: part k's combination equals part 0's, coordinate-wise
    for k in 1..parts.len() {
        for c in 0..m {
            let mut row = vec![0.0; n_vars];
            for (slot, &idx) in parts[k].iter().enumerate() {
                row[offsets[k] + slot] = points[idx][c];
            }
            for (slot, &idx) in parts[0].iter().enumerate() {
                row[offsets[0] + slot] = -points[idx][c];
            }
            rows.push(row);
            rhs.push(0.0);
        }
    }
    // convexity: each part's weights sum to one
    for (k, part) in parts.iter().enumerate() {
        let mut row = vec![0.0; n_vars];
        for slot in 0..part.len() {
            row[offsets[k] + slot] = 1.0;
        }
        rows.push(row);
        rhs.push(1.0);
    }
    // objective: minimize the coordinate sum of the point
    let mut objective = vec![0.0; n_vars];
    for (slot, &idx) in parts[0].iter().enumerate() {
        objective[offsets[0] + slot] = points[idx].iter().sum();
    }

    match solve(&SimplexProblem {
        rows,
        rhs,
        objective,
    })? {
        SimplexOutcome::Infeasible => Ok(None),
        SimplexOutcome::Optimal(x) => Ok(Some(
            parts
                .iter()
                .enumerate()
                .map(|(k, part)| x[offsets[k]..offsets[k] + part.len()].to_vec())
                .collect(),
        )),
    }
}

fn combination(points: &[Vec<f64>], part: &[usize], weights: &[f64]) -> Vec<f64> {
    let m = points[0].len();
    let mut out = vec![0.0; m];
    for (&idx, &w) in part.iter().zip(weights) {
        for (o, p) in out.iter_mut().zip(&points[idx]) {
            *o += w * p;
        }
    }
    out
}

fn margin_of(points: &[Vec<f64>], parts: &[Vec<usize>], lambda: &[Vec<f64>], point: &[f64]) -> f64 {
    let mut margin = f64::INFINITY;
    for (part, weights) in parts.iter().zip(lambda) {
        let combo = combination(points, part, weights);
        let residual = combo
            .iter()
            .zip(point)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        margin = margin.min(-residual);
        let weight_sum: f64 = weights.iter().sum();
        margin = margin.min(-(weight_sum - 1.0).abs());
        for &w in weights {
            margin = margin.min(w);
        }
    }
    margin.min(0.0)
}

/// Restricted growth strings over `n` elements with exactly `blocks`
/// blocks, in lexicographic order. Element 0 always lands in block 0.
struct RestrictedGrowth {
    n: usize,
    blocks: usize,
    current: Vec<usize>,
    started: bool,
    done: bool,
}

impl RestrictedGrowth {
    fn new(n: usize, blocks: usize) -> RestrictedGrowth {
        RestrictedGrowth {
            n,
            blocks,
            current: vec![0; n],
            started: false,
            done: blocks > n || blocks == 0,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        loop {
            if self.done {
                return None;
            }
            if !self.started {
                self.started = true;
            } else if !self.advance() {
                self.done = true;
                return None;
            }
            let used = self.current.iter().max().copied().unwrap_or(0) + 1;
            if used == self.blocks {
                return Some(&self.current);
            }
        }
    }

    /// Lexicographic successor among all restricted growth strings.
    fn advance(&mut self) -> bool {
        let n = self.n;
        let mut i = n;
        while i > 1 {
            i -= 1;
            let prefix_max = self.current[..i].iter().max().copied().unwrap_or(0);
            if self.current[i] <= prefix_max && self.current[i] < self.blocks - 1 {
                self.current[i] += 1;
                for j in i + 1..n {
                    self.current[j] = 0;
                }
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgs_enumerates_partitions_of_three_into_two() {
        let mut rgs = RestrictedGrowth::new(3, 2);
        let mut seen = Vec::new();
        while let Some(a) = rgs.next() {
            seen.push(a.to_vec());
        }
        assert_eq!(seen, vec![vec![0, 0, 1], vec![0, 1, 0], vec![0, 1, 1]]);
    }

    #[test]
    fn rgs_counts_stirling_numbers() {
        // S(5, 3) = 25
        let mut rgs = RestrictedGrowth::new(5, 3);
        let mut count = 0;
        while rgs.next().is_some() {
            count += 1;
        }
        assert_eq!(count, 25);
    }

    #[test]
    fn scalar_three_points_yield_median() {
        let points = vec![vec![0.0], vec![1.0], vec![2.0]];
        let r = tverberg_point(&points, 1).unwrap();
        assert_eq!(r.point, vec![1.0]);
        assert_eq!(r.partition, vec![vec![0, 2], vec![1]]);
        assert!(r.feasibility_margin >= -1e-9);
    }

    #[test]
    fn identical_points_return_that_point() {
        let p = vec![3.25, -1.5];
        let points = vec![p.clone(); 4]; // (m+1)f+1 = 4 for m=2, f=1
        let r = tverberg_point(&points, 1).unwrap();
        assert_eq!(r.point, p);
        assert!(r.feasibility_margin >= -1e-9);
    }

    #[test]
    fn triangle_with_centroid() {
        let points = vec![
            vec![0.0, 0.0],
            vec![4.0, 0.0],
            vec![0.0, 4.0],
            vec![4.0 / 3.0, 4.0 / 3.0],
        ];
        let r = tverberg_point(&points, 1).unwrap();
        assert!(r.feasibility_margin >= -1e-9);
        // the returned point must sit in the convex hull of each part;
        // check the part containing the centroid explicitly
        let centroid_part = r.partition.iter().find(|part| part.contains(&3)).unwrap();
        assert!(!centroid_part.is_empty());
        // any point of the triangle has nonnegative barycentric coords
        let (x, y) = (r.point[0], r.point[1]);
        assert!(x >= -1e-9 && y >= -1e-9 && x + y <= 4.0 + 1e-9);
    }

    #[test]
    fn wrong_cardinality_is_rejected() {
        let points = vec![vec![0.0], vec![1.0]];
        match tverberg_point(&points, 1) {
            Err(Error::DegenerateInput { needed, got, .. }) => {
                assert_eq!((needed, got), (3, 2));
            }
            other => panic!("expected degenerate-input error, got {other:?}"),
        }
    }

    #[test]
    fn is_deterministic() {
        let points = vec![
            vec![0.3, 1.9],
            vec![-2.0, 0.4],
            vec![1.7, -0.6],
            vec![0.2, 0.2],
        ];
        let a = tverberg_point(&points, 1).unwrap();
        let b = tverberg_point(&points, 1).unwrap();
        assert_eq!(a.point, b.point);
        assert_eq!(a.partition, b.partition);
    }
}
