//! Independent oracles for the acceptance suite. Everything here is
//! deliberately written on different algorithmic paths than the library:
//! brute-force recursion instead of odometer enumeration, reachability
//! closure instead of Tarjan, and plane geometry instead of the simplex.

use std::collections::BTreeSet;

use byzlearn::graph::Digraph;
use byzlearn::signals::{AgentModelFile, ModelFile, SignalModel};

pub type EdgeSet = BTreeSet<(usize, usize)>;

/// All reduced graphs of `g` as (faulty set, effective edges), brute force.
pub fn naive_reduced_graphs(g: &Digraph, f: usize, m: usize) -> BTreeSet<(Vec<usize>, EdgeSet)> {
    let n = g.n();
    let mut out = BTreeSet::new();
    for fmask in 0u32..1 << n {
        let faulty: Vec<usize> = (0..n).filter(|i| fmask >> i & 1 == 1).collect();
        if faulty.len() > f {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|i| fmask >> i & 1 == 0).collect();
        let per_node: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                g.incoming(i)
                    .iter()
                    .copied()
                    .filter(|j| fmask >> j & 1 == 0)
                    .collect()
            })
            .collect();
        let mut acc: EdgeSet = BTreeSet::new();
        recurse(&members, &per_node, 0, m * f, &mut acc, &mut |edges| {
            out.insert((faulty.clone(), edges.clone()));
        });
    }
    out
}

fn recurse(
    members: &[usize],
    per_node: &[Vec<usize>],
    idx: usize,
    budget: usize,
    acc: &mut EdgeSet,
    emit: &mut impl FnMut(&EdgeSet),
) {
    if idx == members.len() {
        emit(acc);
        return;
    }
    let to = members[idx];
    let incoming = &per_node[idx];
    for drop_mask in 0u32..1 << incoming.len() {
        if (drop_mask.count_ones() as usize) > budget {
            continue;
        }
        let kept: Vec<(usize, usize)> = incoming
            .iter()
            .enumerate()
            .filter(|(pos, _)| drop_mask >> pos & 1 == 0)
            .map(|(_, &from)| (from, to))
            .collect();
        for e in &kept {
            acc.insert(*e);
        }
        recurse(members, per_node, idx + 1, budget, acc, emit);
        for e in &kept {
            acc.remove(e);
        }
    }
}

/// Source components via reachability closure.
pub fn naive_sources(members: &[usize], edges: &EdgeSet) -> Vec<BTreeSet<usize>> {
    let mut reach: BTreeSet<(usize, usize)> = members.iter().map(|&i| (i, i)).collect();
    for &e in edges {
        reach.insert(e);
    }
    for &k in members {
        for &i in members {
            for &j in members {
                if reach.contains(&(i, k)) && reach.contains(&(k, j)) {
                    reach.insert((i, j));
                }
            }
        }
    }
    let mut classes: Vec<BTreeSet<usize>> = Vec::new();
    for &i in members {
        if classes.iter().any(|c| c.contains(&i)) {
            continue;
        }
        classes.push(
            members
                .iter()
                .copied()
                .filter(|&j| reach.contains(&(i, j)) && reach.contains(&(j, i)))
                .collect(),
        );
    }
    classes
        .into_iter()
        .filter(|class| {
            !edges
                .iter()
                .any(|(from, to)| class.contains(to) && !class.contains(from))
        })
        .collect()
}

/// (assumption_holds, chi, gamma) by brute force.
pub fn naive_check_topology(g: &Digraph, f: usize, m: usize) -> (bool, u64, usize) {
    let graphs = naive_reduced_graphs(g, f, m);
    let chi = graphs.len() as u64;
    let mut holds = true;
    let mut gamma = usize::MAX;
    for (faulty, edges) in &graphs {
        let members: Vec<usize> = (0..g.n()).filter(|i| !faulty.contains(i)).collect();
        let sources = naive_sources(&members, edges);
        if sources.len() != 1 {
            holds = false;
        }
        gamma = gamma.min(sources.iter().map(|s| s.len()).min().unwrap_or(0));
    }
    (holds, chi, gamma)
}

/// Euclidean distance from a point to the convex hull of `part`, by plane
/// geometry (m = 1 or 2 only).
pub fn hull_distance(point: &[f64], part: &[Vec<f64>]) -> f64 {
    match point.len() {
        1 => {
            let lo = part.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = part.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            if point[0] < lo {
                lo - point[0]
            } else if point[0] > hi {
                point[0] - hi
            } else {
                0.0
            }
        }
        2 => {
            let hull = convex_hull_2d(part);
            match hull.len() {
                0 => f64::INFINITY,
                1 => dist2(point, &hull[0]),
                2 => segment_distance(point, &hull[0], &hull[1]),
                _ => {
                    let inside = hull
                        .iter()
                        .zip(hull.iter().cycle().skip(1))
                        .all(|(a, b)| cross(a, b, point) >= -1e-12 * (1.0 + dist2(a, b)));
                    if inside {
                        0.0
                    } else {
                        hull.iter()
                            .zip(hull.iter().cycle().skip(1))
                            .map(|(a, b)| segment_distance(point, a, b))
                            .fold(f64::INFINITY, f64::min)
                    }
                }
            }
        }
        d => panic!("hull oracle supports m <= 2, got {d}"),
    }
}

fn cross(a: &[f64], b: &[f64], p: &[f64]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
    if len2 == 0.0 {
        return dist2(p, a);
    }
    let t =
        (((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / len2).clamp(0.0, 1.0);
    let proj = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    dist2(p, &proj)
}

/// Andrew monotone chain; counter-clockwise, collinear points dropped.
fn convex_hull_2d(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| a[0] == b[0] && a[1] == b[1]);
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Vec<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vec<f64>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Binary-signal model where agent i's signal-0 probability under
/// hypothesis k is spread across [0.15, 0.85] (plus a small per-agent
/// offset): every agent separates every hypothesis pair.
pub fn informative_model_file(n: usize, m: usize) -> ModelFile {
    let agents = (0..n)
        .map(|i| {
            let rows: Vec<Vec<f64>> = (0..2)
                .map(|w| {
                    (0..m)
                        .map(|k| {
                            let p = 0.15 + 0.7 * k as f64 / (m as f64 - 1.0) + 0.01 * i as f64;
                            if w == 0 {
                                p
                            } else {
                                1.0 - p
                            }
                        })
                        .collect()
                })
                .collect();
            AgentModelFile {
                signals: 2,
                likelihoods: rows,
            }
        })
        .collect();
    ModelFile {
        hypotheses: (0..m).map(|k| format!("h{}", k + 1)).collect(),
        agents,
    }
}

pub fn informative_model(n: usize, m: usize) -> SignalModel {
    SignalModel::from_file(&informative_model_file(n, m)).unwrap()
}
