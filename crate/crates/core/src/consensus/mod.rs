//! Byzantine consensus primitives: the Tverberg-point vector iteration
//! (One-Iter) and the scalar trimmed-mean round.
//!
//! Both are pure functions of (own value, received multiset, fault budget).
//! Canonical orderings everywhere — pool order is own value first, then
//! received entries by ascending sender id; subsets in lexicographic index
//! order — so identical inputs produce bit-identical outputs.

mod simplex;
mod tverberg;

pub use tverberg::{tverberg_point, TverbergResult};

use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Subset-loop guard: One-Iter over a pool larger than this is refused by
/// default, since the loop solves C(pool, (m+1)f+1) feasibility programs.
pub const DEFAULT_MAX_POINTS: usize = 20;

/// Messages received in one round, one entry per incoming neighbor,
/// ordered by sender id. Duplicate values are kept; senders are unique.
#[derive(Debug, Clone)]
pub struct ReceivedMultiset<T> {
    entries: Vec<(usize, T)>,
}

impl<T: Clone> ReceivedMultiset<T> {
    pub fn new(mut entries: Vec<(usize, T)>) -> ReceivedMultiset<T> {
        entries.sort_by_key(|(sender, _)| *sender);
        ReceivedMultiset { entries }
    }

    /// Assemble the multiset a receiver works with: one entry per expected
    /// incoming neighbor, substituting `default` where no message arrived.
    /// Returns the multiset and how many defaults were substituted.
    pub fn from_messages<'a>(
        expected: impl IntoIterator<Item = &'a usize>,
        messages: &BTreeMap<usize, T>,
        default: &T,
    ) -> (ReceivedMultiset<T>, usize) {
        let mut entries = Vec::new();
        let mut substituted = 0;
        for &sender in expected {
            match messages.get(&sender) {
                Some(v) => entries.push((sender, v.clone())),
                None => {
                    entries.push((sender, default.clone()));
                    substituted += 1;
                }
            }
        }
        (ReceivedMultiset::new(entries), substituted)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, T)> {
        self.entries.iter()
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|(_, v)| v)
    }
}

/// One iteration of the Tverberg-trimmed vector consensus: collect a
/// Tverberg point of every ((m+1)f + 1)-subset of the received multiset
/// plus the own value, then average the own value with all of them.
/// Coincident Tverberg points are kept as duplicates (multiset mean).
pub fn one_iter(own: &[f64], received: &ReceivedMultiset<Vec<f64>>, f: usize) -> Result<Vec<f64>> {
    one_iter_with_limit(own, received, f, DEFAULT_MAX_POINTS)
}

pub fn one_iter_with_limit(
    own: &[f64],
    received: &ReceivedMultiset<Vec<f64>>,
    f: usize,
    max_points: usize,
) -> Result<Vec<f64>> {
    let m = own.len();
    let subset_size = (m + 1) * f + 1;
    let pool: Vec<&[f64]> = std::iter::once(own)
        .chain(received.values().map(|v| v.as_slice()))
        .collect();
    if pool.iter().any(|p| p.len() != m) {
        return Err(Error::InvalidConfig(
            "one_iter: message dimension mismatch".into(),
        ));
    }
    if pool.len() < subset_size {
        return Err(Error::DegenerateInput {
            what: "one_iter",
            needed: subset_size,
            got: pool.len(),
        });
    }
    if pool.len() > max_points {
        return Err(Error::TooManyPoints {
            count: pool.len(),
            limit: max_points,
        });
    }

    let mut sum = own.to_vec();
    let mut count = 1usize;
    let mut subset: Vec<usize> = (0..subset_size).collect();
    loop {
        let points: Vec<Vec<f64>> = subset.iter().map(|&i| pool[i].to_vec()).collect();
        let z = tverberg_point(&points, f)?;
        for (acc, v) in sum.iter_mut().zip(&z.point) {
            *acc += v;
        }
        count += 1;
        if !next_combination(&mut subset, pool.len()) {
            break;
        }
    }
    for v in sum.iter_mut() {
        *v /= count as f64;
    }
    Ok(sum)
}

fn next_combination(indices: &mut [usize], n: usize) -> bool {
    let k = indices.len();
    let mut i = k;
    loop {
        if i == 0 {
            return false;
        }
        i -= 1;
        if indices[i] != i + n - k {
            break;
        }
    }
    indices[i] += 1;
    for j in i + 1..k {
        indices[j] = indices[j - 1] + 1;
    }
    true
}

/// One iteration of scalar trimmed consensus: sort received values, drop
/// the f smallest and f largest, average survivors with the own value.
pub fn trimmed_scalar_round(own: f64, received: &ReceivedMultiset<f64>, f: usize) -> Result<f64> {
    if received.len() < 2 * f + 1 {
        return Err(Error::DegenerateInput {
            what: "trimmed_scalar_round",
            needed: 2 * f + 1,
            got: received.len(),
        });
    }
    let mut sorted: Vec<(usize, f64)> = received.iter().map(|&(s, v)| (s, v)).collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let survivors = &sorted[f..sorted.len() - f];
    let sum: f64 = survivors.iter().map(|(_, v)| v).sum();
    Ok((sum + own) / (survivors.len() + 1) as f64)
}
