//! Compact node sets for reduced-graph enumeration.
//!
//! Enumeration visits millions of reduced graphs; node sets are packed into
//! a single machine word so that building, comparing, and hashing a graph
//! costs a handful of instructions. This caps analyzable networks at 64
//! nodes, far above anything the exponential enumeration count admits.

/// Maximum node count supported by [`NodeSet`].
pub const MAX_NODES: usize = 64;

/// A set of node indices in `0..64`, one bit per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeSet(u64);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    /// All nodes `0..n`.
    pub fn full(n: usize) -> NodeSet {
        debug_assert!(n <= MAX_NODES);
        if n == 64 {
            NodeSet(u64::MAX)
        } else {
            NodeSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> NodeSet {
        debug_assert!(i < MAX_NODES);
        NodeSet(1u64 << i)
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < MAX_NODES);
        self.0 |= 1u64 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1u64 << i);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < MAX_NODES && self.0 >> i & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 & other.0)
    }

    pub fn difference(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Iterate members in increasing order.
    pub fn iter(self) -> NodeSetIter {
        NodeSetIter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn bits(self) -> u64 {
        self.0
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> NodeSet {
        let mut s = NodeSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl IntoIterator for NodeSet {
    type Item = usize;
    type IntoIter = NodeSetIter;
    fn into_iter(self) -> NodeSetIter {
        self.iter()
    }
}

pub struct NodeSetIter(u64);

impl Iterator for NodeSetIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            let i = self.0.trailing_zeros() as usize;
            self.0 &= self.0 - 1;
            Some(i)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_set_ops() {
        let a = NodeSet::from_iter([0, 2, 5]);
        let b = NodeSet::from_iter([2, 3]);
        assert_eq!(a.len(), 3);
        assert!(a.contains(5) && !a.contains(1));
        assert_eq!(a.intersection(b).to_vec(), vec![2]);
        assert_eq!(a.union(b).to_vec(), vec![0, 2, 3, 5]);
        assert_eq!(a.difference(b).to_vec(), vec![0, 5]);
        assert!(b.intersection(a).is_subset_of(a));
    }

    #[test]
    fn full_covers_boundaries() {
        assert_eq!(NodeSet::full(0).len(), 0);
        assert_eq!(NodeSet::full(64).len(), 64);
        assert_eq!(NodeSet::full(6).to_vec(), vec![0, 1, 2, 3, 4, 5]);
    }
}
