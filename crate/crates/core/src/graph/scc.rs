//! Tarjan strongly-connected components over bitmask adjacency.
//!
//! The scan runs once per enumerated reduced graph, so the workspace is
//! reusable: no per-call allocation beyond the output component list.
//!
//! SCCs are invariant under edge reversal, so the algorithm walks the
//! *incoming*-neighbor masks directly (i.e. it runs on the transpose);
//! source detection afterwards uses the same incoming masks.

use super::nodeset::NodeSet;

/// Reusable Tarjan state sized for up to 64 nodes.
pub struct SccWorkspace {
    index: Vec<u32>,
    low: Vec<u32>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    // explicit DFS frames: (node, remaining-successor mask)
    frames: Vec<(usize, u64)>,
    counter: u32,
}

const UNVISITED: u32 = u32::MAX;

impl SccWorkspace {
    pub fn new() -> Self {
        SccWorkspace {
            index: Vec::new(),
            low: Vec::new(),
            on_stack: Vec::new(),
            stack: Vec::new(),
            frames: Vec::new(),
            counter: 0,
        }
    }

    /// Strongly connected components of the graph induced on `members`,
    /// where `adj[v]` is a successor mask (edge direction does not affect
    /// the partition). Components are pushed in Tarjan completion order.
    pub fn run(&mut self, members: NodeSet, adj: &[NodeSet], out: &mut Vec<NodeSet>) {
        out.clear();
        let n = adj.len();
        self.index.clear();
        self.index.resize(n, UNVISITED);
        self.low.clear();
        self.low.resize(n, 0);
        self.on_stack.clear();
        self.on_stack.resize(n, false);
        self.stack.clear();
        self.counter = 0;

        for root in members.iter() {
            if self.index[root] != UNVISITED {
                continue;
            }
            self.frames
                .push((root, adj[root].intersection(members).bits()));
            self.index[root] = self.counter;
            self.low[root] = self.counter;
            self.counter += 1;
            self.stack.push(root);
            self.on_stack[root] = true;

            while let Some(&mut (v, ref mut rest)) = self.frames.last_mut() {
                if *rest != 0 {
                    let w = rest.trailing_zeros() as usize;
                    *rest &= *rest - 1;
                    if self.index[w] == UNVISITED {
                        self.index[w] = self.counter;
                        self.low[w] = self.counter;
                        self.counter += 1;
                        self.stack.push(w);
                        self.on_stack[w] = true;
                        self.frames.push((w, adj[w].intersection(members).bits()));
                    } else if self.on_stack[w] {
                        self.low[v] = self.low[v].min(self.index[w]);
                    }
                } else {
                    self.frames.pop();
                    if self.low[v] == self.index[v] {
                        let mut comp = NodeSet::EMPTY;
                        loop {
                            let w = self.stack.pop().expect("tarjan stack underflow");
                            self.on_stack[w] = false;
                            comp.insert(w);
                            if w == v {
                                break;
                            }
                        }
                        out.push(comp);
                    }
                    if let Some(&mut (parent, _)) = self.frames.last_mut() {
                        self.low[parent] = self.low[parent].min(self.low[v]);
                    }
                }
            }
        }
    }
}

impl Default for SccWorkspace {
    fn default() -> Self {
        Self::new()
    }
}
