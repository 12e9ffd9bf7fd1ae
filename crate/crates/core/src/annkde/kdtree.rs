//! kd-tree with best-bin-first k-NN search.
//!
//! Nodes split on the dimension of largest spread at the median. Search
//! keeps a max-heap of the k best candidates and a min-heap of pending
//! subtrees ordered by their minimum possible squared distance; a subtree
//! is skipped once its bound exceeds `d_k^2 / (1+eps)^2`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        ids: Vec<usize>,
    },
    Split {
        dim: usize,
        value: f32,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<Node>,
    root: usize,
}

fn dist2(a: &[f32], b: &[f32]) -> f64 {
    let mut sum = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = (*x - *y) as f64;
        sum += d * d;
    }
    sum
}

#[inline]
fn vec_of<'a>(vectors: &'a [f32], dim: usize, id: usize) -> &'a [f32] {
    &vectors[id * dim..(id + 1) * dim]
}

impl KdTree {
    pub fn build(vectors: &[f32], dim: usize, count: usize) -> KdTree {
        let mut tree = KdTree {
            nodes: Vec::new(),
            root: 0,
        };
        let ids: Vec<usize> = (0..count).collect();
        tree.root = tree.build_node(vectors, dim, ids);
        tree
    }

    fn build_node(&mut self, vectors: &[f32], dim: usize, mut ids: Vec<usize>) -> usize {
        if ids.len() <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { ids });
            return self.nodes.len() - 1;
        }
        // Dimension of largest spread.
        let mut best_dim = 0;
        let mut best_spread = -1.0f32;
        for d in 0..dim {
            let mut lo = f32::MAX;
            let mut hi = f32::MIN;
            for &id in &ids {
                let v = vectors[id * dim + d];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        if best_spread <= 0.0 {
            // All points identical along every dimension; keep as one leaf.
            self.nodes.push(Node::Leaf { ids });
            return self.nodes.len() - 1;
        }
        let mid = ids.len() / 2;
        ids.sort_by(|&a, &b| vectors[a * dim + best_dim].total_cmp(&vectors[b * dim + best_dim]));
        let value = vectors[ids[mid] * dim + best_dim];
        let right_ids = ids.split_off(mid);
        let left = self.build_node(vectors, dim, ids);
        let right = self.build_node(vectors, dim, right_ids);
        self.nodes.push(Node::Split {
            dim: best_dim,
            value,
            left,
            right,
        });
        self.nodes.len() - 1
    }

    /// Push a new entry down to its leaf. Leaves grow without splitting;
    /// the owner rebuilds periodically.
    pub fn insert(&mut self, vectors: &[f32], dim: usize, id: usize) {
        let mut node = self.root;
        loop {
            match &mut self.nodes[node] {
                Node::Leaf { ids } => {
                    ids.push(id);
                    return;
                }
                Node::Split {
                    dim: sd,
                    value,
                    left,
                    right,
                } => {
                    node = if vectors[id * dim + *sd] < *value { *left } else { *right };
                }
            }
        }
    }

    /// k nearest ids with squared distances, best-bin-first.
    pub fn knn(
        &self,
        vectors: &[f32],
        dim: usize,
        q: &[f32],
        k: usize,
        epsilon: f64,
        max_leaves: usize,
    ) -> Vec<(usize, f64)> {
        // Max-heap of the current k best (dist2, id).
        let mut best: BinaryHeap<(OrdF64, usize)> = BinaryHeap::new();
        // Min-heap of (bound, node).
        let mut queue: BinaryHeap<Reverse<(OrdF64, usize)>> = BinaryHeap::new();
        queue.push(Reverse((OrdF64(0.0), self.root)));
        let shrink = 1.0 / ((1.0 + epsilon) * (1.0 + epsilon));
        let mut leaves_visited = 0usize;

        while let Some(Reverse((OrdF64(bound), node))) = queue.pop() {
            if best.len() == k {
                let kth = best.peek().unwrap().0 .0;
                if bound > kth * shrink {
                    break;
                }
            }
            match &self.nodes[node] {
                Node::Leaf { ids } => {
                    for &id in ids {
                        let d2 = dist2(q, vec_of(vectors, dim, id));
                        if best.len() < k {
                            best.push((OrdF64(d2), id));
                        } else {
                            let (OrdF64(kth), kid) = *best.peek().unwrap();
                            if d2 < kth || (d2 == kth && id < kid) {
                                best.pop();
                                best.push((OrdF64(d2), id));
                            }
                        }
                    }
                    leaves_visited += 1;
                    if leaves_visited >= max_leaves {
                        break;
                    }
                }
                Node::Split {
                    dim: sd,
                    value,
                    left,
                    right,
                } => {
                    let diff = (q[*sd] - value) as f64;
                    let (near, far) = if q[*sd] < *value { (*left, *right) } else { (*right, *left) };
                    queue.push(Reverse((OrdF64(bound), near)));
                    queue.push(Reverse((OrdF64(bound.max(diff * diff)), far)));
                }
            }
        }

        let mut out: Vec<(usize, f64)> = best.into_iter().map(|(OrdF64(d2), id)| (id, d2)).collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }
}

/// Total-ordered f64 for use in heaps (inputs are finite by construction).
#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Linear-scan k-NN used below the tree engagement threshold.
pub fn brute_force(vectors: &[f32], dim: usize, count: usize, q: &[f32], k: usize) -> Vec<(usize, f64)> {
    let mut dists: Vec<(usize, f64)> = (0..count)
        .map(|i| (i, dist2(q, vec_of(vectors, dim, i))))
        .collect();
    dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    dists.truncate(k);
    dists
}
