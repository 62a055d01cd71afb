//! Binary regression trees grown by CART-style SSE reduction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node<T> {
    /// Rows with `x[var] <= threshold` go left.
    Split {
        var: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf {
        mean: T,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    /// A tree from explicit nodes; node 0 is the root.
    pub fn from_nodes(nodes: Vec<Node<T>>) -> Self {
        Tree { nodes }
    }

    pub fn leaf(mean: T) -> Self {
        Tree {
            nodes: vec![Node::Leaf { mean }],
        }
    }

    /// Prediction for a row given as a feature accessor.
    pub fn predict(&self, x: impl Fn(usize) -> T) -> T {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { mean } => return *mean,
                Node::Split {
                    var,
                    threshold,
                    left,
                    right,
                } => at = if x(*var) <= *threshold { *left } else { *right },
            }
        }
    }

    /// Variables used in at least one split, ascending.
    pub fn split_vars(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { var, .. } => Some(*var),
                Node::Leaf { .. } => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

pub(crate) struct GrowConfig {
    pub mtry: usize,
    pub min_node_size: usize,
}

struct Candidate<T> {
    var: usize,
    threshold: T,
    gain: T,
}

/// Best split of `rows` on `var`: midpoint thresholds between consecutive
/// distinct values, scored by SSE reduction. Earlier (lower) thresholds win
/// ties.
fn best_split_on<T: Scalar>(x: &[T], y: &[T], rows: &[usize], var: usize) -> Option<Candidate<T>> {
    let mut order: Vec<usize> = rows.to_vec();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite features"));
    let n = order.len();
    let total: T = order.iter().map(|&i| y[i]).sum();
    let nt = T::from_usize_lossy(n);
    let base = total * total / nt;
    let mut left = T::zero();
    let mut best: Option<Candidate<T>> = None;
    for k in 0..n - 1 {
        left += y[order[k]];
        let (xa, xb) = (x[order[k]], x[order[k + 1]]);
        if xa == xb {
            continue;
        }
        let nl = T::from_usize_lossy(k + 1);
        let nr = nt - nl;
        let right = total - left;
        let gain = left * left / nl + right * right / nr - base;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            let mut threshold = (xa + xb) / T::lit(2.0);
            if threshold >= xb {
                threshold = xa;
            }
            best = Some(Candidate {
                var,
                threshold,
                gain,
            });
        }
    }
    best
}

/// Grows a tree on the (multi)set `rows` of the columns `x`.
pub(crate) fn grow<T: Scalar, R: Rng>(
    columns: &[&[T]],
    y: &[T],
    rows: Vec<usize>,
    cfg: &GrowConfig,
    rng: &mut R,
) -> Tree<T> {
    let n_vars = columns.len();
    let mut nodes: Vec<Node<T>> = Vec::new();
    // (node slot, rows)
    let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
    nodes.push(Node::Leaf { mean: T::zero() });
    stack.push((0, rows));
    while let Some((slot, rows)) = stack.pop() {
        let mean = rows.iter().map(|&i| y[i]).sum::<T>() / T::from_usize_lossy(rows.len());
        nodes[slot] = Node::Leaf { mean };
        if rows.len() < cfg.min_node_size {
            continue;
        }
        let mut vars: Vec<usize> = rand::seq::index::sample(rng, n_vars, cfg.mtry).into_vec();
        vars.sort_unstable();
        let mut best: Option<Candidate<T>> = None;
        for &v in &vars {
            if let Some(c) = best_split_on(columns[v], y, &rows, v) {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best else { continue };
        if !(best.gain > T::zero()) {
            continue;
        }
        let col = columns[best.var];
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| col[i] <= best.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { mean: T::zero() });
        let right = nodes.len();
        nodes.push(Node::Leaf { mean: T::zero() });
        nodes[slot] = Node::Split {
            var: best.var,
            threshold: best.threshold,
            left,
            right,
        };
        stack.push((right, r));
        stack.push((left, l));
    }
    Tree { nodes }
}
