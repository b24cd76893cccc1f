//! CART regression tree with variance-reduction splits.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
    },
}

impl Node {
    pub fn samples(&self) -> usize {
        match *self {
            Node::Leaf { samples, .. } | Node::Split { samples, .. } => samples,
        }
    }
}

/// Growth limits for a single tree. `max_features` is an absolute count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_features: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Tree from an explicit node arena with the root at index 0.
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        assert!(!nodes.is_empty(), "a tree needs a root");
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Index of the leaf reached by `x`; rows go left when `x[f] <= threshold`.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("leaf_index always ends on a leaf"),
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Nested `{feature, threshold, left, right}` / `{leaf_value}` dump.
    pub fn to_json(&self, feature_names: &[String]) -> Value {
        fn walk(nodes: &[Node], i: usize, names: &[String]) -> Value {
            match &nodes[i] {
                Node::Leaf { value, samples } => json!({ "leaf_value": value, "samples": samples }),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    samples,
                } => json!({
                    "feature": names.get(*feature).cloned().unwrap_or_else(|| feature.to_string()),
                    "threshold": threshold,
                    "samples": samples,
                    "left": walk(nodes, *left, names),
                    "right": walk(nodes, *right, names),
                }),
            }
        }
        walk(&self.nodes, 0, feature_names)
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    score: f64,
}

/// Best split on one feature by maximising `S_L²/n_L + S_R²/n_R` over
/// node-centred targets (equivalent to minimising the summed SSE).
fn best_split_on(x: &[Vec<f64>], centred: &[(usize, f64)], feature: usize) -> Option<SplitChoice> {
    let mut pairs: Vec<(f64, f64)> = centred.iter().map(|&(r, c)| (x[r][feature], c)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut left_sum = 0.0;
    let mut best: Option<SplitChoice> = None;
    for i in 0..n - 1 {
        left_sum += pairs[i].1;
        let (a, b) = (pairs[i].0, pairs[i + 1].0);
        if a == b {
            continue;
        }
        let nl = (i + 1) as f64;
        let nr = (n - i - 1) as f64;
        let right_sum = total - left_sum;
        let score = left_sum * left_sum / nl + right_sum * right_sum / nr;
        if best.as_ref().is_none_or(|s| score > s.score) {
            let mid = 0.5 * (a + b);
            let threshold = if mid < b { mid } else { a };
            best = Some(SplitChoice { feature, threshold, score });
        }
    }
    best
}

/// Grows a tree on the rows of `x` (indices in `rows`, repeats allowed).
pub fn fit_tree_on(x: &[Vec<f64>], y: &[f64], rows: &[usize], params: &TreeParams, rng: &mut impl Rng) -> Result<Tree> {
    if rows.is_empty() || x.is_empty() {
        return Err(Error::EmptyInput("tree training set"));
    }
    let k = x[0].len();
    if x.iter().any(|r| r.len() != k) || y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if rows.iter().any(|&r| !y[r].is_finite() || x[r].iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidConfig("training data contains non-finite values".into()));
    }
    let mut tree = Tree { nodes: Vec::new() };
    grow(&mut tree, x, y, rows.to_vec(), 0, params, k, rng);
    Ok(tree)
}

pub fn fit_tree(x: &[Vec<f64>], y: &[f64], params: &TreeParams, rng: &mut impl Rng) -> Result<Tree> {
    let rows: Vec<usize> = (0..x.len()).collect();
    fit_tree_on(x, y, &rows, params, rng)
}

#[allow(clippy::too_many_arguments)]
fn grow(
    tree: &mut Tree,
    x: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    depth: usize,
    params: &TreeParams,
    k: usize,
    rng: &mut impl Rng,
) -> usize {
    let n = rows.len();
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
    let id = tree.nodes.len();
    tree.nodes.push(Node::Leaf { value: mean, samples: n });

    let constant = rows.iter().all(|&r| y[r] == y[rows[0]]);
    if depth >= params.max_depth || n < params.min_samples_split || n < 2 || constant {
        return id;
    }
    let centred: Vec<(usize, f64)> = rows.iter().map(|&r| (r, y[r] - mean)).collect();

    // sampled candidates are scanned in index order; if none of them can
    // split, the remaining features are tried one at a time
    let m = params.max_features.clamp(1, k);
    let mut order: Vec<usize> = (0..k).collect();
    if m < k {
        order.shuffle(rng);
    }
    let (head, tail) = order.split_at_mut(m);
    head.sort_unstable();
    let mut best: Option<SplitChoice> = None;
    for &f in head.iter() {
        if let Some(s) = best_split_on(x, &centred, f) {
            if best.as_ref().is_none_or(|b| s.score > b.score) {
                best = Some(s);
            }
        }
    }
    if best.is_none() {
        best = tail.iter().find_map(|&f| best_split_on(x, &centred, f));
    }
    let Some(split) = best else {
        return id;
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| x[r][split.feature] <= split.threshold);
    let left = grow(tree, x, y, left_rows, depth + 1, params, k, rng);
    let right = grow(tree, x, y, right_rows, depth + 1, params, k, rng);
    tree.nodes[id] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
        samples: n,
    };
    id
}
