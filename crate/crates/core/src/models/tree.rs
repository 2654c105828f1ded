use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Criterion {
    /// Sum of squared errors; leaves hold the mean target.
    Variance,
    /// Binary Gini impurity; leaves hold the majority class (ties → 0).
    Gini,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Impurity decrease weighted by the node's share of samples.
        gain: f64,
    },
    Leaf { value: f64 },
}

/// A binary decision tree; `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
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

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Adds each split's gain to its feature.
    pub fn accumulate_importance(&self, out: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = *node {
                out[feature] += gain;
            }
        }
    }
}

/// Column-major view of the training matrix with one presorted order per
/// feature.
pub(crate) struct Presorted {
    pub columns: Vec<Vec<f64>>,
    /// `order[f]` lists row ids sorted by `columns[f]`.
    pub order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(rows: &[&[f64]], n_cols: usize) -> Self {
        let columns: Vec<Vec<f64>> = (0..n_cols).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let order = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                idx
            })
            .collect();
        Self { columns, order }
    }

    /// Per-feature sorted sample lists for a multiset of rows, given as a
    /// count per row.
    pub fn sample_order(&self, counts: &[u32]) -> Vec<Vec<u32>> {
        self.order
            .iter()
            .map(|ord| {
                let mut out = Vec::with_capacity(counts.iter().sum::<u32>() as usize);
                for &r in ord {
                    for _ in 0..counts[r as usize] {
                        out.push(r);
                    }
                }
                out
            })
            .collect()
    }
}

pub(crate) struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features per split; all features when `None`.
    pub max_features: Option<usize>,
}

struct Task {
    node: usize,
    lo: usize,
    hi: usize,
    depth: usize,
}

struct Best {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

/// Grows one tree over `samples` (one sorted list per feature, all holding
/// the same multiset of rows).
pub(crate) fn grow<R: Rng>(
    data: &Presorted,
    targets: &[f64],
    mut samples: Vec<Vec<u32>>,
    params: &TreeParams,
    rng: &mut R,
) -> Tree {
    let n_features = data.columns.len();
    let n_total = samples.first().map_or(0, Vec::len);
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![Task {
        node: 0,
        lo: 0,
        hi: n_total,
        depth: 0,
    }];
    let mut scratch: Vec<u32> = Vec::with_capacity(n_total);
    let mut goes_left = vec![false; targets.len()];
    let mut candidates: Vec<usize> = (0..n_features).collect();

    while let Some(task) = stack.pop() {
        let ids = &samples[0][task.lo..task.hi];
        let n = ids.len();
        let (sum, ones, lo_y, hi_y) = ids.iter().fold((0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY), |acc, &r| {
            let y = targets[r as usize];
            (acc.0 + y, acc.1 + usize::from(y > 0.5), acc.2.min(y), acc.3.max(y))
        });
        let leaf_value = match params.criterion {
            Criterion::Variance => sum / n as f64,
            Criterion::Gini => f64::from(u8::from(2 * ones > n)),
        };
        nodes[task.node] = Node::Leaf { value: leaf_value };

        let pure = lo_y == hi_y;
        let depth_reached = params.max_depth.is_some_and(|d| task.depth >= d);
        if pure || depth_reached || n < 2 * params.min_samples_leaf.max(1) {
            continue;
        }

        if let Some(k) = params.max_features.filter(|&k| k < n_features) {
            candidates = index::sample(rng, n_features, k).into_vec();
            candidates.sort_unstable();
        }

        let mut best: Option<Best> = None;
        for &f in &candidates {
            let col = &data.columns[f];
            let sorted = &samples[f][task.lo..task.hi];
            let mut sum_l = 0.0;
            let mut ones_l = 0usize;
            for i in 0..n - 1 {
                let r = sorted[i] as usize;
                sum_l += targets[r];
                ones_l += usize::from(targets[r] > 0.5);
                let n_l = i + 1;
                let n_r = n - n_l;
                if n_l < params.min_samples_leaf || n_r < params.min_samples_leaf {
                    continue;
                }
                let (a, b) = (col[r], col[sorted[i + 1] as usize]);
                if a >= b {
                    continue;
                }
                let decrease = match params.criterion {
                    Criterion::Variance => {
                        let sum_r = sum - sum_l;
                        sum_l * sum_l / n_l as f64 + sum_r * sum_r / n_r as f64 - sum * sum / n as f64
                    }
                    Criterion::Gini => {
                        gini_weighted(n, ones) - gini_weighted(n_l, ones_l) - gini_weighted(n_r, ones - ones_l)
                    }
                };
                if decrease > best.as_ref().map_or(0.0, |b| b.decrease) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(Best {
                        feature: f,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        let Some(best) = best else { continue };

        let col = &data.columns[best.feature];
        for &r in &samples[best.feature][task.lo..task.hi] {
            goes_left[r as usize] = col[r as usize] <= best.threshold;
        }
        let mut n_left = 0;
        for order in samples.iter_mut() {
            let slice = &mut order[task.lo..task.hi];
            scratch.clear();
            let mut w = 0;
            for k in 0..slice.len() {
                let r = slice[k];
                if goes_left[r as usize] {
                    slice[w] = r;
                    w += 1;
                } else {
                    scratch.push(r);
                }
            }
            slice[w..].copy_from_slice(&scratch);
            n_left = w;
        }

        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[task.node] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain: best.decrease / n_total as f64,
        };
        let mid = task.lo + n_left;
        stack.push(Task {
            node: right,
            lo: mid,
            hi: task.hi,
            depth: task.depth + 1,
        });
        stack.push(Task {
            node: left,
            lo: task.lo,
            hi: mid,
            depth: task.depth + 1,
        });
    }
    Tree { nodes }
}

/// `n · gini` for a binary node with `ones` positives.
fn gini_weighted(n: usize, ones: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (n, ones) = (n as f64, ones as f64);
    let zeros = n - ones;
    n - (ones * ones + zeros * zeros) / n
}
