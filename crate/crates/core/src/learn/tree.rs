//! CART trees shared by the forest (Gini, 0/1 targets) and boosting
//! (squared error on residuals).
//!
//! A split sends `x[feature] <= threshold` left. Thresholds are midpoints
//! between consecutive distinct values. Among equally good splits the lowest
//! feature index wins, then the lowest threshold.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::learn::{check_training_data, Classifier};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Criterion {
    /// Binary Gini impurity over targets in {0, 1}.
    Gini,
    SquaredError,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` examines all, in index order.
    pub max_features: Option<usize>,
    pub criterion: Criterion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
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
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            max = max.max(d);
            if let Node::Split { left, right, .. } = self.nodes[i] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        max
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    /// Weighted child impurity; lower is better.
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.score < o.score
                    || (self.score == o.score
                        && (self.feature < o.feature || (self.feature == o.feature && self.threshold < o.threshold)))
            }
        }
    }
}

fn children_impurity(criterion: Criterion, n_l: f64, s_l: f64, q_l: f64, n_r: f64, s_r: f64, q_r: f64) -> f64 {
    match criterion {
        Criterion::Gini => {
            let side = |n: f64, s: f64| {
                let p = s / n;
                n * (1.0 - p * p - (1.0 - p) * (1.0 - p))
            };
            side(n_l, s_l) + side(n_r, s_r)
        }
        Criterion::SquaredError => (q_l - s_l * s_l / n_l) + (q_r - s_r * s_r / n_r),
    }
}

/// Best threshold on one feature, or `None` when the feature is constant
/// over the node.
fn best_threshold(
    x: &Matrix,
    target: &[f64],
    samples: &[usize],
    feature: usize,
    criterion: Criterion,
    buf: &mut Vec<(f64, f64)>,
) -> Option<Candidate> {
    buf.clear();
    buf.extend(samples.iter().map(|&i| (x.get(i, feature), target[i])));
    buf.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = buf.len();
    if buf[0].0 == buf[n - 1].0 {
        return None;
    }
    let (total_s, total_q) = buf.iter().fold((0.0, 0.0), |(s, q), &(_, t)| (s + t, q + t * t));
    let (mut s_l, mut q_l) = (0.0, 0.0);
    let mut best: Option<Candidate> = None;
    for i in 0..n - 1 {
        let (v, t) = buf[i];
        s_l += t;
        q_l += t * t;
        let next = buf[i + 1].0;
        if v == next {
            continue;
        }
        let n_l = (i + 1) as f64;
        let n_r = (n - i - 1) as f64;
        let score = children_impurity(criterion, n_l, s_l, q_l, n_r, total_s - s_l, total_q - q_l);
        if best.is_none_or(|b| score < b.score) {
            let mid = v + (next - v) / 2.0;
            let threshold = if mid < next { mid } else { v };
            best = Some(Candidate {
                score,
                feature,
                threshold,
            });
        }
    }
    best
}

fn node_impurity(criterion: Criterion, target: &[f64], samples: &[usize]) -> f64 {
    let n = samples.len() as f64;
    let s: f64 = samples.iter().map(|&i| target[i]).sum();
    match criterion {
        Criterion::Gini => {
            let p = s / n;
            1.0 - p * p - (1.0 - p) * (1.0 - p)
        }
        Criterion::SquaredError => {
            let q: f64 = samples.iter().map(|&i| target[i] * target[i]).sum();
            (q - s * s / n) / n
        }
    }
}

/// Grows a tree over `samples` (which may repeat indices, as in a
/// bootstrap). `leaf_value` maps a leaf's samples to its output.
pub(crate) fn grow(
    x: &Matrix,
    target: &[f64],
    samples: Vec<usize>,
    params: &GrowParams,
    mut rng: Option<&mut ChaCha8Rng>,
    leaf_value: &dyn Fn(&[usize]) -> f64,
) -> Tree {
    let d = x.n_cols();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, samples, 0usize)];
    let mut buf = Vec::new();
    let mut order: Vec<usize> = (0..d).collect();

    while let Some((slot, samples, depth)) = stack.pop() {
        let splittable = samples.len() >= params.min_samples_split.max(2)
            && params.max_depth.is_none_or(|m| depth < m)
            && node_impurity(params.criterion, target, &samples) > 1e-14;
        let mut best: Option<Candidate> = None;
        if splittable {
            match (params.max_features, rng.as_deref_mut()) {
                (Some(m), Some(rng)) if m < d => {
                    // Draw features without replacement until `m` non-constant
                    // ones have been examined or none remain.
                    order.iter_mut().enumerate().for_each(|(i, f)| *f = i);
                    let mut examined = 0;
                    let mut k = 0;
                    while k < d && examined < m {
                        let j = rng.gen_range(k..d);
                        order.swap(k, j);
                        let f = order[k];
                        k += 1;
                        if let Some(c) = best_threshold(x, target, &samples, f, params.criterion, &mut buf) {
                            examined += 1;
                            if c.beats(&best) {
                                best = Some(c);
                            }
                        }
                    }
                }
                _ => {
                    for f in 0..d {
                        if let Some(c) = best_threshold(x, target, &samples, f, params.criterion, &mut buf) {
                            if c.beats(&best) {
                                best = Some(c);
                            }
                        }
                    }
                }
            }
        }

        match best {
            None => {
                nodes[slot] = Node::Leaf {
                    value: leaf_value(&samples),
                }
            }
            Some(c) => {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    samples.iter().partition(|&&i| x.get(i, c.feature) <= c.threshold);
                let l = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[slot] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: l,
                    right: l + 1,
                };
                stack.push((l + 1, right, depth + 1));
                stack.push((l, left, depth + 1));
            }
        }
    }
    Tree { nodes }
}

pub(crate) fn mean_target(target: &[f64]) -> impl Fn(&[usize]) -> f64 + '_ {
    move |samples: &[usize]| samples.iter().map(|&i| target[i]).sum::<f64>() / samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

/// A single Gini classification tree over all features. Leaves output the
/// fraction of positive training samples that reached them.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    tree: Tree,
}

impl DecisionTree {
    pub fn fit(x: &Matrix, y: &[bool], params: &TreeParams) -> Result<DecisionTree> {
        check_training_data(x, y)?;
        let target: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
        let grow_params = GrowParams {
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split,
            max_features: None,
            criterion: Criterion::Gini,
        };
        let tree = grow(
            x,
            &target,
            (0..x.n_rows()).collect(),
            &grow_params,
            None,
            &mean_target(&target),
        );
        Ok(DecisionTree { tree })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }
}

impl Classifier for DecisionTree {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.tree.predict(x)
    }
}
