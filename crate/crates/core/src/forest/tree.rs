use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{argmax_first, ForestHyperparams};
use crate::features::FeatureVector;
use crate::rng::Rng;
use crate::scalar::Real;

/// Flat tree node. Children are indices into the owning tree's node array.
#[derive(Clone, Debug, PartialEq)]
pub enum Node<T> {
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u32>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree<T> {
    nodes: Vec<Node<T>>,
}

struct Builder<'a, T> {
    x: &'a [FeatureVector<T>],
    y: &'a [usize],
    n_classes: usize,
    params: &'a ForestHyperparams,
    mtry: usize,
    nodes: Vec<Node<T>>,
    // scratch buffers reused across nodes
    order: Vec<(T, usize)>,
    features: Vec<usize>,
}

struct Candidate<T> {
    feature: usize,
    threshold: T,
    /// sum over children of `sum_k count_k^2 / n_child`; larger is purer
    purity: f64,
}

fn counts_of(y: &[usize], idx: &[usize], n_classes: usize) -> Vec<u32> {
    let mut counts = vec![0u32; n_classes];
    for &i in idx {
        counts[y[i]] += 1;
    }
    counts
}

/// Gini impurity `1 - sum p_k^2` of a class histogram.
pub(crate) fn gini(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = f64::from(n);
    1.0 - counts.iter().map(|&c| (f64::from(c) / n).powi(2)).sum::<f64>()
}

impl<T: Real> Builder<'_, T> {
    fn push(&mut self, node: Node<T>) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn build(&mut self, idx: &mut [usize], depth: usize, rng: &mut Rng) -> usize {
        let counts = counts_of(self.y, idx, self.n_classes);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < self.params.min_samples_split {
            return self.push(Node::Leaf { counts });
        }
        let Some(best) = self.best_split(idx, rng) else {
            return self.push(Node::Leaf { counts });
        };
        let f = best.feature;
        let mid = partition(idx, |i| self.x[i][f] <= best.threshold);
        let at = self.push(Node::Leaf { counts: Vec::new() });
        let (l, r) = idx.split_at_mut(mid);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature: f,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }

    /// Examine `mtry` random features; if none of them admits a valid split
    /// keep drawing from the rest.
    fn best_split(&mut self, idx: &[usize], rng: &mut Rng) -> Option<Candidate<T>> {
        self.features.shuffle(rng);
        let mut best: Option<Candidate<T>> = None;
        for k in 0..self.features.len() {
            if k >= self.mtry && best.is_some() {
                break;
            }
            let f = self.features[k];
            if let Some(c) = self.scan_feature(idx, f) {
                if best.as_ref().is_none_or(|b| c.purity > b.purity) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn scan_feature(&mut self, idx: &[usize], f: usize) -> Option<Candidate<T>> {
        let min_leaf = self.params.min_samples_leaf;
        let n = idx.len();
        if n < 2 * min_leaf {
            return None;
        }
        self.order.clear();
        self.order.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
        self.order
            .sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        if self.order[0].0 == self.order[n - 1].0 {
            return None;
        }

        let mut left = vec![0u64; self.n_classes];
        let mut right = vec![0u64; self.n_classes];
        for &(_, c) in &self.order {
            right[c] += 1;
        }
        let mut sq_left = 0u64;
        let mut sq_right: u64 = right.iter().map(|c| c * c).sum();
        let mut best: Option<Candidate<T>> = None;
        for i in 0..n - 1 {
            let (v, c) = self.order[i];
            sq_left += 2 * left[c] + 1;
            sq_right -= 2 * right[c] - 1;
            left[c] += 1;
            right[c] -= 1;
            let n_left = i + 1;
            let next = self.order[i + 1].0;
            if v == next || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let purity = sq_left as f64 / n_left as f64 + sq_right as f64 / (n - n_left) as f64;
            if best.as_ref().is_none_or(|b| purity > b.purity) {
                let two = T::one() + T::one();
                let mut threshold = v + (next - v) / two;
                if threshold >= next {
                    threshold = v;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    purity,
                });
            }
        }
        best
    }
}

/// Stable-free in-place partition; returns the number of elements for which
/// `pred` holds, which are moved to the front.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut mid = 0;
    for i in 0..idx.len() {
        if pred(idx[i]) {
            idx.swap(i, mid);
            mid += 1;
        }
    }
    mid
}

impl<T: Real> Tree<T> {
    pub(crate) fn grow(
        x: &[FeatureVector<T>],
        y: &[usize],
        n_classes: usize,
        params: &ForestHyperparams,
        rng: &mut Rng,
    ) -> Self {
        let n = x.len();
        let mut idx: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let dim = x[0].len();
        let mut b = Builder {
            x,
            y,
            n_classes,
            params,
            mtry: params.features_per_node(dim),
            nodes: Vec::new(),
            order: Vec::with_capacity(n),
            features: (0..dim).collect(),
        };
        b.build(&mut idx, 0, rng);
        Tree { nodes: b.nodes }
    }

    pub fn from_nodes(nodes: Vec<Node<T>>) -> Self {
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    fn leaf_for(&self, x: &FeatureVector<T>) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Majority class of the reached leaf (lowest index on ties).
    pub fn predict(&self, x: &FeatureVector<T>) -> usize {
        argmax_first(self.leaf_for(x))
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// Walk the tree and verify depth, leaf-size, split-size and impurity
    /// constraints. Returns the first violation found.
    pub fn check_structure(&self, params: &ForestHyperparams) -> Result<(), String> {
        fn walk<T>(
            nodes: &[Node<T>],
            at: usize,
            depth: usize,
            params: &ForestHyperparams,
        ) -> Result<Vec<u32>, String> {
            match &nodes[at] {
                Node::Leaf { counts } => {
                    let n: u32 = counts.iter().sum();
                    if at != 0 && (n as usize) < params.min_samples_leaf {
                        return Err(format!("leaf {at} holds {n} < {} samples", params.min_samples_leaf));
                    }
                    Ok(counts.clone())
                }
                Node::Split { left, right, .. } => {
                    if params.max_depth.is_some_and(|d| depth >= d) {
                        return Err(format!("split {at} at depth {depth} exceeds max_depth"));
                    }
                    let l = walk(nodes, *left, depth + 1, params)?;
                    let r = walk(nodes, *right, depth + 1, params)?;
                    let total: Vec<u32> = l.iter().zip(&r).map(|(a, b)| a + b).collect();
                    let (nl, nr) = (l.iter().sum::<u32>() as f64, r.iter().sum::<u32>() as f64);
                    let n = nl + nr;
                    if (n as usize) < params.min_samples_split {
                        return Err(format!("split {at} on {n} < {} samples", params.min_samples_split));
                    }
                    let child = (nl * gini(&l) + nr * gini(&r)) / n;
                    if child > gini(&total) + 1e-12 {
                        return Err(format!("split {at} increases impurity"));
                    }
                    Ok(total)
                }
            }
        }
        walk(&self.nodes, 0, 0, params).map(|_| ())
    }
}
