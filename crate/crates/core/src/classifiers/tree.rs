//! Binary classification trees over numeric features.
//!
//! One builder serves the decision tree, both forests and the boosting
//! stumps. Rows go left when `x[feature] <= threshold`. Candidate splits
//! are scanned in (feature, threshold) ascending order and a later
//! candidate only wins with a strictly larger gain, so ties resolve to the
//! lower feature index and then the lower threshold.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{fisher_yates, LabRng};

/// Gains closer than this are treated as equal.
pub const GAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Entropy,
    Gini,
}

impl Criterion {
    /// Impurity of a node with class weights `w` summing to `total`.
    pub fn impurity(self, w: &[f64], total: f64) -> f64 {
        if total <= 0.0 {
            return 0.0;
        }
        match self {
            Criterion::Entropy => -w
                .iter()
                .filter(|&&c| c > 0.0)
                .map(|&c| {
                    let p = c / total;
                    p * p.log2()
                })
                .sum::<f64>(),
            Criterion::Gini => 1.0 - w.iter().map(|&c| (c / total) * (c / total)).sum::<f64>(),
        }
        .max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Splitter {
    /// Every midpoint between consecutive distinct values.
    #[default]
    Best,
    /// One uniform threshold per candidate feature.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Candidate features per split; `None` means all.
    pub max_features: Option<usize>,
    /// Grow best-first and stop at this many leaves.
    pub max_leaf_nodes: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: Criterion::Entropy,
            splitter: Splitter::Best,
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            max_features: None,
            max_leaf_nodes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        proba: Vec<f64>,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    depths: Vec<usize>,
    n_features: usize,
    n_classes: usize,
}

/// Best split found for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Impurity decrease `I(parent) - wL/w I(left) - wR/w I(right)`.
    pub gain: f64,
}

struct Pending {
    node: usize,
    rows: Vec<usize>,
    depth: usize,
    split: Option<SplitChoice>,
    priority: f64,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // max-heap on priority; earlier nodes first on ties
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then(other.node.cmp(&self.node))
    }
}

/// Training context shared by every node of one tree.
pub struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    weights: Option<&'a [f64]>,
    n_classes: usize,
    params: TreeParams,
}

impl<'a> Grower<'a> {
    pub fn new(
        x: &'a Matrix,
        y: &'a [usize],
        weights: Option<&'a [f64]>,
        n_classes: usize,
        params: TreeParams,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::argument("cannot fit a tree on zero rows"));
        }
        if x.rows() != y.len() {
            return Err(Error::argument(format!(
                "{} rows but {} labels",
                x.rows(),
                y.len()
            )));
        }
        if let Some(w) = weights {
            if w.len() != y.len() {
                return Err(Error::argument("sample weight length mismatch"));
            }
        }
        if params.min_samples_leaf == 0 {
            return Err(Error::argument("min_samples_leaf must be at least 1"));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::argument(format!(
                "label {bad} outside {n_classes} classes"
            )));
        }
        Ok(Grower {
            x,
            y,
            weights,
            n_classes,
            params,
        })
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn class_weights(&self, rows: &[usize]) -> Vec<f64> {
        let mut w = vec![0.0; self.n_classes];
        for &i in rows {
            w[self.y[i]] += self.weight(i);
        }
        w
    }

    /// Best split of `rows`, honouring `min_samples_leaf`.
    pub fn best_split(&self, rows: &[usize], rng: &mut LabRng) -> Option<SplitChoice> {
        let d = self.x.cols();
        // with a feature budget, visit features in random order until the
        // budget of non-constant ones is spent and some split was found
        let (features, budget) = match self.params.max_features {
            Some(m) if m < d => {
                let mut f: Vec<usize> = (0..d).collect();
                fisher_yates(&mut f, rng);
                (f, m.max(1))
            }
            _ => ((0..d).collect(), d),
        };
        let parent = self.class_weights(rows);
        let total: f64 = parent.iter().sum();
        let parent_imp = self.params.criterion.impurity(&parent, total);
        let mut best: Option<SplitChoice> = None;
        let mut visited = 0;
        for &f in &features {
            if visited >= budget && best.is_some() {
                break;
            }
            let (lo, hi) = self.node_range(rows, f);
            if hi <= lo {
                continue;
            }
            visited += 1;
            let cand = match self.params.splitter {
                Splitter::Best => self.scan_feature(rows, f, &parent, total, parent_imp),
                Splitter::Random => {
                    self.random_feature(rows, f, (lo, hi), &parent, total, parent_imp, rng)
                }
            };
            if let Some(c) = cand {
                if best.is_none_or(|b| c.gain > b.gain + GAIN_TOLERANCE) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn node_range(&self, rows: &[usize], f: usize) -> (f64, f64) {
        rows.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = self.x.get(i, f);
                (lo.min(v), hi.max(v))
            })
    }

    fn scan_feature(
        &self,
        rows: &[usize],
        f: usize,
        parent: &[f64],
        total: f64,
        parent_imp: f64,
    ) -> Option<SplitChoice> {
        let min_leaf = self.params.min_samples_leaf;
        let n = rows.len();
        let mut vals: Vec<(f64, usize)> = rows.iter().map(|&i| (self.x.get(i, f), i)).collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = vec![0.0; self.n_classes];
        let mut wl = 0.0;
        let mut best: Option<SplitChoice> = None;
        for p in 0..n - 1 {
            let (v, i) = vals[p];
            left[self.y[i]] += self.weight(i);
            wl += self.weight(i);
            let next = vals[p + 1].0;
            if next <= v {
                continue;
            }
            let n_left = p + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let mut threshold = v + (next - v) / 2.0;
            if threshold >= next {
                threshold = v;
            }
            let gain = self.gain(&left, wl, parent, total, parent_imp);
            if best.is_none_or(|b| gain > b.gain + GAIN_TOLERANCE) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
        best
    }

    fn random_feature(
        &self,
        rows: &[usize],
        f: usize,
        (lo, hi): (f64, f64),
        parent: &[f64],
        total: f64,
        parent_imp: f64,
        rng: &mut LabRng,
    ) -> Option<SplitChoice> {
        let u: f64 = rng.gen();
        let mut threshold = lo + u * (hi - lo);
        if threshold >= hi {
            threshold = lo;
        }
        let mut left = vec![0.0; self.n_classes];
        let mut wl = 0.0;
        let mut n_left = 0;
        for &i in rows {
            if self.x.get(i, f) <= threshold {
                left[self.y[i]] += self.weight(i);
                wl += self.weight(i);
                n_left += 1;
            }
        }
        let min_leaf = self.params.min_samples_leaf;
        if n_left < min_leaf || rows.len() - n_left < min_leaf {
            return None;
        }
        Some(SplitChoice {
            feature: f,
            threshold,
            gain: self.gain(&left, wl, parent, total, parent_imp),
        })
    }

    fn gain(&self, left: &[f64], wl: f64, parent: &[f64], total: f64, parent_imp: f64) -> f64 {
        let right: Vec<f64> = parent
            .iter()
            .zip(left)
            .map(|(p, l)| (p - l).max(0.0))
            .collect();
        let wr = (total - wl).max(0.0);
        let c = self.params.criterion;
        parent_imp - (wl / total) * c.impurity(left, wl) - (wr / total) * c.impurity(&right, wr)
    }

    fn leaf(&self, rows: &[usize]) -> Node {
        let w = self.class_weights(rows);
        let total: f64 = w.iter().sum();
        let proba = if total > 0.0 {
            w.iter().map(|c| c / total).collect()
        } else {
            let mut p = vec![0.0; self.n_classes];
            // zero-weight node: fall back to raw counts
            for &i in rows {
                p[self.y[i]] += 1.0 / rows.len() as f64;
            }
            p
        };
        Node::Leaf {
            proba,
            samples: rows.len(),
        }
    }

    fn can_split(&self, rows: &[usize], depth: usize) -> bool {
        let p = &self.params;
        if p.max_depth.is_some_and(|m| depth >= m) {
            return false;
        }
        if rows.len() < p.min_samples_split.max(2) || rows.len() < 2 * p.min_samples_leaf {
            return false;
        }
        let first = self.y[rows[0]];
        rows.iter().any(|&i| self.y[i] != first)
    }

    fn plan(
        &self,
        node: usize,
        rows: Vec<usize>,
        depth: usize,
        total: f64,
        rng: &mut LabRng,
    ) -> Pending {
        let split = if self.can_split(&rows, depth) {
            self.best_split(&rows, rng)
                .filter(|s| s.gain > GAIN_TOLERANCE)
        } else {
            None
        };
        let w: f64 = rows.iter().map(|&i| self.weight(i)).sum();
        let priority = split.map_or(f64::NEG_INFINITY, |s| s.gain * w / total);
        Pending {
            node,
            rows,
            depth,
            split,
            priority,
        }
    }

    /// Grows a tree on `rows` (duplicates allowed, as in a bootstrap draw).
    pub fn grow(&self, rows: Vec<usize>, rng: &mut LabRng) -> Result<Tree> {
        if rows.is_empty() {
            return Err(Error::argument("cannot grow a tree from zero rows"));
        }
        let total: f64 = rows
            .iter()
            .map(|&i| self.weight(i))
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        let mut tree = Tree {
            nodes: vec![self.leaf(&rows)],
            depths: vec![0],
            n_features: self.x.cols(),
            n_classes: self.n_classes,
        };
        let root = self.plan(0, rows, 0, total, rng);
        match self.params.max_leaf_nodes {
            None => {
                let mut stack = vec![root];
                while let Some(p) = stack.pop() {
                    if let Some(s) = p.split {
                        let (l, r) = self.expand(&mut tree, &p, s);
                        // push right first so the left subtree is grown first
                        let right = self.plan(r.0, r.1, p.depth + 1, total, rng);
                        let left = self.plan(l.0, l.1, p.depth + 1, total, rng);
                        stack.push(right);
                        stack.push(left);
                    }
                }
            }
            Some(max_leaves) => {
                let mut heap = BinaryHeap::from([root]);
                let mut leaves = 1;
                while leaves < max_leaves.max(1) {
                    let Some(p) = heap.pop() else { break };
                    let Some(s) = p.split else { break };
                    let (l, r) = self.expand(&mut tree, &p, s);
                    leaves += 1;
                    heap.push(self.plan(l.0, l.1, p.depth + 1, total, rng));
                    heap.push(self.plan(r.0, r.1, p.depth + 1, total, rng));
                }
            }
        }
        Ok(tree)
    }

    #[allow(clippy::type_complexity)]
    fn expand(
        &self,
        tree: &mut Tree,
        p: &Pending,
        s: SplitChoice,
    ) -> ((usize, Vec<usize>), (usize, Vec<usize>)) {
        let (lrows, rrows): (Vec<usize>, Vec<usize>) = p
            .rows
            .iter()
            .partition(|&&i| self.x.get(i, s.feature) <= s.threshold);
        let l = tree.nodes.len();
        tree.nodes.push(self.leaf(&lrows));
        tree.nodes.push(self.leaf(&rrows));
        tree.depths.extend([p.depth + 1, p.depth + 1]);
        tree.nodes[p.node] = Node::Split {
            feature: s.feature,
            threshold: s.threshold,
            left: l,
            right: l + 1,
        };
        ((l, lrows), (l + 1, rrows))
    }
}

impl Tree {
    /// Fits on all rows of `x`.
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        weights: Option<&[f64]>,
        n_classes: usize,
        params: TreeParams,
        rng: &mut LabRng,
    ) -> Result<Tree> {
        Grower::new(x, y, weights, n_classes, params)?.grow((0..x.rows()).collect(), rng)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Depth of the deepest leaf (a lone root has depth 0).
    pub fn depth(&self) -> usize {
        self.depths.iter().copied().max().unwrap_or(0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Smallest sample count held by any leaf.
    pub fn min_leaf_samples(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { samples, .. } => Some(*samples),
                _ => None,
            })
            .min()
            .unwrap_or(0)
    }

    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }

    pub fn leaf_proba(&self, row: &[f64]) -> &[f64] {
        let mut n = 0;
        loop {
            match &self.nodes[n] {
                Node::Leaf { proba, .. } => return proba,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    n = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}
