//! Random forest and extremely randomized trees.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, Grower, Splitter, Tree, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_from};

/// How many features each split may look at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `floor(sqrt(d))`, at least one.
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(c) => c.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        RandomForestParams {
            n_trees: 100,
            max_depth: 7,
            criterion: Criterion::Entropy,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtraTreesParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
}

impl Default for ExtraTreesParams {
    fn default() -> Self {
        ExtraTreesParams {
            n_trees: 100,
            max_depth: 7,
            criterion: Criterion::Gini,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

/// An averaged collection of trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Bootstrap rows of each tree, kept for out-of-bag scoring.
    #[serde(skip)]
    pub(crate) in_bag: Vec<Vec<usize>>,
    n_features: usize,
    n_classes: usize,
}

struct ForestPlan {
    n_trees: usize,
    bootstrap: bool,
    tree: TreeParams,
}

fn grow_forest(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    plan: ForestPlan,
    seed: u64,
) -> Result<Forest> {
    if x.is_empty() {
        return Err(Error::argument("cannot fit a forest on zero rows"));
    }
    if plan.n_trees == 0 {
        return Err(Error::argument("forest needs at least one tree"));
    }
    let grower = Grower::new(x, y, None, n_classes, plan.tree)?;
    let n = x.rows();
    let fitted: Vec<(Tree, Vec<usize>)> = (0..plan.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(derive_seed(seed, t as u64));
            let rows: Vec<usize> = if plan.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let tree = grower.grow(rows.clone(), &mut rng)?;
            Ok((tree, if plan.bootstrap { rows } else { Vec::new() }))
        })
        .collect::<Result<_>>()?;
    let (trees, in_bag) = fitted.into_iter().unzip();
    Ok(Forest {
        trees,
        in_bag,
        n_features: x.cols(),
        n_classes,
    })
}

impl Forest {
    pub fn fit_random_forest(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        p: &RandomForestParams,
        seed: u64,
    ) -> Result<Forest> {
        let plan = ForestPlan {
            n_trees: p.n_trees,
            bootstrap: p.bootstrap,
            tree: TreeParams {
                criterion: p.criterion,
                splitter: Splitter::Best,
                max_depth: Some(p.max_depth),
                max_features: Some(p.max_features.resolve(x.cols())),
                ..TreeParams::default()
            },
        };
        grow_forest(x, y, n_classes, plan, seed)
    }

    pub fn fit_extra_trees(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        p: &ExtraTreesParams,
        seed: u64,
    ) -> Result<Forest> {
        let plan = ForestPlan {
            n_trees: p.n_trees,
            bootstrap: false,
            tree: TreeParams {
                criterion: p.criterion,
                splitter: Splitter::Random,
                max_depth: Some(p.max_depth),
                max_features: Some(p.max_features.resolve(x.cols())),
                ..TreeParams::default()
            },
        };
        grow_forest(x, y, n_classes, plan, seed)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    /// Mean of the trees' leaf class frequencies.
    pub fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, b) in p.iter_mut().zip(t.leaf_proba(row)) {
                *a += b;
            }
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }

    /// Out-of-bag accuracy over rows left out by at least one tree.
    /// `None` when the forest was grown without bootstrap.
    pub fn oob_accuracy(&self, x: &Matrix, y: &[usize]) -> Option<f64> {
        if self.in_bag.iter().all(Vec::is_empty) {
            return None;
        }
        let mut in_bag = vec![vec![false; x.rows()]; self.trees.len()];
        for (t, rows) in self.in_bag.iter().enumerate() {
            for &i in rows {
                in_bag[t][i] = true;
            }
        }
        let (mut seen, mut hit) = (0usize, 0usize);
        for i in 0..x.rows() {
            let mut p = vec![0.0; self.n_classes];
            let mut votes = 0;
            for (t, tree) in self.trees.iter().enumerate() {
                if !in_bag[t][i] {
                    votes += 1;
                    for (a, b) in p.iter_mut().zip(tree.leaf_proba(x.row(i))) {
                        *a += b;
                    }
                }
            }
            if votes > 0 {
                seen += 1;
                hit += usize::from(crate::matrix::argmax(&p) == y[i]);
            }
        }
        (seen > 0).then(|| hit as f64 / seen as f64)
    }
}
