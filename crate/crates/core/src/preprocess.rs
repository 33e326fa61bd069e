//! Shuffling, min-max scaling, and stratified split planning.
//!
//! All randomness is seeded (see [`crate::rng`]); every function here is a
//! pure function of its inputs and seed.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, fisher_yates, permutation, rng_from};
use crate::table::{indices_by_class, FeatureTable};

pub const DEFAULT_TEST_FRACTION: f64 = 0.34;

/// Seeded Fisher-Yates permutation of the table's rows.
pub fn shuffle_rows(table: &FeatureTable, seed: u64) -> FeatureTable {
    table.select_rows(&permutation(table.n_rows(), seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub min: f64,
    pub max: f64,
}

impl ColumnRange {
    pub fn is_degenerate(&self) -> bool {
        self.max <= self.min
    }
}

/// Per-column extrema fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub ranges: Vec<ColumnRange>,
    /// Clamp transformed values into [0, 1] (off by default).
    pub clamp: bool,
}

impl NormalizationParams {
    pub fn degenerate_columns(&self) -> Vec<usize> {
        self.ranges
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_degenerate())
            .map(|(j, _)| j)
            .collect()
    }

    /// `(v - min) / (max - min)`, or 0 for a constant column.
    #[inline]
    pub fn scale(&self, col: usize, v: f64) -> f64 {
        let r = self.ranges[col];
        let nv = if r.is_degenerate() {
            0.0
        } else {
            (v - r.min) / (r.max - r.min)
        };
        if self.clamp {
            nv.clamp(0.0, 1.0)
        } else {
            nv
        }
    }
}

pub fn fit_minmax(train: &Matrix) -> Result<NormalizationParams> {
    if train.is_empty() {
        return Err(Error::argument("cannot fit min-max on zero rows"));
    }
    let mut ranges = vec![
        ColumnRange {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY
        };
        train.cols()
    ];
    for row in train.iter_rows() {
        for (r, &v) in ranges.iter_mut().zip(row) {
            r.min = r.min.min(v);
            r.max = r.max.max(v);
        }
    }
    Ok(NormalizationParams {
        ranges,
        clamp: false,
    })
}

pub fn apply_minmax(x: &Matrix, params: &NormalizationParams) -> Result<Matrix> {
    if x.cols() != params.ranges.len() {
        return Err(Error::schema(format!(
            "normalizer fitted on {} columns, table has {}",
            params.ranges.len(),
            x.cols()
        )));
    }
    let mut out = x.clone();
    out.map_inplace(|j, v| params.scale(j, v));
    Ok(out)
}

/// Disjoint train/test row sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub test_fraction: f64,
    pub seed: u64,
    /// Classes with a single row, forced into train.
    pub singleton_classes: Vec<usize>,
}

/// Stratified holdout split.
///
/// Each class gets `floor(n_c * f)` test rows; the rows still missing from
/// `round(n * f)` are handed out one per class by a seeded draw, so every
/// class deviates from `n_c * f` by less than one row.
pub fn stratified_holdout_split(
    labels: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::argument(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if labels.is_empty() {
        return Err(Error::argument("cannot split zero rows"));
    }
    let groups = indices_by_class(labels, n_classes);
    let mut quota: Vec<usize> = vec![0; n_classes];
    let mut singleton_classes = Vec::new();
    let mut eligible = Vec::new();
    for (c, g) in groups.iter().enumerate() {
        match g.len() {
            0 => {}
            1 => {
                warn!("class {c} has a single row; keeping it in the training split");
                singleton_classes.push(c);
            }
            n => {
                quota[c] = (n as f64 * test_fraction).floor() as usize;
                if quota[c] + 1 < n {
                    eligible.push(c);
                }
            }
        }
    }
    let target = (labels.len() as f64 * test_fraction).round() as usize;
    let assigned: usize = quota.iter().sum();
    let mut rng = rng_from(derive_seed(seed, 0));
    let extra = target.saturating_sub(assigned).min(eligible.len());
    fisher_yates(&mut eligible, &mut rng);
    for &c in &eligible[..extra] {
        quota[c] += 1;
    }

    let mut train = Vec::with_capacity(labels.len() - target);
    let mut test = Vec::with_capacity(target);
    for (c, g) in groups.iter().enumerate() {
        let mut g = g.clone();
        fisher_yates(&mut g, &mut rng_from(derive_seed(seed, 1 + c as u64)));
        test.extend_from_slice(&g[..quota[c]]);
        train.extend_from_slice(&g[quota[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        train_indices: train,
        test_indices: test,
        test_fraction,
        seed,
        singleton_classes,
    })
}

/// Row-to-fold assignment for stratified k-fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.assignment {
            s[f] += 1;
        }
        s
    }
}

/// Stratified k-fold: each class is shuffled, then the classes are laid end
/// to end (class code order) and dealt round-robin onto the folds.
pub fn stratified_kfold_plan(
    labels: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::argument(format!("k must be at least 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::argument(format!(
            "k = {k} exceeds the number of rows ({})",
            labels.len()
        )));
    }
    let mut assignment = vec![0; labels.len()];
    let mut pos = 0usize;
    for (c, mut g) in indices_by_class(labels, n_classes).into_iter().enumerate() {
        if !g.is_empty() && g.len() < k {
            warn!("class {c} has {} rows, fewer than k = {k}", g.len());
        }
        fisher_yates(&mut g, &mut rng_from(derive_seed(seed, c as u64)));
        for i in g {
            assignment[i] = pos % k;
            pos += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignment,
        seed,
    })
}
