//! Univariate feature selection: ANOVA F-score ranking and a variance floor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Variance of a 0/1 column that is 80% one value: `0.8 * (1 - 0.8)`.
pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.16;
pub const DEFAULT_K_BEST: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    #[default]
    None,
    AnovaKBest,
    VarianceThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSelectorSpec {
    pub kind: SelectorKind,
    pub k: usize,
    pub threshold: f64,
}

impl Default for FeatureSelectorSpec {
    fn default() -> Self {
        FeatureSelectorSpec {
            kind: SelectorKind::None,
            k: DEFAULT_K_BEST,
            threshold: DEFAULT_VARIANCE_THRESHOLD,
        }
    }
}

/// Columns kept by a selector, in original order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    /// F-scores or variances, one per input column.
    pub scores: Vec<f64>,
}

impl Selection {
    fn from_mask(mask: &[bool], scores: Vec<f64>) -> Self {
        let (kept, dropped) = (0..mask.len()).partition(|&j| mask[j]);
        Selection {
            kept,
            dropped,
            scores,
        }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        x.select_cols(&self.kept)
    }
}

/// Runs the selector in `spec` on training data. `kind = none` keeps all.
pub fn select_features(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    spec: &FeatureSelectorSpec,
) -> Result<Selection> {
    match spec.kind {
        SelectorKind::None => Ok(Selection::from_mask(
            &vec![true; x.cols()],
            vec![0.0; x.cols()],
        )),
        SelectorKind::AnovaKBest => select_k_best(x, y, n_classes, spec.k.min(x.cols())),
        SelectorKind::VarianceThreshold => variance_threshold_filter(x, spec.threshold),
    }
}

/// One-way ANOVA F statistic per column.
///
/// `F = (SS_between / (K - 1)) / (SS_within / (n - K))`. A column constant
/// everywhere scores 0; a column constant within every class but not
/// across them scores `+inf`.
pub fn anova_f_scores(x: &Matrix, y: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    if x.rows() != y.len() {
        return Err(Error::argument(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    let mut counts = vec![0usize; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    let present: Vec<usize> = (0..n_classes).filter(|&c| counts[c] > 0).collect();
    let k = present.len();
    if k < 2 {
        return Err(Error::argument(
            "ANOVA needs at least two non-empty classes",
        ));
    }
    let n = y.len();
    if n <= k {
        return Err(Error::argument("ANOVA needs more rows than classes"));
    }
    let d = x.cols();
    let mut sums = vec![vec![0.0; d]; n_classes];
    for (row, &c) in x.iter_rows().zip(y) {
        for (s, v) in sums[c].iter_mut().zip(row) {
            *s += v;
        }
    }
    let mut grand = vec![0.0; d];
    for s in &sums {
        for (g, v) in grand.iter_mut().zip(s) {
            *g += v;
        }
    }
    let grand: Vec<f64> = grand.iter().map(|g| g / n as f64).collect();
    let means: Vec<Vec<f64>> = (0..n_classes)
        .map(|c| {
            sums[c]
                .iter()
                .map(|s| {
                    if counts[c] > 0 {
                        s / counts[c] as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut within = vec![0.0; d];
    let mut second_moment = vec![0.0; d];
    for (row, &c) in x.iter_rows().zip(y) {
        for j in 0..d {
            let e = row[j] - means[c][j];
            within[j] += e * e;
            second_moment[j] += row[j] * row[j];
        }
    }
    let scores = (0..d)
        .map(|j| {
            let between: f64 = present
                .iter()
                .map(|&c| {
                    let e = means[c][j] - grand[j];
                    counts[c] as f64 * e * e
                })
                .sum();
            let total = between + within[j];
            // constant-column and zero-within tests are relative, so F stays
            // invariant under rescaling the column
            if total <= 1e-14 * second_moment[j] || total == 0.0 {
                return 0.0;
            }
            if within[j] <= 1e-14 * total {
                return f64::INFINITY;
            }
            (between / (k - 1) as f64) / (within[j] / (n - k) as f64)
        })
        .collect();
    Ok(scores)
}

/// Keeps the `k` columns with the largest F; ties favour the lower column.
pub fn select_k_best(x: &Matrix, y: &[usize], n_classes: usize, k: usize) -> Result<Selection> {
    if k == 0 || k > x.cols() {
        return Err(Error::argument(format!(
            "k must lie in [1, {}], got {k}",
            x.cols()
        )));
    }
    let scores = anova_f_scores(x, y, n_classes)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut mask = vec![false; scores.len()];
    for &j in &order[..k] {
        mask[j] = true;
    }
    Ok(Selection::from_mask(&mask, scores))
}

/// Population variance of each column.
pub fn column_variances(x: &Matrix) -> Vec<f64> {
    let n = x.rows() as f64;
    (0..x.cols())
        .map(|j| {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / n;
            col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
        })
        .collect()
}

/// Keeps columns whose population variance is strictly above `threshold`.
pub fn variance_threshold_filter(x: &Matrix, threshold: f64) -> Result<Selection> {
    if threshold < 0.0 || threshold.is_nan() {
        return Err(Error::argument(format!(
            "threshold must be >= 0, got {threshold}"
        )));
    }
    if x.is_empty() {
        return Err(Error::argument("variance filter needs at least one row"));
    }
    let var = column_variances(x);
    let mask: Vec<bool> = var.iter().map(|&v| v > threshold).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::Data(format!(
            "variance threshold {threshold} removes every column"
        )));
    }
    Ok(Selection::from_mask(&mask, var))
}
