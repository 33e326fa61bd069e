//! Linear discriminant analysis with a shared within-class covariance.
//!
//! Features are centred on their class means and scaled by their pooled
//! standard deviation; the resulting within-class scatter is decomposed by
//! SVD and inverted on its numerically non-zero singular directions only.
//! This keeps collinear or constant columns harmless. Each class then gets a
//! linear score
//!
//! `δ_k(x) = (x - x̄)ᵀ P (μ_k - x̄) - ½ (μ_k - x̄)ᵀ P (μ_k - x̄) + ln π_k`
//!
//! where `P` is the pseudo-inverse of the pooled covariance and `π_k` the
//! empirical class prior. Probabilities are the softmax of the scores.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdaParams {
    /// Singular values below `tol * largest` are discarded.
    pub tol: f64,
    /// Accept classes with a single row (they add no within-class scatter).
    /// Off by default; bagged ensembles turn it on because small bags can
    /// leave a rare class with one row.
    pub allow_singleton_classes: bool,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            tol: 1e-9,
            allow_singleton_classes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lda {
    center: Vec<f64>,
    /// One row per class; empty classes have no row and score -inf.
    coef: Vec<Option<Vec<f64>>>,
    intercept: Vec<f64>,
    rank: usize,
    n_features: usize,
}

impl Lda {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, p: &LdaParams) -> Result<Lda> {
        let (n, d) = (x.rows(), x.cols());
        if n != y.len() {
            return Err(Error::argument("row/label count mismatch"));
        }
        let mut counts = vec![0usize; n_classes];
        for &c in y {
            counts[c] += 1;
        }
        if let Some(c) = counts
            .iter()
            .position(|&c| c == 1)
            .filter(|_| !p.allow_singleton_classes)
        {
            return Err(Error::argument(format!(
                "LDA needs at least 2 rows in class {c}"
            )));
        }
        let present: Vec<usize> = (0..n_classes).filter(|&c| counts[c] > 0).collect();
        if n <= present.len() {
            return Err(Error::argument("LDA needs more rows than classes"));
        }

        let mut means = vec![vec![0.0; d]; n_classes];
        for (row, &c) in x.iter_rows().zip(y) {
            for (m, v) in means[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for &c in &present {
            means[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
        }
        let center: Vec<f64> = (0..d)
            .map(|j| {
                present
                    .iter()
                    .map(|&c| counts[c] as f64 * means[c][j])
                    .sum::<f64>()
                    / n as f64
            })
            .collect();

        // pooled per-feature scale of the class-centred data
        let mut scale = vec![0.0; d];
        for (row, &c) in x.iter_rows().zip(y) {
            for j in 0..d {
                let e = row[j] - means[c][j];
                scale[j] += e * e;
            }
        }
        for s in scale.iter_mut() {
            *s = (*s / n as f64).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }

        let dof = (n - present.len()) as f64;
        let mut scatter = DMatrix::<f64>::zeros(d, d);
        let mut z = vec![0.0; d];
        for (row, &c) in x.iter_rows().zip(y) {
            for j in 0..d {
                z[j] = (row[j] - means[c][j]) / scale[j];
            }
            for a in 0..d {
                for b in a..d {
                    scatter[(a, b)] += z[a] * z[b];
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                scatter[(a, b)] /= dof;
                scatter[(b, a)] = scatter[(a, b)];
            }
        }

        let svd = scatter.svd(true, false);
        let u = svd
            .u
            .ok_or_else(|| Error::Internal("SVD did not return U".into()))?;
        let sv = &svd.singular_values;
        let largest = sv.iter().copied().fold(0.0, f64::max);
        // precision in standardized coordinates, restricted to kept directions
        let mut prec = DMatrix::<f64>::zeros(d, d);
        let mut rank = 0;
        for (i, &s) in sv.iter().enumerate() {
            if largest > 0.0 && s > p.tol * largest {
                rank += 1;
                let col = u.column(i);
                prec += (col * col.transpose()) / s;
            }
        }

        let mut coef = vec![None; n_classes];
        let mut intercept = vec![f64::NEG_INFINITY; n_classes];
        for &c in &present {
            let dm: Vec<f64> = (0..d)
                .map(|j| (means[c][j] - center[j]) / scale[j])
                .collect();
            let pd: Vec<f64> = (0..d)
                .map(|a| (0..d).map(|b| prec[(a, b)] * dm[b]).sum())
                .collect();
            let quad: f64 = dm.iter().zip(&pd).map(|(a, b)| a * b).sum();
            intercept[c] = -0.5 * quad + (counts[c] as f64 / n as f64).ln();
            // fold the feature scaling into the coefficients
            coef[c] = Some(pd.iter().zip(&scale).map(|(v, s)| v / s).collect());
        }
        Ok(Lda {
            center,
            coef,
            intercept,
            rank,
            n_features: d,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.coef.len()
    }

    /// Number of singular directions kept.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Coefficient vector of class `c`, if the class was seen in training.
    pub fn coefficients(&self, c: usize) -> Option<&[f64]> {
        self.coef[c].as_deref()
    }

    pub fn decision_scores(&self, row: &[f64]) -> Vec<f64> {
        self.coef
            .iter()
            .zip(&self.intercept)
            .map(|(w, &b)| match w {
                None => f64::NEG_INFINITY,
                Some(w) => {
                    w.iter()
                        .zip(row.iter().zip(&self.center))
                        .map(|(w, (x, m))| w * (x - m))
                        .sum::<f64>()
                        + b
                }
            })
            .collect()
    }

    pub fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.decision_scores(row))
    }
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.iter().map(|v| v / sum).collect()
}
