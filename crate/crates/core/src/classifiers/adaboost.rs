//! Multiclass AdaBoost (SAMME) over depth-one trees.

use serde::{Deserialize, Serialize};

use super::tree::{Criterion, Tree, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::{argmax, Matrix};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    /// Depth of each weak learner.
    pub base_depth: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_estimators: 50,
            base_depth: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// A weak learner fit the weighted data perfectly.
    PerfectFit,
    /// A weak learner was no better than chance; it was discarded.
    NoBetterThanChance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    estimators: Vec<Tree>,
    alphas: Vec<f64>,
    /// Weighted error of each accepted learner.
    errors: Vec<f64>,
    /// Training error of the partial ensemble after each accepted round.
    training_errors: Vec<f64>,
    stop_reason: StopReason,
    n_classes: usize,
    n_features: usize,
}

impl AdaBoost {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, p: &AdaBoostParams) -> Result<AdaBoost> {
        let n = x.rows();
        if n == 0 || n != y.len() {
            return Err(Error::argument(
                "AdaBoost needs matching, non-empty rows and labels",
            ));
        }
        let mut present = vec![false; n_classes];
        y.iter().for_each(|&c| present[c] = true);
        let k = present.iter().filter(|&&b| b).count();
        if k < 2 {
            return Err(Error::argument("AdaBoost needs at least two classes"));
        }
        let chance = 1.0 - 1.0 / k as f64;
        let params = TreeParams {
            criterion: Criterion::Gini,
            max_depth: Some(p.base_depth.max(1)),
            ..TreeParams::default()
        };
        // the stumps use every feature, so the stream is never consumed
        let mut rng = rng_from(0);
        let mut w = vec![1.0 / n as f64; n];
        let mut votes = vec![vec![0.0; n_classes]; n];
        let mut model = AdaBoost {
            estimators: Vec::new(),
            alphas: Vec::new(),
            errors: Vec::new(),
            training_errors: Vec::new(),
            stop_reason: StopReason::Completed,
            n_classes,
            n_features: x.cols(),
        };
        for _ in 0..p.n_estimators {
            let stump = Tree::fit(x, y, Some(&w), n_classes, params, &mut rng)?;
            let pred: Vec<usize> = (0..n).map(|i| argmax(stump.leaf_proba(x.row(i)))).collect();
            let total: f64 = w.iter().sum();
            let err: f64 = (0..n)
                .filter(|&i| pred[i] != y[i])
                .map(|i| w[i])
                .sum::<f64>()
                / total;
            if err <= 0.0 {
                model.push_round(stump, 1.0, 0.0, &pred, y, &mut votes);
                model.stop_reason = StopReason::PerfectFit;
                break;
            }
            if err >= chance {
                model.stop_reason = StopReason::NoBetterThanChance;
                break;
            }
            let alpha = ((1.0 - err) / err).ln() + ((k - 1) as f64).ln();
            model.push_round(stump, alpha, err, &pred, y, &mut votes);
            for i in 0..n {
                if pred[i] != y[i] {
                    w[i] *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        if model.estimators.is_empty() {
            return Err(Error::Data(
                "AdaBoost: first weak learner was no better than chance".into(),
            ));
        }
        Ok(model)
    }

    fn push_round(
        &mut self,
        stump: Tree,
        alpha: f64,
        err: f64,
        pred: &[usize],
        y: &[usize],
        votes: &mut [Vec<f64>],
    ) {
        for (v, &p) in votes.iter_mut().zip(pred) {
            v[p] += alpha;
        }
        let wrong = votes.iter().zip(y).filter(|(v, &t)| argmax(v) != t).count();
        self.training_errors.push(wrong as f64 / y.len() as f64);
        self.estimators.push(stump);
        self.alphas.push(alpha);
        self.errors.push(err);
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn estimators(&self) -> &[Tree] {
        &self.estimators
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn estimator_errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn training_errors(&self) -> &[f64] {
        &self.training_errors
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop_reason
    }

    /// Summed estimator weight per class, normalized to sum to one.
    pub fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_classes];
        for (t, &a) in self.estimators.iter().zip(&self.alphas) {
            s[argmax(t.leaf_proba(row))] += a;
        }
        let total: f64 = s.iter().sum();
        s.iter_mut().for_each(|v| *v /= total);
        s
    }
}
