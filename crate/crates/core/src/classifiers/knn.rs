use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::nearest_k;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

/// Uniform-weight k-nearest-neighbour vote under Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    x: Matrix,
    y: Vec<usize>,
    n_classes: usize,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, p: &KnnParams) -> Result<Knn> {
        if p.k == 0 {
            return Err(Error::argument("k must be at least 1"));
        }
        if p.k > x.rows() {
            return Err(Error::argument(format!(
                "k = {} exceeds the {} training rows",
                p.k,
                x.rows()
            )));
        }
        if x.rows() != y.len() {
            return Err(Error::argument("row/label count mismatch"));
        }
        Ok(Knn {
            k: p.k,
            x: x.clone(),
            y: y.to_vec(),
            n_classes,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Training rows nearest to `row`, nearest first.
    pub fn neighbors(&self, row: &[f64]) -> Vec<usize> {
        nearest_k(&self.x, row, self.k, None)
            .into_iter()
            .map(|(_, i)| i)
            .collect()
    }

    pub fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for i in self.neighbors(row) {
            p[self.y[i]] += 1.0;
        }
        p.iter_mut().for_each(|v| *v /= self.k as f64);
        p
    }
}
