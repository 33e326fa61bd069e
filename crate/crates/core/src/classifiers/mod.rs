//! The six base classifiers and the shared prediction contract.
//!
//! Every fitted model exposes per-class probabilities, and its predicted
//! class is always the argmax of those probabilities with ties going to
//! the lowest class code.

pub mod adaboost;
pub mod forest;
pub mod knn;
pub mod lda;
pub mod tree;

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ensembles::{Bagging, Voting};
use crate::error::{create_file, open_file, Error, Result};
use crate::matrix::{argmax, Matrix};
use crate::rng::rng_from;

pub use adaboost::{AdaBoost, AdaBoostParams};
pub use forest::{ExtraTreesParams, Forest, MaxFeatures, RandomForestParams};
pub use knn::{Knn, KnnParams};
pub use lda::{Lda, LdaParams};
pub use tree::{Criterion, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecisionTreeParams {
    pub criterion: Criterion,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    /// Alternative reading of the leaf-size setting: cap on leaf count.
    pub max_leaf_nodes: Option<usize>,
}

impl Default for DecisionTreeParams {
    fn default() -> Self {
        DecisionTreeParams {
            criterion: Criterion::Entropy,
            min_samples_leaf: 7,
            max_depth: None,
            max_leaf_nodes: None,
        }
    }
}

impl DecisionTreeParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            criterion: self.criterion,
            min_samples_leaf: self.min_samples_leaf,
            max_depth: self.max_depth,
            max_leaf_nodes: self.max_leaf_nodes,
            ..TreeParams::default()
        }
    }
}

/// A base classifier and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    DecisionTree(DecisionTreeParams),
    RandomForest(RandomForestParams),
    ExtraTrees(ExtraTreesParams),
    Knn(KnnParams),
    Lda(LdaParams),
    #[serde(rename = "adaboost")]
    AdaBoost(AdaBoostParams),
}

impl ModelSpec {
    pub fn decision_tree() -> Self {
        ModelSpec::DecisionTree(DecisionTreeParams::default())
    }
    pub fn random_forest() -> Self {
        ModelSpec::RandomForest(RandomForestParams::default())
    }
    pub fn extra_trees() -> Self {
        ModelSpec::ExtraTrees(ExtraTreesParams::default())
    }
    pub fn knn() -> Self {
        ModelSpec::Knn(KnnParams::default())
    }
    pub fn lda() -> Self {
        ModelSpec::Lda(LdaParams::default())
    }
    pub fn adaboost() -> Self {
        ModelSpec::AdaBoost(AdaBoostParams::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::DecisionTree(_) => "decision_tree",
            ModelSpec::RandomForest(_) => "random_forest",
            ModelSpec::ExtraTrees(_) => "extra_trees",
            ModelSpec::Knn(_) => "knn",
            ModelSpec::Lda(_) => "lda",
            ModelSpec::AdaBoost(_) => "adaboost",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("{}: {m}", self.name())));
        match self {
            ModelSpec::DecisionTree(p) if p.min_samples_leaf == 0 => {
                bad("min_samples_leaf must be >= 1")
            }
            ModelSpec::DecisionTree(p) if p.max_leaf_nodes == Some(0) => {
                bad("max_leaf_nodes must be >= 1")
            }
            ModelSpec::RandomForest(p) if p.n_trees == 0 || p.max_depth == 0 => {
                bad("n_trees and max_depth must be >= 1")
            }
            ModelSpec::ExtraTrees(p) if p.n_trees == 0 || p.max_depth == 0 => {
                bad("n_trees and max_depth must be >= 1")
            }
            ModelSpec::Knn(p) if p.k == 0 => bad("k must be >= 1"),
            ModelSpec::Lda(p) if !(p.tol > 0.0 && p.tol < 1.0) => bad("tol must lie in (0, 1)"),
            ModelSpec::AdaBoost(p) if p.n_estimators == 0 => bad("n_estimators must be >= 1"),
            _ => Ok(()),
        }
    }

    /// Fits this model on `(x, y)` with labels in `0..n_classes`.
    pub fn fit(
        &self,
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<TrainedModel> {
        self.validate()?;
        if x.is_empty() {
            return Err(Error::argument(format!(
                "{}: empty training set",
                self.name()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::argument(format!(
                "label {bad} outside {n_classes} classes"
            )));
        }
        Ok(match self {
            ModelSpec::DecisionTree(p) => TrainedModel::DecisionTree(Tree::fit(
                x,
                y,
                None,
                n_classes,
                p.tree_params(),
                &mut rng_from(seed),
            )?),
            ModelSpec::RandomForest(p) => {
                TrainedModel::RandomForest(Forest::fit_random_forest(x, y, n_classes, p, seed)?)
            }
            ModelSpec::ExtraTrees(p) => {
                TrainedModel::ExtraTrees(Forest::fit_extra_trees(x, y, n_classes, p, seed)?)
            }
            ModelSpec::Knn(p) => TrainedModel::Knn(Knn::fit(x, y, n_classes, p)?),
            ModelSpec::Lda(p) => TrainedModel::Lda(Lda::fit(x, y, n_classes, p)?),
            ModelSpec::AdaBoost(p) => TrainedModel::AdaBoost(AdaBoost::fit(x, y, n_classes, p)?),
        })
    }
}

/// Shared prediction contract.
pub trait Classifier: Send + Sync {
    fn n_classes(&self) -> usize;
    fn n_features(&self) -> usize;
    /// Class probabilities for one row: nonnegative, summing to one.
    fn proba_row(&self, row: &[f64]) -> Vec<f64>;

    fn predict_row(&self, row: &[f64]) -> usize {
        argmax(&self.proba_row(row))
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features() {
            return Err(Error::schema(format!(
                "model expects {} features, input has {}",
                self.n_features(),
                x.cols()
            )));
        }
        Ok(())
    }

    fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        self.check_width(x)?;
        Ok((0..x.rows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect())
    }

    fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        self.check_width(x)?;
        let rows: Vec<Vec<f64>> = (0..x.rows())
            .into_par_iter()
            .map(|i| self.proba_row(x.row(i)))
            .collect();
        let mut data = Vec::with_capacity(x.rows() * self.n_classes());
        rows.iter().for_each(|r| data.extend_from_slice(r));
        Matrix::new(x.rows(), self.n_classes(), data)
    }
}

/// Any fitted model, base or ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    DecisionTree(Tree),
    RandomForest(Forest),
    ExtraTrees(Forest),
    Knn(Knn),
    Lda(Lda),
    AdaBoost(AdaBoost),
    Bagging(Box<Bagging>),
    Voting(Box<Voting>),
}

impl Classifier for TrainedModel {
    fn n_classes(&self) -> usize {
        match self {
            TrainedModel::DecisionTree(m) => m.n_classes(),
            TrainedModel::RandomForest(m) | TrainedModel::ExtraTrees(m) => m.n_classes(),
            TrainedModel::Knn(m) => m.n_classes(),
            TrainedModel::Lda(m) => m.n_classes(),
            TrainedModel::AdaBoost(m) => m.n_classes(),
            TrainedModel::Bagging(m) => m.n_classes(),
            TrainedModel::Voting(m) => m.n_classes(),
        }
    }

    fn n_features(&self) -> usize {
        match self {
            TrainedModel::DecisionTree(m) => m.n_features(),
            TrainedModel::RandomForest(m) | TrainedModel::ExtraTrees(m) => m.n_features(),
            TrainedModel::Knn(m) => m.n_features(),
            TrainedModel::Lda(m) => m.n_features(),
            TrainedModel::AdaBoost(m) => m.n_features(),
            TrainedModel::Bagging(m) => m.n_features(),
            TrainedModel::Voting(m) => m.n_features(),
        }
    }

    fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        match self {
            TrainedModel::DecisionTree(m) => m.leaf_proba(row).to_vec(),
            TrainedModel::RandomForest(m) | TrainedModel::ExtraTrees(m) => m.proba_row(row),
            TrainedModel::Knn(m) => m.proba_row(row),
            TrainedModel::Lda(m) => m.proba_row(row),
            TrainedModel::AdaBoost(m) => m.proba_row(row),
            TrainedModel::Bagging(m) => m.proba_row(row),
            TrainedModel::Voting(m) => m.proba_row(row),
        }
    }
}

const MODEL_MAGIC: &[u8; 8] = b"CLMODEL\0";
const MODEL_FORMAT_VERSION: u32 = 1;

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::DecisionTree(_) => "decision_tree",
            TrainedModel::RandomForest(_) => "random_forest",
            TrainedModel::ExtraTrees(_) => "extra_trees",
            TrainedModel::Knn(_) => "knn",
            TrainedModel::Lda(_) => "lda",
            TrainedModel::AdaBoost(_) => "adaboost",
            TrainedModel::Bagging(_) => "bagging",
            TrainedModel::Voting(_) => "voting",
        }
    }

    /// Structural summary for reports.
    pub fn summary(&self) -> Value {
        let forest = |f: &Forest| {
            json!({
                "kind": self.kind(),
                "n_trees": f.trees.len(),
                "max_tree_depth": f.max_depth(),
                "tree_depths": f.trees.iter().map(Tree::depth).collect::<Vec<_>>(),
            })
        };
        match self {
            TrainedModel::DecisionTree(t) => json!({
                "kind": self.kind(),
                "depth": t.depth(),
                "leaves": t.n_leaves(),
                "nodes": t.nodes().len(),
            }),
            TrainedModel::RandomForest(f) | TrainedModel::ExtraTrees(f) => forest(f),
            TrainedModel::Knn(k) => json!({"kind": self.kind(), "k": k.k()}),
            TrainedModel::Lda(l) => json!({"kind": self.kind(), "rank": l.rank()}),
            TrainedModel::AdaBoost(a) => json!({
                "kind": self.kind(),
                "estimators": a.estimators().len(),
                "alphas": a.alphas(),
                "stop_reason": a.stop_reason(),
            }),
            TrainedModel::Bagging(b) => b.summary(),
            TrainedModel::Voting(v) => v.summary(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(create_file(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_FORMAT_VERSION.to_le_bytes())?;
        bincode::serialize_into(w, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(open_file(path)?))
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Serialization("not a model file".into()));
        }
        let mut ver = [0u8; 4];
        r.read_exact(&mut ver)?;
        let ver = u32::from_le_bytes(ver);
        if ver != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model version {ver}"
            )));
        }
        Ok(bincode::deserialize_from(r)?)
    }
}
