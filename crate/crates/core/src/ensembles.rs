//! Voting and bagging ensembles, and the four named ensemble recipes.
//!
//! * model 1: hard vote over random forest, decision tree and LDA;
//! * model 2: bagging whose every bag trains and votes that same trio;
//! * model 3: soft vote over random forest, KNN and extra trees, weights 1, 2, 2;
//! * model 4: bag each of random forest, decision tree and extra trees, then
//!   hard-vote the three bagged models.
//!
//! Hard voters report weighted vote fractions as their probabilities, so
//! the predicted class (argmax, lowest code on ties) is the modal vote.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifiers::{Classifier, LdaParams, ModelSpec, TrainedModel};
use crate::error::{Error, Result};
use crate::matrix::{argmax, Matrix};
use crate::rng::{derive_seed, rng_from, sample_without_replacement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VoteMode {
    #[default]
    Hard,
    Soft,
}

/// A fitted voting ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Voting {
    pub bases: Vec<TrainedModel>,
    pub weights: Vec<f64>,
    pub mode: VoteMode,
    n_classes: usize,
    n_features: usize,
}

impl Voting {
    pub fn new(bases: Vec<TrainedModel>, weights: Vec<f64>, mode: VoteMode) -> Result<Self> {
        let first = bases
            .first()
            .ok_or_else(|| Error::argument("voting needs at least one base model"))?;
        let (n_classes, n_features) = (first.n_classes(), first.n_features());
        if bases
            .iter()
            .any(|b| b.n_classes() != n_classes || b.n_features() != n_features)
        {
            return Err(Error::argument(
                "voting bases disagree on classes or features",
            ));
        }
        check_weights(&weights, bases.len())?;
        Ok(Voting {
            bases,
            weights,
            mode,
            n_classes,
            n_features,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        let members: Vec<Vec<f64>> = self.bases.iter().map(|b| b.proba_row(row)).collect();
        combine(&members, &self.weights, self.mode, self.n_classes)
    }

    pub fn summary(&self) -> Value {
        json!({
            "kind": "voting",
            "mode": self.mode,
            "weights": self.weights,
            "bases": self.bases.iter().map(TrainedModel::summary).collect::<Vec<_>>(),
        })
    }
}

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::argument(format!(
            "{} weights for {n} models",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::argument("voting weights must be positive"));
    }
    Ok(())
}

/// Aggregates member probability rows.
///
/// Hard: each member puts its weight on its argmax class. Soft: the
/// weighted mean of the rows. Both are divided by the total weight.
pub fn combine(
    members: &[Vec<f64>],
    weights: &[f64],
    mode: VoteMode,
    n_classes: usize,
) -> Vec<f64> {
    let mut s = vec![0.0; n_classes];
    for (p, &w) in members.iter().zip(weights) {
        match mode {
            VoteMode::Hard => s[argmax(p)] += w,
            VoteMode::Soft => s.iter_mut().zip(p).for_each(|(a, b)| *a += w * b),
        }
    }
    let total: f64 = weights.iter().sum();
    s.iter_mut().for_each(|v| *v /= total);
    s
}

/// Modal class of `votes`; ties go to the lowest class code.
pub fn hard_vote(votes: &[usize], n_classes: usize) -> usize {
    let mut c = vec![0usize; n_classes];
    votes.iter().for_each(|&v| c[v] += 1);
    let mut best = 0;
    for k in 1..n_classes {
        if c[k] > c[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaggingParams {
    pub n_bags: usize,
    /// Fraction of rows per bag, `ceil(max_samples * n)`.
    pub max_samples: f64,
    /// Fraction of features per bag, `ceil(max_features * d)`, drawn without replacement.
    pub max_features: f64,
    /// Draw rows with replacement.
    pub bootstrap: bool,
    pub voting: VoteMode,
}

impl Default for BaggingParams {
    fn default() -> Self {
        BaggingParams {
            n_bags: 10,
            max_samples: 0.5,
            max_features: 0.5,
            bootstrap: true,
            voting: VoteMode::Hard,
        }
    }
}

impl BaggingParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_bags == 0 {
            return Err(Error::Config("n_bags must be >= 1".into()));
        }
        for (name, v) in [
            ("max_samples", self.max_samples),
            ("max_features", self.max_features),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// One bag: the rows and feature columns it saw, and its fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagMember {
    pub features: Vec<usize>,
    #[serde(skip)]
    pub rows: Vec<usize>,
    pub base_seed: u64,
    pub model: TrainedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bagging {
    pub members: Vec<BagMember>,
    pub voting: VoteMode,
    n_classes: usize,
    n_features: usize,
}

impl Bagging {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        let members: Vec<Vec<f64>> = self
            .members
            .iter()
            .map(|m| {
                let sub: Vec<f64> = m.features.iter().map(|&j| row[j]).collect();
                m.model.proba_row(&sub)
            })
            .collect();
        combine(
            &members,
            &vec![1.0; members.len()],
            self.voting,
            self.n_classes,
        )
    }

    pub fn summary(&self) -> Value {
        json!({
            "kind": "bagging",
            "n_bags": self.members.len(),
            "voting": self.voting,
            "features_per_bag": self.members.first().map_or(0, |m| m.features.len()),
            "members": self.members.iter().map(|m| m.model.summary()).collect::<Vec<_>>(),
        })
    }
}

/// Fits `params.n_bags` copies of `base` on seeded row and feature subsets.
pub fn bagging_fit(
    base: &EstimatorSpec,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: &BaggingParams,
    seed: u64,
) -> Result<Bagging> {
    params.validate()?;
    let (n, d) = (x.rows(), x.cols());
    let n_rows = (params.max_samples * n as f64).ceil() as usize;
    let n_feats = (params.max_features * d as f64).ceil() as usize;
    if n_rows == 0 || n_feats == 0 {
        return Err(Error::argument(format!(
            "bag would have {n_rows} rows and {n_feats} features"
        )));
    }
    let members = (0..params.n_bags)
        .into_par_iter()
        .map(|b| {
            let bag_seed = derive_seed(seed, b as u64);
            let mut rng = rng_from(bag_seed);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n_rows).map(|_| rng.gen_range(0..n)).collect()
            } else {
                sample_without_replacement(n, n_rows, &mut rng)
            };
            let features = sample_without_replacement(d, n_feats, &mut rng);
            let bx = x.select_rows(&rows).select_cols(&features);
            let by: Vec<usize> = rows.iter().map(|&i| y[i]).collect();
            let base_seed = derive_seed(bag_seed, u64::MAX);
            let model = base.fit(&bx, &by, n_classes, base_seed)?;
            Ok(BagMember {
                features,
                rows,
                base_seed,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Bagging {
        members,
        voting: params.voting,
        n_classes,
        n_features: d,
    })
}

fn fit_voting(
    bases: &[EstimatorSpec],
    weights: &[f64],
    mode: VoteMode,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<Voting> {
    check_weights(weights, bases.len())?;
    let fitted = bases
        .par_iter()
        .enumerate()
        .map(|(i, b)| b.fit(x, y, n_classes, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Voting::new(fitted, weights.to_vec(), mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BaggedVoteComposition {
    /// Each bag trains the whole trio and votes internally.
    #[default]
    BagOfVoters,
    /// Each base is bagged separately and the bagged models vote.
    VoteOfBags,
}

// Bags can leave a rare class with a single row.
fn relax_for_bags(bases: &[ModelSpec]) -> Vec<ModelSpec> {
    bases
        .iter()
        .map(|b| match b {
            ModelSpec::Lda(p) => ModelSpec::Lda(LdaParams {
                allow_singleton_classes: true,
                ..*p
            }),
            other => other.clone(),
        })
        .collect()
}

fn trio(a: ModelSpec, b: ModelSpec, c: ModelSpec) -> Vec<ModelSpec> {
    vec![a, b, c]
}

fn default_trio_rf_dt_lda() -> Vec<ModelSpec> {
    trio(
        ModelSpec::random_forest(),
        ModelSpec::decision_tree(),
        ModelSpec::lda(),
    )
}

fn default_trio_rf_knn_et() -> Vec<ModelSpec> {
    trio(
        ModelSpec::random_forest(),
        ModelSpec::knn(),
        ModelSpec::extra_trees(),
    )
}

fn default_trio_rf_dt_et() -> Vec<ModelSpec> {
    trio(
        ModelSpec::random_forest(),
        ModelSpec::decision_tree(),
        ModelSpec::extra_trees(),
    )
}

fn default_weights_122() -> Vec<f64> {
    vec![1.0, 2.0, 2.0]
}

fn default_ones3() -> Vec<f64> {
    vec![1.0; 3]
}

/// Ensemble recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleSpec {
    #[serde(rename = "model1_hard_vote")]
    Model1HardVote {
        #[serde(default = "default_trio_rf_dt_lda")]
        bases: Vec<ModelSpec>,
    },
    #[serde(rename = "model2_bagged")]
    Model2Bagged {
        #[serde(default = "default_trio_rf_dt_lda")]
        bases: Vec<ModelSpec>,
        #[serde(default)]
        bagging: BaggingParams,
        #[serde(default)]
        composition: BaggedVoteComposition,
    },
    #[serde(rename = "model3_weighted_soft")]
    Model3WeightedSoft {
        #[serde(default = "default_trio_rf_knn_et")]
        bases: Vec<ModelSpec>,
        #[serde(default = "default_weights_122")]
        weights: Vec<f64>,
    },
    #[serde(rename = "model4_bag_then_vote")]
    Model4BagThenVote {
        #[serde(default = "default_trio_rf_dt_et")]
        bases: Vec<ModelSpec>,
        #[serde(default)]
        bagging: BaggingParams,
    },
    /// Plain bagging of one base model.
    Bagging {
        base: ModelSpec,
        #[serde(default)]
        bagging: BaggingParams,
    },
    /// Plain voting over base models.
    Voting {
        bases: Vec<ModelSpec>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default)]
        voting: VoteMode,
    },
}

impl EnsembleSpec {
    pub fn model1() -> Self {
        EnsembleSpec::Model1HardVote {
            bases: default_trio_rf_dt_lda(),
        }
    }

    pub fn model2() -> Self {
        EnsembleSpec::Model2Bagged {
            bases: default_trio_rf_dt_lda(),
            bagging: BaggingParams::default(),
            composition: BaggedVoteComposition::BagOfVoters,
        }
    }

    pub fn model3() -> Self {
        EnsembleSpec::Model3WeightedSoft {
            bases: default_trio_rf_knn_et(),
            weights: default_weights_122(),
        }
    }

    pub fn model4() -> Self {
        EnsembleSpec::Model4BagThenVote {
            bases: default_trio_rf_dt_et(),
            bagging: BaggingParams::default(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnsembleSpec::Model1HardVote { .. } => "model1_hard_vote",
            EnsembleSpec::Model2Bagged { .. } => "model2_bagged",
            EnsembleSpec::Model3WeightedSoft { .. } => "model3_weighted_soft",
            EnsembleSpec::Model4BagThenVote { .. } => "model4_bag_then_vote",
            EnsembleSpec::Bagging { .. } => "bagging",
            EnsembleSpec::Voting { .. } => "voting",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bases: Vec<&ModelSpec> = match self {
            EnsembleSpec::Model1HardVote { bases }
            | EnsembleSpec::Model2Bagged { bases, .. }
            | EnsembleSpec::Model3WeightedSoft { bases, .. }
            | EnsembleSpec::Model4BagThenVote { bases, .. }
            | EnsembleSpec::Voting { bases, .. } => bases.iter().collect(),
            EnsembleSpec::Bagging { base, .. } => vec![base],
        };
        if bases.is_empty() {
            return Err(Error::Config(format!("{}: no base models", self.name())));
        }
        bases.iter().try_for_each(|b| b.validate())?;
        match self {
            EnsembleSpec::Model2Bagged { bagging, .. }
            | EnsembleSpec::Model4BagThenVote { bagging, .. }
            | EnsembleSpec::Bagging { bagging, .. } => bagging.validate(),
            EnsembleSpec::Model3WeightedSoft { bases, weights } => {
                check_weights(weights, bases.len()).map_err(|e| Error::Config(e.to_string()))
            }
            EnsembleSpec::Voting {
                bases,
                weights: Some(w),
                ..
            } => check_weights(w, bases.len()).map_err(|e| Error::Config(e.to_string())),
            _ => Ok(()),
        }
    }

    pub fn fit(
        &self,
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<TrainedModel> {
        self.validate()?;
        let wrap = |v: Vec<ModelSpec>| v.into_iter().map(EstimatorSpec::Model).collect::<Vec<_>>();
        let voting = |v: Voting| TrainedModel::Voting(Box::new(v));
        Ok(match self {
            EnsembleSpec::Model1HardVote { bases } => voting(fit_voting(
                &wrap(bases.clone()),
                &vec![1.0; bases.len()],
                VoteMode::Hard,
                x,
                y,
                n_classes,
                seed,
            )?),
            EnsembleSpec::Model2Bagged {
                bases,
                bagging,
                composition,
            } => match composition {
                BaggedVoteComposition::BagOfVoters => {
                    let trio = EstimatorSpec::Ensemble(Box::new(EnsembleSpec::Model1HardVote {
                        bases: relax_for_bags(bases),
                    }));
                    TrainedModel::Bagging(Box::new(bagging_fit(
                        &trio, x, y, n_classes, bagging, seed,
                    )?))
                }
                BaggedVoteComposition::VoteOfBags => voting(fit_vote_of_bags(
                    &relax_for_bags(bases),
                    bagging,
                    x,
                    y,
                    n_classes,
                    seed,
                )?),
            },
            EnsembleSpec::Model3WeightedSoft { bases, weights } => voting(fit_voting(
                &wrap(bases.clone()),
                weights,
                VoteMode::Soft,
                x,
                y,
                n_classes,
                seed,
            )?),
            EnsembleSpec::Model4BagThenVote { bases, bagging } => voting(fit_vote_of_bags(
                &relax_for_bags(bases),
                bagging,
                x,
                y,
                n_classes,
                seed,
            )?),
            EnsembleSpec::Bagging { base, bagging } => {
                TrainedModel::Bagging(Box::new(bagging_fit(
                    &EstimatorSpec::Model(relax_for_bags(std::slice::from_ref(base)).remove(0)),
                    x,
                    y,
                    n_classes,
                    bagging,
                    seed,
                )?))
            }
            EnsembleSpec::Voting {
                bases,
                weights,
                voting: mode,
            } => {
                let w = weights.clone().unwrap_or_else(|| vec![1.0; bases.len()]);
                voting(fit_voting(
                    &wrap(bases.clone()),
                    &w,
                    *mode,
                    x,
                    y,
                    n_classes,
                    seed,
                )?)
            }
        })
    }
}

fn fit_vote_of_bags(
    bases: &[ModelSpec],
    bagging: &BaggingParams,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<Voting> {
    let bags = bases
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            bagging_fit(
                &EstimatorSpec::Model(b.clone()),
                x,
                y,
                n_classes,
                bagging,
                derive_seed(seed, i as u64),
            )
            .map(|bg| TrainedModel::Bagging(Box::new(bg)))
        })
        .collect::<Result<Vec<_>>>()?;
    Voting::new(
        bags,
        default_ones3()
            .into_iter()
            .cycle()
            .take(bases.len())
            .collect(),
        VoteMode::Hard,
    )
}

/// A base model or an ensemble recipe; this is what a run trains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimatorSpec {
    Model(ModelSpec),
    Ensemble(Box<EnsembleSpec>),
}

impl EstimatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorSpec::Model(m) => m.name(),
            EstimatorSpec::Ensemble(e) => e.name(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorSpec::Model(m) => m.validate(),
            EstimatorSpec::Ensemble(e) => e.validate(),
        }
    }

    pub fn fit(
        &self,
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<TrainedModel> {
        match self {
            EstimatorSpec::Model(m) => m.fit(x, y, n_classes, seed),
            EstimatorSpec::Ensemble(e) => e.fit(x, y, n_classes, seed),
        }
    }
}

impl From<ModelSpec> for EstimatorSpec {
    fn from(m: ModelSpec) -> Self {
        EstimatorSpec::Model(m)
    }
}

impl From<EnsembleSpec> for EstimatorSpec {
    fn from(e: EnsembleSpec) -> Self {
        EstimatorSpec::Ensemble(Box::new(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hard_vote_table() {
        assert_eq!(hard_vote(&[0, 0, 1], 3), 0);
        assert_eq!(hard_vote(&[2, 1, 2], 3), 2);
        assert_eq!(hard_vote(&[2, 0, 1], 3), 0);
    }

    #[test]
    fn soft_weighted_example() {
        let m = vec![vec![0.6, 0.4], vec![0.2, 0.8], vec![0.5, 0.5]];
        let s = combine(&m, &[1.0, 2.0, 2.0], VoteMode::Soft, 2);
        // weighted sums (2.0, 3.0) over total weight 5
        assert!((s[0] - 0.4).abs() < 1e-12 && (s[1] - 0.6).abs() < 1e-12);
        assert_eq!(argmax(&s), 1);
    }

    #[test]
    fn hard_combine_is_vote_fraction() {
        let m = vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.6, 0.4]];
        assert_eq!(
            combine(&m, &[1.0; 3], VoteMode::Hard, 2),
            vec![2.0 / 3.0, 1.0 / 3.0]
        );
    }

    #[test]
    fn spec_json_round_trip_with_defaults() {
        let e: EstimatorSpec = serde_json::from_str(r#"{"kind":"model3_weighted_soft"}"#).unwrap();
        assert_eq!(e, EnsembleSpec::model3().into());
        let m: EstimatorSpec = serde_json::from_str(r#"{"kind":"knn","k":3}"#).unwrap();
        assert_eq!(
            m,
            ModelSpec::Knn(crate::classifiers::KnnParams { k: 3 }).into()
        );
        let s = serde_json::to_string(&EstimatorSpec::from(EnsembleSpec::model2())).unwrap();
        assert_eq!(
            serde_json::from_str::<EstimatorSpec>(&s).unwrap(),
            EnsembleSpec::model2().into()
        );
    }

    #[test]
    fn invalid_bagging_rejected() {
        let p = BaggingParams {
            max_samples: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let w = EnsembleSpec::Model3WeightedSoft {
            bases: default_trio_rf_knn_et(),
            weights: vec![1.0, -1.0, 1.0],
        };
        assert!(w.validate().is_err());
    }
}
