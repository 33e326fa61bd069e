// The four ensemble recipes, compared on one holdout split.

use std::error::Error;

use crime_lab::classifiers::{Classifier, TrainedModel};
use crime_lab::ensembles::{BaggingParams, EnsembleSpec};
use crime_lab::metrics::accuracy;
use crime_lab::preprocess::stratified_holdout_split;
use crime_lab::runner::SyntheticSpec;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (x, y) = SyntheticSpec {
        counts: vec![150, 100, 60],
        dims: 2,
        spread: 0.15,
        seed: 12,
        background_noise: false,
    }
    .sample_points()?;
    let split = stratified_holdout_split(&y, 3, 0.3, 2)?;
    let (xtr, xte) = (
        x.select_rows(&split.train_indices),
        x.select_rows(&split.test_indices),
    );
    let ytr: Vec<usize> = split.train_indices.iter().map(|&i| y[i]).collect();
    let yte: Vec<usize> = split.test_indices.iter().map(|&i| y[i]).collect();

    let small_bags = BaggingParams {
        n_bags: 5,
        ..Default::default()
    };
    let recipes = [
        EnsembleSpec::model1(),
        match EnsembleSpec::model2() {
            EnsembleSpec::Model2Bagged {
                bases, composition, ..
            } => EnsembleSpec::Model2Bagged {
                bases,
                bagging: small_bags,
                composition,
            },
            other => other,
        },
        EnsembleSpec::model3(),
        match EnsembleSpec::model4() {
            EnsembleSpec::Model4BagThenVote { bases, .. } => EnsembleSpec::Model4BagThenVote {
                bases,
                bagging: small_bags,
            },
            other => other,
        },
    ];
    for spec in recipes {
        let model = spec.fit(&xtr, &ytr, 3, 17)?;
        let acc = accuracy(&yte, &model.predict(&xte)?)?;
        let shape = match &model {
            TrainedModel::Voting(v) => format!("vote over {} ({:?})", v.bases.len(), v.mode),
            TrainedModel::Bagging(b) => format!("{} bags ({:?})", b.members.len(), b.voting),
            other => other.kind().to_string(),
        };
        println!("{:<22} {acc:.3}  {shape}", spec.name());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
