// Fits each base classifier on a holdout split and prints its accuracy.

use std::error::Error;

use crime_lab::classifiers::{Classifier, ModelSpec};
use crime_lab::metrics::accuracy;
use crime_lab::preprocess::{apply_minmax, fit_minmax, stratified_holdout_split};
use crime_lab::runner::SyntheticSpec;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (x, y) = SyntheticSpec {
        counts: vec![200, 150, 100],
        dims: 3,
        spread: 0.2,
        seed: 8,
        background_noise: false,
    }
    .sample_points()?;
    let split = stratified_holdout_split(&y, 3, 0.34, 1)?;
    let norm = fit_minmax(&x.select_rows(&split.train_indices))?;
    let xtr = apply_minmax(&x.select_rows(&split.train_indices), &norm)?;
    let xte = apply_minmax(&x.select_rows(&split.test_indices), &norm)?;
    let ytr: Vec<usize> = split.train_indices.iter().map(|&i| y[i]).collect();
    let yte: Vec<usize> = split.test_indices.iter().map(|&i| y[i]).collect();

    for spec in [
        ModelSpec::decision_tree(),
        ModelSpec::random_forest(),
        ModelSpec::extra_trees(),
        ModelSpec::knn(),
        ModelSpec::lda(),
        ModelSpec::adaboost(),
    ] {
        let model = spec.fit(&xtr, &ytr, 3, 5)?;
        let pred = model.predict(&xte)?;
        println!("{:<14} {:.3}", spec.name(), accuracy(&yte, &pred)?);
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
