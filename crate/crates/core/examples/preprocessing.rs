// Shuffling, min-max scaling and stratified split planning.

use std::error::Error;

use crime_lab::matrix::Matrix;
use crime_lab::preprocess::{
    apply_minmax, fit_minmax, stratified_holdout_split, stratified_kfold_plan,
    DEFAULT_TEST_FRACTION,
};
use crime_lab::table::class_counts;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let train = Matrix::from_rows(&[
        vec![10.0, 5.0, -1.0],
        vec![20.0, 5.0, 0.0],
        vec![15.0, 5.0, 3.0],
    ])?;
    let params = fit_minmax(&train)?;
    let scaled = apply_minmax(&train, &params)?;
    for row in scaled.iter_rows() {
        println!("{row:?}");
    }
    println!("constant columns: {:?}", params.degenerate_columns());
    // test rows may fall outside [0, 1]; they are scaled with the training extrema
    let test = apply_minmax(&Matrix::from_rows(&[vec![25.0, 6.0, 1.0]])?, &params)?;
    println!("test row: {:?}", test.row(0));

    let labels: Vec<usize> = (0..200)
        .map(|i| if i % 10 == 0 { 2 } else { i % 2 })
        .collect();
    let split = stratified_holdout_split(&labels, 3, DEFAULT_TEST_FRACTION, 7)?;
    let test_labels: Vec<usize> = split.test_indices.iter().map(|&i| labels[i]).collect();
    println!(
        "holdout: {} train / {} test, test class counts {:?} of {:?}",
        split.train_indices.len(),
        split.test_indices.len(),
        class_counts(&test_labels, 3),
        class_counts(&labels, 3)
    );

    let folds = stratified_kfold_plan(&labels, 3, 10, 7)?;
    for f in 0..3 {
        let t: Vec<usize> = folds.test_indices(f).iter().map(|&i| labels[i]).collect();
        println!("fold {}: {:?}", f + 1, class_counts(&t, 3));
    }
    println!("fold sizes: {:?}", folds.fold_sizes());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
