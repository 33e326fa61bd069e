// Confusion matrix, precision/recall/F1, one-vs-rest ROC and a paired
// t-test on two sets of fold accuracies.

use std::error::Error;

use crime_lab::matrix::Matrix;
use crime_lab::metrics::{
    confusion_matrix, mse_labels, paired_t_test, precision_recall_f1, roc_ovr,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let y_true = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2];
    let y_pred = [0, 0, 1, 0, 1, 1, 2, 2, 2, 0];
    let cm = confusion_matrix(&y_true, &y_pred, 3)?;
    cm.write_csv(std::io::stdout())?;
    precision_recall_f1(&cm).write_csv(std::io::stdout())?;
    println!("label mse: {}", mse_labels(&y_true, &y_pred)?);

    let scores = Matrix::from_rows(&[
        vec![0.8, 0.1, 0.1],
        vec![0.7, 0.2, 0.1],
        vec![0.4, 0.5, 0.1],
        vec![0.6, 0.3, 0.1],
        vec![0.2, 0.7, 0.1],
        vec![0.3, 0.6, 0.1],
        vec![0.1, 0.4, 0.5],
        vec![0.1, 0.2, 0.7],
        vec![0.2, 0.1, 0.7],
        vec![0.5, 0.2, 0.3],
    ])?;
    for c in 0..3 {
        let roc = roc_ovr(&y_true, &scores, c)?;
        println!(
            "class {c}: AUC {:.3} over {} points",
            roc.auc,
            roc.points.len()
        );
    }

    // ten-fold accuracies of two models on the same folds
    let a = [0.99; 10];
    let b = [0.66, 0.66, 0.67, 0.66, 0.70, 0.69, 0.72, 0.74, 0.72, 0.71];
    let t = paired_t_test(&a, &b)?;
    println!(
        "t = {:.3}, p = {:.3e}, df = {}: {}",
        t.t_statistic, t.p_value, t.degrees_of_freedom, t.decision
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
