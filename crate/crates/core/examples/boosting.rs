// SAMME boosting of depth-1 trees: per-round weights, errors and the
// training-error curve.

use std::error::Error;

use crime_lab::classifiers::{AdaBoost, AdaBoostParams};
use crime_lab::runner::SyntheticSpec;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (x, y) = SyntheticSpec {
        counts: vec![120, 120, 120],
        dims: 2,
        spread: 0.18,
        seed: 4,
        background_noise: false,
    }
    .sample_points()?;
    let model = AdaBoost::fit(
        &x,
        &y,
        3,
        &AdaBoostParams {
            n_estimators: 20,
            ..Default::default()
        },
    )?;
    println!("round  alpha   weighted err  train err");
    for (m, ((a, e), t)) in model
        .alphas()
        .iter()
        .zip(model.estimator_errors())
        .zip(model.training_errors())
        .enumerate()
    {
        println!("{:>5}  {a:>6.3}  {e:>12.4}  {t:>9.4}", m + 1);
    }
    println!("stopped: {:?}", model.stop_reason());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
