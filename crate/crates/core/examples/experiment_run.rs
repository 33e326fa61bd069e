// A config-driven experiment: ten-fold CV plus holdout with and without
// SMOTE, report files, and a paired t-test between the two runs.

use std::error::Error;

use crime_lab::classifiers::ModelSpec;
use crime_lab::resample::{SamplerKind, SamplerSpec};
use crime_lab::runner::{
    compare_runs, generate_synthetic, run_experiment, Protocol, RunConfig, SyntheticSpec,
};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("blobs.csv");
    generate_synthetic(
        &SyntheticSpec {
            counts: vec![450, 45, 15],
            dims: 2,
            spread: 0.2,
            seed: 9,
            background_noise: false,
        },
        &data,
    )?;

    let mut reports = Vec::new();
    for kind in [SamplerKind::None, SamplerKind::Smote] {
        let mut cfg = RunConfig::new(&data, ModelSpec::knn());
        cfg.protocol = Protocol::Both;
        cfg.sampler = SamplerSpec::new(kind);
        cfg.out_dir = Some(dir.path().join(format!("{kind:?}").to_lowercase()));
        let run = run_experiment(&cfg)?;
        let cv = run.report.cv.as_ref().ok_or("no cv section")?;
        let minority = cv.pooled.prf.per_class[2].recall;
        println!(
            "{kind:?}: cv accuracy {:.3}, minority recall {minority:.3}, {} files",
            cv.mean_accuracy,
            run.files.len()
        );
        reports.push(run.report);
    }
    let row = compare_runs(&reports[0], &reports[1])?;
    println!(
        "t = {:.3}, p = {:.4}: {}",
        row.test.t_statistic, row.test.p_value, row.test.decision
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
