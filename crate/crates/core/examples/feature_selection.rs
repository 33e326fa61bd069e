// ANOVA k-best and variance-threshold selection on encoded incidents.

use std::error::Error;

use crime_lab::featsel::{select_features, FeatureSelectorSpec, SelectorKind};
use crime_lab::ingest::IngestOptions;
use crime_lab::preprocess::{apply_minmax, fit_minmax};
use crime_lab::runner::{synthetic_table, SyntheticSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let table = synthetic_table(
        &SyntheticSpec {
            counts: vec![150, 100, 50],
            dims: 3,
            spread: 0.15,
            seed: 21,
            background_noise: true,
        },
        &IngestOptions::default(),
    )?;
    let names = table.column_names();
    let x = apply_minmax(&table.matrix, &fit_minmax(&table.matrix)?)?;

    let anova = FeatureSelectorSpec {
        kind: SelectorKind::AnovaKBest,
        k: 4,
        ..Default::default()
    };
    let s = select_features(&x, &table.labels, table.n_classes(), &anova)?;
    println!("top {} by F-score:", anova.k);
    for &j in &s.kept {
        println!("  {:<16} F = {:.2}", names[j], s.scores[j]);
    }

    let var = FeatureSelectorSpec {
        kind: SelectorKind::VarianceThreshold,
        threshold: 0.05,
        ..Default::default()
    };
    let s = select_features(&x, &table.labels, table.n_classes(), &var)?;
    let kept: Vec<&str> = s.kept.iter().map(|&j| names[j]).collect();
    println!("variance > {}: {}", var.threshold, kept.join(", "));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
