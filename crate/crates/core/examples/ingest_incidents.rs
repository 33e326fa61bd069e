// Reads a raw incident CSV, reports row accounting, and round-trips the
// encoded table through the binary format.
//
// `cargo run --example ingest_incidents [path/to/incidents.csv]`

use std::error::Error;
use std::path::PathBuf;

use crime_lab::ingest::{ingest_csv, IngestOptions};
use crime_lab::runner::{generate_synthetic, SyntheticSpec};
use crime_lab::table::{CleaningPolicy, FeatureTable, MissingRowAction};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let path = match std::env::args().nth(1).filter(|a| a.ends_with(".csv")) {
        Some(p) => PathBuf::from(p),
        None => {
            let p = dir.path().join("incidents.csv");
            let spec = SyntheticSpec {
                counts: vec![120, 40, 15],
                dims: 2,
                spread: 0.1,
                seed: 11,
                background_noise: true,
            };
            generate_synthetic(&spec, &p)?;
            p
        }
    };

    for action in [MissingRowAction::Drop, MissingRowAction::Sentinel] {
        let opts = IngestOptions {
            cleaning: CleaningPolicy {
                missing_row_action: action,
                ..Default::default()
            },
            exclude_leaky_features: false,
        };
        let out = ingest_csv(&path, &opts)?;
        let c = &out.table.cleaning;
        println!(
            "{action:?}: read {} rows, {} malformed, {} dropped, {} sentinel-filled, {} kept",
            c.input_rows, c.malformed_rows, c.dropped_rows, c.sentinel_filled_rows, c.emitted_rows
        );
    }

    let out = ingest_csv(&path, &IngestOptions::default())?;
    let table = out.table;
    println!("features: {}", table.column_names().join(", "));
    for (name, n) in table.class_names.iter().zip(table.class_counts()) {
        println!("  {name:<32} {n}");
    }

    let bin = dir.path().join("incidents.cltable");
    table.write_binary(&bin)?;
    let back = FeatureTable::read_binary(&bin)?;
    assert_eq!(back, table);
    let slim = table.drop_columns(&crime_lab::ingest::LEAKY_FEATURES);
    println!("without offense code/type: {} features", slim.n_features());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
