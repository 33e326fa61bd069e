// Pivot tables, per-day averages and geo grids, exported as CSV and GeoJSON.
//
// `cargo run --example crime_analytics [incidents.csv] [out_dir]`

use std::error::Error;
use std::path::PathBuf;

use crime_lab::analytics::{
    daily_average, export_all, geo_grid_counts, pivot_counts, AnalyticsOptions, Axis, BoundingBox,
    RowFilter,
};
use crime_lab::ingest::{ingest_csv, IngestOptions};
use crime_lab::runner::{synthetic_table, SyntheticSpec};
use crime_lab::table::{CleaningPolicy, MissingRowAction};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let opts = IngestOptions {
        cleaning: CleaningPolicy {
            missing_row_action: MissingRowAction::Sentinel,
            ..Default::default()
        },
        exclude_leaky_features: false,
    };
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let table = match args.first().filter(|a| a.ends_with(".csv")) {
        Some(p) => ingest_csv(p.as_ref(), &opts)?.table,
        None => synthetic_table(
            &SyntheticSpec {
                counts: vec![400, 250, 120, 60, 30, 20, 10, 5, 5, 5, 5, 5, 5, 300, 5],
                dims: 2,
                spread: 0.2,
                seed: 31,
                background_noise: true,
            },
            &opts,
        )?,
    };

    let by_cat = pivot_counts(&table, Axis::Category, None, &RowFilter::all())?;
    println!(
        "most frequent category: {:?} of {} rows",
        by_cat.argmax_row(),
        by_cat.filtered_rows
    );
    let by_hour = pivot_counts(&table, Axis::Hour, None, &RowFilter::all())?;
    println!("busiest hour: {:?}", by_hour.argmax_row());

    let days = daily_average(&table)?;
    let quietest = days
        .iter()
        .filter(|d| d.years > 0)
        .min_by(|a, b| a.average.total_cmp(&b.average))
        .ok_or("no days")?;
    println!(
        "quietest day: {}/{} ({:.2} per year)",
        quietest.month, quietest.day, quietest.average
    );

    let traffic_d3 = RowFilter::parse("is_traffic=1,district_id=3")?;
    let grid = geo_grid_counts(&table, 0.005, BoundingBox::DENVER, &traffic_d3)?;
    println!(
        "{}: {} rows in {} cells, {} without coordinates",
        grid.filter,
        grid.filtered_rows,
        grid.cells.len(),
        grid.excluded_missing
    );

    let tmp = tempfile::tempdir()?;
    let out = args
        .get(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| tmp.path().to_path_buf());
    for f in export_all(&table, &out, &AnalyticsOptions::default())? {
        println!("wrote {}", f.display());
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
