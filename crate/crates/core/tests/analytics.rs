use crime_lab::analytics::{
    daily_average, export_all, geo_grid_counts, pivot_counts, AnalyticsOptions, Axis, BoundingBox,
    GeoGrid, RowFilter,
};
use crime_lab::ingest::IngestOptions;
use crime_lab::runner::{synthetic_table, SyntheticSpec};
use crime_lab::table::{CleaningPolicy, FeatureTable, MissingRowAction};

fn table() -> FeatureTable {
    synthetic_table(
        &SyntheticSpec {
            counts: vec![300, 120, 80, 40, 20, 10, 5, 5, 5, 5, 5, 5, 5, 200, 10],
            dims: 2,
            spread: 0.3,
            seed: 17,
            background_noise: true,
        },
        &IngestOptions {
            cleaning: CleaningPolicy {
                missing_row_action: MissingRowAction::Sentinel,
                ..Default::default()
            },
            exclude_leaky_features: false,
        },
    )
    .unwrap()
}

#[test]
fn pivot_totals_match_filtered_rows() {
    let t = table();
    for (r, c) in [
        (Axis::Category, None),
        (Axis::District, Some(Axis::Category)),
        (Axis::Month, Some(Axis::Year)),
        (Axis::Hour, Some(Axis::Category)),
    ] {
        let p = pivot_counts(&t, r, c, &RowFilter::all()).unwrap();
        assert_eq!(p.total() as usize, t.n_rows());
        assert_eq!(p.filtered_rows, t.n_rows());
        assert_eq!(p.margins().iter().sum::<f64>(), p.total());
    }
    let by_cat = pivot_counts(&t, Axis::Category, None, &RowFilter::all()).unwrap();
    assert_eq!(by_cat.row_keys.len(), t.n_classes());
    assert_eq!(by_cat.argmax_row(), Some(t.class_names[0].as_str()));

    let traffic = RowFilter::parse("is_traffic=1").unwrap();
    let p = pivot_counts(&t, Axis::Hour, None, &traffic).unwrap();
    assert_eq!(p.total() as usize, p.filtered_rows);
    assert!(p.filtered_rows < t.n_rows());
}

#[test]
fn filters_combine_conjunctively() {
    let t = table();
    let one = pivot_counts(&t, Axis::Hour, None, &RowFilter::all().eq("district_id", 3)).unwrap();
    let two = pivot_counts(
        &t,
        Axis::Hour,
        None,
        &RowFilter::all().eq("district_id", 3).eq("is_traffic", 1),
    )
    .unwrap();
    assert!(two.filtered_rows <= one.filtered_rows);
    assert!(RowFilter::parse("nonsense").is_err());
}

#[test]
fn geo_grid_accounts_for_every_row() {
    let t = table();
    let g = geo_grid_counts(&t, 0.01, BoundingBox::DENVER, &RowFilter::all()).unwrap();
    assert_eq!(
        g.total() as usize + g.excluded_missing + g.excluded_outside,
        g.filtered_rows
    );
    for c in &g.cells {
        assert!(c.count > 0);
    }
    assert_eq!(
        GeoGrid::cell_index(39.7, -104.9, 0.5),
        (
            (39.7f64 / 0.5).floor() as i64,
            (-104.9f64 / 0.5).floor() as i64
        )
    );
    let gj = g.to_geojson();
    assert_eq!(gj["type"], "FeatureCollection");
    assert_eq!(gj["features"].as_array().unwrap().len(), g.cells.len());
}

#[test]
fn daily_average_covers_the_calendar() {
    let t = table();
    let days = daily_average(&t).unwrap();
    assert_eq!(days.len(), 366);
    let counted: f64 = days.iter().map(|d| d.total as f64).sum();
    assert_eq!(counted as usize, t.n_rows());
    for d in &days {
        if d.years > 0 {
            assert!((d.average - d.total as f64 / d.years as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn exports_are_written() {
    let t = table();
    let dir = tempfile::tempdir().unwrap();
    let files = export_all(&t, dir.path(), &AnalyticsOptions::default()).unwrap();
    assert!(files.len() >= 9);
    for f in &files {
        assert!(std::fs::metadata(f).unwrap().len() > 0, "{}", f.display());
    }
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("stats_summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary.is_object());
}
