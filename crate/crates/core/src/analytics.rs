//! Descriptive statistics over an ingested table: pivot counts, per-day
//! averages and geographic grid counts, with CSV and GeoJSON exports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{create_file, Error, Result};
use crate::table::FeatureTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Hour,
    Month,
    Day,
    Year,
    District,
    Category,
}

impl Axis {
    fn column(self) -> Option<&'static str> {
        match self {
            Axis::Hour => Some("hour"),
            Axis::Month => Some("month"),
            Axis::Day => Some("day"),
            Axis::Year => Some("year"),
            Axis::District => Some("district_id"),
            Axis::Category => None,
        }
    }

    pub fn name(self) -> &'static str {
        self.column().unwrap_or("category")
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hour" => Axis::Hour,
            "month" => Axis::Month,
            "day" => Axis::Day,
            "year" => Axis::Year,
            "district" | "district_id" => Axis::District,
            "category" | "offense_category_id" => Axis::Category,
            other => return Err(Error::argument(format!("unknown pivot axis {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub column: String,
    pub value: String,
}

/// A conjunction of `column = value` tests. `category` compares class names.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RowFilter {
    pub conditions: Vec<Condition>,
}

impl RowFilter {
    pub fn all() -> Self {
        RowFilter::default()
    }

    pub fn eq(mut self, column: &str, value: impl ToString) -> Self {
        self.conditions.push(Condition {
            column: column.to_string(),
            value: value.to_string(),
        });
        self
    }

    /// Parses `col=value,col=value`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut f = RowFilter::all();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (c, v) = part
                .split_once('=')
                .ok_or_else(|| Error::argument(format!("filter term {part:?} is not col=value")))?;
            f = f.eq(c.trim(), v.trim());
        }
        Ok(f)
    }

    fn compile(&self, table: &FeatureTable) -> Result<Vec<Test>> {
        self.conditions
            .iter()
            .map(|c| {
                if matches!(c.column.as_str(), "category" | "offense_category_id") {
                    let code = table.class_code(&c.value).ok_or_else(|| {
                        Error::argument(format!("unknown category {:?}", c.value))
                    })?;
                    Ok(Test::Label(code))
                } else {
                    let col = table.column_index(&c.column).ok_or_else(|| {
                        Error::argument(format!("unknown filter column {:?}", c.column))
                    })?;
                    let v = match table.encode_token(&c.column, &c.value) {
                        Some(code) => code as f64,
                        None => c.value.parse::<f64>().map_err(|_| {
                            Error::argument(format!("filter value {:?} is not a number", c.value))
                        })?,
                    };
                    Ok(Test::Value(col, v))
                }
            })
            .collect()
    }
}

impl fmt::Display for RowFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conditions.is_empty() {
            return f.write_str("all rows");
        }
        let terms: Vec<String> = self
            .conditions
            .iter()
            .map(|c| format!("{} = {}", c.column, c.value))
            .collect();
        f.write_str(&terms.join(" and "))
    }
}

enum Test {
    Label(usize),
    Value(usize, f64),
}

fn matching_rows(table: &FeatureTable, filter: &RowFilter) -> Result<Vec<usize>> {
    let tests = filter.compile(table)?;
    Ok((0..table.n_rows())
        .filter(|&i| {
            tests.iter().all(|t| match *t {
                Test::Label(c) => table.labels[i] == c,
                Test::Value(col, v) => table.matrix.get(i, col) == v,
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotTable {
    pub row_axis: Axis,
    pub col_axis: Option<Axis>,
    pub row_keys: Vec<String>,
    /// `["count"]` when there is no column axis.
    pub col_keys: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub filter: String,
    pub snapshot_rows: usize,
    pub filtered_rows: usize,
}

impl PivotTable {
    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }

    /// Row sums, keyed like `row_keys`.
    pub fn margins(&self) -> Vec<f64> {
        self.cells.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn argmax_row(&self) -> Option<&str> {
        let m = self.margins();
        let mut best: Option<usize> = None;
        for (i, v) in m.iter().enumerate() {
            if best.is_none_or(|b| *v > m[b]) {
                best = Some(i);
            }
        }
        best.map(|i| self.row_keys[i].as_str())
    }

    pub fn get(&self, row_key: &str) -> Option<f64> {
        let i = self.row_keys.iter().position(|k| k == row_key)?;
        Some(self.cells[i].iter().sum())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![self.row_axis.name().to_string()];
        header.extend(self.col_keys.iter().cloned());
        out.write_record(&header)?;
        for (k, row) in self.row_keys.iter().zip(&self.cells) {
            let mut rec = vec![k.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

// Keys are integer-valued columns or class codes.
fn axis_keys(table: &FeatureTable, axis: Axis) -> Result<Box<dyn Fn(usize) -> i64 + Sync + '_>> {
    match axis.column() {
        None => Ok(Box::new(move |i| table.labels[i] as i64)),
        Some(name) => {
            let col = table
                .column_index(name)
                .ok_or_else(|| Error::argument(format!("table has no {name} column")))?;
            Ok(Box::new(move |i| table.matrix.get(i, col).round() as i64))
        }
    }
}

fn key_label(table: &FeatureTable, axis: Axis, k: i64) -> String {
    match axis {
        Axis::Category => table.class_names[k as usize].clone(),
        _ => k.to_string(),
    }
}

fn count_keys<K: Ord + Send>(rows: &[usize], key: impl Fn(usize) -> K + Sync) -> BTreeMap<K, u64> {
    rows.par_chunks(4096)
        .map(|chunk| {
            let mut m = BTreeMap::new();
            for &i in chunk {
                *m.entry(key(i)).or_insert(0) += 1;
            }
            m
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        })
}

/// Group counts of the filtered rows by `row_axis` (and `col_axis`).
pub fn pivot_counts(
    table: &FeatureTable,
    row_axis: Axis,
    col_axis: Option<Axis>,
    filter: &RowFilter,
) -> Result<PivotTable> {
    let rows = matching_rows(table, filter)?;
    let rk = axis_keys(table, row_axis)?;
    let ck = match col_axis {
        Some(a) => Some(axis_keys(table, a)?),
        None => None,
    };
    let counts = count_keys(&rows, |i| (rk(i), ck.as_ref().map_or(0, |f| f(i))));
    let full_keys = |axis: Axis, seen: Vec<i64>| -> Vec<i64> {
        if axis == Axis::Category {
            (0..table.n_classes() as i64).collect()
        } else {
            seen
        }
    };
    let mut seen_r: Vec<i64> = counts.keys().map(|k| k.0).collect();
    seen_r.dedup();
    let row_vals = full_keys(row_axis, seen_r);
    let col_vals: Vec<i64> = match col_axis {
        Some(a) => {
            let mut s: Vec<i64> = counts.keys().map(|k| k.1).collect();
            s.sort_unstable();
            s.dedup();
            full_keys(a, s)
        }
        None => vec![0],
    };
    let cells = row_vals
        .iter()
        .map(|&r| {
            col_vals
                .iter()
                .map(|&c| counts.get(&(r, c)).copied().unwrap_or(0) as f64)
                .collect()
        })
        .collect();
    Ok(PivotTable {
        row_axis,
        col_axis,
        row_keys: row_vals
            .iter()
            .map(|&k| key_label(table, row_axis, k))
            .collect(),
        col_keys: match col_axis {
            Some(a) => col_vals.iter().map(|&k| key_label(table, a, k)).collect(),
            None => vec!["count".to_string()],
        },
        cells,
        filter: filter.to_string(),
        snapshot_rows: table.n_rows(),
        filtered_rows: rows.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayAverage {
    pub month: u32,
    pub day: u32,
    pub total: u64,
    /// Years of the data window that contain this calendar day.
    pub years: u32,
    pub average: f64,
}

/// Mean complaints per calendar day, averaged over the window years in
/// which that day occurs (Feb 29 only in leap years).
pub fn daily_average(table: &FeatureTable) -> Result<Vec<DayAverage>> {
    let (y, m, d) = (
        table.require_column("year")?,
        table.require_column("month")?,
        table.require_column("day")?,
    );
    let all: Vec<usize> = (0..table.n_rows()).collect();
    let date = |i: usize| {
        let g = |c| table.matrix.get(i, c).round() as i64;
        (g(y) as i32, g(m) as u32, g(d) as u32)
    };
    let counts = count_keys(&all, |i| {
        let (_, mo, da) = date(i);
        (mo, da)
    });
    let dates: Vec<NaiveDate> = all
        .iter()
        .filter_map(|&i| {
            let (yy, mo, da) = date(i);
            NaiveDate::from_ymd_opt(yy, mo, da)
        })
        .collect();
    let window = dates.iter().min().zip(dates.iter().max());
    let mut out = Vec::with_capacity(366);
    for month in 1..=12u32 {
        for day in 1..=31u32 {
            // calendar days exist in leap year 2000
            if NaiveDate::from_ymd_opt(2000, month, day).is_none() {
                continue;
            }
            let years = match window {
                Some((lo, hi)) => (lo.year()..=hi.year())
                    .filter(|&yy| {
                        NaiveDate::from_ymd_opt(yy, month, day)
                            .is_some_and(|dt| dt >= *lo && dt <= *hi)
                    })
                    .count() as u32,
                None => 0,
            };
            let total = counts.get(&(month, day)).copied().unwrap_or(0);
            let average = if years == 0 {
                0.0
            } else {
                total as f64 / years as f64
            };
            out.push(DayAverage {
                month,
                day,
                total,
                years,
                average,
            });
        }
    }
    Ok(out)
}

pub fn write_daily_average_csv<W: Write>(days: &[DayAverage], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for d in days {
        out.serialize(d)?;
    }
    out.flush()?;
    Ok(())
}

pub const DEFAULT_CELL_SIZE: f64 = 0.005;

/// Latitude/longitude bounds in degrees, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    /// Generous box around the Denver metro area.
    pub const DENVER: BoundingBox = BoundingBox {
        min_lat: 39.4,
        max_lat: 40.1,
        min_lon: -105.3,
        max_lon: -104.5,
    };

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.min_lat..=self.max_lat).contains(&lat) && (self.min_lon..=self.max_lon).contains(&lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoCell {
    pub lat_index: i64,
    pub lon_index: i64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoGrid {
    pub bbox: BoundingBox,
    pub cell_size: f64,
    pub cells: Vec<GeoCell>,
    pub filter: String,
    pub filtered_rows: usize,
    /// Rows with sentinel, non-finite or missing coordinates.
    pub excluded_missing: usize,
    pub excluded_outside: usize,
}

impl GeoGrid {
    pub fn total(&self) -> u64 {
        self.cells.iter().map(|c| c.count).sum()
    }

    pub fn cell_index(lat: f64, lon: f64, cell_size: f64) -> (i64, i64) {
        (
            (lat / cell_size).floor() as i64,
            (lon / cell_size).floor() as i64,
        )
    }

    /// FeatureCollection of cell squares with a `count` property.
    pub fn to_geojson(&self) -> Value {
        let s = self.cell_size;
        let features: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                let (lat0, lon0) = (c.lat_index as f64 * s, c.lon_index as f64 * s);
                let (lat1, lon1) = (lat0 + s, lon0 + s);
                json!({
                    "type": "Feature",
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [[[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]],
                    },
                    "properties": {"count": c.count, "lat_index": c.lat_index, "lon_index": c.lon_index},
                })
            })
            .collect();
        json!({
            "type": "FeatureCollection",
            "properties": {
                "filter": self.filter,
                "cell_size_deg": s,
                "filtered_rows": self.filtered_rows,
                "excluded_missing": self.excluded_missing,
                "excluded_outside": self.excluded_outside,
            },
            "features": features,
        })
    }
}

/// Counts filtered rows per `cell_size` degree cell, keyed by
/// `(floor(lat / cell), floor(lon / cell))`.
pub fn geo_grid_counts(
    table: &FeatureTable,
    cell_size: f64,
    bbox: BoundingBox,
    filter: &RowFilter,
) -> Result<GeoGrid> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::argument(format!(
            "cell size must be positive, got {cell_size}"
        )));
    }
    let (lat_c, lon_c) = (
        table.require_column("geo_lat")?,
        table.require_column("geo_lon")?,
    );
    let sentinel = table.cleaning.policy.sentinel_value;
    let rows = matching_rows(table, filter)?;
    #[derive(PartialEq, Eq, PartialOrd, Ord)]
    enum Bin {
        Cell(i64, i64),
        Missing,
        Outside,
    }
    let counts = count_keys(&rows, |i| {
        let (lat, lon) = (table.matrix.get(i, lat_c), table.matrix.get(i, lon_c));
        if !lat.is_finite() || !lon.is_finite() || lat == sentinel || lon == sentinel {
            Bin::Missing
        } else if !bbox.contains(lat, lon) {
            Bin::Outside
        } else {
            let (a, b) = GeoGrid::cell_index(lat, lon, cell_size);
            Bin::Cell(a, b)
        }
    });
    let mut grid = GeoGrid {
        bbox,
        cell_size,
        cells: Vec::new(),
        filter: filter.to_string(),
        filtered_rows: rows.len(),
        excluded_missing: 0,
        excluded_outside: 0,
    };
    for (k, v) in counts {
        match k {
            Bin::Cell(lat_index, lon_index) => grid.cells.push(GeoCell {
                lat_index,
                lon_index,
                count: v,
            }),
            Bin::Missing => grid.excluded_missing = v as usize,
            Bin::Outside => grid.excluded_outside = v as usize,
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticsOptions {
    pub cell_size: f64,
    pub bbox: BoundingBox,
}

impl Default for AnalyticsOptions {
    fn default() -> Self {
        AnalyticsOptions {
            cell_size: DEFAULT_CELL_SIZE,
            bbox: BoundingBox::DENVER,
        }
    }
}

pub const TRAFFIC_CATEGORY: &str = "traffic-accident";

/// The fixed export set: `fig1`, `fig3`–`fig7` as CSV, `fig2`, `fig8`,
/// `fig9` as GeoJSON, plus `stats_summary.json`.
///
/// * fig1 counts per category; fig3 district × category; fig4 month × year;
///   fig5 hour × category; fig6 traffic-accident counts per hour; fig7 the
///   per-day average.
/// * fig2 all incidents; fig8 `is_traffic = 1` in district 3; fig9
///   incidents flagged both `is_traffic` and `is_crime`.
pub fn export_all(
    table: &FeatureTable,
    out_dir: &Path,
    opts: &AnalyticsOptions,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let all = RowFilter::all();
    let mut pivots = vec![
        (
            "fig1_category_counts",
            pivot_counts(table, Axis::Category, None, &all)?,
        ),
        (
            "fig3_district_by_category",
            pivot_counts(table, Axis::District, Some(Axis::Category), &all)?,
        ),
        (
            "fig4_month_by_year",
            pivot_counts(table, Axis::Month, Some(Axis::Year), &all)?,
        ),
        (
            "fig5_hour_by_category",
            pivot_counts(table, Axis::Hour, Some(Axis::Category), &all)?,
        ),
    ];
    if table.class_code(TRAFFIC_CATEGORY).is_some() {
        let traffic = RowFilter::all().eq("category", TRAFFIC_CATEGORY);
        pivots.push((
            "fig6_traffic_by_hour",
            pivot_counts(table, Axis::Hour, None, &traffic)?,
        ));
    } else {
        log::warn!("no {TRAFFIC_CATEGORY} rows; fig6 skipped");
    }
    let mut summary = serde_json::Map::new();
    for (name, p) in &pivots {
        let path = out_dir.join(format!("{name}.csv"));
        p.write_csv(BufWriter::new(create_file(&path)?))?;
        summary.insert(
            name.to_string(),
            json!({"filter": p.filter, "filtered_rows": p.filtered_rows, "argmax": p.argmax_row()}),
        );
        written.push(path);
    }
    let days = daily_average(table)?;
    let path = out_dir.join("fig7_daily_average.csv");
    write_daily_average_csv(&days, BufWriter::new(create_file(&path)?))?;
    written.push(path);
    let grids = [
        ("fig2_all_incidents", RowFilter::all()),
        (
            "fig8_traffic_district3",
            RowFilter::all().eq("is_traffic", 1).eq("district_id", 3),
        ),
        (
            "fig9_traffic_and_crime",
            RowFilter::all().eq("is_traffic", 1).eq("is_crime", 1),
        ),
    ];
    for (name, f) in grids {
        let g = geo_grid_counts(table, opts.cell_size, opts.bbox, &f)?;
        let path = out_dir.join(format!("{name}.geojson"));
        let mut w = BufWriter::new(create_file(&path)?);
        serde_json::to_writer_pretty(&mut w, &g.to_geojson())?;
        w.flush()?;
        summary.insert(
            name.to_string(),
            json!({"filter": g.filter, "filtered_rows": g.filtered_rows, "cells": g.cells.len(),
                   "excluded_missing": g.excluded_missing, "excluded_outside": g.excluded_outside}),
        );
        written.push(path);
    }
    summary.insert("snapshot_rows".into(), json!(table.n_rows()));
    let path = out_dir.join("stats_summary.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&Value::Object(summary))?,
    )?;
    written.push(path);
    Ok(written)
}
