//! Denver incident CSV ingestion.
//!
//! The stages mirror the preprocessing order of the lab pipeline:
//! parse, drop the two sparse columns, project onto the 13 retained
//! attributes, split the reported timestamp into year/month/day/hour, and
//! finally encode categorical tokens into a [`FeatureTable`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{open_file, Error, Result};
use crate::matrix::Matrix;
use crate::table::{CleaningPolicy, CleaningSummary, Column, FeatureTable, MissingRowAction};

/// Column names of the raw incident schema, in portal order.
pub const RAW_COLUMNS: [&str; 19] = [
    "incident_id",
    "offense_id",
    "offense_code",
    "offense_code_extension",
    "offense_type_id",
    "offense_category_id",
    "first_occurrence_date",
    "last_occurrence_date",
    "reported_date",
    "incident_address",
    "geo_x",
    "geo_y",
    "geo_lon",
    "geo_lat",
    "district_id",
    "precinct_id",
    "neighborhood_id",
    "is_crime",
    "is_traffic",
];

/// The 15 offense categories, in code order.
pub const OFFENSE_CATEGORIES: [&str; 15] = [
    "aggravated-assault",
    "all-other-crimes",
    "arson",
    "auto-theft",
    "burglary",
    "drug-alcohol",
    "larceny",
    "murder",
    "other-crimes-against-persons",
    "public-disorder",
    "robbery",
    "sexual-assault",
    "theft-from-motor-vehicle",
    "traffic-accident",
    "white-collar-crime",
];

pub const MAX_CLASSES: usize = 15;

/// Feature columns of the encoded table, in order.
pub const FEATURE_COLUMNS: [&str; 15] = [
    "offense_code",
    "offense_type_id",
    "year",
    "month",
    "day",
    "hour",
    "geo_x",
    "geo_y",
    "geo_lon",
    "geo_lat",
    "district_id",
    "precinct_id",
    "neighborhood_id",
    "is_crime",
    "is_traffic",
];

const CATEGORICAL_FEATURES: [&str; 2] = ["offense_type_id", "neighborhood_id"];

/// Columns that nearly determine the offense category.
pub const LEAKY_FEATURES: [&str; 2] = ["offense_code", "offense_type_id"];

/// One raw row of the incident export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub incident_id: String,
    pub offense_id: String,
    pub offense_code: i64,
    pub offense_code_extension: i64,
    pub offense_type_id: String,
    pub offense_category_id: String,
    pub first_occurrence_date: String,
    pub last_occurrence_date: Option<String>,
    pub reported_date: NaiveDateTime,
    pub incident_address: Option<String>,
    pub geo_x: Option<f64>,
    pub geo_y: Option<f64>,
    pub geo_lon: Option<f64>,
    pub geo_lat: Option<f64>,
    pub district_id: Option<i64>,
    pub precinct_id: Option<i64>,
    pub neighborhood_id: Option<String>,
    pub is_crime: u8,
    pub is_traffic: u8,
}

/// Accepts `YYYY-MM-DD HH:MM:SS` (optionally with a `T`) and the portal's
/// `M/D/YYYY H:MM:SS AM`.
pub fn parse_timestamp(text: &str) -> Result<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
        "%m/%d/%Y %I:%M:%S %p",
        "%m/%d/%Y %H:%M:%S",
    ];
    let t = text.trim();
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(t, f).ok())
        .ok_or_else(|| Error::Data(format!("unparseable timestamp `{text}`")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedRow {
    /// 1-based line number in the file (header is line 1).
    pub line: u64,
    pub reason: String,
}

const MAX_MALFORMED_KEPT: usize = 100;

/// Streaming reader over incident rows.
///
/// Malformed rows are skipped by the iterator but counted, and the first
/// hundred are kept with a reason.
pub struct IncidentReader<R: Read> {
    reader: csv::Reader<R>,
    positions: [usize; 19],
    record: csv::StringRecord,
    rows_read: usize,
    malformed_count: usize,
    malformed: Vec<MalformedRow>,
    io_error: Option<Error>,
}

/// Opens `path` and validates its header.
pub fn parse_incident_csv(path: &Path) -> Result<IncidentReader<File>> {
    IncidentReader::new(open_file(path)?)
}

impl<R: Read> IncidentReader<R> {
    pub fn new(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .has_headers(true)
            .from_reader(input);
        let headers = reader.headers()?.clone();
        let lookup: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| {
                (
                    h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase(),
                    i,
                )
            })
            .collect();
        let mut positions = [0usize; 19];
        for (slot, name) in positions.iter_mut().zip(RAW_COLUMNS) {
            *slot = *lookup
                .get(name)
                .ok_or_else(|| Error::schema(format!("missing header column `{name}`")))?;
        }
        Ok(IncidentReader {
            reader,
            positions,
            record: csv::StringRecord::new(),
            rows_read: 0,
            malformed_count: 0,
            malformed: Vec::new(),
            io_error: None,
        })
    }

    pub fn rows_read(&self) -> usize {
        self.rows_read
    }

    pub fn malformed_count(&self) -> usize {
        self.malformed_count
    }

    pub fn malformed_rows(&self) -> &[MalformedRow] {
        &self.malformed
    }

    /// An I/O error that ended the stream early, if any.
    pub fn take_error(&mut self) -> Option<Error> {
        self.io_error.take()
    }

    fn field(&self, col: usize) -> Option<&str> {
        self.record
            .get(self.positions[col])
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }

    fn convert(&self) -> std::result::Result<IncidentRecord, String> {
        if self.record.len() < self.positions.iter().max().map_or(0, |m| m + 1) {
            return Err(format!("row has only {} fields", self.record.len()));
        }
        let text = |c: usize| -> std::result::Result<String, String> {
            self.field(c)
                .map(str::to_string)
                .ok_or_else(|| format!("`{}` is empty", RAW_COLUMNS[c]))
        };
        let int = |c: usize| -> std::result::Result<i64, String> {
            let s = text(c)?;
            parse_int(&s).ok_or_else(|| format!("`{}` is not an integer: `{s}`", RAW_COLUMNS[c]))
        };
        let opt_int = |c: usize| -> std::result::Result<Option<i64>, String> {
            match self.field(c) {
                None => Ok(None),
                Some(s) => parse_int(s)
                    .map(Some)
                    .ok_or_else(|| format!("`{}` is not an integer: `{s}`", RAW_COLUMNS[c])),
            }
        };
        let opt_float = |c: usize| -> std::result::Result<Option<f64>, String> {
            match self.field(c) {
                None => Ok(None),
                Some(s) => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Some(v)),
                    _ => Err(format!("`{}` is not a number: `{s}`", RAW_COLUMNS[c])),
                },
            }
        };
        let flag = |c: usize| -> std::result::Result<u8, String> {
            match int(c)? {
                0 => Ok(0),
                1 => Ok(1),
                v => Err(format!("`{}` must be 0 or 1, got {v}", RAW_COLUMNS[c])),
            }
        };

        let reported = text(8)?;
        let reported_date = parse_timestamp(&reported).map_err(|e| e.to_string())?;
        let geo_lon = opt_float(12)?;
        let geo_lat = opt_float(13)?;
        if geo_lon.is_some() != geo_lat.is_some() {
            return Err("geo_lat and geo_lon must be both present or both absent".into());
        }
        Ok(IncidentRecord {
            incident_id: text(0)?,
            offense_id: text(1)?,
            offense_code: int(2)?,
            offense_code_extension: int(3)?,
            offense_type_id: text(4)?,
            offense_category_id: text(5)?,
            first_occurrence_date: self.field(6).unwrap_or_default().to_string(),
            last_occurrence_date: self.field(7).map(str::to_string),
            reported_date,
            incident_address: self.field(9).map(str::to_string),
            geo_x: opt_float(10)?,
            geo_y: opt_float(11)?,
            geo_lon,
            geo_lat,
            district_id: opt_int(14)?,
            precinct_id: opt_int(15)?,
            neighborhood_id: self.field(16).map(str::to_string),
            is_crime: flag(17)?,
            is_traffic: flag(18)?,
        })
    }
}

fn parse_int(s: &str) -> Option<i64> {
    s.parse::<i64>().ok().or_else(|| {
        // some exports write integer columns as "3.0"
        let f = s.parse::<f64>().ok()?;
        (f.fract() == 0.0 && f.abs() < 9.0e15).then_some(f as i64)
    })
}

impl<R: Read> Iterator for IncidentReader<R> {
    type Item = IncidentRecord;

    fn next(&mut self) -> Option<IncidentRecord> {
        loop {
            let mut rec = std::mem::take(&mut self.record);
            let read = self.reader.read_record(&mut rec);
            self.record = rec;
            match read {
                Ok(false) => return None,
                Ok(true) => {}
                Err(e) => {
                    if let csv::ErrorKind::Io(_) = e.kind() {
                        self.io_error = Some(e.into());
                        return None;
                    }
                    self.rows_read += 1;
                    self.note_malformed(format!("{e}"));
                    continue;
                }
            }
            self.rows_read += 1;
            match self.convert() {
                Ok(r) => return Some(r),
                Err(reason) => self.note_malformed(reason),
            }
        }
    }
}

impl<R: Read> IncidentReader<R> {
    fn note_malformed(&mut self, reason: String) {
        self.malformed_count += 1;
        if self.malformed.len() < MAX_MALFORMED_KEPT {
            let line = self.record.position().map_or(0, |p| p.line());
            self.malformed.push(MalformedRow { line, reason });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleanCounts {
    pub dropped: usize,
    pub sentinel_filled: usize,
}

/// Removes `last_occurrence_date` and `incident_address`, then handles rows
/// that miss a retained field according to `policy`.
pub fn clean_columns(
    records: impl IntoIterator<Item = IncidentRecord>,
    policy: &CleaningPolicy,
) -> (Vec<IncidentRecord>, CleanCounts) {
    let mut counts = CleanCounts::default();
    let mut out = Vec::new();
    for mut r in records {
        r.last_occurrence_date = None;
        r.incident_address = None;
        let missing = r.geo_x.is_none()
            || r.geo_y.is_none()
            || r.geo_lon.is_none()
            || r.geo_lat.is_none()
            || r.district_id.is_none()
            || r.precinct_id.is_none()
            || r.neighborhood_id.is_none();
        if missing {
            match policy.missing_row_action {
                MissingRowAction::Drop => {
                    counts.dropped += 1;
                    continue;
                }
                MissingRowAction::Sentinel => {
                    fill_sentinel(&mut r, policy.sentinel_value);
                    counts.sentinel_filled += 1;
                }
            }
        }
        out.push(r);
    }
    (out, counts)
}

fn fill_sentinel(r: &mut IncidentRecord, s: f64) {
    for v in [&mut r.geo_x, &mut r.geo_y, &mut r.geo_lon, &mut r.geo_lat] {
        v.get_or_insert(s);
    }
    r.district_id.get_or_insert(s as i64);
    r.precinct_id.get_or_insert(s as i64);
    r.neighborhood_id
        .get_or_insert_with(|| format!("{}", s as i64));
}

/// The 13 attributes kept for modelling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedRecord {
    pub offense_code: i64,
    pub offense_type_id: String,
    pub offense_category_id: String,
    pub reported_date: NaiveDateTime,
    pub geo_x: f64,
    pub geo_y: f64,
    pub geo_lon: f64,
    pub geo_lat: f64,
    pub district_id: i64,
    pub precinct_id: i64,
    pub neighborhood_id: String,
    pub is_crime: u8,
    pub is_traffic: u8,
}

impl SelectedRecord {
    pub const FIELDS: [&'static str; 13] = [
        "offense_code",
        "offense_type_id",
        "offense_category_id",
        "reported_date",
        "geo_x",
        "geo_y",
        "geo_lon",
        "geo_lat",
        "district_id",
        "precinct_id",
        "neighborhood_id",
        "is_crime",
        "is_traffic",
    ];
}

/// Projection onto the retained attribute set.
pub trait SelectAttributes {
    fn select_attributes(&self) -> SelectedRecord;
}

impl SelectAttributes for IncidentRecord {
    /// Fields still missing (the record was not cleaned) get the default
    /// sentinel.
    fn select_attributes(&self) -> SelectedRecord {
        let s = crate::table::DEFAULT_SENTINEL;
        SelectedRecord {
            offense_code: self.offense_code,
            offense_type_id: self.offense_type_id.clone(),
            offense_category_id: self.offense_category_id.clone(),
            reported_date: self.reported_date,
            geo_x: self.geo_x.unwrap_or(s),
            geo_y: self.geo_y.unwrap_or(s),
            geo_lon: self.geo_lon.unwrap_or(s),
            geo_lat: self.geo_lat.unwrap_or(s),
            district_id: self.district_id.unwrap_or(s as i64),
            precinct_id: self.precinct_id.unwrap_or(s as i64),
            neighborhood_id: self
                .neighborhood_id
                .clone()
                .unwrap_or_else(|| format!("{}", s as i64)),
            is_crime: self.is_crime,
            is_traffic: self.is_traffic,
        }
    }
}

impl SelectAttributes for SelectedRecord {
    fn select_attributes(&self) -> SelectedRecord {
        self.clone()
    }
}

pub fn select_attributes<R: SelectAttributes>(records: &[R]) -> Vec<SelectedRecord> {
    records
        .iter()
        .map(SelectAttributes::select_attributes)
        .collect()
}

/// A selected record with the timestamp split into calendar parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatedRecord {
    pub offense_code: i64,
    pub offense_type_id: String,
    pub offense_category_id: String,
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub geo_x: f64,
    pub geo_y: f64,
    pub geo_lon: f64,
    pub geo_lat: f64,
    pub district_id: i64,
    pub precinct_id: i64,
    pub neighborhood_id: String,
    pub is_crime: u8,
    pub is_traffic: u8,
}

/// (year, month, day, 24-hour clock hour); minutes and seconds dropped.
pub fn date_parts(ts: &NaiveDateTime) -> (i32, u32, u32, u32) {
    (ts.year(), ts.month(), ts.day(), ts.hour())
}

/// [`date_parts`] on timestamp text.
pub fn decompose_timestamp(text: &str) -> Result<(i32, u32, u32, u32)> {
    Ok(date_parts(&parse_timestamp(text)?))
}

pub fn decompose_reported_date(r: &SelectedRecord) -> DatedRecord {
    let (year, month, day, hour) = date_parts(&r.reported_date);
    DatedRecord {
        offense_code: r.offense_code,
        offense_type_id: r.offense_type_id.clone(),
        offense_category_id: r.offense_category_id.clone(),
        year,
        month,
        day,
        hour,
        geo_x: r.geo_x,
        geo_y: r.geo_y,
        geo_lon: r.geo_lon,
        geo_lat: r.geo_lat,
        district_id: r.district_id,
        precinct_id: r.precinct_id,
        neighborhood_id: r.neighborhood_id.clone(),
        is_crime: r.is_crime,
        is_traffic: r.is_traffic,
    }
}

/// Lexicographic token → code assignment.
pub fn lexicographic_codes<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    tokens
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect()
}

fn code_lookup(tokens: &[String]) -> HashMap<&str, usize> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect()
}

/// Encodes categorical columns (codes in lexicographic token order) and
/// assembles the 15-feature table labelled by offense category.
pub fn encode_categoricals(records: &[DatedRecord]) -> Result<FeatureTable> {
    let class_names = lexicographic_codes(records.iter().map(|r| r.offense_category_id.as_str()));
    if class_names.len() > MAX_CLASSES {
        let extras: Vec<&str> = class_names
            .iter()
            .map(String::as_str)
            .filter(|c| !OFFENSE_CATEGORIES.contains(c))
            .collect();
        return Err(Error::schema(format!(
            "{} distinct offense categories (max {MAX_CLASSES}); unexpected: {}",
            class_names.len(),
            extras.join(", ")
        )));
    }
    let type_codes = lexicographic_codes(records.iter().map(|r| r.offense_type_id.as_str()));
    let hood_codes = lexicographic_codes(records.iter().map(|r| r.neighborhood_id.as_str()));
    let (class_lu, type_lu, hood_lu) = (
        code_lookup(&class_names),
        code_lookup(&type_codes),
        code_lookup(&hood_codes),
    );

    let mut data = Vec::with_capacity(records.len() * FEATURE_COLUMNS.len());
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        data.extend_from_slice(&[
            r.offense_code as f64,
            type_lu[r.offense_type_id.as_str()] as f64,
            r.year as f64,
            r.month as f64,
            r.day as f64,
            r.hour as f64,
            r.geo_x,
            r.geo_y,
            r.geo_lon,
            r.geo_lat,
            r.district_id as f64,
            r.precinct_id as f64,
            hood_lu[r.neighborhood_id.as_str()] as f64,
            r.is_crime as f64,
            r.is_traffic as f64,
        ]);
        labels.push(class_lu[r.offense_category_id.as_str()]);
    }
    let columns = FEATURE_COLUMNS
        .iter()
        .map(|&c| {
            if CATEGORICAL_FEATURES.contains(&c) {
                Column::categorical(c)
            } else {
                Column::numeric(c)
            }
        })
        .collect();
    let mut table = FeatureTable::new(
        columns,
        Matrix::new(records.len(), FEATURE_COLUMNS.len(), data)?,
        labels,
        class_names,
    )?;
    table.code_maps = BTreeMap::from([
        ("offense_type_id".to_string(), type_codes),
        ("neighborhood_id".to_string(), hood_codes),
    ]);
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct IngestOptions {
    pub cleaning: CleaningPolicy,
    pub exclude_leaky_features: bool,
}

/// Everything [`ingest_reader`] produced: the table plus parse diagnostics.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub table: FeatureTable,
    pub malformed: Vec<MalformedRow>,
}

/// Runs the full ingest chain on a CSV file.
pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> Result<IngestOutcome> {
    ingest_reader(open_file(path)?, opts)
}

pub fn ingest_reader<R: Read>(input: R, opts: &IngestOptions) -> Result<IngestOutcome> {
    let mut reader = IncidentReader::new(input)?;
    let (cleaned, counts) = clean_columns(&mut reader, &opts.cleaning);
    if let Some(e) = reader.take_error() {
        return Err(e);
    }
    let dated: Vec<DatedRecord> = select_attributes(&cleaned)
        .iter()
        .map(decompose_reported_date)
        .collect();
    let mut table = encode_categoricals(&dated)?;
    if opts.exclude_leaky_features {
        table = table.drop_columns(&LEAKY_FEATURES);
    }
    table.cleaning = CleaningSummary {
        policy: opts.cleaning,
        input_rows: reader.rows_read(),
        malformed_rows: reader.malformed_count(),
        dropped_rows: counts.dropped,
        sentinel_filled_rows: counts.sentinel_filled,
        emitted_rows: table.n_rows(),
    };
    debug_assert_eq!(
        table.cleaning.malformed_rows + table.cleaning.dropped_rows + table.cleaning.emitted_rows,
        table.cleaning.input_rows
    );
    Ok(IngestOutcome {
        table,
        malformed: reader.malformed_rows().to_vec(),
    })
}
