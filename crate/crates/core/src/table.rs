//! The encoded feature table shared by every downstream stage.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{create_file, open_file, Error, Result};
use crate::matrix::Matrix;

const TABLE_MAGIC: &[u8; 8] = b"CLTABLE\0";
const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn numeric(name: &str) -> Self {
        Column {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn categorical(name: &str) -> Self {
        Column {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MissingRowAction {
    #[default]
    Drop,
    Sentinel,
}

/// What to do with rows missing a retained field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningPolicy {
    pub missing_row_action: MissingRowAction,
    pub sentinel_value: f64,
}

pub const DEFAULT_SENTINEL: f64 = -9999.0;

impl Default for CleaningPolicy {
    fn default() -> Self {
        CleaningPolicy {
            missing_row_action: MissingRowAction::Drop,
            sentinel_value: DEFAULT_SENTINEL,
        }
    }
}

/// Row accounting for one ingest run. `malformed + dropped + emitted == input`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CleaningSummary {
    pub policy: CleaningPolicy,
    pub input_rows: usize,
    pub malformed_rows: usize,
    pub dropped_rows: usize,
    pub sentinel_filled_rows: usize,
    pub emitted_rows: usize,
}

/// Encoded numeric matrix plus labels and the metadata to decode them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub columns: Vec<Column>,
    pub matrix: Matrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Per categorical column: tokens indexed by code.
    pub code_maps: BTreeMap<String, Vec<String>>,
    pub cleaning: CleaningSummary,
}

/// JSON sidecar written next to the CSV export.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TableSidecar {
    format_version: u32,
    columns: Vec<Column>,
    label_column: String,
    class_names: Vec<String>,
    code_maps: BTreeMap<String, Vec<String>>,
    cleaning: CleaningSummary,
}

pub const LABEL_COLUMN: &str = "offense_category_id";

impl FeatureTable {
    pub fn new(
        columns: Vec<Column>,
        matrix: Matrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let t = FeatureTable {
            columns,
            matrix,
            labels,
            class_names,
            code_maps: BTreeMap::new(),
            cleaning: CleaningSummary::default(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.len() != self.matrix.cols() {
            return Err(Error::schema(format!(
                "{} column descriptors for {} matrix columns",
                self.columns.len(),
                self.matrix.cols()
            )));
        }
        if self.labels.len() != self.matrix.rows() {
            return Err(Error::schema(format!(
                "{} labels for {} rows",
                self.labels.len(),
                self.matrix.rows()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.class_names.len()) {
            return Err(Error::schema(format!(
                "label code {bad} outside {} classes",
                self.class_names.len()
            )));
        }
        if self.matrix.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(
                "feature matrix contains a non-finite value".into(),
            ));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_features(&self) -> usize {
        self.matrix.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::schema(format!("table has no column `{name}`")))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.n_classes())
    }

    pub fn class_code(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Code of `token` in categorical column `column`.
    pub fn encode_token(&self, column: &str, token: &str) -> Option<usize> {
        if column == LABEL_COLUMN {
            return self.class_code(token);
        }
        self.code_maps.get(column)?.iter().position(|t| t == token)
    }

    pub fn decode_token(&self, column: &str, code: usize) -> Option<&str> {
        if column == LABEL_COLUMN {
            return self.class_names.get(code).map(String::as_str);
        }
        self.code_maps.get(column)?.get(code).map(String::as_str)
    }

    /// Same table restricted to `idx` (in that order).
    pub fn select_rows(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: self.columns.clone(),
            matrix: self.matrix.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            code_maps: self.code_maps.clone(),
            cleaning: self.cleaning.clone(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> FeatureTable {
        let columns: Vec<Column> = idx.iter().map(|&j| self.columns[j].clone()).collect();
        let code_maps = self
            .code_maps
            .iter()
            .filter(|(k, _)| columns.iter().any(|c| &c.name == *k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        FeatureTable {
            columns,
            matrix: self.matrix.select_cols(idx),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
            code_maps,
            cleaning: self.cleaning.clone(),
        }
    }

    /// Drops the named columns; names not present are ignored.
    pub fn drop_columns(&self, names: &[&str]) -> FeatureTable {
        let keep: Vec<usize> = (0..self.n_features())
            .filter(|&j| !names.contains(&self.columns[j].name.as_str()))
            .collect();
        self.select_columns(&keep)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(create_file(path)?);
        self.write_binary_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_binary_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(TABLE_MAGIC)?;
        w.write_all(&TABLE_FORMAT_VERSION.to_le_bytes())?;
        bincode::serialize_into(w, self)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        Self::read_binary_from(&mut BufReader::new(open_file(path)?))
    }

    pub fn read_binary_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != TABLE_MAGIC {
            return Err(Error::Serialization("not a feature-table file".into()));
        }
        let mut ver = [0u8; 4];
        r.read_exact(&mut ver)?;
        let ver = u32::from_le_bytes(ver);
        if ver != TABLE_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported feature-table version {ver}"
            )));
        }
        let t: FeatureTable = bincode::deserialize_from(r)?;
        t.validate()?;
        Ok(t)
    }

    /// Writes `<path>` as CSV (features then label code) and
    /// `<path>.json` with column kinds, code maps and cleaning counts.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.column_names();
        header.push(LABEL_COLUMN);
        w.write_record(&header)?;
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for (row, &label) in self.matrix.iter_rows().zip(&self.labels) {
            rec.clear();
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        let sidecar = TableSidecar {
            format_version: TABLE_FORMAT_VERSION,
            columns: self.columns.clone(),
            label_column: LABEL_COLUMN.to_string(),
            class_names: self.class_names.clone(),
            code_maps: self.code_maps.clone(),
            cleaning: self.cleaning.clone(),
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Reads a table written by [`FeatureTable::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let sidecar: TableSidecar =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        let mut r = csv::Reader::from_path(path)?;
        let d = sidecar.columns.len();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != d + 1 {
                return Err(Error::Data(format!(
                    "row has {} fields, expected {}",
                    rec.len(),
                    d + 1
                )));
            }
            for f in rec.iter().take(d) {
                data.push(
                    f.parse::<f64>()
                        .map_err(|_| Error::Data(format!("bad number `{f}`")))?,
                );
            }
            labels.push(
                rec[d]
                    .parse::<usize>()
                    .map_err(|_| Error::Data(format!("bad label `{}`", &rec[d])))?,
            );
        }
        let t = FeatureTable {
            columns: sidecar.columns,
            matrix: Matrix::new(labels.len(), d, data)?,
            labels,
            class_names: sidecar.class_names,
            code_maps: sidecar.code_maps,
            cleaning: sidecar.cleaning,
        };
        t.validate()?;
        Ok(t)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

pub fn class_counts(labels: &[usize], n_classes: usize) -> Vec<usize> {
    let mut c = vec![0; n_classes];
    for &l in labels {
        c[l] += 1;
    }
    c
}

/// Row indices grouped by class code.
pub fn indices_by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut g = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        g[l].push(i);
    }
    g
}
