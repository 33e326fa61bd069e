//! Config-driven experiment runs, report emission, run comparison and
//! synthetic dataset generation.
//!
//! Per evaluation unit (each CV fold, or the holdout split) the order is:
//! min-max fit on training rows, resample training rows, select features
//! on the resampled rows, fit the model, score the untouched test rows.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, ModelSpec, TrainedModel};
use crate::ensembles::EstimatorSpec;
use crate::error::{create_file, open_file, Error, Result};
use crate::featsel::{select_features, FeatureSelectorSpec, Selection};
use crate::ingest::{ingest_csv, IngestOptions, LEAKY_FEATURES, OFFENSE_CATEGORIES, RAW_COLUMNS};
use crate::matrix::{argmax, Matrix};
use crate::metrics::{
    accuracy, confusion_matrix, mse_labels, paired_t_test, precision_recall_f1, roc_ovr_all,
    write_roc_csv, ConfusionMatrix, PrfTable, RocCurve, TTestResult,
};
use crate::preprocess::{
    apply_minmax, fit_minmax, shuffle_rows, stratified_holdout_split, stratified_kfold_plan,
    NormalizationParams, DEFAULT_TEST_FRACTION,
};
use crate::resample::{resample, RowOrigin, SamplerKind, SamplerSpec};
use crate::rng::{derive_seed, rng_from};
use crate::table::{CleaningPolicy, FeatureTable};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    Cv10,
    Holdout,
    Both,
}

impl Protocol {
    fn cv(self) -> bool {
        matches!(self, Protocol::Cv10 | Protocol::Both)
    }

    fn holdout(self) -> bool {
        matches!(self, Protocol::Holdout | Protocol::Both)
    }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

fn default_test_fraction() -> f64 {
    DEFAULT_TEST_FRACTION
}

/// One experiment. `threads` and `out_dir` only steer execution and are
/// left out of the config echo in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Raw incident CSV, or a `.cltable` file written by `ingest`.
    pub dataset: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub cleaning: CleaningPolicy,
    #[serde(default)]
    pub exclude_leaky_features: bool,
    #[serde(default)]
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub selector: FeatureSelectorSpec,
    pub model: EstimatorSpec,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Stratified subsample of this many rows before anything else.
    #[serde(default)]
    pub max_rows: Option<usize>,
    /// Resample the whole dataset before splitting (leaks; for comparison only).
    #[serde(default)]
    pub legacy_presample: bool,
    /// Clamp scaled test values into [0, 1].
    #[serde(default)]
    pub clamp_test_rows: bool,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, model: impl Into<EstimatorSpec>) -> Self {
        RunConfig {
            dataset: dataset.into(),
            seed: DEFAULT_SEED,
            cleaning: CleaningPolicy::default(),
            exclude_leaky_features: false,
            sampler: SamplerSpec::default(),
            selector: FeatureSelectorSpec::default(),
            model: model.into(),
            protocol: Protocol::Cv10,
            folds: DEFAULT_FOLDS,
            test_fraction: DEFAULT_TEST_FRACTION,
            max_rows: None,
            legacy_presample: false,
            clamp_test_rows: false,
            out_dir: None,
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            return Err(Error::Config("dataset path is empty".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!(
                "folds must be >= 2, got {}",
                self.folds
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        if self.max_rows == Some(0) {
            return Err(Error::Config("max_rows must be >= 1".into()));
        }
        self.sampler.validate()?;
        self.model.validate()
    }

    fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            cleaning: self.cleaning,
            exclude_leaky_features: self.exclude_leaky_features,
        }
    }
}

/// Loads `path` as a binary table (`.cltable`) or a raw incident CSV.
pub fn load_dataset(path: &Path, opts: &IngestOptions) -> Result<FeatureTable> {
    if path.extension().is_some_and(|e| e == "cltable") {
        let t = FeatureTable::read_binary(path)?;
        Ok(if opts.exclude_leaky_features {
            t.drop_columns(&LEAKY_FEATURES)
        } else {
            t
        })
    } else {
        let out = ingest_csv(path, opts)?;
        for m in out.malformed.iter().take(5) {
            log::warn!("malformed row at line {}: {}", m.line, m.reason);
        }
        Ok(out.table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub features: Vec<String>,
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub malformed_rows: usize,
    pub dropped_rows: usize,
    pub sentinel_filled_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    pub class: String,
    /// `None` when the class has no positives or no negatives among the scored rows.
    pub auc: Option<f64>,
    pub points: usize,
}

/// Metrics over one set of scored rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub rows: usize,
    pub accuracy: f64,
    /// Mean squared difference of integer class codes.
    pub mse: f64,
    pub confusion: ConfusionMatrix,
    pub prf: PrfTable,
    pub roc: Vec<RocSummary>,
    #[serde(skip)]
    pub roc_curves: Vec<Option<RocCurve>>,
}

pub fn evaluate(
    y_true: &[usize],
    y_pred: &[usize],
    proba: &Matrix,
    class_names: &[String],
) -> Result<Evaluation> {
    let k = class_names.len();
    let confusion = confusion_matrix(y_true, y_pred, k)?.with_names(class_names);
    let prf = precision_recall_f1(&confusion);
    let roc_curves = roc_ovr_all(y_true, proba);
    Ok(Evaluation {
        rows: y_true.len(),
        accuracy: accuracy(y_true, y_pred)?,
        mse: mse_labels(y_true, y_pred)?,
        roc: roc_curves
            .iter()
            .enumerate()
            .map(|(c, r)| RocSummary {
                class: class_names[c].clone(),
                auc: r.as_ref().map(|r| r.auc),
                points: r.as_ref().map_or(0, |r| r.points.len()),
            })
            .collect(),
        confusion,
        prf,
        roc_curves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSection {
    pub folds: usize,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub fold_train_rows: Vec<usize>,
    pub fold_selected_features: Vec<Vec<String>>,
    /// Pooled out-of-fold predictions.
    pub pooled: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSection {
    pub test_fraction: f64,
    pub train_rows: usize,
    pub train_rows_after_sampling: usize,
    pub test_rows: usize,
    pub selected_features: Vec<String>,
    pub evaluation: Evaluation,
}

/// Train/test separation checks, performed on every unit of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct HygieneAudit {
    pub units_checked: usize,
    /// Training rows (original or derived) built from a row of their own test set.
    pub leaked_rows: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub csv_schema_version: u32,
    pub model: String,
    pub seed: u64,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub cv: Option<CvSection>,
    pub holdout: Option<HoldoutSection>,
    pub hygiene: HygieneAudit,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn fold_accuracies(&self) -> Option<&[f64]> {
        self.cv.as_ref().map(|c| c.fold_accuracies.as_slice())
    }

    /// A report holding nothing but CV fold accuracies, for comparing
    /// published or externally computed results.
    pub fn from_fold_accuracies(model: &str, seed: u64, fold_accuracies: Vec<f64>) -> Self {
        let n = fold_accuracies.len();
        let mean = fold_accuracies.iter().sum::<f64>() / n.max(1) as f64;
        let empty = ConfusionMatrix {
            class_names: Vec::new(),
            counts: Vec::new(),
        };
        let prf = precision_recall_f1(&empty);
        let mut config = RunConfig::new("external", ModelSpec::decision_tree());
        config.seed = seed;
        EvalReport {
            schema_version: REPORT_SCHEMA_VERSION,
            csv_schema_version: CSV_SCHEMA_VERSION,
            model: model.to_string(),
            seed,
            config,
            dataset: DatasetSummary {
                rows: 0,
                features: Vec::new(),
                class_names: Vec::new(),
                class_counts: Vec::new(),
                malformed_rows: 0,
                dropped_rows: 0,
                sentinel_filled_rows: 0,
            },
            cv: Some(CvSection {
                folds: n,
                fold_accuracies,
                mean_accuracy: mean,
                fold_train_rows: Vec::new(),
                fold_selected_features: Vec::new(),
                pooled: Evaluation {
                    rows: 0,
                    accuracy: mean,
                    mse: 0.0,
                    confusion: empty,
                    prf,
                    roc: Vec::new(),
                    roc_curves: Vec::new(),
                },
            }),
            holdout: None,
            hygiene: HygieneAudit::default(),
            warnings: Vec::new(),
        }
    }
}

/// Wall-clock timings, written next to (not inside) the report so that
/// reports stay byte-stable.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub load_ms: f64,
    pub units_ms: BTreeMap<String, f64>,
    pub total_ms: f64,
    pub threads: usize,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: EvalReport,
    pub timings: Timings,
    pub files: Vec<PathBuf>,
}

struct Unit {
    name: String,
    train: Vec<usize>,
    test: Vec<usize>,
    seed: u64,
}

struct UnitResult {
    y_true: Vec<usize>,
    y_pred: Vec<usize>,
    proba: Matrix,
    test: Vec<usize>,
    train_rows_after_sampling: usize,
    selected: Vec<usize>,
    leaked_rows: usize,
    warnings: Vec<String>,
    elapsed_ms: f64,
}

const STREAM_SHUFFLE: u64 = 0;
const STREAM_SPLIT: u64 = 1;
const STREAM_SAMPLER: u64 = 2;
const STREAM_MODEL: u64 = 3;
const STREAM_SUBSAMPLE: u64 = 4;
const STREAM_PRESAMPLE: u64 = 5;
const STREAM_HOLDOUT_UNIT: u64 = 99;
const STREAM_FOLD_UNIT: u64 = 100;

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn sampler_for(cfg: &RunConfig, unit_seed: u64) -> SamplerSpec {
    SamplerSpec {
        seed: derive_seed(derive_seed(unit_seed, STREAM_SAMPLER), cfg.sampler.seed),
        ..cfg.sampler
    }
}

/// `origin`, when given, says which input rows each row of `x` was built
/// from (presampled data); otherwise rows are their own origin.
fn run_unit(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    origin: Option<&[RowOrigin]>,
    cfg: &RunConfig,
    unit: &Unit,
) -> Result<UnitResult> {
    let start = Instant::now();
    let xtr = x.select_rows(&unit.train);
    let ytr: Vec<usize> = unit.train.iter().map(|&i| y[i]).collect();
    let mut norm = fit_minmax(&xtr).map_err(|e| e.at("normalize"))?;
    norm.clamp = cfg.clamp_test_rows;
    let xtr = apply_minmax(&xtr, &norm).map_err(|e| e.at("normalize"))?;
    let xte = apply_minmax(&x.select_rows(&unit.test), &norm).map_err(|e| e.at("normalize"))?;

    let sampled = if origin.is_some() {
        resample(&xtr, &ytr, n_classes, &SamplerSpec::default())
    } else {
        resample(&xtr, &ytr, n_classes, &sampler_for(cfg, unit.seed))
    }
    .map_err(|e| e.at("resample"))?;

    // every fitted row must trace back to training rows only
    let source_of = |r: usize| -> Vec<usize> {
        match origin {
            Some(o) => o[r].sources().to_vec(),
            None => vec![r],
        }
    };
    let test_sources: std::collections::HashSet<usize> =
        unit.test.iter().flat_map(|&t| source_of(t)).collect();
    let leaked_rows = sampled
        .origin
        .iter()
        .filter(|o| {
            o.sources()
                .iter()
                .flat_map(|&local| source_of(unit.train[local]))
                .any(|s| test_sources.contains(&s))
        })
        .count();

    let selection = select_features(&sampled.x, &sampled.y, n_classes, &cfg.selector)
        .map_err(|e| e.at("select"))?;
    let model = cfg
        .model
        .fit(
            &selection.apply(&sampled.x),
            &sampled.y,
            n_classes,
            derive_seed(unit.seed, STREAM_MODEL),
        )
        .map_err(|e| e.at("fit"))?;
    let xte = selection.apply(&xte);
    let proba = model.predict_proba(&xte).map_err(|e| e.at("predict"))?;
    let y_pred: Vec<usize> = (0..proba.rows()).map(|i| argmax(proba.row(i))).collect();
    Ok(UnitResult {
        y_true: unit.test.iter().map(|&i| y[i]).collect(),
        y_pred,
        proba,
        test: unit.test.clone(),
        train_rows_after_sampling: sampled.y.len(),
        selected: selection.kept,
        leaked_rows,
        warnings: sampled
            .warnings
            .into_iter()
            .map(|w| format!("{}: {w}", unit.name))
            .collect(),
        elapsed_ms: ms_since(start),
    })
}

/// Stratified subsample of `max_rows` rows, in original row order.
pub fn stratified_subsample(
    table: &FeatureTable,
    max_rows: usize,
    seed: u64,
) -> Result<FeatureTable> {
    if max_rows >= table.n_rows() {
        return Ok(table.clone());
    }
    let f = max_rows as f64 / table.n_rows() as f64;
    let plan = stratified_holdout_split(&table.labels, table.n_classes(), f, seed)?;
    Ok(table.select_rows(&plan.test_indices))
}

/// Runs `cfg` inside a pool of `cfg.threads` workers (rayon's global pool
/// when unset) and writes the report files when `out_dir` is set.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?
            .install(|| run_in_pool(cfg)),
        None => run_in_pool(cfg),
    }
}

fn run_in_pool(cfg: &RunConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let table = load_dataset(&cfg.dataset, &cfg.ingest_options()).map_err(|e| e.at("ingest"))?;
    let load_ms = ms_since(start);
    let mut out = run_on_table(cfg, &table)?;
    out.timings.load_ms = load_ms;
    out.timings.total_ms = ms_since(start);
    if let Some(dir) = &cfg.out_dir {
        out.files = write_report_files(&out, dir).map_err(|e| e.at("report"))?;
    }
    Ok(out)
}

/// The pipeline on an already-loaded table; `cfg.dataset` is only echoed.
pub fn run_on_table(cfg: &RunConfig, table: &FeatureTable) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let seed = cfg.seed;
    let mut warnings = Vec::new();
    let table = match cfg.max_rows {
        Some(m) => stratified_subsample(table, m, derive_seed(seed, STREAM_SUBSAMPLE))
            .map_err(|e| e.at("subsample"))?,
        None => table.clone(),
    };
    if table.n_rows() == 0 {
        return Err(Error::Data("dataset has no rows".into()).at("ingest"));
    }
    let table = shuffle_rows(&table, derive_seed(seed, STREAM_SHUFFLE));
    let k = table.n_classes();
    let class_names = table.class_names.clone();
    let feature_names: Vec<String> = table.column_names().iter().map(|s| s.to_string()).collect();

    // legacy protocol: resample everything up front, then split the result
    let (x, y, origin) = if cfg.legacy_presample && cfg.sampler.kind != SamplerKind::None {
        warnings.push(
            "legacy_presample: resampled before splitting; scores are optimistic".to_string(),
        );
        let norm = fit_minmax(&table.matrix).map_err(|e| e.at("normalize"))?;
        let xn = apply_minmax(&table.matrix, &norm).map_err(|e| e.at("normalize"))?;
        let r = resample(
            &xn,
            &table.labels,
            k,
            &sampler_for(cfg, derive_seed(seed, STREAM_PRESAMPLE)),
        )
        .map_err(|e| e.at("resample"))?;
        warnings.extend(r.warnings.iter().cloned());
        (r.x, r.y, Some(r.origin))
    } else {
        (table.matrix.clone(), table.labels.clone(), None)
    };

    let mut units_ms = BTreeMap::new();
    let mut audit = HygieneAudit {
        passed: true,
        ..Default::default()
    };
    let names_of = |idx: &[usize]| {
        idx.iter()
            .map(|&j| feature_names[j].clone())
            .collect::<Vec<_>>()
    };

    let cv = if cfg.protocol.cv() {
        let plan = stratified_kfold_plan(&y, k, cfg.folds, derive_seed(seed, STREAM_SPLIT))
            .map_err(|e| e.at("split"))?;
        let units: Vec<Unit> = (0..cfg.folds)
            .map(|f| Unit {
                name: format!("fold{}", f + 1),
                train: plan.train_indices(f),
                test: plan.test_indices(f),
                seed: derive_seed(seed, STREAM_FOLD_UNIT + f as u64),
            })
            .collect();
        let results = units
            .par_iter()
            .map(|u| run_unit(&x, &y, k, origin.as_deref(), cfg, u).map_err(|e| e.at("cv")))
            .collect::<Result<Vec<_>>>()?;
        let mut pooled_pred = vec![0usize; y.len()];
        let mut pooled_proba = Matrix::zeros(y.len(), k);
        for (u, r) in units.iter().zip(&results) {
            audit_unit(&mut audit, u, r, y.len())?;
            units_ms.insert(u.name.clone(), r.elapsed_ms);
            warnings.extend(r.warnings.iter().cloned());
            for (j, &i) in r.test.iter().enumerate() {
                pooled_pred[i] = r.y_pred[j];
                pooled_proba.row_mut(i).copy_from_slice(r.proba.row(j));
            }
        }
        let fold_accuracies: Vec<f64> = results
            .iter()
            .map(|r| accuracy(&r.y_true, &r.y_pred))
            .collect::<Result<_>>()?;
        let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
        Some(CvSection {
            folds: cfg.folds,
            mean_accuracy,
            fold_train_rows: results
                .iter()
                .map(|r| r.train_rows_after_sampling)
                .collect(),
            fold_selected_features: results.iter().map(|r| names_of(&r.selected)).collect(),
            fold_accuracies,
            pooled: evaluate(&y, &pooled_pred, &pooled_proba, &class_names)
                .map_err(|e| e.at("evaluate"))?,
        })
    } else {
        None
    };

    let holdout = if cfg.protocol.holdout() {
        let plan =
            stratified_holdout_split(&y, k, cfg.test_fraction, derive_seed(seed, STREAM_SPLIT))
                .map_err(|e| e.at("split"))?;
        let unit = Unit {
            name: "holdout".into(),
            train: plan.train_indices.clone(),
            test: plan.test_indices.clone(),
            seed: derive_seed(seed, STREAM_HOLDOUT_UNIT),
        };
        let r = run_unit(&x, &y, k, origin.as_deref(), cfg, &unit).map_err(|e| e.at("holdout"))?;
        audit_unit(&mut audit, &unit, &r, y.len())?;
        units_ms.insert(unit.name.clone(), r.elapsed_ms);
        warnings.extend(r.warnings.iter().cloned());
        Some(HoldoutSection {
            test_fraction: cfg.test_fraction,
            train_rows: unit.train.len(),
            train_rows_after_sampling: r.train_rows_after_sampling,
            test_rows: unit.test.len(),
            selected_features: names_of(&r.selected),
            evaluation: evaluate(&r.y_true, &r.y_pred, &r.proba, &class_names)
                .map_err(|e| e.at("evaluate"))?,
        })
    } else {
        None
    };

    if origin.is_some() {
        audit.passed = audit.leaked_rows == 0;
        if !audit.passed {
            warnings.push(format!(
                "legacy_presample: {} training rows were derived from test rows",
                audit.leaked_rows
            ));
        }
    } else if audit.leaked_rows > 0 {
        return Err(Error::Internal(format!(
            "train/test hygiene violated: {} leaked rows",
            audit.leaked_rows
        )));
    }

    let report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        csv_schema_version: CSV_SCHEMA_VERSION,
        model: cfg.model.name().to_string(),
        seed,
        config: cfg.clone(),
        dataset: DatasetSummary {
            rows: table.n_rows(),
            features: feature_names.clone(),
            class_counts: table.class_counts(),
            class_names,
            malformed_rows: table.cleaning.malformed_rows,
            dropped_rows: table.cleaning.dropped_rows,
            sentinel_filled_rows: table.cleaning.sentinel_filled_rows,
        },
        cv,
        holdout,
        hygiene: audit,
        warnings,
    };
    Ok(RunOutput {
        report,
        timings: Timings {
            load_ms: 0.0,
            units_ms,
            total_ms: ms_since(start),
            threads: rayon::current_num_threads(),
            out_dir: cfg.out_dir.clone(),
        },
        files: Vec::new(),
    })
}

fn audit_unit(audit: &mut HygieneAudit, u: &Unit, r: &UnitResult, n: usize) -> Result<()> {
    let mut in_test = vec![false; n];
    u.test.iter().for_each(|&i| in_test[i] = true);
    if u.train.iter().any(|&i| in_test[i]) {
        return Err(Error::Internal(format!(
            "{}: a row is in both train and test",
            u.name
        )));
    }
    audit.units_checked += 1;
    audit.leaked_rows += r.leaked_rows;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(create_file(path)?))
}

/// Writes `report.json`, `timings.json` and the CSV tables into `dir`.
pub fn write_report_files(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let path = dir.join("report.json");
    std::fs::write(&path, out.report.to_json()?)?;
    files.push(path);
    let path = dir.join("timings.json");
    std::fs::write(&path, serde_json::to_string_pretty(&out.timings)?)?;
    files.push(path);

    let names = &out.report.dataset.class_names;
    let mut sections: Vec<(&str, &Evaluation)> = Vec::new();
    if let Some(cv) = &out.report.cv {
        let path = dir.join("cv_folds.csv");
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["fold", "accuracy"])?;
        for (i, a) in cv.fold_accuracies.iter().enumerate() {
            w.write_record([(i + 1).to_string(), a.to_string()])?;
        }
        w.write_record(["accuracy".to_string(), cv.mean_accuracy.to_string()])?;
        w.flush()?;
        files.push(path);
        sections.push(("cv", &cv.pooled));
    }
    if let Some(h) = &out.report.holdout {
        sections.push(("holdout", &h.evaluation));
    }
    for (tag, ev) in sections {
        let path = dir.join(format!("confusion_{tag}.csv"));
        ev.confusion.write_csv(create(&path)?)?;
        files.push(path);
        let path = dir.join(format!("prf_{tag}.csv"));
        ev.prf.write_csv(create(&path)?)?;
        files.push(path);
        let path = dir.join(format!("roc_{tag}.csv"));
        write_roc_csv(&ev.roc_curves, names, create(&path)?)?;
        files.push(path);
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model_a: String,
    pub model_b: String,
    pub seed_a: u64,
    pub seed_b: u64,
    pub folds: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    #[serde(flatten)]
    pub test: TTestResult,
    pub config_a: String,
    pub config_b: String,
}

/// Paired t-test on the CV fold accuracies of two runs.
pub fn compare_runs(a: &EvalReport, b: &EvalReport) -> Result<ComparisonRow> {
    let fa = a
        .fold_accuracies()
        .ok_or_else(|| Error::argument(format!("run {} has no cv results", a.model)))?;
    let fb = b
        .fold_accuracies()
        .ok_or_else(|| Error::argument(format!("run {} has no cv results", b.model)))?;
    if fa.len() != fb.len() {
        return Err(Error::argument(format!(
            "fold counts differ: {} vs {}",
            fa.len(),
            fb.len()
        )));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ComparisonRow {
        model_a: a.model.clone(),
        model_b: b.model.clone(),
        seed_a: a.seed,
        seed_b: b.seed,
        folds: fa.len(),
        mean_a: mean(fa),
        mean_b: mean(fb),
        test: paired_t_test(fa, fb)?,
        config_a: serde_json::to_string(&a.config)?,
        config_b: serde_json::to_string(&b.config)?,
    })
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "model_a",
        "model_b",
        "seed_a",
        "seed_b",
        "folds",
        "mean_a",
        "mean_b",
        "t_statistic",
        "p_value",
        "degrees_of_freedom",
        "mean_difference",
        "decision",
        "config_a",
        "config_b",
    ])?;
    for r in rows {
        let t = if r.test.t_statistic.is_finite() {
            r.test.t_statistic.to_string()
        } else if r.test.t_statistic > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
        out.write_record([
            r.model_a.clone(),
            r.model_b.clone(),
            r.seed_a.to_string(),
            r.seed_b.to_string(),
            r.folds.to_string(),
            r.mean_a.to_string(),
            r.mean_b.to_string(),
            t,
            r.test.p_value.to_string(),
            r.test.degrees_of_freedom.to_string(),
            r.test.mean_difference.to_string(),
            r.test.decision.clone(),
            r.config_a.clone(),
            r.config_b.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

const PIPELINE_MAGIC: &[u8; 8] = b"CLPIPE\0\0";
const PIPELINE_FORMAT_VERSION: u32 = 1;

/// Normalization, feature selection and model fitted on a whole dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub normalization: NormalizationParams,
    pub selection: Selection,
    pub model: TrainedModel,
    pub seed: u64,
    /// The RunConfig used, as JSON.
    pub config_json: String,
}

/// Fits the training half of the pipeline on every row of `table`.
pub fn fit_pipeline(cfg: &RunConfig, table: &FeatureTable) -> Result<TrainedPipeline> {
    cfg.validate()?;
    let k = table.n_classes();
    let unit_seed = derive_seed(cfg.seed, STREAM_HOLDOUT_UNIT);
    let mut normalization = fit_minmax(&table.matrix).map_err(|e| e.at("normalize"))?;
    normalization.clamp = cfg.clamp_test_rows;
    let x = apply_minmax(&table.matrix, &normalization).map_err(|e| e.at("normalize"))?;
    let sampled = resample(&x, &table.labels, k, &sampler_for(cfg, unit_seed))
        .map_err(|e| e.at("resample"))?;
    let selection =
        select_features(&sampled.x, &sampled.y, k, &cfg.selector).map_err(|e| e.at("select"))?;
    let model = cfg
        .model
        .fit(
            &selection.apply(&sampled.x),
            &sampled.y,
            k,
            derive_seed(unit_seed, STREAM_MODEL),
        )
        .map_err(|e| e.at("fit"))?;
    Ok(TrainedPipeline {
        feature_names: table.column_names().iter().map(|s| s.to_string()).collect(),
        class_names: table.class_names.clone(),
        normalization,
        selection,
        model,
        seed: cfg.seed,
        config_json: serde_json::to_string(cfg)?,
    })
}

impl TrainedPipeline {
    pub fn predict_proba(&self, table: &FeatureTable) -> Result<Matrix> {
        let names: Vec<&str> = table.column_names();
        if names
            != self
                .feature_names
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>()
        {
            return Err(Error::schema(format!(
                "feature columns {names:?} differ from the trained {:?}",
                self.feature_names
            )));
        }
        let x = apply_minmax(&table.matrix, &self.normalization)?;
        self.model.predict_proba(&self.selection.apply(&x))
    }

    /// Labels of `table` recoded to this pipeline's class codes.
    pub fn recode_labels(&self, table: &FeatureTable) -> Result<Vec<usize>> {
        let map: Vec<usize> = table
            .class_names
            .iter()
            .map(|n| {
                self.class_names
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::Data(format!("category {n:?} was not seen in training")))
            })
            .collect::<Result<_>>()?;
        Ok(table.labels.iter().map(|&l| map[l]).collect())
    }

    /// Scores every row of `table`.
    pub fn evaluate(&self, table: &FeatureTable) -> Result<Evaluation> {
        let y = self.recode_labels(table)?;
        let proba = self.predict_proba(table)?;
        let pred: Vec<usize> = (0..proba.rows()).map(|i| argmax(proba.row(i))).collect();
        evaluate(&y, &pred, &proba, &self.class_names)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        w.write_all(PIPELINE_MAGIC)?;
        w.write_all(&PIPELINE_FORMAT_VERSION.to_le_bytes())?;
        bincode::serialize_into(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(open_file(path)?);
        let mut head = [0u8; 12];
        r.read_exact(&mut head)?;
        if &head[..8] != PIPELINE_MAGIC {
            return Err(Error::Serialization(format!(
                "{} is not a pipeline file",
                path.display()
            )));
        }
        let ver = u32::from_le_bytes([head[8], head[9], head[10], head[11]]);
        if ver != PIPELINE_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported pipeline version {ver}"
            )));
        }
        Ok(bincode::deserialize_from(r)?)
    }
}

/// Gaussian-blob dataset in the raw incident schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Rows per class; class `c` is named after the `c`-th offense category.
    pub counts: Vec<usize>,
    /// Blob dimensions, 1 to 4, carried by geo_x, geo_y, geo_lon, geo_lat.
    pub dims: usize,
    /// Standard deviation of each blob around its center (centers lie in the unit cube).
    pub spread: f64,
    pub seed: u64,
    /// Randomize the columns that carry no class signal (dates, districts, unused geo dims, flags).
    #[serde(default)]
    pub background_noise: bool,
}

pub const MAX_SYNTHETIC_DIMS: usize = 4;

// (offset, scale) placing unit-cube coordinates in each geo column's range
const GEO_FRAME: [(f64, f64); 4] = [
    (3_140_000.0, 40_000.0),
    (1_690_000.0, 40_000.0),
    (-104.98, 0.15),
    (39.70, 0.15),
];

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.counts.is_empty() || self.counts.contains(&0) {
            return Err(Error::argument("every class needs at least one row"));
        }
        if self.counts.len() > OFFENSE_CATEGORIES.len() {
            return Err(Error::argument(format!(
                "at most {} classes, got {}",
                OFFENSE_CATEGORIES.len(),
                self.counts.len()
            )));
        }
        if !(1..=MAX_SYNTHETIC_DIMS).contains(&self.dims) {
            return Err(Error::argument(format!(
                "dims must be 1..={MAX_SYNTHETIC_DIMS}, got {}",
                self.dims
            )));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(Error::argument(format!(
                "spread must be >= 0, got {}",
                self.spread
            )));
        }
        Ok(())
    }

    /// Blob coordinates (`dims` columns) and class codes, grouped by class.
    pub fn sample_points(&self) -> Result<(Matrix, Vec<usize>)> {
        self.validate()?;
        let centers = self.centers();
        let normal = Normal::new(0.0, self.spread).map_err(|e| Error::argument(e.to_string()))?;
        let n: usize = self.counts.iter().sum();
        let mut data = Vec::with_capacity(n * self.dims);
        let mut labels = Vec::with_capacity(n);
        for (c, &count) in self.counts.iter().enumerate() {
            let mut rng = rng_from(derive_seed(self.seed, 1 + c as u64));
            for _ in 0..count {
                data.extend(centers[c].iter().map(|m| m + normal.sample(&mut rng)));
                labels.push(c);
            }
        }
        Ok((Matrix::new(n, self.dims, data)?, labels))
    }

    /// Blob centers, one row per class, in the unit cube.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let mut rng = rng_from(derive_seed(self.seed, 0));
        (0..self.counts.len())
            .map(|_| (0..self.dims).map(|_| rng.gen::<f64>()).collect())
            .collect()
    }
}

/// Writes the synthetic dataset as CSV. Rows are grouped by class.
pub fn generate_synthetic_csv<W: Write>(spec: &SyntheticSpec, w: W) -> Result<usize> {
    let (points, labels) = spec.sample_points()?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RAW_COLUMNS)?;
    let base = chrono::NaiveDate::from_ymd_opt(2014, 1, 2)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .ok_or_else(|| Error::Internal("bad base date".into()))?;
    let mut noise = rng_from(derive_seed(spec.seed, u64::MAX));
    for (i, (row, &c)) in points.iter_rows().zip(&labels).enumerate() {
        let id = i + 1;
        let mut unit = [0.5f64; 4];
        for (j, u) in unit.iter_mut().enumerate() {
            if j < spec.dims {
                *u = row[j];
            } else if spec.background_noise {
                *u = noise.gen();
            }
        }
        let geo: Vec<String> = unit
            .iter()
            .zip(GEO_FRAME)
            .map(|(u, (off, scale))| (off + scale * u).to_string())
            .collect();
        let (when, district, precinct, hood, is_crime, is_traffic) = if spec.background_noise {
            let secs = noise.gen_range(0..(5 * 365 * 86_400i64));
            let d = noise.gen_range(1..=7i64);
            (
                base + chrono::Duration::seconds(secs),
                d,
                d * 100 + noise.gen_range(1..=9i64),
                format!("hood-{}", noise.gen_range(0..20)),
                noise.gen_range(0..=1u8),
                noise.gen_range(0..=1u8),
            )
        } else {
            (
                base + chrono::Duration::hours(12),
                1,
                111,
                "hood-0".to_string(),
                1,
                0,
            )
        };
        let ts = when.format("%Y-%m-%d %H:%M:%S").to_string();
        out.write_record([
            id.to_string(),
            format!("{id}9999000"),
            "9999".to_string(),
            "0".to_string(),
            "synthetic-offense".to_string(),
            OFFENSE_CATEGORIES[c].to_string(),
            ts.clone(),
            String::new(),
            ts,
            String::new(),
            geo[0].clone(),
            geo[1].clone(),
            geo[2].clone(),
            geo[3].clone(),
            district.to_string(),
            precinct.to_string(),
            hood,
            is_crime.to_string(),
            is_traffic.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(labels.len())
}

/// The synthetic dataset pushed through ingest, without touching disk.
pub fn synthetic_table(spec: &SyntheticSpec, opts: &IngestOptions) -> Result<FeatureTable> {
    let mut buf = Vec::new();
    generate_synthetic_csv(spec, &mut buf)?;
    Ok(crate::ingest::ingest_reader(buf.as_slice(), opts)?.table)
}

pub fn generate_synthetic(spec: &SyntheticSpec, path: &Path) -> Result<usize> {
    let mut w = create(path)?;
    let n = generate_synthetic_csv(spec, &mut w)?;
    w.flush()?;
    Ok(n)
}
