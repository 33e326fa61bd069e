//! Class-imbalance resampling for training partitions.
//!
//! Output rows are in canonical order: surviving original rows in input
//! order, then generated rows grouped by class code and generation index.
//! Each class draws from its own stream seeded by
//! `derive_seed(seed, class)`, so per-class work can run in parallel
//! without changing the result.

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighbors::{nearest_k, nearest_other};
use crate::rng::{derive_seed, rng_from, sample_without_replacement};
use crate::table::{class_counts, indices_by_class};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    None,
    RandomOver,
    RandomUnder,
    Smote,
    TomekLinks,
    SmoteTomek,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub smote_k: usize,
    pub seed: u64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec {
            kind: SamplerKind::None,
            smote_k: 5,
            seed: 0,
        }
    }
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind) -> Self {
        SamplerSpec {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.smote_k == 0 {
            return Err(Error::Config("smote_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Where an output row came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RowOrigin {
    Original(usize),
    Duplicate(usize),
    /// `x[base] + lambda * (x[neighbor] - x[base])`.
    Synthetic {
        base: usize,
        neighbor: usize,
        lambda: f64,
    },
}

impl RowOrigin {
    /// Input rows whose values this row was built from.
    pub fn sources(&self) -> [usize; 2] {
        match *self {
            RowOrigin::Original(i) | RowOrigin::Duplicate(i) => [i, i],
            RowOrigin::Synthetic { base, neighbor, .. } => [base, neighbor],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub origin: Vec<RowOrigin>,
    pub warnings: Vec<String>,
}

impl Resampled {
    fn identity(x: &Matrix, y: &[usize]) -> Self {
        Resampled {
            x: x.clone(),
            y: y.to_vec(),
            origin: (0..y.len()).map(RowOrigin::Original).collect(),
            warnings: Vec::new(),
        }
    }

    fn from_kept(x: &Matrix, y: &[usize], kept: &[usize]) -> Self {
        Resampled {
            x: x.select_rows(kept),
            y: kept.iter().map(|&i| y[i]).collect(),
            origin: kept.iter().map(|&i| RowOrigin::Original(i)).collect(),
            warnings: Vec::new(),
        }
    }

    fn append(&mut self, row: &[f64], label: usize, origin: RowOrigin) {
        self.x.push_row(row).expect("row width matches");
        self.y.push(label);
        self.origin.push(origin);
    }
}

fn check_input(x: &Matrix, y: &[usize], n_classes: usize) -> Result<Vec<usize>> {
    if y.is_empty() {
        return Err(Error::argument("cannot resample an empty training set"));
    }
    if x.rows() != y.len() {
        return Err(Error::argument(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    let counts = class_counts(y, n_classes);
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::argument("resampling needs at least two classes"));
    }
    Ok(counts)
}

/// Applies the sampler described by `spec`.
pub fn resample(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    spec: &SamplerSpec,
) -> Result<Resampled> {
    spec.validate()?;
    match spec.kind {
        SamplerKind::None => Ok(Resampled::identity(x, y)),
        SamplerKind::RandomOver => random_oversample(x, y, n_classes, spec.seed),
        SamplerKind::RandomUnder => random_undersample(x, y, n_classes, spec.seed),
        SamplerKind::Smote => smote(x, y, n_classes, spec.smote_k, spec.seed),
        SamplerKind::TomekLinks => tomek_links(x, y, n_classes),
        SamplerKind::SmoteTomek => smote_tomek(x, y, n_classes, spec.smote_k, spec.seed),
    }
}

/// Duplicates random rows of every non-majority class (with replacement)
/// until all classes reach the majority count.
pub fn random_oversample(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<Resampled> {
    let counts = check_input(x, y, n_classes)?;
    let target = *counts.iter().max().unwrap();
    let groups = indices_by_class(y, n_classes);
    let draws: Vec<Vec<usize>> = groups
        .par_iter()
        .enumerate()
        .map(|(c, g)| {
            if g.is_empty() {
                return Vec::new();
            }
            let mut rng = rng_from(derive_seed(seed, c as u64));
            (g.len()..target)
                .map(|_| g[rng.gen_range(0..g.len())])
                .collect()
        })
        .collect();
    let mut out = Resampled::identity(x, y);
    for (c, d) in draws.iter().enumerate() {
        for &i in d {
            out.append(x.row(i), c, RowOrigin::Duplicate(i));
        }
    }
    Ok(out)
}

/// Keeps a random subset of every class, sized to the minority count.
pub fn random_undersample(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<Resampled> {
    let counts = check_input(x, y, n_classes)?;
    let target = counts.iter().copied().filter(|&c| c > 0).min().unwrap();
    let mut kept: Vec<usize> = indices_by_class(y, n_classes)
        .iter()
        .enumerate()
        .flat_map(|(c, g)| {
            let mut rng = rng_from(derive_seed(seed, c as u64));
            sample_without_replacement(g.len(), target.min(g.len()), &mut rng)
                .into_iter()
                .map(|p| g[p])
                .collect::<Vec<_>>()
        })
        .collect();
    kept.sort_unstable();
    Ok(Resampled::from_kept(x, y, &kept))
}

/// SMOTE: for each non-majority class, synthesize points on segments
/// between a random class member and one of its `k` nearest same-class
/// neighbours until the class reaches the majority count.
///
/// A class with a single row cannot interpolate; it is padded by
/// duplication (recorded as a zero-length synthetic step) with a warning.
pub fn smote(x: &Matrix, y: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Resampled> {
    if k == 0 {
        return Err(Error::argument("smote k must be at least 1"));
    }
    let counts = check_input(x, y, n_classes)?;
    let target = *counts.iter().max().unwrap();
    let groups = indices_by_class(y, n_classes);

    let per_class: Vec<(Vec<RowOrigin>, Option<String>)> = groups
        .par_iter()
        .enumerate()
        .map(|(c, g)| {
            if g.is_empty() || g.len() >= target {
                return (Vec::new(), None);
            }
            let mut rng = rng_from(derive_seed(seed, c as u64));
            let need = target - g.len();
            if g.len() == 1 {
                let origins = (0..need)
                    .map(|_| RowOrigin::Synthetic {
                        base: g[0],
                        neighbor: g[0],
                        lambda: 0.0,
                    })
                    .collect();
                let msg = format!("class {c} has one row; SMOTE falls back to duplication");
                return (origins, Some(msg));
            }
            let members = x.select_rows(g);
            let kk = k.min(g.len() - 1);
            // neighbour lists are computed lazily, only for drawn bases
            let mut nn_cache: Vec<Option<Vec<usize>>> = vec![None; g.len()];
            let origins = (0..need)
                .map(|_| {
                    let b = rng.gen_range(0..g.len());
                    let nn = nn_cache[b].get_or_insert_with(|| {
                        nearest_k(&members, members.row(b), kk, Some(b))
                            .into_iter()
                            .map(|(_, j)| j)
                            .collect()
                    });
                    let pick = nn[rng.gen_range(0..nn.len())];
                    let lambda: f64 = rng.gen();
                    RowOrigin::Synthetic {
                        base: g[b],
                        neighbor: g[pick],
                        lambda,
                    }
                })
                .collect();
            (origins, None)
        })
        .collect();

    let mut out = Resampled::identity(x, y);
    for (c, (origins, warning)) in per_class.into_iter().enumerate() {
        if let Some(w) = warning {
            warn!("{w}");
            out.warnings.push(w);
        }
        for o in origins {
            let row = interpolate(x, &o);
            out.append(&row, c, o);
        }
    }
    Ok(out)
}

fn interpolate(x: &Matrix, origin: &RowOrigin) -> Vec<f64> {
    match *origin {
        RowOrigin::Original(i) | RowOrigin::Duplicate(i) => x.row(i).to_vec(),
        RowOrigin::Synthetic {
            base,
            neighbor,
            lambda,
        } => x
            .row(base)
            .iter()
            .zip(x.row(neighbor))
            .map(|(&a, &b)| a + lambda * (b - a))
            .collect(),
    }
}

/// Cross-class pairs of mutual nearest neighbours, as `(lower, higher)`
/// row indices in ascending order.
pub fn find_tomek_links(x: &Matrix, y: &[usize]) -> Vec<(usize, usize)> {
    let nn: Vec<Option<usize>> = (0..x.rows())
        .into_par_iter()
        .map(|i| nearest_other(x, i))
        .collect();
    (0..x.rows())
        .filter_map(|a| {
            let b = nn[a]?;
            (a < b && nn[b] == Some(a) && y[a] != y[b]).then_some((a, b))
        })
        .collect()
}

/// Single-pass Tomek-link cleaning: from each link drop the endpoint whose
/// class is larger; when both classes have the same size, drop both.
pub fn tomek_links(x: &Matrix, y: &[usize], n_classes: usize) -> Result<Resampled> {
    let counts = check_input(x, y, n_classes)?;
    let mut remove = vec![false; y.len()];
    for (a, b) in find_tomek_links(x, y) {
        let (ca, cb) = (counts[y[a]], counts[y[b]]);
        if ca >= cb {
            remove[a] = true;
        }
        if cb >= ca {
            remove[b] = true;
        }
    }
    let kept: Vec<usize> = (0..y.len()).filter(|&i| !remove[i]).collect();
    Ok(Resampled::from_kept(x, y, &kept))
}

/// SMOTE followed by Tomek-link cleaning. Origins refer to the input rows.
pub fn smote_tomek(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
) -> Result<Resampled> {
    let over = smote(x, y, n_classes, k, seed)?;
    let cleaned = tomek_links(&over.x, &over.y, n_classes)?;
    let origin = cleaned
        .origin
        .iter()
        .map(|o| match o {
            RowOrigin::Original(i) => over.origin[*i],
            other => *other,
        })
        .collect();
    Ok(Resampled {
        origin,
        warnings: over.warnings,
        ..cleaned
    })
}
