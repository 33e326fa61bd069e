//! Evaluation statistics: accuracy, label MSE, confusion matrices,
//! precision/recall/F1, one-vs-rest ROC and the paired t-test.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::argument(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::argument("no rows to score"));
    }
    Ok(())
}

/// Fraction of positions where `y_pred` equals `y_true`.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Mean squared difference between integer class codes.
///
/// This depends on the code assignment (lexicographic category order), so
/// it only says how far apart the codes are, not how wrong a prediction is.
pub fn mse_labels(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    let s: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(s / y_true.len() as f64)
}

/// Rows are the true class, columns the predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::argument(format!(
            "length mismatch: {} vs {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= k || p >= k {
            return Err(Error::argument(format!(
                "class code out of range: ({t}, {p}) with K = {k}"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        class_names: (0..k).map(|c| c.to_string()).collect(),
        counts,
    })
}

impl ConfusionMatrix {
    pub fn with_names(mut self, names: &[String]) -> Self {
        if names.len() == self.k() {
            self.class_names = names.to_vec();
        }
        self
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.k())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.class_names.iter().cloned());
        out.write_record(&header)?;
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(u64::to_string));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when a denominator was zero and the metric was taken as 0.
    pub undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfTable {
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassPrf>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total_support: u64,
    pub warnings: Vec<String>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn precision_recall_f1(cm: &ConfusionMatrix) -> PrfTable {
    let k = cm.k();
    let rows = cm.row_sums();
    let cols = cm.col_sums();
    let mut warnings = Vec::new();
    let per_class: Vec<ClassPrf> = (0..k)
        .map(|c| {
            let tp = cm.counts[c][c];
            let p = ratio(tp, cols[c]);
            let r = ratio(tp, rows[c]);
            let mut undefined = false;
            if p.is_none() {
                warnings.push(format!(
                    "class {}: never predicted, precision set to 0",
                    cm.class_names[c]
                ));
                undefined = true;
            }
            if r.is_none() {
                warnings.push(format!(
                    "class {}: no true rows, recall set to 0",
                    cm.class_names[c]
                ));
                undefined = true;
            }
            let (p, r) = (p.unwrap_or(0.0), r.unwrap_or(0.0));
            let f1 = if p + r > 0.0 {
                2.0 * p * r / (p + r)
            } else {
                if !undefined {
                    warnings.push(format!(
                        "class {}: precision and recall are 0, f1 set to 0",
                        cm.class_names[c]
                    ));
                }
                undefined = true;
                0.0
            };
            ClassPrf {
                precision: p,
                recall: r,
                f1,
                support: rows[c],
                undefined,
            }
        })
        .collect();
    let total = cm.total();
    let mean = |f: fn(&ClassPrf) -> f64| {
        if k == 0 {
            0.0
        } else {
            per_class.iter().map(f).sum::<f64>() / k as f64
        }
    };
    let wmean = |f: fn(&ClassPrf) -> f64| {
        if total == 0 {
            0.0
        } else {
            per_class
                .iter()
                .map(|c| f(c) * c.support as f64)
                .sum::<f64>()
                / total as f64
        }
    };
    PrfTable {
        class_names: cm.class_names.clone(),
        accuracy: if total == 0 { 0.0 } else { cm.accuracy() },
        macro_avg: Averages {
            precision: mean(|c| c.precision),
            recall: mean(|c| c.recall),
            f1: mean(|c| c.f1),
        },
        weighted_avg: Averages {
            precision: wmean(|c| c.precision),
            recall: wmean(|c| c.recall),
            f1: wmean(|c| c.f1),
        },
        per_class,
        total_support: total,
        warnings,
    }
}

impl PrfTable {
    /// Rows per class, then accuracy, macro and weighted averages.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["class", "precision", "recall", "f1", "support"])?;
        for (name, c) in self.class_names.iter().zip(&self.per_class) {
            out.write_record([
                name.clone(),
                c.precision.to_string(),
                c.recall.to_string(),
                c.f1.to_string(),
                c.support.to_string(),
            ])?;
        }
        let n = self.total_support.to_string();
        out.write_record(["accuracy", "", "", &self.accuracy.to_string(), &n])?;
        for (label, a) in [
            ("macro avg", self.macro_avg),
            ("weighted avg", self.weighted_avg),
        ] {
            out.write_record([
                label.to_string(),
                a.precision.to_string(),
                a.recall.to_string(),
                a.f1.to_string(),
                n.clone(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub class: usize,
    /// (false positive rate, true positive rate), from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC of a binary problem. Tied scores move the curve in a single step.
pub fn roc_binary(positive: &[bool], scores: &[f64]) -> Result<(Vec<(f64, f64)>, f64)> {
    check_lengths(positive.len(), scores.len())?;
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::argument(format!("non-finite score {s}")));
    }
    let n_pos = positive.iter().filter(|&&p| p).count() as u64;
    let n_neg = positive.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::argument(format!(
            "AUC undefined: {n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area in units of one positive by one negative
    let mut area2: u128 = 0;
    let mut points = vec![(0.0, 0.0)];
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - fp0) as u128 * (tp0 + tp) as u128;
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let auc = area2 as f64 / (2.0 * n_pos as f64 * n_neg as f64);
    Ok((points, auc))
}

/// One-vs-rest ROC for class `class`, scored by its column of `scores`.
pub fn roc_ovr(y_true: &[usize], scores: &Matrix, class: usize) -> Result<RocCurve> {
    if class >= scores.cols() {
        return Err(Error::argument(format!(
            "class {class} outside score matrix with {} columns",
            scores.cols()
        )));
    }
    if y_true.len() != scores.rows() {
        return Err(Error::argument(format!(
            "length mismatch: {} labels, {} score rows",
            y_true.len(),
            scores.rows()
        )));
    }
    let positive: Vec<bool> = y_true.iter().map(|&y| y == class).collect();
    let (points, auc) = roc_binary(&positive, &scores.column(class))?;
    Ok(RocCurve { class, points, auc })
}

/// Every class's curve; classes without positives or negatives give `None`.
pub fn roc_ovr_all(y_true: &[usize], scores: &Matrix) -> Vec<Option<RocCurve>> {
    (0..scores.cols())
        .into_par_iter()
        .map(|c| roc_ovr(y_true, scores, c).ok())
        .collect()
}

pub fn write_roc_csv<W: Write>(
    curves: &[Option<RocCurve>],
    class_names: &[String],
    w: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["class", "fpr", "tpr", "auc"])?;
    for c in curves.iter().flatten() {
        let name = class_names
            .get(c.class)
            .cloned()
            .unwrap_or_else(|| c.class.to_string());
        let auc = c.auc.to_string();
        for (f, t) in &c.points {
            out.write_record([name.as_str(), &f.to_string(), &t.to_string(), &auc])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub const T_TEST_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    /// `±inf` when the differences are constant and nonzero; serialized as a string.
    #[serde(with = "signed_float")]
    pub t_statistic: f64,
    pub p_value: f64,
    pub degrees_of_freedom: usize,
    pub mean_difference: f64,
    pub reject_null: bool,
    pub decision: String,
}

/// Two-sided paired t-test on per-fold scores.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::argument(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::argument("paired t-test needs at least 2 pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    let (t, p) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        }
    } else {
        let t = mean / (var.sqrt() / (n as f64).sqrt());
        (t, student_t_two_tailed(t, df as f64))
    };
    let reject = p < T_TEST_ALPHA;
    let decision = if reject {
        format!("reject the null hypothesis of equal means (p = {p:.3e} < {T_TEST_ALPHA})")
    } else {
        format!("cannot reject the null hypothesis of equal means (p = {p:.3e} >= {T_TEST_ALPHA})")
    };
    Ok(TTestResult {
        t_statistic: t,
        p_value: p,
        degrees_of_freedom: df,
        mean_difference: mean,
        reject_null: reject,
        decision,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    reg_inc_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut s = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

// Continued fraction for the incomplete beta, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Serializes non-finite floats as `"inf"`, `"-inf"` or `"nan"`; finite ones as numbers.
pub mod signed_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_and_mse_small_cases() {
        assert_eq!(accuracy(&[0, 1, 2, 3], &[0, 1, 2, 0]).unwrap(), 0.75);
        assert_eq!(accuracy(&[0, 1], &[1, 0]).unwrap(), 0.0);
        assert_eq!(mse_labels(&[0, 0], &[3, 0]).unwrap(), 4.5);
        assert!(accuracy(&[0], &[0, 1]).is_err());
        assert!(mse_labels(&[], &[]).is_err());
    }

    #[test]
    fn confusion_single_cell_and_range() {
        let cm = confusion_matrix(&[2], &[5], 6).unwrap();
        assert_eq!(cm.counts[2][5], 1);
        assert_eq!(cm.total(), 1);
        assert!(confusion_matrix(&[6], &[0], 6).is_err());
    }

    #[test]
    fn prf_two_class_hand_values() {
        let cm = ConfusionMatrix {
            class_names: vec!["a".into(), "b".into()],
            counts: vec![vec![8, 2], vec![1, 9]],
        };
        let t = precision_recall_f1(&cm);
        let (p, r) = (8.0 / 9.0, 0.8);
        assert!((t.per_class[0].precision - p).abs() < 1e-15);
        assert!((t.per_class[0].recall - r).abs() < 1e-15);
        assert!((t.per_class[0].f1 - 2.0 * p * r / (p + r)).abs() < 1e-15);
        assert_eq!(t.accuracy, 0.85);
        assert!(t.warnings.is_empty());
    }

    #[test]
    fn prf_never_predicted_is_flagged() {
        let cm = confusion_matrix(&[0, 1, 1], &[1, 1, 1], 2).unwrap();
        let t = precision_recall_f1(&cm);
        assert_eq!(t.per_class[0].precision, 0.0);
        assert!(t.per_class[0].undefined);
        assert!(!t.warnings.is_empty());
    }

    #[test]
    fn roc_extremes() {
        let pos = [true, true, false, false];
        assert_eq!(roc_binary(&pos, &[0.9, 0.8, 0.2, 0.1]).unwrap().1, 1.0);
        assert_eq!(roc_binary(&pos, &[0.1, 0.2, 0.8, 0.9]).unwrap().1, 0.0);
        assert_eq!(roc_binary(&pos, &[0.5; 4]).unwrap().1, 0.5);
        assert!(roc_binary(&[true, true], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn t_test_degenerate_rules() {
        let same = paired_t_test(&[0.5, 0.6, 0.7], &[0.5, 0.6, 0.7]).unwrap();
        assert_eq!((same.t_statistic, same.p_value), (0.0, 1.0));
        assert!(!same.reject_null);
        let c = paired_t_test(&[2.0; 4], &[1.0; 4]).unwrap();
        assert_eq!((c.t_statistic, c.p_value), (f64::INFINITY, 0.0));
        let js = serde_json::to_string(&c).unwrap();
        assert!(js.contains("\"t_statistic\":\"inf\""));
        let back: TTestResult = serde_json::from_str(&js).unwrap();
        assert_eq!(back.t_statistic, f64::INFINITY);
    }

    #[test]
    fn student_t_known_values() {
        // df = 1 is Cauchy: P(|T| > 1) = 1/2
        assert!((student_t_two_tailed(1.0, 1.0) - 0.5).abs() < 1e-14);
        // df = 2 has closed form 1 - t / sqrt(2 + t^2)
        for t in [0.3, 1.7, 4.0, 25.0] {
            let exact = 1.0 - t / (2.0f64 + t * t).sqrt();
            assert!(
                (student_t_two_tailed(t, 2.0) - exact).abs() < 1e-13,
                "t={t}"
            );
        }
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }
}
