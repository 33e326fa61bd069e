use proptest::prelude::*;

use crime_lab::ensembles::{combine, VoteMode};
use crime_lab::matrix::{argmax, Matrix};
use crime_lab::metrics::{confusion_matrix, paired_t_test, precision_recall_f1, roc_binary};
use crime_lab::preprocess::{
    apply_minmax, fit_minmax, stratified_holdout_split, stratified_kfold_plan,
};
use crime_lab::resample::{random_oversample, smote, tomek_links};
use crime_lab::table::class_counts;

fn labels(max_classes: usize) -> impl Strategy<Value = (usize, Vec<usize>)> {
    (2..=max_classes).prop_flat_map(|k| (Just(k), prop::collection::vec(0..k, 10..300)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn minmax_maps_training_columns_onto_unit_interval(
        rows in prop::collection::vec(prop::collection::vec(-1e9f64..1e9, 3), 1..60)
    ) {
        let m = Matrix::from_rows(&rows).unwrap();
        let scaled = apply_minmax(&m, &fit_minmax(&m).unwrap()).unwrap();
        for j in 0..3 {
            let col = scaled.column(j);
            let raw = m.column(j);
            if raw.iter().all(|&v| v == raw[0]) {
                prop_assert!(col.iter().all(|&v| v == 0.0));
            } else {
                prop_assert!(col.iter().all(|v| (0.0..=1.0).contains(v)));
                prop_assert!(col.contains(&0.0) && col.contains(&1.0));
            }
        }
    }

    #[test]
    fn folds_partition_rows_and_stay_proportional((k, y) in labels(15), seed in any::<u64>()) {
        let folds = 5.min(y.len());
        let plan = stratified_kfold_plan(&y, k, folds, seed).unwrap();
        let counts = class_counts(&y, k);
        let mut seen = vec![0; y.len()];
        for f in 0..folds {
            let test = plan.test_indices(f);
            for &i in &test {
                seen[i] += 1;
            }
            let t: Vec<usize> = test.iter().map(|&i| y[i]).collect();
            for (c, n) in class_counts(&t, k).into_iter().enumerate() {
                prop_assert!((n as f64 - counts[c] as f64 / folds as f64).abs() <= 1.0);
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn holdout_is_disjoint_and_proportional((k, y) in labels(10), f in 0.1f64..0.9, seed in any::<u64>()) {
        let split = stratified_holdout_split(&y, k, f, seed).unwrap();
        prop_assert_eq!(split.train_indices.len() + split.test_indices.len(), y.len());
        let mut all: Vec<usize> = split.train_indices.iter().chain(&split.test_indices).copied().collect();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), y.len());
        let t: Vec<usize> = split.test_indices.iter().map(|&i| y[i]).collect();
        for (c, (n, total)) in class_counts(&t, k).into_iter().zip(class_counts(&y, k)).enumerate() {
            prop_assert!((n as f64 - total as f64 * f).abs() <= 1.0, "class {} got {} of {}", c, n, total);
        }
    }

    #[test]
    fn auc_is_antisymmetric(
        pairs in prop::collection::vec((any::<bool>(), 0u8..10), 2..200)
    ) {
        let mut pos: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        pos[0] = true;
        pos[1] = false;
        let s: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let (_, a) = roc_binary(&pos, &s).unwrap();
        let (_, b) = roc_binary(&pos, &neg).unwrap();
        prop_assert!((a + b - 1.0).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn t_statistic_flips_sign_when_swapped(
        pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..30)
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        prop_assert!((ab.t_statistic + ba.t_statistic).abs() <= 1e-9 * ab.t_statistic.abs().max(1.0));
        prop_assert!((ab.p_value - ba.p_value).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn confusion_matrix_margins_match_labels((k, y) in labels(6), seed in any::<u64>()) {
        let pred: Vec<usize> = y.iter().enumerate().map(|(i, &c)| if (i as u64 ^ seed).is_multiple_of(3) { (c + 1) % k } else { c }).collect();
        let cm = confusion_matrix(&y, &pred, k).unwrap();
        prop_assert_eq!(cm.row_sums(), class_counts(&y, k).iter().map(|&c| c as u64).collect::<Vec<_>>());
        prop_assert_eq!(cm.col_sums(), class_counts(&pred, k).iter().map(|&c| c as u64).collect::<Vec<_>>());
        let prf = precision_recall_f1(&cm);
        for c in &prf.per_class {
            prop_assert!((0.0..=1.0).contains(&c.f1));
        }
    }

    #[test]
    fn soft_vote_ignores_weight_scale(
        members in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 3),
        scale in 1e-3f64..1e3
    ) {
        let a = combine(&members, &[1.0, 2.0, 2.0], VoteMode::Soft, 3);
        let b = combine(&members, &[scale, 2.0 * scale, 2.0 * scale], VoteMode::Soft, 3);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        prop_assert_eq!(argmax(&a), argmax(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn samplers_balance_and_keep_widths(
        counts in prop::collection::vec(2usize..40, 2..5),
        seed in any::<u64>()
    ) {
        let y: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| vec![c; n]).collect();
        let k = counts.len();
        let rows: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 5) as f64 + y[i] as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let max = *counts.iter().max().unwrap();
        let over = random_oversample(&x, &y, k, seed).unwrap();
        prop_assert_eq!(class_counts(&over.y, k), vec![max; k]);
        let sm = smote(&x, &y, k, 5, seed).unwrap();
        prop_assert_eq!(class_counts(&sm.y, k), vec![max; k]);
        prop_assert_eq!(sm.x.cols(), 2);
        let tl = tomek_links(&x, &y, k).unwrap();
        prop_assert!(tl.y.len() <= y.len());
        prop_assert_eq!(sm.origin.len(), sm.y.len());
    }
}

proptest! {
    #[test]
    fn auc_ignores_monotone_transforms(
        pairs in prop::collection::vec((any::<bool>(), -50i32..50), 2..150)
    ) {
        let mut pos: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        pos[0] = true;
        pos[1] = false;
        let s: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let warped: Vec<f64> = s.iter().map(|v| (v / 10.0).exp() * 3.0 + 1.0).collect();
        prop_assert_eq!(roc_binary(&pos, &s).unwrap().1, roc_binary(&pos, &warped).unwrap().1);
    }

    #[test]
    fn micro_recall_equals_accuracy((k, y) in labels(8), shift in 0usize..8) {
        let pred: Vec<usize> = y.iter().enumerate().map(|(i, &c)| if i % 4 == 0 { (c + shift) % k } else { c }).collect();
        let cm = confusion_matrix(&y, &pred, k).unwrap();
        let prf = precision_recall_f1(&cm);
        let micro: f64 = prf.per_class.iter().map(|c| c.recall * c.support as f64).sum::<f64>() / y.len() as f64;
        prop_assert!((micro - prf.accuracy).abs() < 1e-12);
        prop_assert_eq!(cm.accuracy(), crime_lab::metrics::accuracy(&y, &pred).unwrap());
    }
}
