use proptest::prelude::*;
use skyglow::dataset::{ObservationRecord, ObservationTable};
use skyglow::features::{FeatureConfig, NUMERIC_COLUMNS};
use skyglow::learners::{GbdtParams, LearnerSpec};
use skyglow::synth::{generate_observations, SynthParams};
use skyglow::validation::*;

fn accuracy_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

fn labels_and_k() -> impl Strategy<Value = (Vec<usize>, usize, u64)> {
    (
        (1usize..8).prop_flat_map(|c| proptest::collection::vec(0..c, 1..300)),
        2usize..11,
        any::<u64>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stratified_folds_partition_and_balance((labels, k, seed) in labels_and_k()) {
        let a = stratified_folds(&labels, k, seed).unwrap();
        prop_assert_eq!(a.folds.len(), labels.len());
        let mut seen = vec![0usize; labels.len()];
        for f in 0..k {
            for r in a.rows_in(f) {
                seen[r] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let classes = labels.iter().max().unwrap() + 1;
        for c in 0..classes {
            let per: Vec<usize> = (0..k)
                .map(|f| a.rows_in(f).iter().filter(|&&r| labels[r] == c).count())
                .collect();
            let (lo, hi) = (per.iter().min().unwrap(), per.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {} counts {:?}", c, per);
        }
    }

    #[test]
    fn random_folds_partition(n in 1usize..300, k in 2usize..11, seed in any::<u64>()) {
        let a = random_folds(n, k, seed).unwrap();
        prop_assert!(a.folds.iter().all(|&f| f < k));
        let sizes: Vec<usize> = (0..k).map(|f| a.rows_in(f).len()).collect();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn micro_scores_equal_accuracy(
        pairs in proptest::collection::vec((0usize..8, 0usize..8), 1..400),
    ) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let m = classification_metrics(&pred, &truth, 8).unwrap();
        let acc = accuracy_oracle(&pred, &truth);
        for v in [m.micro_precision, m.micro_recall, m.micro_f1, m.accuracy] {
            prop_assert!((v - acc).abs() <= 1e-12);
        }
        let total: usize = m.confusion.iter().flatten().sum();
        prop_assert_eq!(total, truth.len());
    }

    #[test]
    fn pearson_is_symmetric_affine_invariant_and_bounded(
        pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..60),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let x: Vec<Option<f64>> = pairs.iter().map(|p| Some(p.0)).collect();
        let y: Vec<Option<f64>> = pairs.iter().map(|p| Some(p.1)).collect();
        let Ok(r) = pearson(&x, &y) else { return Ok(()); };
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert_eq!(pearson(&y, &x).unwrap(), r);
        let xs: Vec<Option<f64>> = x.iter().map(|v| v.map(|v| v * scale + shift)).collect();
        prop_assert!((pearson(&xs, &y).unwrap() - r).abs() < 1e-9);
        let yn: Vec<Option<f64>> = y.iter().map(|v| v.map(|v| -v)).collect();
        prop_assert!((pearson(&x, &yn).unwrap() + r).abs() < 1e-12);
    }
}

#[test]
fn hand_counted_f1() {
    let m = classification_metrics(&[0, 1, 0], &[0, 1, 1], 2).unwrap();
    let (p, r) = (m.micro_precision, m.micro_recall);
    assert!((m.micro_f1 - 2.0 / 3.0).abs() < 1e-12);
    assert!((m.micro_f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
    assert_eq!(m.confusion, vec![vec![1, 0], vec![1, 1]]);
}

fn small_setup(rows: usize) -> (ObservationTable, FeatureConfig, LearnerSpec) {
    let table = generate_observations(&SynthParams::separable(rows, 11));
    let config = FeatureConfig {
        numeric: NUMERIC_COLUMNS.iter().filter(|c| **c != "population").map(|s| s.to_string()).collect(),
        knn_k: 5,
        svd_rank: 2,
        ..FeatureConfig::default()
    };
    let spec = LearnerSpec::Gbdt(GbdtParams {
        rounds: 10,
        learning_rate: 0.3,
        max_leaves: 8,
        min_samples_leaf: 3,
        ..GbdtParams::default()
    });
    (table, config, spec)
}

fn with_records(table: &ObservationTable, edit: impl Fn(usize, &mut ObservationRecord)) -> ObservationTable {
    let mut records = table.records().to_vec();
    for (i, r) in records.iter_mut().enumerate() {
        edit(i, r);
    }
    ObservationTable::new(records).unwrap()
}

#[test]
fn cv_covers_every_row_and_is_deterministic() {
    let (table, config, spec) = small_setup(100);
    let options = CvOptions { k: 5, seed: 3, ..CvOptions::default() };
    let a = run_cv_with(&table, &config, &spec, "m", &options).unwrap();
    let b = run_cv_with(&table, &config, &spec, "m", &options).unwrap();
    assert_eq!(a.oof, b.oof);
    assert_eq!(a.oof.row_ids.len(), 100);
    for i in 0..100 {
        assert!((a.oof.probs.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    assert_eq!(a.metrics.per_fold_f1.len(), 5);
    let mut buf = Vec::new();
    write_oof_csv(&a.oof, &mut buf).unwrap();
    assert_eq!(read_oof_csv(buf.as_slice()).unwrap(), a.oof);
}

#[test]
fn held_out_features_do_not_leak_into_fold_mates() {
    let (table, config, spec) = small_setup(120);
    let options = CvOptions { k: 4, seed: 1, ..CvOptions::default() };
    let base = run_cv_with(&table, &config, &spec, "m", &options).unwrap();
    let folds = base.folds.clone();
    let victim = 7;
    let fold = folds.folds[victim];
    let perturbed = with_records(&table, |i, r| {
        if i == victim {
            r.latitude = r.latitude.map(|v| -v);
            r.longitude = r.longitude.map(|v| v + 90.0);
            r.comment_1 = Some("wildly different words here".into());
            r.sensor_reading = Some(99.0);
        }
    });
    let again = run_cv_with_folds(&perturbed, &config, &spec, "m", &folds, false).unwrap();
    for i in folds.rows_in(fold).into_iter().filter(|&i| i != victim) {
        assert_eq!(base.oof.probs.row(i), again.oof.probs.row(i), "row {i}");
    }
}

#[test]
fn fold_targets_do_not_reach_their_own_predictions() {
    let (table, config, spec) = small_setup(120);
    let options = CvOptions { k: 4, seed: 2, ..CvOptions::default() };
    let base = run_cv_with(&table, &config, &spec, "m", &options).unwrap();
    let folds = base.folds.clone();
    for fold in 0..folds.k {
        let members = folds.rows_in(fold);
        let perturbed = with_records(&table, |i, r| {
            if members.contains(&i) {
                r.limiting_magnitude = r.limiting_magnitude.map(|v| 7.0 - v);
            }
        });
        let again = run_cv_with_folds(&perturbed, &config, &spec, "m", &folds, false).unwrap();
        for &i in &members {
            assert_eq!(base.oof.probs.row(i), again.oof.probs.row(i), "fold {fold} row {i}");
        }
    }
}

#[test]
fn cv_rejects_bad_options() {
    let (table, config, spec) = small_setup(20);
    let bad = CvOptions { k: 1, ..CvOptions::default() };
    assert!(run_cv_with(&table, &config, &spec, "m", &bad).is_err());
    let unlabelled = with_records(&table, |_, r| r.limiting_magnitude = None);
    assert!(run_cv(&unlabelled, &config, &spec, 2, 0).is_err());
}
