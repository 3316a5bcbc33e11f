mod common;

use chrono::{NaiveDate, NaiveDateTime};
use common::{obs, table};
use proptest::prelude::*;
use skyglow::dataset::{join_population, ObservationRecord, PopulationRecord, PopulationTable};
use skyglow::features::*;

/// Linear-interpolation quantile of a sorted sample.
fn quantile_oracle(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn latitude_table(values: &[Option<f64>]) -> skyglow::dataset::ObservationTable {
    table(
        values
            .iter()
            .enumerate()
            .map(|(i, v)| ObservationRecord {
                id: format!("r{i}"),
                latitude: *v,
                ..Default::default()
            })
            .collect(),
    )
}

fn latitude_only(lo: f64, hi: f64) -> FeatureConfig {
    FeatureConfig {
        quantile_low: lo,
        quantile_high: hi,
        numeric: vec!["latitude".into()],
        categorical: vec![],
        ..FeatureConfig::basic()
    }
}

/// Days since 1970-01-01 of a civil date (proleptic Gregorian).
fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn clip_bounds_match_quantile_oracle(
        values in proptest::collection::vec(-90.0f64..90.0, 1..60),
        lo in 0.0f64..0.5,
        hi in 0.5f64..=1.0,
    ) {
        let col: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
        let m = fit_feature_pipeline(&latitude_table(&col), &latitude_only(lo, hi)).unwrap();
        let c = m.numeric_column("latitude").unwrap();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert!((c.clip_low - quantile_oracle(&sorted, lo)).abs() <= 1e-12 * (1.0 + c.clip_low.abs()));
        prop_assert!((c.clip_high - quantile_oracle(&sorted, hi)).abs() <= 1e-12 * (1.0 + c.clip_high.abs()));
    }

    #[test]
    fn transformed_training_column_is_standardised(
        values in proptest::collection::vec(-90.0f64..90.0, 2..60),
    ) {
        let col: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
        let t = latitude_table(&col);
        let m = fit_feature_pipeline(&t, &latitude_only(0.01, 0.99)).unwrap();
        let x = apply_feature_pipeline(&m, &t).unwrap().column(0);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if m.numeric[0].constant {
            prop_assert!(x.iter().all(|&v| v == 0.0));
        } else {
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn transform_is_finite_with_missing_and_unseen(
        values in proptest::collection::vec(proptest::option::of(-90.0f64..90.0), 1..40),
        probe in proptest::option::of(-1e6f64..1e6),
    ) {
        prop_assume!(values.iter().any(Option::is_some));
        let m = fit_feature_pipeline(&latitude_table(&values), &latitude_only(0.01, 0.99)).unwrap();
        let c = &m.numeric[0];
        let v = c.transform(probe);
        prop_assert!(v.is_finite());
        if !c.constant {
            let lo = (c.clip_low - c.mean) / c.std;
            let hi = (c.clip_high - c.mean) / c.std;
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn target_binning_rounds_half_up_and_clamps(x in -5.0f64..15.0) {
        let c = bin_target(Some(x)).unwrap().id() as f64;
        let expected = (x + 0.5).floor().clamp(0.0, 7.0);
        prop_assert_eq!(c, expected);
        prop_assert!(bin_target(Some(x + 0.25)).unwrap().id() >= bin_target(Some(x)).unwrap().id());
    }

    #[test]
    fn time_parts_match_civil_oracle(
        days in 0i64..20_000,
        secs in 0u32..86_400,
        tz in -12i32..=14,
    ) {
        let t: NaiveDateTime = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
            + chrono::Duration::days(days)
            + chrono::Duration::seconds(i64::from(secs));
        let f = decompose_time(&t, Some(f64::from(tz)));
        let (y, m, d) = {
            use chrono::Datelike;
            (t.year() as i64, t.month() as i64, t.day() as i64)
        };
        let ordinal = days_from_civil(y, m, d) - days_from_civil(y, 1, 1) + 1;
        prop_assert_eq!(i64::from(f.day_of_year), ordinal);
        prop_assert_eq!(f.seconds_of_day, secs);
        let expected_epoch = (days_from_civil(y, m, d) * 86_400 + i64::from(secs) - i64::from(tz) * 3600) as f64;
        prop_assert_eq!(f.epoch_seconds, expected_epoch);
        let hour = secs / 3600;
        let expected = if (5..12).contains(&hour) {
            TimeOfDay::Morning
        } else if (12..17).contains(&hour) {
            TimeOfDay::Afternoon
        } else if (17..22).contains(&hour) {
            TimeOfDay::Evening
        } else {
            TimeOfDay::Night
        };
        prop_assert_eq!(f.time_of_day, expected);
    }
}

/// Brute-force k nearest eligible rows: full scan, squared distance summed in
/// coordinate order, ties to the smaller row.
fn brute_force(points: &[Option<Vec<f64>>], q: &[f64], k: usize, eligible: impl Fn(usize) -> bool) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .filter(|(r, p)| p.is_some() && eligible(*r))
        .map(|(r, p)| {
            let d = p.as_ref().unwrap().iter().zip(q).fold(0.0, |s, (a, b)| s + (a - b) * (a - b));
            (r, d)
        })
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn knn_instance() -> impl Strategy<Value = (Vec<Option<Vec<f64>>>, Vec<usize>, usize)> {
    (2usize..200, 1usize..12, 2usize..6).prop_flat_map(|(n, k, folds)| {
        (
            proptest::collection::vec(
                proptest::option::weighted(0.95, proptest::collection::vec((-20i32..20).prop_map(|v| f64::from(v) / 4.0), 4)),
                n,
            ),
            proptest::collection::vec(0..folds, n),
            Just(k),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kd_tree_matches_brute_force((points, folds, k) in knn_instance()) {
        prop_assume!(points.iter().filter(|p| p.is_some()).count() >= 2);
        let index = NeighborIndex::new(4, points.clone(), Some(folds.clone())).unwrap();
        for row in 0..points.len() {
            let Some(q) = &points[row] else { continue };
            let got = index.query(q, k, |r| r != row && folds[r] != folds[row]);
            let want = brute_force(&points, q, k, |r| r != row && folds[r] != folds[row]);
            prop_assert_eq!(got, want);
        }
        let probe = [0.1, -0.3, 0.7, 0.0];
        prop_assert_eq!(index.query(&probe, k, |_| true), brute_force(&points, &probe, k, |_| true));
    }

    #[test]
    fn out_of_fold_means_ignore_own_fold_targets(
        (points, folds, k) in knn_instance(),
        values in proptest::collection::vec(proptest::option::of(0.0f64..8.0), 200),
        noise in proptest::collection::vec(-3.0f64..3.0, 200),
    ) {
        prop_assume!(points.iter().filter(|p| p.is_some()).count() >= 2);
        let n = points.len();
        let values = &values[..n];
        let index = NeighborIndex::new(4, points, Some(folds.clone())).unwrap();
        let base = neighbor_mean_features(&index, values, k, NeighborMode::OutOfFold).unwrap();
        let fold = folds[0];
        let perturbed: Vec<Option<f64>> = (0..n)
            .map(|r| if folds[r] == fold { values[r].map(|v| v + noise[r]).or(Some(noise[r])) } else { values[r] })
            .collect();
        let again = neighbor_mean_features(&index, &perturbed, k, NeighborMode::OutOfFold).unwrap();
        for r in (0..n).filter(|&r| folds[r] == fold) {
            prop_assert_eq!(base.mean[r].to_bits(), again.mean[r].to_bits());
            prop_assert_eq!(base.count[r], again.count[r]);
        }
    }
}

#[test]
fn unseen_category_and_country_fall_back() {
    let train = table(vec![
        obs("a", 10.0, 10.0, "2010-01-01 20:00:00", Some(3.0)),
        obs("b", 11.0, 10.0, "2010-01-02 20:00:00", Some(4.0)),
    ]);
    let pop = PopulationTable::new(vec![PopulationRecord {
        country: "Nowhere".into(),
        year: 2010,
        population: 1000,
    }])
    .unwrap();
    let train = join_population(&train, &pop);
    let mut probe = obs("z", 12.0, 10.0, "2010-03-01 20:00:00", None);
    probe.country = Some("Elsewhere".into());
    probe.sensor_type = Some("XYZ".into());
    let probe = join_population(&table(vec![probe]), &pop);
    let config = FeatureConfig {
        knn: false,
        text: false,
        ..FeatureConfig::default()
    };
    let (fitted, _) = fit_features(&train, None, &config).unwrap();
    let x = fitted.transform(&probe).unwrap();
    assert_eq!(x.column_by_name("country").unwrap(), [0.0]);
    assert_eq!(x.column_by_name("type").unwrap(), [0.0]);
    assert!(x.data().iter().all(|v| v.is_finite()));
}

#[test]
fn fitted_features_round_trip_through_json() {
    let records: Vec<ObservationRecord> = (0..30)
        .map(|i| {
            let mut r = obs(&format!("r{i}"), f64::from(i), 5.0, "2012-06-01 21:00:00", Some(f64::from(i % 4)));
            r.comment_1 = Some(["dark sky", "bright moon", "street lights"][i as usize % 3].into());
            r
        })
        .collect();
    let t = table(records);
    let folds: Vec<usize> = (0..30).map(|i| i % 3).collect();
    let config = FeatureConfig {
        numeric: NUMERIC_COLUMNS.iter().filter(|c| **c != "population").map(|s| s.to_string()).collect(),
        svd_rank: 2,
        knn_k: 3,
        ..FeatureConfig::default()
    };
    let (fitted, x) = fit_features(&t, Some(&folds), &config).unwrap();
    let json = serde_json::to_string(&fitted).unwrap();
    let back: FittedFeatures = serde_json::from_str(&json).unwrap();
    assert_eq!(back, fitted);
    assert_eq!(back.transform(&t).unwrap().names(), x.names());
    assert!(x.names().iter().any(|n| n == "comment_1_svd_1"));
    assert!(x.names().iter().any(|n| n == "knn_target_mean"));
}
