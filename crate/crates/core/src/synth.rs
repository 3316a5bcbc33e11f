//! Seeded generator for observation and census tables that follow the
//! real schema, so the whole workflow runs without the private data.
//!
//! Missing cells and dominant categories are assigned by exact counts
//! (`round(rows * rate)` rows, then shuffled), so reported fractions match
//! the requested rates to within half a row.

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ObservationRecord, ObservationTable, PopulationRecord, PopulationTable, FIRST_YEAR, LAST_YEAR};

/// Fraction of rows with a missing cell per field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingRates {
    pub sensor_reading: f64,
    pub comment_1: f64,
    pub comment_2: f64,
    pub constellation: f64,
    pub limiting_magnitude: f64,
}

/// Share of the dominant category among present cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryShares {
    pub gan: f64,
    pub clear: f64,
    pub orion: f64,
    pub evening: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub rows: usize,
    pub seed: u64,
    pub missing: MissingRates,
    pub shares: CategoryShares,
    /// Fraction of labelled rows whose class is replaced by another class.
    pub label_noise: f64,
    /// Standard deviation of the location blobs, in degrees.
    pub blob_std: f64,
}

/// Rates reported for the competition data.
pub const PAPER_MISSING: MissingRates = MissingRates {
    sensor_reading: 0.828,
    comment_1: 0.429,
    comment_2: 0.480,
    constellation: 0.121,
    limiting_magnitude: 0.080,
};

pub const PAPER_SHARES: CategoryShares = CategoryShares {
    gan: 0.801,
    clear: 0.594,
    orion: 0.410,
    evening: 0.827,
};

impl SynthParams {
    /// Missingness and category shares of the competition data.
    pub fn paper(rows: usize, seed: u64) -> Self {
        SynthParams {
            rows,
            seed,
            missing: PAPER_MISSING,
            shares: PAPER_SHARES,
            label_noise: 0.02,
            blob_std: 2.0,
        }
    }

    /// Four well separated location blobs, one class each; every row is
    /// labelled.
    pub fn separable(rows: usize, seed: u64) -> Self {
        SynthParams {
            missing: MissingRates {
                limiting_magnitude: 0.0,
                ..PAPER_MISSING
            },
            ..SynthParams::paper(rows, seed)
        }
    }
}

struct Blob {
    country: &'static str,
    lat: f64,
    lon: f64,
    tz: f64,
    elevation: f64,
    class: u8,
    sky: f64,
    words: [&'static str; 3],
}

const BLOBS: [Blob; 4] = [
    Blob {
        country: "United States",
        lat: 40.0,
        lon: -100.0,
        tz: -6.0,
        elevation: 400.0,
        class: 2,
        sky: 17.5,
        words: ["streetlights", "glare", "downtown"],
    },
    Blob {
        country: "Germany",
        lat: 51.0,
        lon: 10.0,
        tz: 1.0,
        elevation: 250.0,
        class: 3,
        sky: 18.6,
        words: ["suburban", "haze", "skyglow"],
    },
    Blob {
        country: "Chile",
        lat: -30.0,
        lon: -70.0,
        tz: -4.0,
        elevation: 1800.0,
        class: 5,
        sky: 20.4,
        words: ["rural", "milky", "steady"],
    },
    Blob {
        country: "Australia",
        lat: -25.0,
        lon: 135.0,
        tz: 9.5,
        elevation: 300.0,
        class: 6,
        sky: 21.3,
        words: ["outback", "pristine", "zodiacal"],
    },
];

const COMMON_WORDS: [&str; 8] = ["clear", "night", "observed", "stars", "moon", "cold", "wind", "sky"];
const OTHER_TYPES: [&str; 4] = ["DSM", "SQM", "LON", "BB"];
const OTHER_CLOUDS: [&str; 3] = ["1/4 of sky", "1/2 of sky", "over 1/2 of sky"];
const OTHER_CONSTELLATIONS: [&str; 6] = ["Leo", "Crux", "Cygnus", "Scorpius", "Perseus", "Bootes"];

/// `round(n * rate)` entries set, in random positions.
fn exact_mask(n: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let k = ((n as f64) * rate).round() as usize;
    let mut m: Vec<bool> = (0..n).map(|i| i < k.min(n)).collect();
    m.shuffle(rng);
    m
}

/// For each row, `Some(dominant)` on exactly `round(n * share)` rows and a
/// uniformly drawn other category elsewhere.
fn exact_categories(n: usize, share: f64, dominant: &str, others: &[&str], rng: &mut ChaCha8Rng) -> Vec<String> {
    exact_mask(n, share, rng)
        .into_iter()
        .map(|top| {
            if top {
                dominant.to_string()
            } else {
                others.choose(rng).expect("non-empty").to_string()
            }
        })
        .collect()
}

fn comment(blob: &Blob, rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..6);
    let mut words: Vec<&str> = (0..n).map(|_| *COMMON_WORDS.choose(rng).expect("non-empty")).collect();
    let signal = rng.gen_range(1..3);
    for _ in 0..signal {
        let w = *blob.words.choose(rng).expect("non-empty");
        let at = rng.gen_range(0..=words.len());
        words.insert(at, w);
    }
    words.join(" ")
}

fn local_time(evening: bool, rng: &mut ChaCha8Rng) -> chrono::NaiveDateTime {
    let first = NaiveDate::from_ymd_opt(FIRST_YEAR, 1, 1).expect("valid date");
    let last = NaiveDate::from_ymd_opt(LAST_YEAR, 12, 31).expect("valid date");
    let day = first + Duration::days(rng.gen_range(0..=(last - first).num_days()));
    let hour = if evening {
        rng.gen_range(17..22)
    } else {
        // morning, afternoon or night
        match rng.gen_range(0..3) {
            0 => rng.gen_range(5..12),
            1 => rng.gen_range(12..17),
            _ => [22, 23, 0, 1, 2, 3, 4][rng.gen_range(0..7)],
        }
    };
    day.and_hms_opt(hour, rng.gen_range(0..60), rng.gen_range(0..60))
        .expect("valid time")
}

/// Observation table per `params`. The limiting magnitude is driven by the
/// location blob (one class per blob) with label noise on top.
pub fn generate_observations(params: &SynthParams) -> ObservationTable {
    let n = params.rows;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let m = &params.missing;
    let no_sensor = exact_mask(n, m.sensor_reading, &mut rng);
    let no_c1 = exact_mask(n, m.comment_1, &mut rng);
    let no_c2 = exact_mask(n, m.comment_2, &mut rng);
    let no_const = exact_mask(n, m.constellation, &mut rng);
    let no_target = exact_mask(n, m.limiting_magnitude, &mut rng);
    let noisy = exact_mask(n, params.label_noise, &mut rng);
    let s = &params.shares;
    let types = exact_categories(n, s.gan, "GAN", &OTHER_TYPES, &mut rng);
    let clouds = exact_categories(n, s.clear, "clear", &OTHER_CLOUDS, &mut rng);
    let present_const = no_const.iter().filter(|&&x| !x).count();
    let mut consts = exact_categories(present_const, s.orion, "Orion", &OTHER_CONSTELLATIONS, &mut rng).into_iter();
    let evening = exact_mask(n, s.evening, &mut rng);
    let jitter = Normal::new(0.0, params.blob_std.max(1e-9)).expect("positive std");
    let reading_noise = Normal::new(0.0, 0.25).expect("positive std");

    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let b = &BLOBS[i % BLOBS.len()];
        let mut class = b.class;
        if noisy[i] {
            let others: Vec<u8> = BLOBS.iter().map(|o| o.class).filter(|&c| c != b.class).collect();
            class = *others.choose(&mut rng).expect("other classes");
        }
        let lm = f64::from(class) + rng.gen_range(-0.45..0.45);
        let lat = (b.lat + jitter.sample(&mut rng)).clamp(-90.0, 90.0);
        let lon = (b.lon + jitter.sample(&mut rng)).clamp(-180.0, 180.0);
        let constellation = if no_const[i] { None } else { consts.next() };
        records.push(ObservationRecord {
            id: format!("obs{i:06}"),
            time: Some(local_time(evening[i], &mut rng)),
            time_zone: Some(b.tz),
            country: Some(b.country.to_string()),
            latitude: Some((lat * 1e4).round() / 1e4),
            longitude: Some((lon * 1e4).round() / 1e4),
            elevation_m: Some((b.elevation + 50.0 * jitter.sample(&mut rng)).max(0.0).round()),
            sensor_type: Some(types[i].clone()),
            sensor_reading: (!no_sensor[i]).then(|| ((b.sky + reading_noise.sample(&mut rng)) * 100.0).round() / 100.0),
            clouds: Some(clouds[i].clone()),
            constellation,
            comment_1: (!no_c1[i]).then(|| comment(b, &mut rng)),
            comment_2: (!no_c2[i]).then(|| comment(b, &mut rng)),
            limiting_magnitude: (!no_target[i]).then_some((lm * 100.0).round() / 100.0),
        });
    }
    ObservationTable::new(records).expect("generated ids are unique")
}

/// Census table for every generated country and year, with steady growth.
pub fn generate_population(seed: u64) -> PopulationTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let bases = [
        ("United States", 300e6),
        ("Germany", 82e6),
        ("Chile", 16e6),
        ("Australia", 21e6),
        ("Japan", 127e6),
    ];
    let mut records = Vec::new();
    for (country, base) in bases {
        let growth = rng.gen_range(-0.002..0.012);
        for year in FIRST_YEAR..=LAST_YEAR {
            let p = base * (1.0f64 + growth).powi(year - FIRST_YEAR);
            records.push(PopulationRecord {
                country: country.to_string(),
                year,
                population: p.round() as u64,
            });
        }
    }
    PopulationTable::new(records).expect("unique pairs")
}
