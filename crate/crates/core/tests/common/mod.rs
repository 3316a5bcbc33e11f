#![allow(dead_code)]

use chrono::NaiveDateTime;
use skyglow::dataset::{parse_timestamp, ObservationRecord, ObservationTable};

pub fn ts(s: &str) -> Option<NaiveDateTime> {
    parse_timestamp(s)
}

/// Labelled record at a location and time.
pub fn obs(id: &str, lat: f64, lon: f64, time: &str, lm: Option<f64>) -> ObservationRecord {
    ObservationRecord {
        id: id.to_string(),
        time: ts(time),
        time_zone: Some(0.0),
        country: Some("Nowhere".into()),
        latitude: Some(lat),
        longitude: Some(lon),
        elevation_m: Some(100.0),
        sensor_type: Some("GAN".into()),
        clouds: Some("clear".into()),
        limiting_magnitude: lm,
        ..Default::default()
    }
}

pub fn table(records: Vec<ObservationRecord>) -> ObservationTable {
    ObservationTable::new(records).expect("unique ids")
}
