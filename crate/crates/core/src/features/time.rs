use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::dataset::parse_timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimeOfDay {
    Morning,
    Afternoon,
    Evening,
    Night,
}

impl TimeOfDay {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeOfDay::Morning => "morning",
            TimeOfDay::Afternoon => "afternoon",
            TimeOfDay::Evening => "evening",
            TimeOfDay::Night => "night",
        }
    }

    fn from_seconds(s: u32) -> Self {
        match s / 3600 {
            5..=11 => TimeOfDay::Morning,
            12..=16 => TimeOfDay::Afternoon,
            17..=21 => TimeOfDay::Evening,
            _ => TimeOfDay::Night,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFeatures {
    pub year: i32,
    pub month: u32,
    pub day_of_year: u32,
    pub seconds_of_day: u32,
    pub time_of_day: TimeOfDay,
    /// Seconds since 1970-01-01 UTC, using the UTC offset when known.
    pub epoch_seconds: f64,
}

/// Seconds since the Unix epoch of a local timestamp with an optional UTC
/// offset in hours (missing offset treated as UTC).
pub fn epoch_seconds(local: &NaiveDateTime, tz_offset_hours: Option<f64>) -> f64 {
    let local_secs = local.and_utc().timestamp() as f64
        + f64::from(local.and_utc().timestamp_subsec_nanos()) * 1e-9;
    local_secs - tz_offset_hours.unwrap_or(0.0) * 3600.0
}

/// Calendar and time-of-day parts of a local timestamp.
pub fn decompose_time(local: &NaiveDateTime, tz_offset_hours: Option<f64>) -> TimeFeatures {
    let seconds_of_day = local.num_seconds_from_midnight();
    TimeFeatures {
        year: local.year(),
        month: local.month(),
        day_of_year: local.ordinal(),
        seconds_of_day,
        time_of_day: TimeOfDay::from_seconds(seconds_of_day),
        epoch_seconds: epoch_seconds(local, tz_offset_hours),
    }
}

pub fn decompose_time_str(raw: &str, tz_offset_hours: Option<f64>) -> Result<TimeFeatures, FeatureError> {
    parse_timestamp(raw)
        .map(|t| decompose_time(&t, tz_offset_hours))
        .ok_or_else(|| FeatureError::Time(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Day-of-year by summing month lengths, independent of chrono.
    fn ordinal_oracle(year: i32, month: u32, day: u32) -> u32 {
        let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        let lengths = [31, if leap { 29 } else { 28 }, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
        lengths[..(month - 1) as usize].iter().sum::<u32>() + day
    }

    #[test]
    fn evening_example() {
        let f = decompose_time_str("2015-03-21 21:30:00", None).unwrap();
        assert_eq!(f.year, 2015);
        assert_eq!(f.month, 3);
        assert_eq!(f.seconds_of_day, 77_400);
        assert_eq!(f.time_of_day, TimeOfDay::Evening);
        assert_eq!(f.day_of_year, ordinal_oracle(2015, 3, 21));
        assert_eq!(f.day_of_year, 80);
    }

    #[test]
    fn midnight_is_night() {
        let f = decompose_time_str("2015-01-01 00:00:00", None).unwrap();
        assert_eq!(f.seconds_of_day, 0);
        assert_eq!(f.time_of_day, TimeOfDay::Night);
    }

    #[test]
    fn category_boundaries() {
        let cat = |s: &str| decompose_time_str(s, None).unwrap().time_of_day;
        assert_eq!(cat("2015-01-01 04:59:59"), TimeOfDay::Night);
        assert_eq!(cat("2015-01-01 05:00:00"), TimeOfDay::Morning);
        assert_eq!(cat("2015-01-01 12:00:00"), TimeOfDay::Afternoon);
        assert_eq!(cat("2015-01-01 17:00:00"), TimeOfDay::Evening);
        assert_eq!(cat("2015-01-01 22:00:00"), TimeOfDay::Night);
    }

    #[test]
    fn leap_year_ordinals_match_oracle() {
        for (y, m, d) in [(2016, 3, 1), (2000, 12, 31), (1900, 3, 1), (2019, 7, 4)] {
            let raw = format!("{y:04}-{m:02}-{d:02} 10:00:00");
            assert_eq!(decompose_time_str(&raw, None).unwrap().day_of_year, ordinal_oracle(y, m, d));
        }
    }

    #[test]
    fn offset_shifts_epoch() {
        let a = decompose_time_str("1970-01-01 02:00:00", Some(2.0)).unwrap();
        assert_eq!(a.epoch_seconds, 0.0);
        let b = decompose_time_str("1970-01-01 00:00:00", Some(-5.0)).unwrap();
        assert_eq!(b.epoch_seconds, 18_000.0);
    }

    #[test]
    fn garbage_is_a_time_error() {
        assert_eq!(
            decompose_time_str("yesterday", None),
            Err(FeatureError::Time("yesterday".into()))
        );
    }
}
