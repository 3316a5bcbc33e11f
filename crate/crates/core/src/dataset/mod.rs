//! Observation and census tables: parsing, validation, the population join
//! and the descriptive reports (missingness, category shares).

mod observation;
mod population;
mod report;

use std::str::FromStr;

use thiserror::Error;

pub use observation::{
    format_timestamp, parse_observations, parse_timestamp, write_observations, Diagnostic, ObservationRecord, ObservationTable,
    ParsedObservations, Strictness, OBSERVATION_COLUMNS,
};
pub use population::{
    join_population, parse_population, write_population, PopulationRecord, PopulationTable,
    PopulationValue, FIRST_YEAR, LAST_YEAR,
};
pub use report::{
    category_distribution, missingness_report, write_frequency_table, write_missingness_report,
    CategoryCount, FieldMissingness, FrequencyTable, MissingnessReport,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema: missing column `{column}`")]
    MissingColumn { column: String },
    #[error("schema: unexpected column `{column}`")]
    UnexpectedColumn { column: String },
    #[error("schema: duplicate column `{column}`")]
    DuplicateColumn { column: String },
    #[error("row {row_id} (line {line}): {message}")]
    Validation {
        row_id: String,
        line: u64,
        message: String,
    },
    #[error("duplicate id `{id}`")]
    DuplicateId { id: String },
    #[error("population for {country} in {year}: cannot parse `{value}`")]
    PopulationParse {
        country: String,
        year: i32,
        value: String,
    },
    #[error("population: duplicate entry for ({country}, {year})")]
    DuplicatePopulation { country: String, year: i32 },
    #[error("empty input table")]
    EmptyInput,
    #[error("unknown field `{0}`")]
    UnknownField(String),
}

/// Categorical fields that [`category_distribution`] can summarise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CategoricalField {
    SensorType,
    Clouds,
    Constellation,
    TimeOfDay,
}

impl CategoricalField {
    pub const ALL: [CategoricalField; 4] = [
        CategoricalField::SensorType,
        CategoricalField::Clouds,
        CategoricalField::Constellation,
        CategoricalField::TimeOfDay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CategoricalField::SensorType => "type",
            CategoricalField::Clouds => "clouds",
            CategoricalField::Constellation => "constellation",
            CategoricalField::TimeOfDay => "time_of_day_category",
        }
    }
}

impl FromStr for CategoricalField {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "type" | "sensor_type" => Ok(CategoricalField::SensorType),
            "clouds" => Ok(CategoricalField::Clouds),
            "constellation" => Ok(CategoricalField::Constellation),
            "time_of_day_category" | "time_of_day" => Ok(CategoricalField::TimeOfDay),
            other => Err(DatasetError::UnknownField(other.to_string())),
        }
    }
}

/// Numeric fields available to trend and correlation analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NumericField {
    TimeZone,
    Latitude,
    Longitude,
    ElevationM,
    SensorReading,
    LimitingMagnitude,
    Population,
}

impl NumericField {
    pub const ALL: [NumericField; 7] = [
        NumericField::TimeZone,
        NumericField::Latitude,
        NumericField::Longitude,
        NumericField::ElevationM,
        NumericField::SensorReading,
        NumericField::LimitingMagnitude,
        NumericField::Population,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NumericField::TimeZone => "time_zone",
            NumericField::Latitude => "latitude",
            NumericField::Longitude => "longitude",
            NumericField::ElevationM => "elevation_m",
            NumericField::SensorReading => "sensor_reading",
            NumericField::LimitingMagnitude => "limiting_magnitude",
            NumericField::Population => "population",
        }
    }
}

impl FromStr for NumericField {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NumericField::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| DatasetError::UnknownField(s.to_string()))
    }
}

impl ObservationTable {
    /// Value of a numeric field for row `i`. Population is only present after
    /// [`join_population`]; unmatched rows report their fallback value.
    pub fn numeric(&self, field: NumericField, i: usize) -> Option<f64> {
        let r = &self.records()[i];
        match field {
            NumericField::TimeZone => r.time_zone,
            NumericField::Latitude => r.latitude,
            NumericField::Longitude => r.longitude,
            NumericField::ElevationM => r.elevation_m,
            NumericField::SensorReading => r.sensor_reading,
            NumericField::LimitingMagnitude => r.limiting_magnitude,
            NumericField::Population => self.population().map(|p| p[i].value),
        }
    }

    pub fn numeric_column(&self, field: NumericField) -> Vec<Option<f64>> {
        (0..self.len()).map(|i| self.numeric(field, i)).collect()
    }
}
