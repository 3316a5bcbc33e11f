use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use chrono::NaiveDateTime;

use super::{DatasetError, PopulationValue};

/// Canonical column order of the observation CSV.
pub const OBSERVATION_COLUMNS: [&str; 14] = [
    "id",
    "time",
    "time_zone",
    "country",
    "latitude",
    "longitude",
    "elevation_m",
    "type",
    "sensor_reading",
    "clouds",
    "constellation",
    "comment_1",
    "comment_2",
    "limiting_magnitude",
];

const TIME_FORMATS: [&str; 4] = [
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M",
];

/// One observation row. `None` marks a missing cell; no numeric sentinels are
/// ever used.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationRecord {
    pub id: String,
    /// Local wall-clock time of the observation.
    pub time: Option<NaiveDateTime>,
    /// UTC offset in hours.
    pub time_zone: Option<f64>,
    pub country: Option<String>,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    pub elevation_m: Option<f64>,
    pub sensor_type: Option<String>,
    pub sensor_reading: Option<f64>,
    pub clouds: Option<String>,
    pub constellation: Option<String>,
    pub comment_1: Option<String>,
    pub comment_2: Option<String>,
    /// Faintest visible stellar magnitude; the prediction target.
    pub limiting_magnitude: Option<f64>,
}

/// An immutable table of observations with unique ids, optionally carrying
/// the joined population column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationTable {
    records: Vec<ObservationRecord>,
    population: Option<Vec<PopulationValue>>,
}

impl ObservationTable {
    pub fn new(records: Vec<ObservationRecord>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(DatasetError::DuplicateId { id: r.id.clone() });
            }
        }
        Ok(ObservationTable {
            records,
            population: None,
        })
    }

    pub fn records(&self) -> &[ObservationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn population(&self) -> Option<&[PopulationValue]> {
        self.population.as_deref()
    }

    pub(crate) fn with_population(mut self, population: Vec<PopulationValue>) -> Self {
        debug_assert_eq!(population.len(), self.records.len());
        self.population = Some(population);
        self
    }

    /// Sub-table of the given rows, in the given order. Ids stay unique as
    /// long as `rows` has no repeats.
    pub fn select(&self, rows: &[usize]) -> ObservationTable {
        ObservationTable {
            records: rows.iter().map(|&i| self.records[i].clone()).collect(),
            population: self
                .population
                .as_ref()
                .map(|p| rows.iter().map(|&i| p[i]).collect()),
        }
    }

    /// Concatenates two tables. Ids must remain unique.
    pub fn concat(&self, other: &ObservationTable) -> Result<ObservationTable, DatasetError> {
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        let mut table = ObservationTable::new(records)?;
        if let (Some(a), Some(b)) = (&self.population, &other.population) {
            table.population = Some(a.iter().chain(b).copied().collect());
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Abort on the first invalid row.
    Strict,
    /// Drop invalid rows and report them as diagnostics.
    Lenient,
}

/// A row-level problem found while parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: u64,
    pub row_id: Option<String>,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.row_id {
            Some(id) => write!(f, "line {} (id {}): {}", self.line, id, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedObservations {
    pub table: ObservationTable,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let s = raw.trim();
    TIME_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format("%Y-%m-%d %H:%M:%S%.f").to_string()
}

fn header_index(headers: &csv::StringRecord) -> Result<[usize; 14], DatasetError> {
    let mut by_name: HashMap<String, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        let name = h.trim_start_matches('\u{feff}').trim();
        let name = if name == "sensor_type" { "type" } else { name };
        if !OBSERVATION_COLUMNS.contains(&name) {
            return Err(DatasetError::UnexpectedColumn {
                column: name.to_string(),
            });
        }
        if by_name.insert(name.to_string(), i).is_some() {
            return Err(DatasetError::DuplicateColumn {
                column: name.to_string(),
            });
        }
    }
    let mut index = [0usize; 14];
    for (slot, col) in index.iter_mut().zip(OBSERVATION_COLUMNS) {
        *slot = *by_name.get(col).ok_or_else(|| DatasetError::MissingColumn {
            column: col.to_string(),
        })?;
    }
    Ok(index)
}

fn text(cell: &str) -> Option<String> {
    if cell.is_empty() {
        None
    } else {
        Some(cell.to_string())
    }
}

fn number(cell: &str, column: &str) -> Result<Option<f64>, String> {
    let s = cell.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("{column}: `{s}` is not a finite number")),
    }
}

fn parse_row(cells: [&str; 14]) -> Result<ObservationRecord, String> {
    let id = cells[0].trim();
    if id.is_empty() {
        return Err("id is empty".to_string());
    }
    let time = match cells[1].trim() {
        "" => None,
        raw => Some(parse_timestamp(raw).ok_or_else(|| format!("time: cannot parse `{raw}`"))?),
    };
    let record = ObservationRecord {
        id: id.to_string(),
        time,
        time_zone: number(cells[2], "time_zone")?,
        country: text(cells[3].trim()),
        latitude: number(cells[4], "latitude")?,
        longitude: number(cells[5], "longitude")?,
        elevation_m: number(cells[6], "elevation_m")?,
        sensor_type: text(cells[7].trim()),
        sensor_reading: number(cells[8], "sensor_reading")?,
        clouds: text(cells[9].trim()),
        constellation: text(cells[10].trim()),
        comment_1: text(cells[11]),
        comment_2: text(cells[12]),
        limiting_magnitude: number(cells[13], "limiting_magnitude")?,
    };
    if let Some(lat) = record.latitude {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(format!("latitude {lat} outside [-90, 90]"));
        }
    }
    if let Some(lon) = record.longitude {
        if !(-180.0..=180.0).contains(&lon) {
            return Err(format!("longitude {lon} outside [-180, 180]"));
        }
    }
    Ok(record)
}

/// Parses the observation CSV. Columns may appear in any order but must be
/// exactly the canonical set. Empty cells become missing values.
pub fn parse_observations<R: Read>(
    source: R,
    strictness: Strictness,
) -> Result<ParsedObservations, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(source);
    let index = header_index(reader.headers()?)?;
    let width = reader.headers()?.len();

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut row = csv::StringRecord::new();
    loop {
        let more = match reader.read_record(&mut row) {
            Ok(more) => more,
            Err(e)
                if strictness == Strictness::Lenient
                    && matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) =>
            {
                diagnostics.push(Diagnostic {
                    line: e.position().map_or(0, |p| p.line()),
                    row_id: None,
                    message: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if !more {
            break;
        }
        let line = row.position().map_or(0, |p| p.line());
        let parsed = if row.len() != width {
            Err(format!("expected {width} fields, found {}", row.len()))
        } else {
            let cells = index.map(|i| row.get(i).unwrap_or(""));
            parse_row(cells)
        };
        match parsed {
            Ok(record) => {
                if !seen.insert(record.id.clone()) {
                    return Err(DatasetError::DuplicateId { id: record.id });
                }
                records.push(record);
            }
            Err(message) => {
                let id = row
                    .get(index[0])
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string);
                if strictness == Strictness::Strict {
                    return Err(DatasetError::Validation {
                        row_id: id.unwrap_or_else(|| format!("<line {line}>")),
                        line,
                        message,
                    });
                }
                diagnostics.push(Diagnostic {
                    line,
                    row_id: id,
                    message,
                });
            }
        }
    }
    Ok(ParsedObservations {
        table: ObservationTable {
            records,
            population: None,
        },
        diagnostics,
    })
}

fn fmt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes records in canonical column order. Re-parsing the output yields
/// identical records.
pub fn write_observations<W: Write>(table: &ObservationTable, sink: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(OBSERVATION_COLUMNS)?;
    for r in table.records() {
        w.write_record([
            r.id.clone(),
            r.time.as_ref().map(format_timestamp).unwrap_or_default(),
            fmt_num(r.time_zone),
            r.country.clone().unwrap_or_default(),
            fmt_num(r.latitude),
            fmt_num(r.longitude),
            fmt_num(r.elevation_m),
            r.sensor_type.clone().unwrap_or_default(),
            fmt_num(r.sensor_reading),
            r.clouds.clone().unwrap_or_default(),
            r.constellation.clone().unwrap_or_default(),
            r.comment_1.clone().unwrap_or_default(),
            r.comment_2.clone().unwrap_or_default(),
            fmt_num(r.limiting_magnitude),
        ])?;
    }
    w.flush()?;
    Ok(())
}
