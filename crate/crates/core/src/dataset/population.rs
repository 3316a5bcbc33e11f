use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{DatasetError, ObservationTable};

pub const FIRST_YEAR: i32 = 2006;
pub const LAST_YEAR: i32 = 2020;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationRecord {
    pub country: String,
    pub year: i32,
    pub population: u64,
}

/// Long-format census table; `(country, year)` pairs are unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PopulationTable {
    records: Vec<PopulationRecord>,
}

impl PopulationTable {
    pub fn new(records: Vec<PopulationRecord>) -> Result<Self, DatasetError> {
        let mut seen = HashMap::new();
        for r in &records {
            if seen.insert((r.country.as_str(), r.year), ()).is_some() {
                return Err(DatasetError::DuplicatePopulation {
                    country: r.country.clone(),
                    year: r.year,
                });
            }
        }
        Ok(PopulationTable { records })
    }

    pub fn records(&self) -> &[PopulationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Median population over every `(country, year)` pair; 0 for an empty
    /// table.
    pub fn median(&self) -> f64 {
        let mut v: Vec<u64> = self.records.iter().map(|r| r.population).collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_unstable();
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
        }
    }
}

/// Population attached to an observation: either the census value for the
/// observation's country and year, or the global median fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationValue {
    pub value: f64,
    pub matched: bool,
}

fn parse_count(raw: &str) -> Option<u64> {
    if let Ok(v) = raw.parse::<u64>() {
        return Some(v);
    }
    let f = raw.parse::<f64>().ok()?;
    (f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64).then_some(f as u64)
}

/// Parses the wide census layout (`Country Name`, then one column per year)
/// into long-format records. Blank cells produce no record.
pub fn parse_population<R: Read>(source: R) -> Result<PopulationTable, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let mut country_col = None;
    let mut year_cols = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        let name = h.trim_start_matches('\u{feff}').trim();
        if name == "Country Name" {
            if country_col.replace(i).is_some() {
                return Err(DatasetError::DuplicateColumn {
                    column: name.to_string(),
                });
            }
            continue;
        }
        match name.parse::<i32>() {
            Ok(y) if (FIRST_YEAR..=LAST_YEAR).contains(&y) => {
                if year_cols.iter().any(|&(_, yy)| yy == y) {
                    return Err(DatasetError::DuplicateColumn {
                        column: name.to_string(),
                    });
                }
                year_cols.push((i, y));
            }
            _ => {
                return Err(DatasetError::UnexpectedColumn {
                    column: name.to_string(),
                })
            }
        }
    }
    let country_col = country_col.ok_or_else(|| DatasetError::MissingColumn {
        column: "Country Name".to_string(),
    })?;

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let country = row.get(country_col).unwrap_or("").trim().to_string();
        for &(col, year) in &year_cols {
            let cell = row.get(col).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let population = parse_count(cell).ok_or_else(|| DatasetError::PopulationParse {
                country: country.clone(),
                year,
                value: cell.to_string(),
            })?;
            records.push(PopulationRecord {
                country: country.clone(),
                year,
                population,
            });
        }
    }
    PopulationTable::new(records)
}

/// Writes the table back in the wide layout accepted by [`parse_population`].
pub fn write_population<W: Write>(table: &PopulationTable, sink: W) -> Result<(), DatasetError> {
    let mut by_country: BTreeMap<&str, BTreeMap<i32, u64>> = BTreeMap::new();
    for r in table.records() {
        by_country
            .entry(r.country.as_str())
            .or_default()
            .insert(r.year, r.population);
    }
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["Country Name".to_string()];
    header.extend((FIRST_YEAR..=LAST_YEAR).map(|y| y.to_string()));
    w.write_record(&header)?;
    for (country, years) in by_country {
        let mut row = vec![country.to_string()];
        row.extend(
            (FIRST_YEAR..=LAST_YEAR).map(|y| years.get(&y).map(u64::to_string).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Attaches a population value to every observation, keyed on country and
/// the calendar year of the observation time. Rows without a match get the
/// global median and `matched = false`. Joining an already-joined table
/// replaces the previous column, so the operation is idempotent.
pub fn join_population(obs: &ObservationTable, pop: &PopulationTable) -> ObservationTable {
    let lookup: HashMap<(&str, i32), u64> = pop
        .records()
        .iter()
        .map(|r| ((r.country.as_str(), r.year), r.population))
        .collect();
    let fallback = pop.median();
    let column = obs
        .records()
        .iter()
        .map(|r| {
            let hit = match (&r.country, &r.time) {
                (Some(c), Some(t)) => lookup.get(&(c.as_str(), t.year())).copied(),
                _ => None,
            };
            match hit {
                Some(p) => PopulationValue {
                    value: p as f64,
                    matched: true,
                },
                None => PopulationValue {
                    value: fallback,
                    matched: false,
                },
            }
        })
        .collect();
    obs.clone().with_population(column)
}
