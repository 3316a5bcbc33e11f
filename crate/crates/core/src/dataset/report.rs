use std::collections::HashMap;
use std::io::Write;

use super::{CategoricalField, DatasetError, ObservationTable, OBSERVATION_COLUMNS};
use crate::features::decompose_time;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldMissingness {
    pub field: String,
    pub missing_count: usize,
    pub missing_fraction: f64,
}

/// Exact per-field missing counts. `missing_fraction` is
/// `missing_count / total_rows` unrounded.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingnessReport {
    pub total_rows: usize,
    pub fields: Vec<FieldMissingness>,
}

impl MissingnessReport {
    pub fn field(&self, name: &str) -> Option<&FieldMissingness> {
        self.fields.iter().find(|f| f.field == name)
    }
}

pub fn missingness_report(table: &ObservationTable) -> Result<MissingnessReport, DatasetError> {
    if table.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let mut counts = [0usize; 14];
    for r in table.records() {
        let flags = [
            r.id.is_empty(),
            r.time.is_none(),
            r.time_zone.is_none(),
            r.country.is_none(),
            r.latitude.is_none(),
            r.longitude.is_none(),
            r.elevation_m.is_none(),
            r.sensor_type.is_none(),
            r.sensor_reading.is_none(),
            r.clouds.is_none(),
            r.constellation.is_none(),
            r.comment_1.is_none(),
            r.comment_2.is_none(),
            r.limiting_magnitude.is_none(),
        ];
        for (c, f) in counts.iter_mut().zip(flags) {
            *c += usize::from(f);
        }
    }
    let total = table.len();
    let mut fields: Vec<FieldMissingness> = OBSERVATION_COLUMNS
        .iter()
        .zip(counts)
        .map(|(name, missing_count)| FieldMissingness {
            field: name.to_string(),
            missing_count,
            missing_fraction: missing_count as f64 / total as f64,
        })
        .collect();
    if let Some(pop) = table.population() {
        let missing_count = pop.iter().filter(|p| !p.matched).count();
        fields.push(FieldMissingness {
            field: "population".to_string(),
            missing_count,
            missing_fraction: missing_count as f64 / total as f64,
        });
    }
    Ok(MissingnessReport {
        total_rows: total,
        fields,
    })
}

pub fn write_missingness_report<W: Write>(
    report: &MissingnessReport,
    sink: W,
) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["field", "missing_count", "missing_fraction", "total_rows"])?;
    for f in &report.fields {
        w.write_record([
            f.field.clone(),
            f.missing_count.to_string(),
            f.missing_fraction.to_string(),
            report.total_rows.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryCount {
    pub category: String,
    pub count: usize,
    pub fraction: f64,
}

/// Category shares over present values, most frequent first.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    pub field: String,
    pub present_rows: usize,
    pub entries: Vec<CategoryCount>,
}

impl FrequencyTable {
    pub fn fraction_of(&self, category: &str) -> f64 {
        self.entries
            .iter()
            .find(|e| e.category == category)
            .map_or(0.0, |e| e.fraction)
    }
}

fn categorical_value(table: &ObservationTable, field: CategoricalField, i: usize) -> Option<String> {
    let r = &table.records()[i];
    match field {
        CategoricalField::SensorType => r.sensor_type.clone(),
        CategoricalField::Clouds => r.clouds.clone(),
        CategoricalField::Constellation => r.constellation.clone(),
        CategoricalField::TimeOfDay => r
            .time
            .map(|t| decompose_time(&t, r.time_zone).time_of_day.as_str().to_string()),
    }
}

/// Counts present values of a categorical field. `field` accepts `type`,
/// `clouds`, `constellation` or `time_of_day_category`. Ties in count are
/// ordered lexicographically.
pub fn category_distribution(
    table: &ObservationTable,
    field: &str,
) -> Result<FrequencyTable, DatasetError> {
    let field: CategoricalField = field.parse()?;
    let mut counts: HashMap<String, usize> = HashMap::new();
    for i in 0..table.len() {
        if let Some(v) = categorical_value(table, field, i) {
            *counts.entry(v).or_default() += 1;
        }
    }
    let present: usize = counts.values().sum();
    let mut entries: Vec<CategoryCount> = counts
        .into_iter()
        .map(|(category, count)| CategoryCount {
            category,
            count,
            fraction: count as f64 / present as f64,
        })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.category.cmp(&b.category)));
    Ok(FrequencyTable {
        field: field.name().to_string(),
        present_rows: present,
        entries,
    })
}

pub fn write_frequency_table<W: Write>(table: &FrequencyTable, sink: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["field", "category", "count", "fraction"])?;
    for e in &table.entries {
        w.write_record([
            table.field.clone(),
            e.category.clone(),
            e.count.to_string(),
            e.fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ObservationRecord;

    fn table_with_types(types: &[Option<&str>]) -> ObservationTable {
        ObservationTable::new(
            types
                .iter()
                .enumerate()
                .map(|(i, t)| ObservationRecord {
                    id: format!("r{i}"),
                    sensor_type: t.map(str::to_string),
                    ..Default::default()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn counts_descending() {
        let t = table_with_types(&[Some("GAN"), Some("GAN"), Some("SQM")]);
        let f = category_distribution(&t, "type").unwrap();
        assert_eq!(f.entries[0].category, "GAN");
        assert_eq!(f.entries[0].count, 2);
        assert!((f.entries[0].fraction - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f.entries[1].category, "SQM");
        assert!((f.entries[1].fraction - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_missing_is_empty() {
        let t = table_with_types(&[None, None]);
        let f = category_distribution(&t, "type").unwrap();
        assert_eq!(f.present_rows, 0);
        assert!(f.entries.is_empty());
    }

    #[test]
    fn ties_are_lexicographic() {
        let t = table_with_types(&[Some("b"), Some("a")]);
        let f = category_distribution(&t, "type").unwrap();
        let order: Vec<_> = f.entries.iter().map(|e| e.category.as_str()).collect();
        assert_eq!(order, ["a", "b"]);
    }

    #[test]
    fn unknown_field_rejected() {
        let t = table_with_types(&[Some("a")]);
        assert!(matches!(
            category_distribution(&t, "colour"),
            Err(DatasetError::UnknownField(_))
        ));
    }

    #[test]
    fn missingness_fractions() {
        let records = (0..1000)
            .map(|i| ObservationRecord {
                id: format!("r{i}"),
                sensor_reading: (i >= 828).then_some(20.0),
                latitude: Some(1.0),
                ..Default::default()
            })
            .collect();
        let t = ObservationTable::new(records).unwrap();
        let rep = missingness_report(&t).unwrap();
        let s = rep.field("sensor_reading").unwrap();
        assert_eq!(s.missing_count, 828);
        assert_eq!(s.missing_fraction, 0.828);
        assert_eq!(rep.field("latitude").unwrap().missing_fraction, 0.0);
        assert_eq!(rep.field("clouds").unwrap().missing_fraction, 1.0);
    }

    #[test]
    fn empty_table_is_an_error() {
        let t = ObservationTable::default();
        assert!(matches!(missingness_report(&t), Err(DatasetError::EmptyInput)));
    }
}
