//! Column-oriented tables of tail curves on a shared time grid, stored as CSV.
//!
//! Layout on disk:
//!
//! ```text
//! # lambda=0.5
//! # n=3
//! t,rep_d3,mds_m3,sim_mds_m3_lo,sim_mds_m3_mid,sim_mds_m3_hi
//! 0.0,1.0,1.0,0.99,1.0,1.0
//! 0.5,0.88,0.91,,,
//! ```
//!
//! Missing values are empty fields. Numbers are written in the shortest form
//! that parses back to the same `f64`, so reading a written table gives an
//! identical table.

use std::fs;
use std::path::Path;

use redundancy_core::TailCurve;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    meta: Vec<(String, String)>,
    times: Vec<f64>,
    columns: Vec<Column>,
}

fn malformed(reason: impl Into<String>) -> CliError {
    CliError::Validation(format!("malformed table: {}", reason.into()))
}

fn check_meta(key: &str, value: &str) -> Result<()> {
    let ok_key = !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok_key || value.contains(['\n', '\r']) {
        return Err(malformed(format!("bad metadata entry {key:?} = {value:?}")));
    }
    Ok(())
}

impl ComparisonTable {
    /// An empty table over `times`, stamped with the arrival rate.
    pub fn new(lambda: f64, times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(malformed("empty time grid"));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(malformed("time grid must be finite and strictly increasing"));
        }
        Ok(Self {
            meta: vec![("lambda".into(), format!("{lambda:?}"))],
            times,
            columns: Vec::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Result<Self> {
        let value = value.to_string();
        check_meta(key, &value)?;
        if self.meta.iter().any(|(k, _)| k == key) {
            return Err(malformed(format!("metadata key {key:?} set twice")));
        }
        self.meta.push((key.into(), value));
        Ok(self)
    }

    pub fn meta(&self) -> &[(String, String)] {
        &self.meta
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn lambda(&self) -> f64 {
        self.meta_value("lambda").and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let name = name.into();
        let ok_name = !name.is_empty()
            && name != "t"
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok_name {
            return Err(malformed(format!("bad column name {name:?}")));
        }
        if self.column(&name).is_some() {
            return Err(malformed(format!("duplicate column {name}")));
        }
        if values.len() != self.times.len() {
            return Err(malformed(format!(
                "column {name} has {} values for {} grid points",
                values.len(),
                self.times.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(malformed(format!("column {name} holds a non-finite value")));
        }
        self.columns.push(Column { name, values });
        Ok(())
    }

    /// Samples `curve` on this table's grid, interpolating if the grids differ.
    pub fn push_curve(&mut self, name: impl Into<String>, curve: &TailCurve) -> Result<()> {
        let values = if curve.times() == self.times.as_slice() {
            curve.values().iter().map(|&v| Some(v)).collect()
        } else {
            self.times.iter().map(|&t| Some(curve.at(t))).collect()
        };
        self.push_column(name, values)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (key, value) in &self.meta {
            out.push_str(&format!("# {key}={value}\n"));
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("t").chain(self.columns.iter().map(|c| c.name.as_str()));
        writer.write_record(header).map_err(csv_error)?;
        for (i, t) in self.times.iter().enumerate() {
            let row = std::iter::once(format!("{t:?}")).chain(
                self.columns
                    .iter()
                    .map(|c| c.values[i].map(|v| format!("{v:?}")).unwrap_or_default()),
            );
            writer.write_record(row).map_err(csv_error)?;
        }
        let body = writer.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
        out.push_str(std::str::from_utf8(&body).expect("csv output is ASCII"));
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = Vec::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(entry) = line.strip_prefix("# ") else { break };
            let (key, value) = entry
                .trim_end_matches(['\n', '\r'])
                .split_once('=')
                .ok_or_else(|| malformed(format!("metadata line {line:?}")))?;
            check_meta(key, value)?;
            meta.push((key.to_string(), value.to_string()));
            body_start += line.len();
        }
        if meta.first().map(|(k, _)| k.as_str()) != Some("lambda") {
            return Err(malformed("first metadata entry must be lambda"));
        }

        let mut reader = csv::ReaderBuilder::new().from_reader(&text.as_bytes()[body_start..]);
        let header = reader.headers().map_err(csv_error)?.clone();
        if header.get(0) != Some("t") {
            return Err(malformed("first column must be t"));
        }
        let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut times = Vec::new();
        let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(csv_error)?;
            let number = |field: &str| -> Result<f64> {
                field
                    .parse()
                    .map_err(|_| malformed(format!("row {}: cannot parse {field:?}", row + 1)))
            };
            times.push(number(&record[0])?);
            for (j, field) in record.iter().skip(1).enumerate() {
                cells[j].push(if field.is_empty() { None } else { Some(number(field)?) });
            }
        }

        let mut table = Self::new(f64::NAN, times)?;
        table.meta = meta;
        for (name, values) in names.into_iter().zip(cells) {
            table.push_column(name, values)?;
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?).map_err(CliError::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path).map_err(CliError::io(path))?)
    }
}

fn csv_error(e: csv::Error) -> CliError {
    malformed(e.to_string())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn sample() -> ComparisonTable {
        let mut t = ComparisonTable::new(0.5, vec![0.0, 0.1, 1.0 / 3.0]).unwrap().with_meta("n", 3).unwrap();
        t.push_column("rep_d3", vec![Some(1.0), Some(0.75), Some(1e-300)]).unwrap();
        t.push_column("sim_mds_m3_mid", vec![Some(1.0), None, Some(0.0)]).unwrap();
        t
    }

    #[test]
    fn layout() {
        let csv = sample().to_csv().unwrap();
        assert_eq!(
            csv,
            "# lambda=0.5\n# n=3\nt,rep_d3,sim_mds_m3_mid\n0.0,1.0,1.0\n0.1,0.75,\n0.3333333333333333,1e-300,0.0\n"
        );
        assert_eq!(ComparisonTable::from_csv(&csv).unwrap(), sample());
    }

    #[test]
    fn rejects_bad_tables() {
        let mut t = sample();
        assert!(t.push_column("rep_d3", vec![None; 3]).is_err());
        assert!(t.push_column("short", vec![None; 2]).is_err());
        assert!(t.push_column("a,b", vec![None; 3]).is_err());
        assert!(t.push_column("nan", vec![Some(f64::NAN), None, None]).is_err());
        assert!(ComparisonTable::new(0.5, vec![1.0, 1.0]).is_err());
        assert!(ComparisonTable::from_csv("t,a\n0,1\n").is_err());
        assert!(ComparisonTable::from_csv("# lambda=0.5\nx,a\n0,1\n").is_err());
        assert!(ComparisonTable::from_csv("# lambda=0.5\nt,a\n0,zero\n").is_err());
        assert!(ComparisonTable::from_csv("# lambda=0.5\nt,a\n0,1,2\n").is_err());
    }

    #[test]
    fn lambda_is_stamped() {
        assert_eq!(sample().lambda(), 0.5);
        assert_eq!(sample().meta_value("n"), Some("3"));
    }

    proptest! {
        #[test]
        fn csv_round_trips(
            lambda in 0.01f64..0.99,
            steps in prop::collection::vec(1e-9f64..10.0, 1..20),
            raw in prop::collection::vec(prop::option::of(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO), 0..60),
        ) {
            let times: Vec<f64> = steps.iter().scan(0.0, |acc, s| { *acc += s; Some(*acc) }).collect();
            let mut table = ComparisonTable::new(lambda, times.clone()).unwrap();
            for (j, chunk) in raw.chunks(times.len()).enumerate() {
                if chunk.len() == times.len() {
                    table.push_column(format!("c{j}"), chunk.to_vec()).unwrap();
                }
            }
            let back = ComparisonTable::from_csv(&table.to_csv().unwrap()).unwrap();
            prop_assert_eq!(back.to_csv().unwrap(), table.to_csv().unwrap());
            for (a, b) in back.columns().iter().zip(table.columns()) {
                let bits = |c: &Column| c.values.iter().map(|v| v.map(f64::to_bits)).collect::<Vec<_>>();
                prop_assert_eq!(bits(a), bits(b));
            }
            prop_assert_eq!(back, table);
        }
    }
}
