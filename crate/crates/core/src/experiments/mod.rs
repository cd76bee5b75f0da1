//! Scripted experiments and their reports.
//!
//! Every experiment returns an [`ExperimentReport`]: named tables of rows, the
//! resolved configuration and the master seed. Writing a report produces one
//! CSV per table, a JSON sidecar and a column schema. CSV bytes depend only on
//! (seed, config), never on the worker count or the clock.

mod constants;
mod identities;
mod intersection;
mod range;
mod spine;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

pub use constants::{run_c_theta, CThetaConfig};
pub use identities::{run_identity_suite, IdentityConfig};
pub use intersection::{run_intersection, IntersectionConfig};
pub use range::{normalization, run_range_capacity, RangeCapacityConfig};
pub use spine::{run_spine_fraction, SpineFractionConfig};

/// A single CSV field.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // Shortest representation that parses back to the same f64.
            Cell::Real(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Real(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub doc: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// `columns` pairs each column name with a one-line description.
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|(n, d)| Column { name: n.to_string(), doc: d.to_string() }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric values of a column, one per row (`NaN` for text).
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.column_index(name).unwrap_or_else(|| panic!("no column {name} in {}", self.name));
        self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// The first table is the main one; the others hold per-sample detail.
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    /// Hard failures (exact identities violated and similar).
    pub failures: Vec<String>,
    pub wall_clock_s: f64,
}

impl ExperimentReport {
    pub fn new(id: &str, seed: u64, config: &impl Serialize) -> Self {
        ExperimentReport {
            id: id.to_string(),
            seed,
            config: serde_json::to_value(config).expect("config serializes"),
            tables: Vec::new(),
            notes: Vec::new(),
            failures: Vec::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn stem(&self) -> String {
        format!("{}-seed{}", self.id, self.seed)
    }

    fn csv_name(&self, i: usize) -> String {
        if i == 0 {
            format!("{}.csv", self.stem())
        } else {
            format!("{}-{}.csv", self.stem(), self.tables[i].name)
        }
    }

    /// Column documentation for every table, as plain text.
    pub fn schema(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.tables.iter().enumerate() {
            let _ = writeln!(s, "{} (table {})", self.csv_name(i), t.name);
            for c in &t.columns {
                let _ = writeln!(s, "  {}: {}", c.name, c.doc);
            }
            s.push('\n');
        }
        s
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.id,
            "seed": self.seed,
            "config": self.config,
            "tables": self.tables.iter().enumerate().map(|(i, t)| serde_json::json!({
                "name": t.name,
                "file": self.csv_name(i),
                "rows": t.rows.len(),
            })).collect::<Vec<_>>(),
            "notes": self.notes,
            "failures": self.failures,
            "wall_clock_s": self.wall_clock_s,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }

    /// Write CSVs, the JSON sidecar and the schema into `dir`; returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (i, t) in self.tables.iter().enumerate() {
            let p = dir.join(self.csv_name(i));
            fs::write(&p, t.to_csv())?;
            paths.push(p);
        }
        let p = dir.join(format!("{}.json", self.stem()));
        fs::write(&p, serde_json::to_string_pretty(&self.sidecar()).expect("sidecar serializes") + "\n")?;
        paths.push(p);
        let p = dir.join(format!("{}.schema.txt", self.stem()));
        fs::write(&p, self.schema())?;
        paths.push(p);
        Ok(paths)
    }
}
