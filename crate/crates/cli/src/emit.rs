//! Table emission as CSV or JSON. Floats carry 17 significant digits so
//! every value round-trips.

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use zenolab::{AtomParams, SurvivalSample};

use crate::config::Format;

pub const SURVIVAL_COLUMNS: [&str; 10] = [
    "t_s",
    "tau",
    "p",
    "p_exponential",
    "p_powerlaw",
    "p_interference",
    "y_re",
    "y_im",
    "h",
    "eta",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) if x.is_finite() => RawValue::from_string(format_float(*x))
                .map_err(serde::ser::Error::custom)?
                .serialize(serializer),
            Cell::Num(_) => serializer.serialize_none(),
            Cell::Int(n) => serializer.serialize_i64(*n),
            Cell::Text(s) => serializer.serialize_str(s),
        }
    }
}

/// Named rows with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Table {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Two-column quantity table with units.
    pub fn quantities(name: &'static str) -> Self {
        Table::new(name, &["quantity", "value", "unit"])
    }

    pub fn quantity(&mut self, name: &str, value: f64, unit: &str) {
        self.push(vec![name.into(), value.into(), unit.into()]);
    }
}

pub fn survival_table(samples: &[SurvivalSample]) -> Table {
    let mut table = Table::new("samples", &SURVIVAL_COLUMNS);
    for s in samples {
        table.push(
            [
                s.t,
                s.tau,
                s.p,
                s.p_exponential,
                s.p_powerlaw,
                s.p_interference,
                s.y.re,
                s.y.im,
                s.h,
                s.eta,
            ]
            .into_iter()
            .map(Cell::Num)
            .collect(),
        );
    }
    table
}

struct Row<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

struct Rows<'a>(&'a Table);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.rows.len()))?;
        for row in &self.0.rows {
            seq.serialize_element(&Row(&self.0.columns, row))?;
        }
        seq.end()
    }
}

struct Params<'a>(&'a AtomParams);

impl Serialize for Params<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let p = self.0;
        let mut map = serializer.serialize_map(Some(5))?;
        map.serialize_entry("z", &Cell::Int(p.z as i64))?;
        map.serialize_entry("cutoff_lambda", &Cell::Num(p.cutoff_lambda))?;
        map.serialize_entry("chi", &Cell::Num(p.chi))?;
        map.serialize_entry("a", &Cell::Num(p.a))?;
        map.serialize_entry("omega0", &Cell::Num(p.omega0))?;
        map.end()
    }
}

struct Document<'a> {
    params: &'a AtomParams,
    table: &'a Table,
}

impl Serialize for Document<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("params", &Params(self.params))?;
        map.serialize_entry(self.table.name, &Rows(self.table))?;
        map.end()
    }
}

/// Renders the table to bytes.
pub fn render(table: &Table, params: &AtomParams, format: Format) -> Result<Vec<u8>, String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns).map_err(|e| e.to_string())?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::render))
                    .map_err(|e| e.to_string())?;
            }
            w.into_inner().map_err(|e| e.to_string())
        }
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&Document { params, table })
                .map_err(|e| e.to_string())?;
            out.push(b'\n');
            Ok(out)
        }
    }
}
