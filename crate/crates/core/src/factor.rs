//! Factor definitions, the factor-to-column mapping, and annotated factor values.
//!
//! Factors are produced outside this crate (by whatever annotator the user runs);
//! this module only ingests and validates them.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDef {
    #[serde(skip)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub possible_values: Vec<i64>,
    #[serde(default)]
    pub annotation_criteria: String,
    pub column_based: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct FactorDocument {
    factors: IndexMap<String, FactorDef>,
}

/// Parses the factor-definition JSON document, keeping factors in file order.
pub fn parse_factor_defs(text: &str) -> serde_json::Result<Vec<FactorDef>> {
    let doc: FactorDocument = serde_json::from_str(text)?;
    Ok(doc
        .factors
        .into_iter()
        .map(|(name, mut def)| {
            def.name = name;
            def
        })
        .collect())
}

pub fn factor_defs_to_json(defs: &[FactorDef]) -> String {
    let doc = FactorDocument {
        factors: defs.iter().map(|d| (d.name.clone(), d.clone())).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("factor defs serialize")
}

/// Binary k x d relation: `contains(i, j)` iff factor `i` is described by column `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorMapping {
    factors: Vec<String>,
    columns: Vec<String>,
    matrix: Vec<Vec<bool>>,
}

impl FactorMapping {
    pub fn new(factors: Vec<String>, columns: Vec<String>, matrix: Vec<Vec<bool>>) -> Result<Self> {
        if matrix.len() != factors.len() {
            return Err(Error::Shape(format!(
                "mapping has {} rows for {} factors",
                matrix.len(),
                factors.len()
            )));
        }
        for (name, row) in factors.iter().zip(&matrix) {
            if row.len() != columns.len() {
                return Err(Error::Shape(format!(
                    "mapping row for {name:?} has {} entries for {} columns",
                    row.len(),
                    columns.len()
                )));
            }
            if !row.iter().any(|&b| b) {
                return Err(Error::Mapping(format!("factor {name:?} maps to no column")));
            }
        }
        Ok(Self {
            factors,
            columns,
            matrix,
        })
    }

    pub fn from_defs(defs: &[FactorDef], columns: &[&str]) -> Result<Self> {
        let lookup: HashMap<&str, usize> = columns.iter().enumerate().map(|(j, c)| (*c, j)).collect();
        let mut matrix = vec![vec![false; columns.len()]; defs.len()];
        for (i, def) in defs.iter().enumerate() {
            for col in &def.column_based {
                let j = lookup.get(col.as_str()).ok_or_else(|| {
                    Error::Mapping(format!("factor {:?} references unknown column {col:?}", def.name))
                })?;
                matrix[i][*j] = true;
            }
        }
        Self::new(
            defs.iter().map(|d| d.name.clone()).collect(),
            columns.iter().map(|c| (*c).to_owned()).collect(),
            matrix,
        )
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f == name)
    }

    pub fn contains(&self, factor: usize, column: usize) -> bool {
        self.matrix[factor][column]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.matrix
    }

    /// Columns describing `factor`, ascending.
    pub fn columns_of(&self, factor: usize) -> Vec<usize> {
        (0..self.columns.len()).filter(|&j| self.matrix[factor][j]).collect()
    }

    /// Factors involving `column`, ascending.
    pub fn inverse_map(&self, column: usize) -> BTreeSet<usize> {
        (0..self.factors.len()).filter(|&i| self.matrix[i][column]).collect()
    }
}

/// m x k annotated values, one row per training sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorValueMatrix {
    factors: Vec<String>,
    values: Vec<Vec<i64>>,
}

impl FactorValueMatrix {
    pub fn new(factors: Vec<String>, values: Vec<Vec<i64>>) -> Result<Self> {
        for (r, row) in values.iter().enumerate() {
            if row.len() != factors.len() {
                return Err(Error::Shape(format!(
                    "factor value row {r} has {} entries for {} factors",
                    row.len(),
                    factors.len()
                )));
            }
        }
        Ok(Self { factors, values })
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.values
    }

    pub fn column(&self, factor: usize) -> Vec<i64> {
        self.values.iter().map(|r| r[factor]).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            factors: self.factors.clone(),
            values: indices.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }

    fn validate(&self, defs: &[FactorDef]) -> Result<()> {
        for (f, def) in defs.iter().enumerate() {
            for (r, row) in self.values.iter().enumerate() {
                if !def.possible_values.contains(&row[f]) {
                    return Err(Error::Domain(format!(
                        "row {r}: factor {:?} has value {} outside {:?}",
                        def.name, row[f], def.possible_values
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FactorModel {
    pub defs: Vec<FactorDef>,
    pub mapping: FactorMapping,
    pub values: FactorValueMatrix,
}

fn validate_defs(defs: &[FactorDef]) -> Result<()> {
    for def in defs {
        if def.possible_values.is_empty() {
            return Err(Error::Domain(format!("factor {:?} has no possible values", def.name)));
        }
        let distinct: BTreeSet<_> = def.possible_values.iter().collect();
        if distinct.len() != def.possible_values.len() {
            return Err(Error::Domain(format!(
                "factor {:?} repeats a possible value",
                def.name
            )));
        }
        if def.column_based.is_empty() {
            return Err(Error::Mapping(format!("factor {:?} lists no columns", def.name)));
        }
    }
    Ok(())
}

/// Validates definitions and values against `table` and builds the mapping.
pub fn build_factor_model(defs: Vec<FactorDef>, values: FactorValueMatrix, table: &Table) -> Result<FactorModel> {
    validate_defs(&defs)?;
    let mapping = FactorMapping::from_defs(&defs, &table.column_names())?;
    if values.n_rows() != table.n_rows() {
        return Err(Error::Shape(format!(
            "{} factor value rows for a table of {} rows",
            values.n_rows(),
            table.n_rows()
        )));
    }
    let names: Vec<String> = defs.iter().map(|d| d.name.clone()).collect();
    let values = reorder_values(values, &names)?;
    values.validate(&defs)?;
    Ok(FactorModel { defs, mapping, values })
}

fn reorder_values(values: FactorValueMatrix, names: &[String]) -> Result<FactorValueMatrix> {
    if values.factors == names {
        return Ok(values);
    }
    let idx = names
        .iter()
        .map(|n| {
            values
                .factors
                .iter()
                .position(|f| f == n)
                .ok_or_else(|| Error::Shape(format!("factor values lack a column for {n:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.factors.len() != names.len() {
        return Err(Error::Shape(format!(
            "factor values have {} columns for {} factors",
            values.factors.len(),
            names.len()
        )));
    }
    let rows = values
        .values
        .iter()
        .map(|row| idx.iter().map(|&i| row[i]).collect())
        .collect();
    FactorValueMatrix::new(names.to_vec(), rows)
}

/// Reads factor values: header row of factor names, integer cells.
pub fn read_factor_values<R: std::io::Read>(reader: R, delimiter: u8) -> Result<FactorValueMatrix> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::csv("<factor values>", e))?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    let mut values = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv("<factor values>", e))?;
        let row = rec
            .iter()
            .map(|cell| {
                cell.trim().parse::<i64>().map_err(|_| Error::Domain(format!(
                    "row {r}: factor value {cell:?} is not an integer"
                )))
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    FactorValueMatrix::new(header, values)
}

pub fn load_factor_model(
    defs_path: impl AsRef<Path>,
    values_path: impl AsRef<Path>,
    table: &Table,
    delimiter: u8,
) -> Result<FactorModel> {
    let defs_path = defs_path.as_ref();
    let values_path = values_path.as_ref();
    let text = std::fs::read_to_string(defs_path).map_err(|e| Error::io(defs_path, e))?;
    let defs = parse_factor_defs(&text).map_err(|e| Error::json(defs_path, e))?;
    let file = std::fs::File::open(values_path).map_err(|e| Error::io(values_path, e))?;
    let values = read_factor_values(file, delimiter).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(values_path, source),
        other => other,
    })?;
    build_factor_model(defs, values, table)
}

pub fn write_factor_values<W: std::io::Write>(values: &FactorValueMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let map = |e| Error::csv("<factor values>", e);
    w.write_record(&values.factors).map_err(map)?;
    for row in &values.values {
        w.write_record(row.iter().map(i64::to_string)).map_err(map)?;
    }
    w.flush().map_err(|e| Error::io("<factor values>", e))
}
