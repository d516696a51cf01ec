use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Categorical,
    Numeric,
}

/// Declared types of the columns to load, plus the cell values that mean "missing".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<(String, ColumnType)>,
    #[serde(default = "default_missing_tokens")]
    pub missing_tokens: Vec<String>,
}

fn default_missing_tokens() -> Vec<String> {
    vec![String::new(), "NA".to_string()]
}

impl Schema {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = (S, ColumnType)>) -> Self {
        Schema {
            columns: columns.into_iter().map(|(n, t)| (n.into(), t)).collect(),
            missing_tokens: default_missing_tokens(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    /// `levels` are sorted; `codes[i]` indexes into them.
    Categorical {
        levels: Vec<String>,
        codes: Vec<Option<usize>>,
    },
    Numeric(Vec<Option<f64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Typed columns of equal length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleTable {
    n: usize,
    columns: Vec<Column>,
}

impl SampleTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.len());
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::InvalidInput(format!(
                "column '{}' has {} rows, expected {n}",
                c.name,
                c.len()
            )));
        }
        Ok(SampleTable { n, columns })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Plan(format!("no column '{name}'")))
    }

    pub fn numeric(&self, name: &str) -> Result<&[Option<f64>]> {
        match &self.column(name)?.data {
            ColumnData::Numeric(v) => Ok(v),
            ColumnData::Categorical { .. } => Err(Error::Plan(format!("column '{name}' is not numeric"))),
        }
    }

    /// Recodes every categorical column onto the levels of the same column in `reference`, so
    /// feature rows line up between the two tables.
    pub fn conform_levels(&mut self, reference: &SampleTable) -> Result<()> {
        for col in &mut self.columns {
            let ColumnData::Categorical { levels, codes } = &mut col.data else {
                continue;
            };
            let ref_levels = match &reference.column(&col.name)?.data {
                ColumnData::Categorical { levels, .. } => levels,
                ColumnData::Numeric(_) => {
                    return Err(Error::Plan(format!("column '{}' is numeric in the reference", col.name)))
                }
            };
            let lookup: HashMap<&str, usize> =
                ref_levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
            let remap = levels
                .iter()
                .map(|l| {
                    lookup.get(l.as_str()).copied().ok_or_else(|| {
                        Error::Plan(format!("category '{l}' of column '{}' is not in the reference", col.name))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for c in codes.iter_mut().flatten() {
                *c = remap[*c];
            }
            *levels = ref_levels.clone();
        }
        Ok(())
    }

    /// Rows `indices` (in that order).
    pub fn select_rows(&self, indices: &[usize]) -> Result<SampleTable> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::InvalidInput(format!("row {bad} out of range")));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                data: match &c.data {
                    ColumnData::Categorical { levels, codes } => ColumnData::Categorical {
                        levels: levels.clone(),
                        codes: indices.iter().map(|&i| codes[i]).collect(),
                    },
                    ColumnData::Numeric(v) => ColumnData::Numeric(indices.iter().map(|&i| v[i]).collect()),
                },
            })
            .collect();
        SampleTable::new(columns)
    }
}

impl Column {
    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Categorical { codes, .. } => codes.len(),
            ColumnData::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Loads the schema's columns from a UTF-8, comma-separated file with a header row.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<SampleTable> {
    read_csv(std::fs::File::open(path)?, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<SampleTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut seen = HashSet::new();
    for h in headers.iter() {
        if !seen.insert(h) {
            return Err(Error::Load {
                row: 0,
                column: h.to_string(),
                message: "duplicate header".into(),
            });
        }
    }
    let positions = schema
        .columns
        .iter()
        .map(|(name, _)| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Load {
                row: 0,
                column: name.clone(),
                message: "unknown column".into(),
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    let missing: HashSet<&str> = schema.missing_tokens.iter().map(String::as_str).collect();

    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); schema.columns.len()];
    let mut numeric: Vec<Vec<Option<f64>>> = vec![Vec::new(); schema.columns.len()];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // data rows are numbered from 1, the header being row 0
        let row = r + 1;
        for (c, ((name, kind), &pos)) in schema.columns.iter().zip(&positions).enumerate() {
            let cell = record.get(pos).ok_or_else(|| Error::Load {
                row,
                column: name.clone(),
                message: "row is too short".into(),
            })?;
            let cell = cell.trim();
            let is_missing = missing.contains(cell);
            match kind {
                ColumnType::Categorical => raw[c].push((!is_missing).then(|| cell.to_string())),
                ColumnType::Numeric => {
                    let value = if is_missing {
                        None
                    } else {
                        let v: f64 = cell.parse().map_err(|_| Error::Load {
                            row,
                            column: name.clone(),
                            message: format!("'{cell}' is not a number"),
                        })?;
                        Some(v)
                    };
                    numeric[c].push(value);
                }
            }
        }
    }

    let columns = schema
        .columns
        .iter()
        .enumerate()
        .map(|(c, (name, kind))| Column {
            name: name.clone(),
            data: match kind {
                ColumnType::Numeric => ColumnData::Numeric(std::mem::take(&mut numeric[c])),
                ColumnType::Categorical => {
                    let levels: Vec<String> = raw[c]
                        .iter()
                        .flatten()
                        .cloned()
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    let lookup: HashMap<&str, usize> =
                        levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
                    let codes = raw[c].iter().map(|v| v.as_deref().map(|s| lookup[s])).collect();
                    ColumnData::Categorical { levels, codes }
                }
            },
        })
        .collect();
    SampleTable::new(columns)
}
