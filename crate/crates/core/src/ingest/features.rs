use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::table::{ColumnData, SampleTable};
use crate::error::{Error, Result};
use crate::model::SampleMatrix;

/// One group of rows of `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureGroup {
    /// One indicator row per combination of the columns' categories (first column slowest).
    Cross { columns: Vec<String> },
    /// Indicator of `column == category`.
    Indicator { column: String, category: String },
    /// CDF rows: `Fᵢⱼ = 1` if `valueⱼ ≤ thresholds[i]`.
    Thresholds { column: String, thresholds: Vec<f64> },
}

impl FeatureGroup {
    pub fn name(&self) -> String {
        match self {
            FeatureGroup::Cross { columns } => columns.join("*"),
            FeatureGroup::Indicator { column, category } => format!("{column}={category}"),
            FeatureGroup::Thresholds { column, .. } => format!("{column}<="),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeaturePlan {
    pub groups: Vec<FeatureGroup>,
}

fn categorical<'t>(table: &'t SampleTable, name: &str) -> Result<(&'t [String], &'t [Option<usize>])> {
    match &table.column(name)?.data {
        ColumnData::Categorical { levels, codes } => Ok((levels, codes)),
        ColumnData::Numeric(_) => Err(Error::Plan(format!("column '{name}' is not categorical"))),
    }
}

impl FeaturePlan {
    pub fn new(groups: Vec<FeatureGroup>) -> Self {
        FeaturePlan { groups }
    }

    /// Checks the plan against the table.
    pub fn validate(&self, table: &SampleTable) -> Result<()> {
        self.group_lengths(table).map(|_| ())
    }

    fn group_lengths(&self, table: &SampleTable) -> Result<Vec<usize>> {
        self.groups
            .iter()
            .map(|g| match g {
                FeatureGroup::Cross { columns } => {
                    if columns.is_empty() {
                        return Err(Error::Plan("cross group without columns".into()));
                    }
                    let mut rows = 1usize;
                    for c in columns {
                        rows *= categorical(table, c)?.0.len();
                    }
                    if rows == 0 {
                        return Err(Error::Plan(format!("cross group '{}' has no categories", g.name())));
                    }
                    Ok(rows)
                }
                FeatureGroup::Indicator { column, category } => {
                    let (levels, _) = categorical(table, column)?;
                    if !levels.contains(category) {
                        return Err(Error::Plan(format!("column '{column}' has no category '{category}'")));
                    }
                    Ok(1)
                }
                FeatureGroup::Thresholds { column, thresholds } => {
                    table.numeric(column)?;
                    if thresholds.is_empty() || thresholds.windows(2).any(|w| !(w[0] < w[1])) {
                        return Err(Error::Plan(format!(
                            "thresholds of '{column}' must be non-empty and strictly increasing"
                        )));
                    }
                    Ok(thresholds.len())
                }
            })
            .collect()
    }

    /// Row range of each group in the featurized matrix.
    pub fn row_ranges(&self, table: &SampleTable) -> Result<Vec<Range<usize>>> {
        let mut start = 0;
        Ok(self
            .group_lengths(table)?
            .into_iter()
            .map(|len| {
                let r = start..start + len;
                start += len;
                r
            })
            .collect())
    }

    /// Human-readable label of every row, e.g. `sex=F,age=18-24`.
    pub fn row_labels(&self, table: &SampleTable) -> Result<Vec<String>> {
        self.validate(table)?;
        let mut labels = Vec::new();
        for g in &self.groups {
            match g {
                FeatureGroup::Cross { columns } => {
                    let mut combos = vec![String::new()];
                    for c in columns {
                        let (levels, _) = categorical(table, c)?;
                        combos = combos
                            .iter()
                            .flat_map(|prefix| {
                                levels.iter().map(move |l| {
                                    if prefix.is_empty() {
                                        format!("{c}={l}")
                                    } else {
                                        format!("{prefix},{c}={l}")
                                    }
                                })
                            })
                            .collect();
                    }
                    labels.extend(combos);
                }
                FeatureGroup::Indicator { column, category } => labels.push(format!("{column}={category}")),
                FeatureGroup::Thresholds { column, thresholds } => {
                    labels.extend(thresholds.iter().map(|a| format!("{column}<={a}")))
                }
            }
        }
        Ok(labels)
    }
}

/// Builds `F` (with missing markers) from the table, one block of rows per plan group.
///
/// A sample with any missing crossed value gets missing markers over its whole group slice.
pub fn featurize(table: &SampleTable, plan: &FeaturePlan) -> Result<SampleMatrix> {
    let ranges = plan.row_ranges(table)?;
    let n = table.n();
    let mut entries = Vec::new();
    let mut missing = Vec::new();

    for (g, range) in plan.groups.iter().zip(ranges) {
        match g {
            FeatureGroup::Cross { columns } => {
                let cols = columns
                    .iter()
                    .map(|c| categorical(table, c))
                    .collect::<Result<Vec<_>>>()?;
                for j in 0..n {
                    let mut offset = Some(0usize);
                    for (levels, codes) in &cols {
                        offset = match (offset, codes[j]) {
                            (Some(o), Some(code)) => Some(o * levels.len() + code),
                            _ => None,
                        };
                    }
                    match offset {
                        Some(o) => entries.push((range.start + o, j, 1.0)),
                        None => missing.extend(range.clone().map(|i| (i, j))),
                    }
                }
            }
            FeatureGroup::Indicator { column, category } => {
                let (levels, codes) = categorical(table, column)?;
                let want = levels.iter().position(|l| l == category).expect("validated");
                for (j, code) in codes.iter().enumerate() {
                    match code {
                        Some(c) if *c == want => entries.push((range.start, j, 1.0)),
                        Some(_) => {}
                        None => missing.push((range.start, j)),
                    }
                }
            }
            FeatureGroup::Thresholds { column, thresholds } => {
                let values = table.numeric(column)?;
                for (j, v) in values.iter().enumerate() {
                    match v {
                        Some(x) => {
                            for (i, a) in thresholds.iter().enumerate() {
                                if x <= a {
                                    entries.push((range.start + i, j, 1.0));
                                }
                            }
                        }
                        None => missing.extend(range.clone().map(|i| (i, j))),
                    }
                }
            }
        }
    }
    let m = plan.group_lengths(table)?.iter().sum();
    SampleMatrix::new(m, n, entries, missing)
}

/// Row means `(1/n) F 1`, each over its non-missing entries only.
pub fn compute_desired(f_full: &SampleMatrix) -> Result<Vec<f64>> {
    let (m, n) = (f_full.rows(), f_full.cols());
    if m == 0 {
        return Err(Error::Empty);
    }
    let mut sums = vec![0.0; m];
    let mut missing = vec![0usize; m];
    for &(i, _, v) in f_full.entries() {
        sums[i] += v;
    }
    for &(i, _) in f_full.missing() {
        missing[i] += 1;
    }
    sums.iter()
        .zip(&missing)
        .enumerate()
        .map(|(i, (&s, &miss))| {
            let known = n - miss;
            if known == 0 {
                Err(Error::InvalidInput(format!("row {i} has no known entries")))
            } else {
                Ok(s / known as f64)
            }
        })
        .collect()
}

/// Replaces every missing `(i, j)` by `f_des[i]` as an explicit entry.
pub fn fill_missing(f: &SampleMatrix, f_des: &[f64]) -> Result<SampleMatrix> {
    if f_des.len() != f.rows() {
        return Err(Error::Dimension {
            expected: f.rows(),
            got: f_des.len(),
        });
    }
    let mut entries = f.entries().to_vec();
    entries.extend(f.missing().iter().map(|&(i, j)| (i, j, f_des[i])));
    SampleMatrix::new(f.rows(), f.cols(), entries, Vec::new())
}
