//! Config to problem: load tables, featurize, resolve targets, fill missing entries.

use anyhow::{anyhow, bail, Context, Result};
use repweight::ingest::{compute_desired, featurize, fill_missing, load_csv, FeaturePlan, SampleTable};
use repweight::{Block, BlockLayout, LossSpec, SampleMatrix, WeightingProblem};

use crate::config::{GroupConfig, LossKind, Run, TargetSpec, FROM_DATA};

pub struct Prepared {
    /// Row labels of `F`, e.g. `sex=F`.
    pub labels: Vec<String>,
    pub problem: WeightingProblem,
    /// Entries of the sample's `F` that were missing and filled with desired values.
    pub filled: usize,
}

pub fn load_tables(run: &Run) -> Result<(SampleTable, Option<SampleTable>)> {
    let schema = run.schema();
    let input = run.resolve(&run.config.input);
    let mut sample =
        load_csv(&input, &schema).with_context(|| format!("cannot load {}", input.display()))?;
    let reference = match &run.config.reference {
        Some(path) => {
            let path = run.resolve(path);
            let reference =
                load_csv(&path, &schema).with_context(|| format!("cannot load {}", path.display()))?;
            sample.conform_levels(&reference)?;
            Some(reference)
        }
        None => None,
    };
    Ok((sample, reference))
}

pub fn feature_plan(run: &Run) -> Result<FeaturePlan> {
    if run.config.groups.is_empty() {
        bail!("config has no feature groups");
    }
    Ok(FeaturePlan::new(run.config.groups.iter().map(|g| g.feature.clone()).collect()))
}

/// Builds the weighting problem described by `run`.
pub fn prepare(run: &Run) -> Result<Prepared> {
    let (sample, reference) = load_tables(run)?;
    let plan = feature_plan(run)?;
    plan.validate(&sample)?;
    let f = featurize(&sample, &plan)?;
    let ranges = plan.row_ranges(&sample)?;
    let labels = plan.row_labels(&sample)?;

    let desired = match &reference {
        Some(table) => Some(compute_desired(&featurize(table, &plan)?)?),
        None => None,
    };

    let mut blocks = Vec::with_capacity(ranges.len());
    for (group, range) in run.config.groups.iter().zip(&ranges) {
        let name = group.feature.name();
        let from_data = desired.as_ref().map(|d| &d[range.clone()]);
        let loss = group_loss(group, range.len(), from_data).with_context(|| format!("group '{name}'"))?;
        blocks.push(Block {
            name,
            start: range.start,
            len: range.len(),
            loss,
        });
    }
    let layout = BlockLayout::new(f.rows(), blocks)?;

    let filled = f.missing().len();
    let matrix = if filled > 0 {
        let fill = match &desired {
            Some(d) => d.clone(),
            None => compute_desired(&f)?,
        };
        fill_missing(&f, &fill)?
    } else {
        f
    };

    let problem = WeightingProblem {
        matrix,
        layout,
        regularizer: run.config.regularizer.clone(),
        lambda: run.config.lambda,
    };
    let violations = problem.validate();
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("  {}: {}", v.location, v.message)).collect();
        bail!("invalid problem:\n{}", lines.join("\n"));
    }
    Ok(Prepared {
        labels,
        problem,
        filled,
    })
}

fn explicit_or_data(target: &TargetSpec, len: usize, from_data: Option<&[f64]>) -> Result<Vec<f64>> {
    match target {
        TargetSpec::Keyword(k) if k == FROM_DATA => from_data
            .map(<[f64]>::to_vec)
            .ok_or_else(|| anyhow!("'{FROM_DATA}' targets need a reference table")),
        TargetSpec::Keyword(k) => bail!("unknown target '{k}' (expected '{FROM_DATA}' or a list)"),
        TargetSpec::Values(v) => {
            if v.len() != len {
                bail!("target has {} values but the group has {len} rows", v.len());
            }
            Ok(v.clone())
        }
    }
}

fn check_bound(v: &[f64], len: usize, which: &str) -> Result<()> {
    if v.len() != len {
        bail!("{which} has {} values but the group has {len} rows", v.len());
    }
    Ok(())
}

fn group_loss(group: &GroupConfig, len: usize, from_data: Option<&[f64]>) -> Result<LossSpec> {
    let scale = group.scale.unwrap_or(1.0);
    Ok(match group.loss {
        LossKind::Equality => LossSpec::Equality {
            target: explicit_or_data(&group.target, len, from_data)?,
        },
        LossKind::LeastSquares => LossSpec::LeastSquares {
            target: explicit_or_data(&group.target, len, from_data)?,
            scale,
        },
        LossKind::Absolute => LossSpec::Absolute {
            target: explicit_or_data(&group.target, len, from_data)?,
            scale,
        },
        LossKind::Kl => LossSpec::Kl {
            target: explicit_or_data(&group.target, len, from_data)?,
        },
        LossKind::Inequality => match (&group.lower, &group.upper, group.width) {
            (Some(lower), Some(upper), _) => {
                check_bound(lower, len, "lower")?;
                check_bound(upper, len, "upper")?;
                LossSpec::Inequality {
                    lower: lower.clone(),
                    upper: upper.clone(),
                }
            }
            (None, None, Some(width)) => {
                let target = explicit_or_data(&group.target, len, from_data)?;
                LossSpec::Inequality {
                    lower: target.iter().map(|t| t - width).collect(),
                    upper: target.iter().map(|t| t + width).collect(),
                }
            }
            _ => bail!("inequality groups need both 'lower' and 'upper', or a 'width'"),
        },
    })
}

/// Full-data features of `table` with missing entries filled by row means.
pub fn filled_features(table: &SampleTable, plan: &FeaturePlan) -> Result<SampleMatrix> {
    let f = featurize(table, plan)?;
    if f.has_missing() {
        let means = compute_desired(&f)?;
        Ok(fill_missing(&f, &means)?)
    } else {
        Ok(f)
    }
}
