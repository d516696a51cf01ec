//! JSON problem file.
//!
//! ```json
//! {
//!   "n": 3,
//!   "m": 1,
//!   "matrix": { "rows": 1, "cols": 3, "entries": [[0, 0, 1.0]], "missing": [] },
//!   "blocks": [
//!     { "name": "sex", "rows": [0, 1], "loss": "equality", "params": { "target": [0.5] } }
//!   ],
//!   "regularizer": { "kind": "entropy", "limit": null },
//!   "lambda": 1.0
//! }
//! ```
//!
//! `rows` is the half-open row range `[start, end)` of the block.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Block, BlockLayout, LossSpec, RegularizerSpec, SampleMatrix, WeightingProblem};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    pub matrix: SampleMatrix,
    pub blocks: Vec<BlockRecord>,
    pub regularizer: RegularizerSpec,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub name: String,
    pub rows: [usize; 2],
    #[serde(flatten)]
    pub loss: LossSpec,
}

impl From<&WeightingProblem> for ProblemFile {
    fn from(p: &WeightingProblem) -> Self {
        ProblemFile {
            n: p.n(),
            m: p.m(),
            matrix: p.matrix.clone(),
            blocks: p
                .layout
                .blocks()
                .iter()
                .map(|b| BlockRecord {
                    name: b.name.clone(),
                    rows: [b.start, b.start + b.len],
                    loss: b.loss.clone(),
                })
                .collect(),
            regularizer: p.regularizer.clone(),
            lambda: p.lambda,
        }
    }
}

impl TryFrom<ProblemFile> for WeightingProblem {
    type Error = Error;

    fn try_from(file: ProblemFile) -> Result<Self> {
        if file.matrix.rows() != file.m || file.matrix.cols() != file.n {
            return Err(Error::InvalidInput(format!(
                "header says {}x{} but matrix is {}x{}",
                file.m,
                file.n,
                file.matrix.rows(),
                file.matrix.cols()
            )));
        }
        let blocks = file
            .blocks
            .into_iter()
            .map(|r| {
                if r.rows[1] < r.rows[0] {
                    return Err(Error::InvalidInput(format!("block '{}' has reversed rows", r.name)));
                }
                Ok(Block {
                    name: r.name,
                    start: r.rows[0],
                    len: r.rows[1] - r.rows[0],
                    loss: r.loss,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightingProblem {
            matrix: file.matrix,
            layout: BlockLayout::new(file.m, blocks)?,
            regularizer: file.regularizer,
            lambda: file.lambda,
        })
    }
}

impl WeightingProblem {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProblemFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

pub fn read_problem(path: &Path) -> Result<WeightingProblem> {
    WeightingProblem::from_json(&std::fs::read_to_string(path)?)
}

pub fn write_problem(path: &Path, problem: &WeightingProblem) -> Result<()> {
    std::fs::write(path, problem.to_json()?)?;
    Ok(())
}
