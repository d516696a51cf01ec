//! Problem-definition types shared by the solver, the raking engine and the CLI.

mod file;
mod matrix;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use file::{read_problem, write_problem, ProblemFile};
pub use matrix::SampleMatrix;

/// Tolerance on probability vectors summing to one.
pub const SUM_TOL: f64 = 1e-9;

/// Loss applied to one contiguous block of `f`, carrying that block's desired values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", content = "params", rename_all = "snake_case")]
pub enum LossSpec {
    /// Indicator of `f = target`.
    Equality { target: Vec<f64> },
    /// `scale² ‖f − target‖²`
    LeastSquares { target: Vec<f64>, scale: f64 },
    /// `scale ‖f − target‖₁`
    Absolute { target: Vec<f64>, scale: f64 },
    /// Indicator of `lower ≤ f ≤ upper`.
    Inequality { lower: Vec<f64>, upper: Vec<f64> },
    /// `Σ fᵢ log(fᵢ / targetᵢ)`; the block of `f` must be a distribution.
    Kl { target: Vec<f64> },
}

impl LossSpec {
    pub fn len(&self) -> usize {
        match self {
            LossSpec::Equality { target }
            | LossSpec::LeastSquares { target, .. }
            | LossSpec::Absolute { target, .. }
            | LossSpec::Kl { target } => target.len(),
            LossSpec::Inequality { lower, .. } => lower.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LossSpec::Equality { .. } => "equality",
            LossSpec::LeastSquares { .. } => "least_squares",
            LossSpec::Absolute { .. } => "absolute",
            LossSpec::Inequality { .. } => "inequality",
            LossSpec::Kl { .. } => "kl",
        }
    }

    fn violations(&self, out: &mut Vec<String>) {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            LossSpec::Equality { target } => {
                if !finite(target) {
                    out.push("target has non-finite entries".into());
                }
            }
            LossSpec::LeastSquares { target, scale } | LossSpec::Absolute { target, scale } => {
                if !finite(target) {
                    out.push("target has non-finite entries".into());
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    out.push(format!("scale {scale} must be positive"));
                }
            }
            LossSpec::Inequality { lower, upper } => {
                if lower.len() != upper.len() {
                    out.push(format!(
                        "lower has {} entries but upper has {}",
                        lower.len(),
                        upper.len()
                    ));
                } else if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    out.push("lower bound exceeds upper bound".into());
                }
            }
            LossSpec::Kl { target } => check_distribution("target", target, out),
        }
    }
}

fn check_distribution(label: &str, v: &[f64], out: &mut Vec<String>) {
    if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        out.push(format!("{label} must be strictly positive"));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        out.push(format!("{label} sums to {total}, not 1"));
    }
}

/// Regularizer `r(w)` on the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegularizerSpec {
    /// `Σ wᵢ log wᵢ`, optionally restricted to `1/(κn) ≤ w ≤ κ/n`.
    Entropy {
        #[serde(default)]
        limit: Option<f64>,
    },
    /// `Σ wᵢ log(wᵢ / targetᵢ)`, with the same optional limit.
    KlTarget {
        target: Vec<f64>,
        #[serde(default)]
        limit: Option<f64>,
    },
    Zero,
    /// Indicator of `w ∈ {0, 1/k}ⁿ`: select `k` samples with equal weight.
    Boolean { k: usize },
}

impl RegularizerSpec {
    pub fn is_convex(&self) -> bool {
        !matches!(self, RegularizerSpec::Boolean { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub name: String,
    pub start: usize,
    pub len: usize,
    pub loss: LossSpec,
}

impl Block {
    pub fn rows(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Partition of the `m` rows of `F` into contiguous, loss-carrying blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockLayout {
    blocks: Vec<Block>,
    m: usize,
}

impl BlockLayout {
    /// Blocks must be listed in row order, be disjoint and cover `0..m` exactly.
    pub fn new(m: usize, blocks: Vec<Block>) -> Result<Self> {
        let mut next = 0;
        for b in &blocks {
            if b.start != next {
                return Err(Error::InvalidInput(format!(
                    "block '{}' starts at row {} but row {} is next",
                    b.name, b.start, next
                )));
            }
            if b.len == 0 {
                return Err(Error::InvalidInput(format!("block '{}' is empty", b.name)));
            }
            next += b.len;
        }
        if next != m {
            return Err(Error::InvalidInput(format!(
                "blocks cover {next} rows but the matrix has {m}"
            )));
        }
        Ok(BlockLayout { blocks, m })
    }

    /// Lays the blocks out back to back, each as long as its loss vectors.
    pub fn sequential<S: Into<String>>(losses: impl IntoIterator<Item = (S, LossSpec)>) -> Result<Self> {
        let mut start = 0;
        let mut blocks = Vec::new();
        for (name, loss) in losses {
            let len = loss.len();
            blocks.push(Block {
                name: name.into(),
                start,
                len,
                loss,
            });
            start += len;
        }
        BlockLayout::new(start, blocks)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// `minimize ℓ(Fw, f_des) + λ r(w)` over the probability simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightingProblem {
    pub matrix: SampleMatrix,
    pub layout: BlockLayout,
    pub regularizer: RegularizerSpec,
    pub lambda: f64,
}

impl WeightingProblem {
    pub fn n(&self) -> usize {
        self.matrix.cols()
    }

    pub fn m(&self) -> usize {
        self.matrix.rows()
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_problem(self)
    }

    /// The maximum-entropy problem with the same data: every targeted loss becomes an equality
    /// on its target (inequalities are kept), the regularizer becomes unlimited entropy and
    /// `λ = 1`.
    pub fn max_entropy_relaxation(&self) -> WeightingProblem {
        let blocks = self
            .layout
            .blocks()
            .iter()
            .map(|b| Block {
                loss: match &b.loss {
                    LossSpec::LeastSquares { target, .. }
                    | LossSpec::Absolute { target, .. }
                    | LossSpec::Kl { target } => LossSpec::Equality { target: target.clone() },
                    other => other.clone(),
                },
                ..b.clone()
            })
            .collect();
        WeightingProblem {
            matrix: self.matrix.clone(),
            layout: BlockLayout {
                m: self.layout.m,
                blocks,
            },
            regularizer: RegularizerSpec::Entropy { limit: None },
            lambda: 1.0,
        }
    }
}

/// One failed invariant of a [`WeightingProblem`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Every invariant violation of `p`; empty when the problem can be solved.
pub fn validate_problem(p: &WeightingProblem) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |location: &str, message: String| {
        out.push(Violation {
            location: location.to_string(),
            message,
        })
    };
    let (m, n) = (p.m(), p.n());

    if n == 0 {
        push("matrix", "no samples (n = 0)".into());
    }
    if p.layout.m() != m {
        push(
            "layout",
            format!("layout covers {} rows but the matrix has {m}", p.layout.m()),
        );
    }
    if p.matrix.has_missing() {
        push(
            "matrix",
            format!("{} missing entries must be filled", p.matrix.missing().len()),
        );
    }
    if p.matrix.entries().iter().any(|e| !e.2.is_finite()) {
        push("matrix", "non-finite entries".into());
    }
    if !(p.lambda > 0.0 && p.lambda.is_finite()) {
        push("lambda", format!("lambda {} must be positive", p.lambda));
    }

    for block in p.layout.blocks() {
        let location = format!("block '{}'", block.name);
        let mut msgs = Vec::new();
        if block.loss.len() != block.len {
            msgs.push(format!(
                "loss vectors have {} entries but the block has {} rows",
                block.loss.len(),
                block.len
            ));
        }
        block.loss.violations(&mut msgs);
        if matches!(block.loss, LossSpec::Kl { .. }) && block.start + block.len <= m {
            if let Some(msg) = distribution_property(&p.matrix, block) {
                msgs.push(msg);
            }
        }
        for msg in msgs {
            push(&location, msg);
        }
    }

    let mut msgs = Vec::new();
    match &p.regularizer {
        RegularizerSpec::Entropy { limit } => check_limit(*limit, &mut msgs),
        RegularizerSpec::KlTarget { target, limit } => {
            if target.len() != n {
                msgs.push(format!("target has {} entries but n = {n}", target.len()));
            }
            check_distribution("target", target, &mut msgs);
            check_limit(*limit, &mut msgs);
        }
        RegularizerSpec::Zero => {}
        RegularizerSpec::Boolean { k } => {
            if *k == 0 {
                msgs.push("k must be at least 1".into());
            } else if *k > n {
                msgs.push(format!("k exceeds n ({k} > {n})"));
            }
        }
    }
    for msg in msgs {
        push("regularizer", msg);
    }
    out
}

fn check_limit(limit: Option<f64>, out: &mut Vec<String>) {
    if let Some(kappa) = limit {
        if !(kappa > 1.0 && kappa.is_finite()) {
            out.push(format!("limit {kappa} must exceed 1"));
        }
    }
}

/// Columns restricted to a KL block must be distributions, so that `Fw` is one on the simplex.
fn distribution_property(matrix: &SampleMatrix, block: &Block) -> Option<String> {
    let mut sums = vec![0.0; matrix.cols()];
    for &(i, j, v) in matrix.entries() {
        if block.rows().contains(&i) {
            if !(0.0..=1.0).contains(&v) {
                return Some(format!("entry ({i}, {j}) = {v} is not a probability"));
            }
            sums[j] += v;
        }
    }
    sums.iter()
        .position(|s| (s - 1.0).abs() > SUM_TOL)
        .map(|j| format!("column {j} sums to {} over the block, not 1", sums[j]))
}

/// How a Boolean (selection) solve is initialised.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BooleanInit {
    /// Uniform weights.
    #[default]
    Uniform,
    /// Weights of [`WeightingProblem::max_entropy_relaxation`], then a weighted draw of `k`
    /// samples.
    SampledMaxEntropy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rho: f64,
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub seed: u64,
    pub boolean_init: BooleanInit,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 50.0,
            max_iter: 5000,
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            seed: 0,
            boolean_init: BooleanInit::Uniform,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.rho) {
            return Err(Error::InvalidInput(format!("rho {} must be positive", self.rho)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if !positive(self.eps_abs) || !positive(self.eps_rel) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    Infeasible,
    /// An iterate became non-finite.
    Diverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Final weights (on the simplex; in `{0, 1/k}ⁿ` for Boolean problems).
    pub w: Vec<f64>,
    /// `F w`
    pub f: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub iterations: usize,
    pub primal_residual: Vec<f64>,
    pub dual_residual: Vec<f64>,
    pub status: Status,
    pub objective: f64,
}
