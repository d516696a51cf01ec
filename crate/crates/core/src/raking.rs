//! Raking (iterative proportional fitting) for maximum-entropy weighting with a Boolean,
//! partitioned `F`.
//!
//! Each step is an exact block maximization of the partially maximized dual
//! `gᵖ(ν) = −log 1ᵀexp(−Fᵀν) − νᵀf_des` over the dual variables of one selector, written as
//! the multiplicative primal update
//! `wᵢ ← wᵢ · (desired mass of i's category) / (current mass of i's category)`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::{LossSpec, SampleMatrix, WeightingProblem, SUM_TOL};

/// A Boolean `F` whose selector row ranges each partition the samples into categories.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedProblem {
    m: usize,
    n: usize,
    selectors: Vec<Range<usize>>,
    f_des: Vec<f64>,
    /// `category[s][i]`: row offset (within selector `s`) of sample `i`'s category.
    category: Vec<Vec<usize>>,
}

impl PartitionedProblem {
    pub fn new(matrix: &SampleMatrix, selectors: Vec<Range<usize>>, f_des: Vec<f64>) -> Result<Self> {
        let (m, n) = (matrix.rows(), matrix.cols());
        if f_des.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: f_des.len(),
            });
        }
        if matrix.has_missing() {
            return Err(Error::Partition("matrix has missing entries".into()));
        }
        if let Some(&(i, j, v)) = matrix.entries().iter().find(|e| e.2 != 1.0) {
            return Err(Error::Partition(format!("entry ({i}, {j}) = {v} is not Boolean")));
        }
        let mut owner = vec![usize::MAX; m];
        for (s, range) in selectors.iter().enumerate() {
            if range.is_empty() || range.end > m {
                return Err(Error::Partition(format!("selector {s} has invalid rows {range:?}")));
            }
            for row in range.clone() {
                if owner[row] != usize::MAX {
                    return Err(Error::Partition(format!("row {row} belongs to two selectors")));
                }
                owner[row] = s;
            }
            let slice = &f_des[range.clone()];
            if slice.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Partition(format!("selector {s} has negative desired values")));
            }
            let total: f64 = slice.iter().sum();
            if (total - 1.0).abs() > SUM_TOL {
                return Err(Error::Partition(format!(
                    "desired values of selector {s} sum to {total}, not 1"
                )));
            }
        }

        let mut category = vec![vec![usize::MAX; n]; selectors.len()];
        for &(i, j, _) in matrix.entries() {
            let s = owner[i];
            if s == usize::MAX {
                continue;
            }
            if category[s][j] != usize::MAX {
                return Err(Error::Partition(format!(
                    "sample {j} is in two categories of selector {s}"
                )));
            }
            category[s][j] = i - selectors[s].start;
        }
        for (s, cats) in category.iter().enumerate() {
            if let Some(j) = cats.iter().position(|&c| c == usize::MAX) {
                return Err(Error::Partition(format!("sample {j} has no category in selector {s}")));
            }
        }

        Ok(PartitionedProblem {
            m,
            n,
            selectors,
            f_des,
            category,
        })
    }

    /// Uses every block of an equality-constrained problem as a selector.
    pub fn from_problem(p: &WeightingProblem) -> Result<Self> {
        let mut f_des = Vec::with_capacity(p.m());
        let mut selectors = Vec::new();
        for block in p.layout.blocks() {
            match &block.loss {
                LossSpec::Equality { target } => f_des.extend_from_slice(target),
                other => {
                    return Err(Error::Partition(format!(
                        "block '{}' has a {} loss; raking needs equality targets",
                        block.name,
                        other.kind()
                    )))
                }
            }
            selectors.push(block.rows());
        }
        PartitionedProblem::new(&p.matrix, selectors, f_des)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn selectors(&self) -> &[Range<usize>] {
        &self.selectors
    }

    pub fn f_des(&self) -> &[f64] {
        &self.f_des
    }

    /// Category of sample `i` under selector `s`, as an offset into the selector's rows.
    pub fn category(&self, s: usize, i: usize) -> usize {
        self.category[s][i]
    }

    /// `S_s F w`
    pub fn marginal(&self, s: usize, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.selectors[s].len()];
        for (&c, &wi) in self.category[s].iter().zip(w) {
            out[c] += wi;
        }
        out
    }

    /// `max_s ‖S_s(Fw − f_des)‖∞`
    pub fn marginal_error(&self, w: &[f64]) -> f64 {
        (0..self.selectors.len())
            .flat_map(|s| {
                let target = &self.f_des[self.selectors[s].clone()];
                self.marginal(s, w)
                    .into_iter()
                    .zip(target)
                    .map(|(a, b)| (a - b).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// `(Fᵀν)ᵢ`
    fn column_dot(&self, nu: &[f64], i: usize) -> f64 {
        self.selectors
            .iter()
            .enumerate()
            .map(|(s, r)| nu[r.start + self.category[s][i]])
            .sum()
    }
}

/// Dual variable `ν` of `Fw = f_des`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    pub nu: Vec<f64>,
}

impl DualState {
    pub fn zero(m: usize) -> Self {
        DualState { nu: vec![0.0; m] }
    }

    /// `w(ν) = exp(−Fᵀν) / 1ᵀexp(−Fᵀν)`
    pub fn implied_weights(&self, pp: &PartitionedProblem) -> Vec<f64> {
        let exponents: Vec<f64> = (0..pp.n).map(|i| -pp.column_dot(&self.nu, i)).collect();
        let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let unnormalized: Vec<f64> = exponents.iter().map(|a| (a - shift).exp()).collect();
        let total: f64 = unnormalized.iter().sum();
        unnormalized.into_iter().map(|x| x / total).collect()
    }
}

/// `gᵖ(ν) = −log(1ᵀexp(−Fᵀν)) − νᵀf_des`, with a shifted log-sum-exp.
pub fn dual_objective(pp: &PartitionedProblem, nu: &[f64]) -> f64 {
    let exponents: Vec<f64> = (0..pp.n).map(|i| -pp.column_dot(nu, i)).collect();
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = shift + exponents.iter().map(|a| (a - shift).exp()).sum::<f64>().ln();
    let linear: f64 = nu.iter().zip(&pp.f_des).map(|(a, b)| a * b).sum();
    -lse - linear
}

/// Post-stratifies `w` on selector `s`: afterwards that selector's marginal equals its
/// desired values.
pub fn rake_step(pp: &PartitionedProblem, w: &[f64], s: usize) -> Result<Vec<f64>> {
    if w.len() != pp.n {
        return Err(Error::Dimension {
            expected: pp.n,
            got: w.len(),
        });
    }
    if s >= pp.selectors.len() {
        return Err(Error::InvalidInput(format!("no selector {s}")));
    }
    let range = pp.selectors[s].clone();
    let marginal = pp.marginal(s, w);
    let factors = marginal
        .iter()
        .zip(&pp.f_des[range])
        .enumerate()
        .map(|(c, (&have, &want))| {
            if have > 0.0 {
                Ok(want / have)
            } else if want > 0.0 {
                Err(Error::UnmatchableMarginal {
                    selector: s,
                    category: c,
                    desired: want,
                })
            } else {
                // empty category that should stay empty
                Ok(1.0)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(w.iter()
        .zip(&pp.category[s])
        .map(|(&wi, &c)| wi * factors[c])
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RakeResult {
    pub weights: Vec<f64>,
    /// Full round-robin passes performed.
    pub passes: usize,
    /// `max_s ‖S_s(Fw − f_des)‖∞` after the last pass.
    pub max_error: f64,
    pub converged: bool,
    /// `(selector, category)` pairs with zero desired mass but samples present; those weights
    /// are driven to zero.
    pub degenerate: Vec<(usize, usize)>,
}

/// Round-robin raking from uniform weights until every marginal is within `tol`.
pub fn rake(pp: &PartitionedProblem, max_passes: usize, tol: f64) -> Result<RakeResult> {
    let mut degenerate = Vec::new();
    for (s, range) in pp.selectors.iter().enumerate() {
        let mut counts = vec![0usize; range.len()];
        for &c in &pp.category[s] {
            counts[c] += 1;
        }
        for (c, (&count, &want)) in counts.iter().zip(&pp.f_des[range.clone()]).enumerate() {
            if count == 0 && want > 0.0 {
                return Err(Error::UnmatchableMarginal {
                    selector: s,
                    category: c,
                    desired: want,
                });
            }
            if count > 0 && want == 0.0 {
                degenerate.push((s, c));
            }
        }
    }

    let mut w = vec![1.0 / pp.n as f64; pp.n];
    let mut passes = 0;
    let mut max_error = pp.marginal_error(&w);
    let mut converged = false;
    while passes < max_passes {
        for s in 0..pp.selectors.len() {
            w = rake_step(pp, &w, s)?;
        }
        passes += 1;
        max_error = pp.marginal_error(&w);
        if max_error <= tol {
            converged = true;
            break;
        }
    }
    Ok(RakeResult {
        weights: w,
        passes,
        max_error,
        converged,
        degenerate,
    })
}
