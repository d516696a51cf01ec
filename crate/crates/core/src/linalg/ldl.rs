//! Sparse `LDLᵀ` for quasi-definite matrices and the cached KKT system of the weight update.
//!
//! The numeric phase is the up-looking row-by-row algorithm driven by the elimination tree
//! (the same scheme as QDLDL). Quasi-definite matrices admit this factorization with a
//! diagonal `D` under any symmetric permutation, so no pivoting is performed.

use super::csc::CscMatrix;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// `LDLᵀ` factor of a symmetric matrix given by its upper triangle.
#[derive(Clone, Debug)]
pub struct LdlFactor {
    dim: usize,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    d: Vec<f64>,
    d_inv: Vec<f64>,
}

impl LdlFactor {
    /// Factorizes the symmetric matrix whose upper triangle (diagonal included) is `upper`.
    pub fn new(upper: &CscMatrix) -> Result<Self> {
        let dim = upper.ncols;
        if upper.nrows != dim {
            return Err(Error::Factorization("matrix is not square".into()));
        }
        if upper.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization("non-finite matrix entry".into()));
        }

        // symbolic: elimination tree and column counts of L
        let mut etree = vec![NONE; dim];
        let mut l_nz = vec![0usize; dim];
        let mut work = vec![NONE; dim];
        for j in 0..dim {
            work[j] = j;
            for (i, _) in upper.column(j) {
                if i > j {
                    return Err(Error::Factorization("input is not upper triangular".into()));
                }
                let mut i = i;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    l_nz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }

        let mut l_ptr = vec![0usize; dim + 1];
        for i in 0..dim {
            l_ptr[i + 1] = l_ptr[i] + l_nz[i];
        }
        let total = l_ptr[dim];
        let mut l_idx = vec![0usize; total];
        let mut l_val = vec![0.0; total];
        let mut d = vec![0.0; dim];
        let mut d_inv = vec![0.0; dim];

        // numeric
        let mut y_vals = vec![0.0; dim];
        let mut y_used = vec![false; dim];
        let mut y_idx = Vec::with_capacity(dim);
        let mut elim = Vec::with_capacity(dim);
        let mut next_space = l_ptr[..dim].to_vec();

        for k in 0..dim {
            y_idx.clear();
            let mut has_diag = false;
            for (b, val) in upper.column(k) {
                if b == k {
                    d[k] = val;
                    has_diag = true;
                    continue;
                }
                y_vals[b] = val;
                if y_used[b] {
                    continue;
                }
                y_used[b] = true;
                elim.clear();
                elim.push(b);
                let mut next = etree[b];
                while next != NONE && next < k {
                    if y_used[next] {
                        break;
                    }
                    y_used[next] = true;
                    elim.push(next);
                    next = etree[next];
                }
                while let Some(idx) = elim.pop() {
                    y_idx.push(idx);
                }
            }
            if !has_diag {
                return Err(Error::Factorization(format!("missing diagonal entry {k}")));
            }

            for &c in y_idx.iter().rev() {
                let yc = y_vals[c];
                let end = next_space[c];
                for p in l_ptr[c]..end {
                    y_vals[l_idx[p]] -= l_val[p] * yc;
                }
                let lkc = yc * d_inv[c];
                l_idx[end] = k;
                l_val[end] = lkc;
                d[k] -= yc * lkc;
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_used[c] = false;
            }

            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(Error::Factorization(format!("zero or non-finite pivot at {k}")));
            }
            d_inv[k] = 1.0 / d[k];
        }

        Ok(LdlFactor {
            dim,
            l_ptr,
            l_idx,
            l_val,
            d,
            d_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn l_nnz(&self) -> usize {
        self.l_val.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }

    /// Solves in place: `x ← (LDLᵀ)⁻¹ x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for i in 0..self.dim {
            let xi = x[i];
            if xi != 0.0 {
                for p in self.l_ptr[i]..self.l_ptr[i + 1] {
                    x[self.l_idx[p]] -= self.l_val[p] * xi;
                }
            }
        }
        for (xi, di) in x.iter_mut().zip(&self.d_inv) {
            *xi *= di;
        }
        for i in (0..self.dim).rev() {
            let mut acc = x[i];
            for p in self.l_ptr[i]..self.l_ptr[i + 1] {
                acc -= self.l_val[p] * x[self.l_idx[p]];
            }
            x[i] = acc;
        }
    }
}

/// Cached factorization of `M = [[2I, Fᵀ], [F, −I]]`, of size `(n + m) × (n + m)`.
#[derive(Clone, Debug)]
pub struct KktFactor {
    m: usize,
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `iperm[old] = new`
    iperm: Vec<usize>,
    ldl: LdlFactor,
    // full symmetric M in original ordering, for residual refinement
    kkt: CscMatrix,
}

/// Factorizes the KKT matrix built from the `m × n` matrix `f`.
pub fn kkt_factorize(f: &CscMatrix) -> Result<KktFactor> {
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("non-finite entry in F".into()));
    }
    let (m, n) = (f.nrows, f.ncols);
    let dim = n + m;

    // Eliminate the larger identity block first; its Schur complement lands on the smaller one.
    let perm: Vec<usize> = if m <= n {
        (0..dim).collect()
    } else {
        (n..dim).chain(0..n).collect()
    };
    let mut iperm = vec![0usize; dim];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }

    let mut full = Vec::with_capacity(dim + 2 * f.nnz());
    let mut upper = Vec::with_capacity(dim + f.nnz());
    for j in 0..n {
        full.push((j, j, 2.0));
        upper.push((iperm[j], iperm[j], 2.0));
    }
    for i in 0..m {
        full.push((n + i, n + i, -1.0));
        upper.push((iperm[n + i], iperm[n + i], -1.0));
    }
    for j in 0..n {
        for (i, v) in f.column(j) {
            full.push((n + i, j, v));
            full.push((j, n + i, v));
            let (a, b) = (iperm[j], iperm[n + i]);
            upper.push((a.min(b), a.max(b), v));
        }
    }
    let upper = CscMatrix::from_triplets(dim, dim, &upper);
    let ldl = LdlFactor::new(&upper)?;
    Ok(KktFactor {
        m,
        n,
        perm,
        iperm,
        ldl,
        kkt: CscMatrix::from_triplets(dim, dim, &full),
    })
}

/// Solves `M x = rhs` with the cached factor.
pub fn kkt_solve(factor: &KktFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    factor.solve(rhs)
}

impl KktFactor {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Symmetric elimination order, `permutation()[k]` is the original index eliminated k-th.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.kkt
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let dim = self.n + self.m;
        if rhs.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: rhs.len(),
            });
        }
        let mut x = vec![0.0; dim];
        let mut work = vec![0.0; dim];
        self.solve_into(rhs, &mut x, &mut work);
        Ok(x)
    }

    /// Allocation-free solve; `work` must have length `n + m`.
    pub fn solve_into(&self, rhs: &[f64], x: &mut [f64], work: &mut [f64]) {
        self.permuted_solve(rhs, x, work);

        // Two rounds of iterative refinement bring the residual to roundoff level.
        let scale = rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        for _ in 0..2 {
            let mut residual = self.kkt.matvec(x);
            let mut worst = 0.0f64;
            for (r, b) in residual.iter_mut().zip(rhs) {
                *r = b - *r;
                worst = worst.max(r.abs());
            }
            if worst <= 1e-14 * scale {
                break;
            }
            let mut correction = vec![0.0; x.len()];
            self.permuted_solve(&residual, &mut correction, work);
            for (xi, ci) in x.iter_mut().zip(&correction) {
                *xi += ci;
            }
        }
    }

    fn permuted_solve(&self, rhs: &[f64], x: &mut [f64], work: &mut [f64]) {
        for (new, &old) in self.perm.iter().enumerate() {
            work[new] = rhs[old];
        }
        self.ldl.solve_in_place(work);
        for (old, &new) in self.iperm.iter().enumerate() {
            x[old] = work[new];
        }
    }
}
