//! Reference oracles and synthetic data for the repweight test suites.
//!
//! Nothing here calls into `repweight`: every oracle is an independent route to the value it
//! checks (bisection, grid search, enumeration, dense linear algebra, Newton on the dual).

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Lambert-W on `x ≥ 0` by bisection on `w eʷ = x`, to an absolute bracket width of `tol`.
pub fn lambert_w_bisection(x: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64.max(x.ln().max(1.0)));
    while hi * hi.exp() < x {
        hi *= 2.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizer of a unimodal scalar function on `[lo, hi]` by ternary search.
pub fn ternary_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..300 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest value of `f` on the grid `center ± halfwidth` with spacing `step`.
pub fn grid_min(f: impl Fn(f64) -> f64, center: f64, halfwidth: f64, step: f64) -> f64 {
    let count = (2.0 * halfwidth / step).round() as i64;
    (0..=count)
        .map(|k| f(center - halfwidth + k as f64 * step))
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean projection of a 3-vector onto the 2-simplex by successively refined grids.
pub fn simplex_projection_grid(v: [f64; 3]) -> [f64; 3] {
    let dist = |a: f64, b: f64| {
        let c = 1.0 - a - b;
        (a - v[0]).powi(2) + (b - v[1]).powi(2) + (c - v[2]).powi(2)
    };
    let (mut ca, mut cb, mut half) = (0.5, 0.5, 0.5);
    let steps = 100;
    while half > 1e-10 {
        let mut best = (f64::INFINITY, ca, cb);
        for i in 0..=2 * steps {
            let a = ca - half + half * i as f64 / steps as f64;
            if !(0.0..=1.0).contains(&a) {
                continue;
            }
            for j in 0..=2 * steps {
                let b = cb - half + half * j as f64 / steps as f64;
                if b < 0.0 || a + b > 1.0 {
                    continue;
                }
                let d = dist(a, b);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        ca = best.1;
        cb = best.2;
        half /= 10.0;
    }
    [ca, cb, 1.0 - ca - cb]
}

/// Largest `Σ_{i∈S} vᵢ` over all `|S| = k`, by enumerating every subset.
pub fn best_k_subset_sum(v: &[f64], k: usize) -> f64 {
    let n = v.len();
    assert!(n <= 20);
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let s: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| v[i]).sum();
        best = best.max(s);
    }
    best
}

/// Dense `A x = b` by LU decomposition.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let x = m.lu().solve(&DVector::from_column_slice(b)).expect("nonsingular");
    x.iter().copied().collect()
}

/// Dense `[[2I, Fᵀ], [F, −I]]` for dense rows `f` (`m × n`).
pub fn dense_kkt(f: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let m = f.len();
    let mut k = vec![vec![0.0; n + m]; n + m];
    for j in 0..n {
        k[j][j] = 2.0;
    }
    for i in 0..m {
        k[n + i][n + i] = -1.0;
        for j in 0..n {
            k[n + i][j] = f[i][j];
            k[j][n + i] = f[i][j];
        }
    }
    k
}

/// `gᵖ(ν) = −log Σᵢ exp(−fᵢᵀν) − νᵀf_des` and the implied weights, for dense rows `f`.
pub fn dual_value_and_weights(f: &[Vec<f64>], f_des: &[f64], nu: &[f64]) -> (f64, Vec<f64>) {
    let n = f.first().map_or(0, Vec::len);
    let a: Vec<f64> = (0..n)
        .map(|j| -f.iter().zip(nu).map(|(row, v)| row[j] * v).sum::<f64>())
        .collect();
    let shift = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = a.iter().map(|x| (x - shift).exp()).collect();
    let total: f64 = e.iter().sum();
    let lse = shift + total.ln();
    let lin: f64 = nu.iter().zip(f_des).map(|(x, y)| x * y).sum();
    (-lse - lin, e.into_iter().map(|x| x / total).collect())
}

/// Maximum-entropy weights with `F w = f_des`, by damped Newton ascent on the concave dual
/// `gᵖ(ν)` (pseudo-inverse steps, since the Hessian is singular for partitioned `F`).
pub fn max_entropy_dual_newton(f: &[Vec<f64>], f_des: &[f64]) -> Vec<f64> {
    let m = f.len();
    let n = f[0].len();
    let mut nu = vec![0.0; m];
    let (mut value, mut w) = dual_value_and_weights(f, f_des, &nu);
    for _ in 0..500 {
        let fw: Vec<f64> = f.iter().map(|row| row.iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
        let grad: Vec<f64> = fw.iter().zip(f_des).map(|(a, b)| a - b).collect();
        if grad.iter().fold(0.0f64, |a, g| a.max(g.abs())) < 1e-15 {
            break;
        }
        // covariance C = F diag(w) Fᵀ − (Fw)(Fw)ᵀ
        let cov = DMatrix::from_fn(m, m, |i, k| {
            (0..n).map(|j| f[i][j] * f[k][j] * w[j]).sum::<f64>() - fw[i] * fw[k]
        });
        let svd = cov.svd(true, true);
        let step = svd
            .solve(&DVector::from_column_slice(&grad), 1e-13)
            .expect("svd solve");
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = nu.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            let (v, wt) = dual_value_and_weights(f, f_des, &trial);
            if v >= value - 1e-15 {
                improved = v > value;
                nu = trial;
                value = v;
                w = wt;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    w
}

/// Categorical codes of `n` samples over several attributes; every category is nonempty.
#[derive(Clone, Debug)]
pub struct Partition {
    pub levels: Vec<usize>,
    /// `codes[attr][sample]`
    pub codes: Vec<Vec<usize>>,
}

impl Partition {
    /// Categories drawn with random (unequal) frequencies; the first samples cover every
    /// category once.
    pub fn random<R: Rng>(n: usize, levels: &[usize], rng: &mut R) -> Self {
        let codes = levels
            .iter()
            .map(|&l| {
                assert!(l <= n);
                let probs: Vec<f64> = (0..l).map(|_| 0.2 + rng.random::<f64>()).collect();
                let total: f64 = probs.iter().sum();
                (0..n)
                    .map(|j| {
                        if j < l {
                            return j;
                        }
                        let mut u = rng.random::<f64>() * total;
                        for (c, p) in probs.iter().enumerate() {
                            if u < *p {
                                return c;
                            }
                            u -= p;
                        }
                        l - 1
                    })
                    .collect()
            })
            .collect();
        Partition {
            levels: levels.to_vec(),
            codes,
        }
    }

    pub fn n(&self) -> usize {
        self.codes.first().map_or(0, Vec::len)
    }

    pub fn m(&self) -> usize {
        self.levels.iter().sum()
    }

    /// Row offset of each attribute's block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.levels
            .iter()
            .map(|l| {
                let o = acc;
                acc += l;
                o
            })
            .collect()
    }

    /// One-hot `(row, col, 1.0)` triplets, attribute blocks stacked in order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let offsets = self.offsets();
        let mut out = Vec::with_capacity(self.n() * self.levels.len());
        for (a, codes) in self.codes.iter().enumerate() {
            for (j, &c) in codes.iter().enumerate() {
                out.push((offsets[a] + c, j, 1.0));
            }
        }
        out
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n()]; self.m()];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Marginals `F w`.
    pub fn marginals(&self, w: &[f64]) -> Vec<f64> {
        let offsets = self.offsets();
        let mut out = vec![0.0; self.m()];
        for (a, codes) in self.codes.iter().enumerate() {
            for (j, &c) in codes.iter().enumerate() {
                out[offsets[a] + c] += w[j];
            }
        }
        out
    }
}

/// Strictly positive weights `∝ exp(spread · N(0, 1))`, summing to one.
pub fn random_positive_weights<R: Rng>(n: usize, spread: f64, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, spread).unwrap();
    let raw: Vec<f64> = (0..n).map(|_| normal.sample(rng).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// A synthetic population: categorical attributes plus a numeric column whose mean depends
/// additively on the categories.
#[derive(Clone, Debug)]
pub struct Population {
    pub names: Vec<String>,
    pub partition: Partition,
    pub numeric: Vec<f64>,
}

impl Population {
    pub fn generate<R: Rng>(n: usize, levels: &[usize], rng: &mut R) -> Self {
        let partition = Partition::random(n, levels, rng);
        let effect = Normal::new(0.0, 1.0).unwrap();
        let effects: Vec<Vec<f64>> = levels
            .iter()
            .map(|&l| (0..l).map(|_| 2.0 * effect.sample(rng)).collect())
            .collect();
        let numeric = (0..n)
            .map(|j| {
                let base: f64 = partition
                    .codes
                    .iter()
                    .zip(&effects)
                    .map(|(codes, e)| e[codes[j]])
                    .sum();
                170.0 + base + effect.sample(rng)
            })
            .collect();
        Population {
            names: (0..levels.len()).map(|a| format!("attr{a}")).collect(),
            partition,
            numeric,
        }
    }

    /// CSV with one categorical column per attribute (values `c0`, `c1`, ...) and `height`.
    pub fn write_csv(&self, path: &Path, rows: Option<&[usize]>) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{},height", self.names.join(","))?;
        let all: Vec<usize> = (0..self.partition.n()).collect();
        for &j in rows.unwrap_or(&all) {
            let cats: Vec<String> = self
                .partition
                .codes
                .iter()
                .map(|c| format!("c{}", c[j]))
                .collect();
            writeln!(out, "{},{}", cats.join(","), self.numeric[j])?;
        }
        out.flush()
    }
}

/// A numeric column `170 + slope · scoreᵢ + N(0, 1)`, so that it moves with whatever direction
/// produced the scores.
pub fn column_along<R: Rng>(scores: &[f64], slope: f64, rng: &mut R) -> Vec<f64> {
    let noise = Normal::new(0.0, 1.0).unwrap();
    scores.iter().map(|s| 170.0 + slope * s + noise.sample(rng)).collect()
}

/// Chi-square statistic of observed counts against expected probabilities.
pub fn chi_square(counts: &[usize], probs: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

/// Upper 1% critical values of the chi-square distribution for 1..=20 degrees of freedom.
pub const CHI2_99: [f64; 20] = [
    6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209, 24.725, 26.217,
    27.688, 29.141, 30.578, 32.000, 33.409, 34.805, 36.191, 37.566,
];
