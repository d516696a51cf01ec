//! Consensus ADMM for the representative sample weighting problem.
//!
//! The weights are replicated into `w` (seen by the loss through `f = Fw`), `w̃` (seen by the
//! regularizer) and `w̄` (constrained to the probability simplex). Each iteration runs
//!
//! ```text
//! f  ← prox_{ℓ/ρ}(Fw − y)               block by block
//! w̃  ← prox_{(λ/ρ) r}(w − z)
//! w̄  ← Π(w − u)
//! w  ← argmin ‖f − Fw + y‖² + ‖w̃ − w + z‖² + ‖w̄ − w + u‖²   (cached KKT solve)
//! y  ← y + f − Fw
//! z  ← z + w̃ − w
//! u  ← u + w̄ − w
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{kkt_factorize, project_simplex, CscMatrix, KktFactor};
use crate::model::{
    BooleanInit, LossSpec, RegularizerSpec, Solution, SolverConfig, Status, WeightingProblem,
};
use crate::prox::{prox_loss, prox_regularizer, ProxStep};
use crate::sampling::sample_without_replacement;

/// Indicators count as satisfied within this distance.
pub const INDICATOR_TOL: f64 = 1e-6;
/// Infeasibility: the best primal residual must improve by this much ...
pub const STAGNATION_IMPROVEMENT: f64 = 1e-10;
/// ... at least once every this many iterations.
pub const STAGNATION_WINDOW: usize = 100;
/// Boolean runs stop once the selected support is unchanged for this many iterations.
pub const SUPPORT_PATIENCE: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct IterateState {
    pub f: Vec<f64>,
    pub w: Vec<f64>,
    pub w_tilde: Vec<f64>,
    pub w_bar: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub iteration: usize,
}

impl IterateState {
    fn is_finite(&self) -> bool {
        [&self.f, &self.w, &self.w_tilde, &self.w_bar, &self.y, &self.z, &self.u]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Problem data prepared for iteration: the compressed matrix and the cached KKT factor.
pub struct AdmmSolver<'a> {
    problem: &'a WeightingProblem,
    config: SolverConfig,
    matrix: CscMatrix,
    factor: KktFactor,
}

impl<'a> AdmmSolver<'a> {
    pub fn new(problem: &'a WeightingProblem, config: SolverConfig) -> Result<Self> {
        let violations = problem.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidProblem(violations));
        }
        config.validate()?;
        let matrix = problem.matrix.to_csc()?;
        let factor = kkt_factorize(&matrix)?;
        Ok(AdmmSolver {
            problem,
            config,
            matrix,
            factor,
        })
    }

    /// `w = w̃ = w̄ = 1/n`, `f = Fw`, zero duals.
    pub fn uniform_state(&self) -> IterateState {
        let n = self.problem.n();
        self.state_from_weights(vec![1.0 / n as f64; n])
    }

    pub fn state_from_weights(&self, w: Vec<f64>) -> IterateState {
        let (m, n) = (self.problem.m(), self.problem.n());
        IterateState {
            f: self.matrix.matvec(&w),
            w_tilde: w.clone(),
            w_bar: w.clone(),
            w,
            y: vec![0.0; m],
            z: vec![0.0; n],
            u: vec![0.0; n],
            iteration: 0,
        }
    }

    fn initial_state(&self) -> Result<IterateState> {
        match (&self.problem.regularizer, self.config.boolean_init) {
            (RegularizerSpec::Boolean { k }, BooleanInit::SampledMaxEntropy) => {
                let relaxed = self.problem.max_entropy_relaxation();
                let weights = solve(&relaxed, &self.config)?.w;
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
                let picked = sample_without_replacement(&weights, *k, &mut rng)?;
                let mut w = vec![0.0; self.problem.n()];
                for i in picked {
                    w[i] = 1.0 / *k as f64;
                }
                Ok(self.state_from_weights(w))
            }
            _ => Ok(self.uniform_state()),
        }
    }

    /// One pass of the seven updates. Returns `(primal, dual, eps_primal, eps_dual)`.
    pub fn step(&self, s: &mut IterateState) -> Result<(f64, f64, f64, f64)> {
        let p = self.problem;
        let rho = self.config.rho;
        let (m, n) = (p.m(), p.n());

        let fw = self.matrix.matvec(&s.w);
        let loss_step = ProxStep::new(1.0 / rho)?;
        for block in p.layout.blocks() {
            let r = block.rows();
            let v: Vec<f64> = fw[r.clone()].iter().zip(&s.y[r.clone()]).map(|(a, b)| a - b).collect();
            let fx = prox_loss(&block.loss, &v, loss_step)?;
            s.f[r].copy_from_slice(&fx);
        }

        let v: Vec<f64> = s.w.iter().zip(&s.z).map(|(a, b)| a - b).collect();
        s.w_tilde = prox_regularizer(&p.regularizer, &v, ProxStep::new(p.lambda / rho)?)?;

        let v: Vec<f64> = s.w.iter().zip(&s.u).map(|(a, b)| a - b).collect();
        s.w_bar = project_simplex(&v)?;

        let fy: Vec<f64> = s.f.iter().zip(&s.y).map(|(a, b)| a + b).collect();
        let mut rhs = vec![0.0; n + m];
        self.matrix.mul_t_vec(&fy, &mut rhs[..n]);
        for j in 0..n {
            rhs[j] += s.w_tilde[j] + s.z[j] + s.w_bar[j] + s.u[j];
        }
        let mut sol = vec![0.0; n + m];
        let mut work = vec![0.0; n + m];
        self.factor.solve_into(&rhs, &mut sol, &mut work);
        sol.truncate(n);
        let w_prev = std::mem::replace(&mut s.w, sol);

        let fw = self.matrix.matvec(&s.w);
        let dw: Vec<f64> = s.w.iter().zip(&w_prev).map(|(a, b)| a - b).collect();
        let fdw = self.matrix.matvec(&dw);

        let mut r_pri = 0.0;
        for i in 0..m {
            let r = s.f[i] - fw[i];
            s.y[i] += r;
            r_pri += r * r;
        }
        for j in 0..n {
            let rz = s.w_tilde[j] - s.w[j];
            let ru = s.w_bar[j] - s.w[j];
            s.z[j] += rz;
            s.u[j] += ru;
            r_pri += rz * rz + ru * ru;
        }
        s.iteration += 1;

        let primal = r_pri.sqrt();
        let dual = rho * (norm_sq(&fdw) + 2.0 * norm_sq(&dw)).sqrt();

        let sqrt_dim = ((m + 2 * n) as f64).sqrt();
        let lhs_norm = (norm_sq(&s.f) + norm_sq(&s.w_tilde) + norm_sq(&s.w_bar)).sqrt();
        let rhs_norm = (norm_sq(&fw) + 2.0 * norm_sq(&s.w)).sqrt();
        let dual_norm = (norm_sq(&s.y) + norm_sq(&s.z) + norm_sq(&s.u)).sqrt();
        let eps_pri = sqrt_dim * self.config.eps_abs + self.config.eps_rel * lhs_norm.max(rhs_norm);
        let eps_dual = sqrt_dim * self.config.eps_abs + self.config.eps_rel * rho * dual_norm;
        Ok((primal, dual, eps_pri, eps_dual))
    }

    pub fn solve(&self) -> Result<Solution> {
        let state = self.initial_state()?;
        self.solve_from(state)
    }

    pub fn solve_from(&self, mut s: IterateState) -> Result<Solution> {
        let boolean = !self.problem.regularizer.is_convex();
        let mut primal_hist = Vec::new();
        let mut dual_hist = Vec::new();

        let mut status = Status::MaxIterations;
        let mut best_primal = f64::INFINITY;
        let mut best_primal_iter = 0;

        // Boolean bookkeeping: best selection seen and how long the support has been stable.
        let mut best_selection: Option<(f64, Vec<f64>)> = None;
        let mut support: Vec<bool> = Vec::new();
        let mut stable = 0;
        let mut last_eps_pri = 0.0;

        while s.iteration < self.config.max_iter {
            let (primal, dual, eps_pri, eps_dual) = self.step(&mut s)?;
            last_eps_pri = eps_pri;
            primal_hist.push(primal);
            dual_hist.push(dual);

            if !s.is_finite() || !primal.is_finite() || !dual.is_finite() {
                status = Status::Diverged;
                break;
            }

            if boolean {
                let value = objective_value(self.problem, &s.w_tilde);
                if best_selection.as_ref().is_none_or(|(b, _)| value < *b) {
                    best_selection = Some((value, s.w_tilde.clone()));
                }
                let current: Vec<bool> = s.w_tilde.iter().map(|&x| x > 0.0).collect();
                if current == support {
                    stable += 1;
                } else {
                    stable = 0;
                    support = current;
                }
                if stable >= SUPPORT_PATIENCE {
                    status = Status::Converged;
                    break;
                }
                continue;
            }

            if primal <= eps_pri && dual <= eps_dual {
                status = Status::Converged;
                break;
            }
            if primal <= eps_pri || primal < best_primal - STAGNATION_IMPROVEMENT {
                // only a residual stuck above tolerance counts as stagnation
                best_primal = primal;
                best_primal_iter = s.iteration;
            } else if s.iteration - best_primal_iter >= STAGNATION_WINDOW {
                status = Status::Infeasible;
                break;
            }
        }

        let w = match best_selection {
            Some((_, w)) => w,
            None => s.w_bar.clone(),
        };
        let f = self.matrix.matvec(&w);
        let objective = objective_within(self.problem, &w, INDICATOR_TOL.max(last_eps_pri));
        Ok(Solution {
            w,
            f,
            y: s.y,
            z: s.z,
            u: s.u,
            iterations: s.iteration,
            primal_residual: primal_hist,
            dual_residual: dual_hist,
            status,
            objective,
        })
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Solves `p` with consensus ADMM.
pub fn solve(p: &WeightingProblem, cfg: &SolverConfig) -> Result<Solution> {
    AdmmSolver::new(p, cfg.clone())?.solve()
}

fn xlogy_ratio(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Value of one block loss at `f` (the block's slice of `Fw`).
pub fn block_loss(loss: &LossSpec, f: &[f64]) -> f64 {
    block_loss_within(loss, f, INDICATOR_TOL)
}

fn block_loss_within(loss: &LossSpec, f: &[f64], tol: f64) -> f64 {
    match loss {
        LossSpec::Equality { target } => {
            if f.iter().zip(target).all(|(a, b)| (a - b).abs() <= tol) {
                0.0
            } else {
                f64::INFINITY
            }
        }
        LossSpec::LeastSquares { target, scale } => {
            scale * scale * f.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        }
        LossSpec::Absolute { target, scale } => {
            scale * f.iter().zip(target).map(|(a, b)| (a - b).abs()).sum::<f64>()
        }
        LossSpec::Inequality { lower, upper } => {
            let inside = f
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| *x >= l - tol && *x <= u + tol);
            if inside {
                0.0
            } else {
                f64::INFINITY
            }
        }
        LossSpec::Kl { target } => {
            if f.iter().any(|&x| x < -tol) {
                return f64::INFINITY;
            }
            f.iter().zip(target).map(|(&x, &t)| xlogy_ratio(x, t)).sum()
        }
    }
}

/// Per-block loss values at `f = Fw`, in layout order.
pub fn block_losses(p: &WeightingProblem, f: &[f64]) -> Vec<f64> {
    block_losses_within(p, f, INDICATOR_TOL)
}

fn block_losses_within(p: &WeightingProblem, f: &[f64], tol: f64) -> Vec<f64> {
    p.layout
        .blocks()
        .iter()
        .map(|b| block_loss_within(&b.loss, &f[b.rows()], tol))
        .collect()
}

/// `ℓ(Fw, f_des)` summed over blocks.
pub fn loss_value(p: &WeightingProblem, w: &[f64]) -> f64 {
    block_losses(p, &p.matrix.mul_vec(w)).iter().sum()
}

fn within_limit(limit: Option<f64>, w: &[f64]) -> bool {
    match limit {
        None => true,
        Some(kappa) => {
            let n = w.len() as f64;
            let (lo, hi) = (1.0 / (kappa * n), kappa / n);
            w.iter().all(|&x| x >= lo - INDICATOR_TOL && x <= hi + INDICATOR_TOL)
        }
    }
}

/// `r(w)`, with `+∞` outside the regularizer's domain.
pub fn regularizer_value(reg: &RegularizerSpec, w: &[f64]) -> f64 {
    match reg {
        RegularizerSpec::Entropy { limit } => {
            if !within_limit(*limit, w) {
                return f64::INFINITY;
            }
            w.iter().map(|&x| xlogy_ratio(x, 1.0)).sum()
        }
        RegularizerSpec::KlTarget { target, limit } => {
            if !within_limit(*limit, w) {
                return f64::INFINITY;
            }
            w.iter().zip(target).map(|(&x, &t)| xlogy_ratio(x, t)).sum()
        }
        RegularizerSpec::Zero => 0.0,
        RegularizerSpec::Boolean { k } => {
            let share = 1.0 / *k as f64;
            let mut count = 0;
            for &x in w {
                if (x - share).abs() <= INDICATOR_TOL {
                    count += 1;
                } else if x.abs() > INDICATOR_TOL {
                    return f64::INFINITY;
                }
            }
            if count == *k {
                0.0
            } else {
                f64::INFINITY
            }
        }
    }
}

/// `ℓ(Fw, f_des) + λ r(w)`; `+∞` when `w` is off the simplex or an indicator is violated.
pub fn objective_value(p: &WeightingProblem, w: &[f64]) -> f64 {
    objective_within(p, w, INDICATOR_TOL)
}

/// Objective with loss indicators relaxed to `tol`, used for solutions whose residuals are
/// only driven below the solver tolerance.
fn objective_within(p: &WeightingProblem, w: &[f64], tol: f64) -> f64 {
    let total: f64 = w.iter().sum();
    if w.len() != p.n() || (total - 1.0).abs() > INDICATOR_TOL || w.iter().any(|&x| x < -INDICATOR_TOL) {
        return f64::INFINITY;
    }
    let losses: f64 = block_losses_within(p, &p.matrix.mul_vec(w), tol).iter().sum();
    losses + p.lambda * regularizer_value(&p.regularizer, w)
}
