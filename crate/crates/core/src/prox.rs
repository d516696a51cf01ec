//! Proximal operators `prox_{t g}(v) = argmin_x g(x) + (1/2t)‖x − v‖²` for every supported
//! loss and regularizer.
//!
//! All of them are separable, so each works elementwise.

use crate::error::{check_len, Error, Result};
use crate::linalg::{lambert_w_of_exp, project_topk};
use crate::model::{LossSpec, RegularizerSpec};

/// Smallest value returned by the unconstrained entropy and KL proxes.
pub const POSITIVE_FLOOR: f64 = 1e-300;

/// Prox step size `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ProxStep(f64);

impl ProxStep {
    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(ProxStep(t))
        } else {
            Err(Error::Domain(format!("prox step {t} must be positive")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

fn check_step(t: f64) -> Result<()> {
    ProxStep::new(t).map(|_| ())
}

/// Indicator of `{target}`: the result is `target` whatever `v` and `t`.
pub fn prox_equality(target: &[f64], v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(target.len(), v.len())?;
    check_step(t)?;
    Ok(target.to_vec())
}

/// `scale²‖x − target‖²`
pub fn prox_least_squares(target: &[f64], scale: f64, v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(target.len(), v.len())?;
    check_step(t)?;
    let a = 2.0 * t * scale * scale;
    Ok(v.iter()
        .zip(target)
        .map(|(&vi, &ti)| (vi + a * ti) / (1.0 + a))
        .collect())
}

/// `scale‖x − target‖₁`: soft thresholding around the target.
pub fn prox_absolute(target: &[f64], scale: f64, v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(target.len(), v.len())?;
    check_step(t)?;
    let kappa = t * scale;
    Ok(v.iter()
        .zip(target)
        .map(|(&vi, &ti)| {
            let d = vi - ti;
            ti + d.signum() * (d.abs() - kappa).max(0.0)
        })
        .collect())
}

/// Indicator of `lower ≤ x ≤ upper`: elementwise clipping.
pub fn prox_box(lower: &[f64], upper: &[f64], v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(lower.len(), v.len())?;
    check_len(upper.len(), v.len())?;
    check_step(t)?;
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::Domain("box lower bound exceeds upper bound".into()));
    }
    Ok(v.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&vi, (&l, &u))| vi.clamp(l, u))
        .collect())
}

/// Scalar prox of `x log(x / target)`: `t W(target e^{v/t − 1} / t)`, evaluated in log space.
fn kl_scalar(target: f64, v: f64, t: f64) -> f64 {
    let s = target.ln() + v / t - 1.0 - t.ln();
    t * lambert_w_of_exp(s)
}

/// `Σ xᵢ log(xᵢ / targetᵢ)`
pub fn prox_kl(target: &[f64], v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_len(target.len(), v.len())?;
    check_step(t)?;
    if let Some(bad) = target.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("KL target entry {bad} must be positive")));
    }
    Ok(v.iter()
        .zip(target)
        .map(|(&vi, &ti)| kl_scalar(ti, vi, t).max(POSITIVE_FLOOR))
        .collect())
}

fn limit_box(kappa: f64, n: usize) -> Result<(f64, f64)> {
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("limit {kappa} must exceed 1")));
    }
    let n = n as f64;
    Ok((1.0 / (kappa * n), kappa / n))
}

/// Negative entropy `Σ xᵢ log xᵢ`, optionally restricted to `[1/(κn), κ/n]`.
///
/// Each coordinate's objective is convex in one variable, so the constrained minimizer is the
/// clipped unconstrained one.
pub fn prox_entropy_limited(kappa: Option<f64>, n: usize, v: &[f64], t: f64) -> Result<Vec<f64>> {
    check_step(t)?;
    match kappa {
        None => Ok(v.iter().map(|&vi| kl_scalar(1.0, vi, t).max(POSITIVE_FLOOR)).collect()),
        Some(kappa) => {
            let (lo, hi) = limit_box(kappa, n)?;
            Ok(v.iter().map(|&vi| kl_scalar(1.0, vi, t).clamp(lo, hi)).collect())
        }
    }
}

/// KL divergence to `target`, optionally restricted to `[1/(κn), κ/n]`.
pub fn prox_kl_limited(target: &[f64], kappa: Option<f64>, v: &[f64], t: f64) -> Result<Vec<f64>> {
    let x = prox_kl(target, v, t)?;
    match kappa {
        None => Ok(x),
        Some(kappa) => {
            let (lo, hi) = limit_box(kappa, v.len())?;
            Ok(x.into_iter().map(|xi| xi.clamp(lo, hi)).collect())
        }
    }
}

/// Boolean selection regularizer: projection onto `{0, 1/k}ⁿ ∩ {1ᵀx = 1}`.
pub fn prox_boolean(k: usize, v: &[f64]) -> Result<Vec<f64>> {
    project_topk(v, k)
}

/// Dispatches to the prox of a block loss.
pub fn prox_loss(loss: &LossSpec, v: &[f64], step: ProxStep) -> Result<Vec<f64>> {
    let t = step.get();
    match loss {
        LossSpec::Equality { target } => prox_equality(target, v, t),
        LossSpec::LeastSquares { target, scale } => prox_least_squares(target, *scale, v, t),
        LossSpec::Absolute { target, scale } => prox_absolute(target, *scale, v, t),
        LossSpec::Inequality { lower, upper } => prox_box(lower, upper, v, t),
        LossSpec::Kl { target } => prox_kl(target, v, t),
    }
}

/// Dispatches to the prox of a regularizer; `step` already includes `λ`.
pub fn prox_regularizer(reg: &RegularizerSpec, v: &[f64], step: ProxStep) -> Result<Vec<f64>> {
    let t = step.get();
    match reg {
        RegularizerSpec::Entropy { limit } => prox_entropy_limited(*limit, v.len(), v, t),
        RegularizerSpec::KlTarget { target, limit } => prox_kl_limited(target, *limit, v, t),
        RegularizerSpec::Zero => Ok(v.to_vec()),
        RegularizerSpec::Boolean { k } => prox_boolean(*k, v),
    }
}
