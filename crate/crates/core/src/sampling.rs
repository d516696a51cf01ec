//! Weighted sampling primitives. All randomness flows through a caller-supplied RNG; the
//! crate seeds `ChaCha8Rng` from a `u64` wherever it owns the generator.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Domain("sampling weights must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Draws `k` distinct indices with probabilities proportional to `weights`, in draw order.
///
/// Exponent-key method: item `i` gets key `uᵢ^(1/wᵢ)` (compared as `ln(uᵢ)/wᵢ`) and the `k`
/// largest keys are the sample. Zero-weight items are only drawn once everything else is taken.
pub fn sample_without_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_weights(weights)?;
    let n = weights.len();
    if k > n {
        return Err(Error::Domain(format!("cannot draw {k} distinct items from {n}")));
    }
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            // u in (0, 1]
            let u: f64 = 1.0 - rng.random::<f64>();
            let key = if w > 0.0 { u.ln() / w } else { f64::NEG_INFINITY };
            (key, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().take(k).map(|(_, i)| i).collect())
}

/// Draws `count` i.i.d. indices with `Prob(i) ∝ weights[i]`.
pub fn sample_with_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_weights(weights)?;
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::Domain(format!("invalid sampling weights: {e}")))?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}
