use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::SampleMatrix;
use crate::sampling::sample_without_replacement;

/// Standard deviation of each entry of the skew direction `c ~ N(0, (1/4) I)`.
pub const SKEW_STD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct SkewedSample {
    /// `c`, one entry per row of `F`.
    pub direction: Vec<f64>,
    /// `πᵢ = exp(cᵀxᵢ) / Σⱼ exp(cᵀxⱼ)`
    pub probabilities: Vec<f64>,
    /// Selected columns, in draw order.
    pub indices: Vec<usize>,
}

/// `π` for a given direction `c` (softmax of `Fᵀc`).
pub fn skew_probabilities(f_full: &SampleMatrix, direction: &[f64]) -> Result<Vec<f64>> {
    if direction.len() != f_full.rows() {
        return Err(Error::Dimension {
            expected: f_full.rows(),
            got: direction.len(),
        });
    }
    let mut scores = vec![0.0; f_full.cols()];
    for &(i, j, v) in f_full.entries() {
        scores[j] += v * direction[i];
    }
    let shift = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnormalized: Vec<f64> = scores.iter().map(|s| (s - shift).exp()).collect();
    let total: f64 = unnormalized.iter().sum();
    Ok(unnormalized.into_iter().map(|x| x / total).collect())
}

/// Draws `k` columns without replacement from the skew distribution of a fixed direction.
pub fn skewed_subsample_with_direction<R: Rng + ?Sized>(
    f_full: &SampleMatrix,
    k: usize,
    direction: Vec<f64>,
    rng: &mut R,
) -> Result<SkewedSample> {
    if f_full.has_missing() {
        return Err(Error::InvalidInput("fill missing entries before skewed sampling".into()));
    }
    if k > f_full.cols() {
        return Err(Error::Domain(format!(
            "subsample size {k} exceeds the {} available samples",
            f_full.cols()
        )));
    }
    let probabilities = skew_probabilities(f_full, &direction)?;
    let indices = sample_without_replacement(&probabilities, k, rng)?;
    Ok(SkewedSample {
        direction,
        probabilities,
        indices,
    })
}

/// Draws `c ~ N(0, (1/4) I)` and then `k` columns with probabilities `π`; deterministic in `seed`.
pub fn skewed_subsample_detailed(f_full: &SampleMatrix, k: usize, seed: u64) -> Result<SkewedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, SKEW_STD).expect("valid normal");
    let direction: Vec<f64> = (0..f_full.rows()).map(|_| normal.sample(&mut rng)).collect();
    skewed_subsample_with_direction(f_full, k, direction, &mut rng)
}

/// Indices of a skewed subsample of size `k`.
pub fn skewed_subsample(f_full: &SampleMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(skewed_subsample_detailed(f_full, k, seed)?.indices)
}
