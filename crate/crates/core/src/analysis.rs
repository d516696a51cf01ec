//! Downstream uses of weights and the diagnostics used to judge them.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::model::SUM_TOL;
use crate::sampling::sample_with_replacement;

/// Values of one held-out function `g(xᵢ)` paired with sample weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_len(values.len(), weights.len())?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("values contain NaN".into()));
        }
        Ok(WeightedSample { values, weights })
    }

    /// Equal weights `1/n`.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        WeightedSample::new(values, vec![1.0 / n as f64; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(value, weight)` pairs sorted by value.
    fn sorted(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> =
            self.values.iter().copied().zip(self.weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }
}

/// Horvitz-Thompson style estimate `Σ wᵢ g(xᵢ)`.
pub fn weighted_mean(ws: &WeightedSample) -> f64 {
    ws.values.iter().zip(&ws.weights).map(|(v, w)| v * w).sum()
}

/// `CDF(α) = Σ_{i: valueᵢ ≤ α} wᵢ` at each of the ascending `eval_points`.
pub fn weighted_cdf(ws: &WeightedSample, eval_points: &[f64]) -> Result<Vec<f64>> {
    if eval_points.windows(2).any(|p| !(p[0] <= p[1])) {
        return Err(Error::InvalidInput("evaluation points must be sorted ascending".into()));
    }
    let pairs = ws.sorted();
    let mut out = Vec::with_capacity(eval_points.len());
    let mut idx = 0;
    let mut acc = 0.0;
    for &alpha in eval_points {
        while idx < pairs.len() && pairs[idx].0 <= alpha {
            acc += pairs[idx].1;
            idx += 1;
        }
        out.push(acc.min(1.0));
    }
    Ok(out)
}

/// Kolmogorov-Smirnov statistic `sup_α |CDF_a(α) − CDF_b(α)|`.
///
/// Both CDFs are right-continuous steps that only jump at sample values, so the supremum is
/// attained at one of the pooled values (left limits there equal the value at the previous
/// pooled point, or zero).
pub fn ks_statistic(a: &WeightedSample, b: &WeightedSample) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty);
    }
    let pa = a.sorted();
    let pb = b.sorted();
    let (mut i, mut j) = (0, 0);
    let (mut ca, mut cb) = (0.0, 0.0);
    let mut sup: f64 = 0.0;
    while i < pa.len() || j < pb.len() {
        let next_a = pa.get(i).map_or(f64::INFINITY, |p| p.0);
        let next_b = pb.get(j).map_or(f64::INFINITY, |p| p.0);
        let alpha = next_a.min(next_b);
        while i < pa.len() && pa[i].0 == alpha {
            ca += pa[i].1;
            i += 1;
        }
        while j < pb.len() && pb[j].0 == alpha {
            cb += pb[j].1;
            j += 1;
        }
        sup = sup.max((ca - cb).abs());
    }
    Ok(sup.min(1.0))
}

/// Shannon entropy `−Σ wᵢ ln wᵢ` with `0 ln 0 = 0`.
pub fn entropy(w: &[f64]) -> f64 {
    -w.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `count` indices drawn i.i.d. with `Prob(i) = wᵢ`.
pub fn resample(w: &[f64], count: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_replacement(w, count, &mut rng)
}

/// Writes a CDF curve as a two-column CSV `point,probability`.
pub fn write_cdf_csv<W: Write>(out: W, points: &[f64], cdf: &[f64]) -> Result<()> {
    check_len(points.len(), cdf.len())?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["point", "probability"])?;
    for (p, c) in points.iter().zip(cdf) {
        writer.write_record([format_sig(*p), format_sig(*c)])?;
    }
    writer.flush()?;
    Ok(())
}

/// Decimal with 15 significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-5..15).contains(&magnitude) {
        let decimals = (14 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.14e}")
    }
}
