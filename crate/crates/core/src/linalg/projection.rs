use crate::error::{Error, Result};

/// Euclidean projection onto the probability simplex `{w ≥ 0, 1ᵀw = 1}`.
///
/// Sort-based thresholding: find the largest `ρ` with
/// `u_ρ - (Σ_{j≤ρ} u_j - 1)/ρ > 0` over the descending sort `u`, then shift and clip.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite entry in simplex projection".into()));
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));

    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (idx, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (idx + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Indices of the `k` largest entries, ties broken by lowest index.
pub fn top_k_indices(v: &[f64], k: usize) -> Result<Vec<usize>> {
    let n = v.len();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // descending by value, ascending by index on ties
    let cmp = |&a: &usize, &b: &usize| v[b].total_cmp(&v[a]).then(a.cmp(&b));
    if k < n {
        order.select_nth_unstable_by(k - 1, cmp);
        order.truncate(k);
    }
    order.sort_unstable();
    Ok(order)
}

/// Projection onto `{w ∈ {0, 1/k}ⁿ : 1ᵀw = 1}`: the `k` largest entries of `v` become `1/k`.
pub fn project_topk(v: &[f64], k: usize) -> Result<Vec<f64>> {
    let selected = top_k_indices(v, k)?;
    let mut w = vec![0.0; v.len()];
    let share = 1.0 / k as f64;
    for i in selected {
        w[i] = share;
    }
    Ok(w)
}
