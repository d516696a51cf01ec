use crate::error::{Error, Result};

const MAX_ITER: usize = 50;
const STEP_TOL: f64 = 1e-14;

/// Principal branch of the Lambert-W function on `x ≥ 0`, i.e. the `w ≥ 0` with `w eʷ = x`.
///
/// Safeguarded Halley iteration started from `x` (for `x < 1`), `ln(1 + x)` (for `1 ≤ x < e`)
/// or the asymptotic guess `ln x − ln ln x` (for `x ≥ e`).
pub fn lambert_w(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("lambert_w of non-finite value {x}")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("lambert_w of negative value {x}")));
    }
    Ok(lambert_w_unchecked(x))
}

pub(crate) fn lambert_w_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut w = if x < 1.0 {
        x
    } else if x < std::f64::consts::E {
        x.ln_1p()
    } else {
        let l1 = x.ln();
        l1 - l1.ln()
    };

    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let mut next = w - f / denom;
        if !next.is_finite() || next < 0.0 {
            // stay in the principal-branch range
            next = 0.5 * w;
        }
        let step = (next - w).abs();
        w = next;
        if step <= STEP_TOL * w.max(1.0) {
            break;
        }
    }
    w
}

/// `W(eˢ)` evaluated without forming `eˢ`, so it stays finite for large `s`.
pub fn lambert_w_of_exp(s: f64) -> f64 {
    if s.is_nan() {
        return f64::NAN;
    }
    if s <= 500.0 {
        return lambert_w_unchecked(s.exp());
    }
    // Solve w + ln w = s by Newton's method; w ≈ s there so convergence is immediate.
    let mut w = s - s.ln();
    for _ in 0..MAX_ITER {
        let g = w + w.ln() - s;
        let next = w - g / (1.0 + 1.0 / w);
        let step = (next - w).abs();
        w = next;
        if step <= STEP_TOL * w {
            break;
        }
    }
    w
}
