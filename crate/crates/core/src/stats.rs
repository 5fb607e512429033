//! Shot planning and small statistical helpers.

use crate::error::{Error, Result};

/// Smallest `m` with `2·exp(−2ε²m) ≤ δ`.
pub fn hoeffding_shots(eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange {
            what: "eps",
            value: eps,
        });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange {
            what: "delta",
            value: delta,
        });
    }
    let m = (2.0 / delta).ln() / (2.0 * eps * eps);
    // Absorb rounding so exact integers are not bumped up by one.
    let r = m.round();
    Ok(if (m - r).abs() <= 1e-9 * m.max(1.0) {
        r as u64
    } else {
        m.ceil() as u64
    })
}

/// Half-width `ε` guaranteed by `shots` samples at confidence `1 − δ`.
pub fn hoeffding_half_width(shots: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * shots as f64)).sqrt()
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Ordinary least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `ln y` against `ln x`, skipping non-positive points.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    linear_fit(&lx, &ly).map(|(s, _)| s)
}
