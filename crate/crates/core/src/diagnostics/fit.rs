use serde::Serialize;

use crate::{Error, Result};

/// Log-linear fit `v(t) ≈ A e^{−rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    /// `R²` of the fit to `ln v`, clamped to `[0, 1]`.
    pub goodness: f64,
    pub window: (f64, f64),
}

impl DecayFit {
    /// Slope of `ln v` against `t`.
    pub fn slope(&self) -> f64 {
        -self.rate
    }
}

/// Ordinary least squares `y = a + s·x`; returns `(a, s, R²)`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let s = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - s * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - s * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (a, s, r2)
}

/// Least-squares fit of `ln v` on `t`. Needs at least four points, all
/// values positive.
pub fn fit_exponential_decay(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < 4 {
        return Err(Error::TooFewPoints {
            required: 4,
            actual: series.len(),
        });
    }
    if let Some((index, &(_, value))) = series
        .iter()
        .enumerate()
        .find(|(_, (_, v))| !(*v > 0.0) || !v.is_finite())
    {
        return Err(Error::FitDomain { index, value });
    }
    let xs: Vec<f64> = series.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let (a, s, r2) = linear_regression(&xs, &ys);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        rate: -s,
        prefactor: a.exp(),
        goodness: r2,
        window: (lo, hi),
    })
}
