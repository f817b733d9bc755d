//! Least-squares fits used by every rate study.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> FitResult {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    FitResult { slope, intercept, r2 }
}

/// Power-law fit: least squares on (log x, log y). All inputs must be
/// positive and at least three pairs are required.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if pairs.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 pairs, got {}", pairs.len())));
    }
    if let Some((x, y)) = pairs.iter().find(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(Error::Fit(format!("non-positive pair ({x}, {y}) cannot be log-fitted")));
    }
    let xs: Vec<f64> = pairs.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, y)| y.ln()).collect();
    Ok(linear_fit(&xs, &ys))
}

/// Exponential fit y ~ C exp(rate * t): least squares on (t, log y).
/// Positive y required, at least three pairs.
pub fn fit_exponential(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if pairs.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 pairs, got {}", pairs.len())));
    }
    if let Some((t, y)) = pairs.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(Error::Fit(format!("non-positive value ({t}, {y}) cannot be log-fitted")));
    }
    let xs: Vec<f64> = pairs.iter().map(|(t, _)| *t).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, y)| y.ln()).collect();
    Ok(linear_fit(&xs, &ys))
}
