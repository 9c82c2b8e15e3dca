//! Log-linear decay fits and small least-squares helpers shared across modules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `v(t) ≈ constant · exp(−rate · t)` fitted in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub constant: f64,
    pub r_squared: f64,
}

pub const MIN_FIT_SAMPLES: usize = 10;
pub const MIN_WINDOW: f64 = 5.0;

/// Least-squares fit of `log v = log C − rate·t` over the samples inside `window`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (a, b) = window;
    if !(b - a >= MIN_WINDOW - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "fit window [{a}, {b}] is shorter than {MIN_WINDOW}"
        )));
    }
    let inside: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= a - 1e-12 && t <= b + 1e-12)
        .collect();
    if inside.len() < MIN_FIT_SAMPLES {
        return Err(Error::DegenerateFit { count: inside.len(), required: MIN_FIT_SAMPLES });
    }
    if let Some(&(t, v)) = inside.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::NonPositiveValue { t, v });
    }
    let pts: Vec<(f64, f64)> = inside.iter().map(|&(t, v)| (t, v.ln())).collect();
    let line = fit_line(&pts)?;
    Ok(DecayFit { rate: -line.slope, constant: line.intercept.exp(), r_squared: line.r_squared })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn fit_line(pts: &[(f64, f64)]) -> Result<LineFit> {
    if pts.len() < 2 {
        return Err(Error::DegenerateFit { count: pts.len(), required: 2 });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit { count: pts.len(), required: 2 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LineFit { slope, intercept, r_squared })
}

/// Fit `y ≈ a + b·exp(−decay·t)`; returns `(a, b, max relative residual)`.
pub fn fit_constant_plus_mode(pts: &[(f64, f64)], decay: f64) -> Result<(f64, f64, f64)> {
    let xs: Vec<(f64, f64)> = pts.iter().map(|&(t, y)| ((-decay * t).exp(), y)).collect();
    let line = fit_line(&xs)?;
    let (a, b) = (line.intercept, line.slope);
    let resid = xs
        .iter()
        .map(|&(x, y)| ((y - a - b * x) / a).abs())
        .fold(0.0, f64::max);
    Ok((a, b, resid))
}
