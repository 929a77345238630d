//! Stress-life model: Goodman mean-stress correction, Basquin life and
//! Miner damage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BilinearMaterial;

/// Equivalent fully reversed amplitude `sigma_a / (1 - sigma_m / sigma_u)`.
/// `None` when the mean stress reaches the UTS.
pub fn goodman_equivalent_amplitude(sigma_amp: f64, sigma_mean: f64, uts: f64) -> Option<f64> {
    if sigma_mean >= uts {
        None
    } else {
        Some(sigma_amp / (1.0 - sigma_mean / uts))
    }
}

/// Cycles to failure `N = (sigma_ar / sigma_f)^(1/b) / 2`.
pub fn basquin_life(sigma_ar: f64, sigma_f: f64, b: f64) -> f64 {
    if sigma_ar <= 0.0 {
        return f64::INFINITY;
    }
    0.5 * (sigma_ar / sigma_f).powf(1.0 / b)
}

/// Amplitude that fails at `cycles`: inverse of [`basquin_life`].
pub fn basquin_amplitude(cycles: f64, sigma_f: f64, b: f64) -> f64 {
    sigma_f * (2.0 * cycles).powf(b)
}

/// Miner increment of one cycle at (`sigma_amp`, `sigma_mean`).
/// `None` signals a static overload.
pub fn cycle_damage(material: &BilinearMaterial, sigma_amp: f64, sigma_mean: f64) -> Option<f64> {
    let sigma_ar = goodman_equivalent_amplitude(sigma_amp, sigma_mean, material.uts)?;
    let life = basquin_life(sigma_ar, material.fatigue_strength_coeff, material.fatigue_exponent);
    Some(if life.is_infinite() { 0.0 } else { 1.0 / life })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatigueAnchor {
    pub sigma_mean: f64,
    pub sigma_amp: f64,
    pub cycles: f64,
    pub runout: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasquinFit {
    pub sigma_f: f64,
    pub b: f64,
}

/// Least squares of `ln sigma_ar = ln sigma_f + b ln(2N)` over points
/// `(sigma_ar, N)`. With `fixed_b` only the intercept is fitted.
pub(crate) fn fit_log_log(points: &[(f64, f64)], fixed_b: Option<f64>) -> Result<BasquinFit> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(s, n)| ((2.0 * n).ln(), s.ln()))
        .collect();
    if xy.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidInput("S-N points need positive amplitude and cycles".into()));
    }
    let n = xy.len() as f64;
    match fixed_b {
        Some(b) => {
            if xy.is_empty() {
                return Err(Error::UnderDetermined("need at least one failure anchor".into()));
            }
            if b >= 0.0 {
                return Err(Error::InvalidInput(format!("fixed b must be negative, got {b}")));
            }
            let ln_sf = xy.iter().map(|(x, y)| y - b * x).sum::<f64>() / n;
            Ok(BasquinFit { sigma_f: ln_sf.exp(), b })
        }
        None => {
            if xy.len() < 2 {
                return Err(Error::UnderDetermined(
                    "need at least two failures, or one failure and a fixed b".into(),
                ));
            }
            let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
            let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            if sxx == 0.0 {
                return Err(Error::UnderDetermined(
                    "all failures share one life; slope is undefined, fix b".into(),
                ));
            }
            let b = sxy / sxx;
            if b >= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "fitted Basquin exponent is non-negative ({b}); life does not fall with stress"
                )));
            }
            Ok(BasquinFit {
                sigma_f: (my - b * mx).exp(),
                b,
            })
        }
    }
}

/// Calibrates (sigma_f, b) from fatigue anchors. Runouts carry no slope
/// information and are ignored by the regression.
pub fn calibrate_fatigue_params(anchors: &[FatigueAnchor], uts: f64, fixed_b: Option<f64>) -> Result<BasquinFit> {
    let mut points = Vec::new();
    for a in anchors.iter().filter(|a| !a.runout) {
        let sigma_ar = goodman_equivalent_amplitude(a.sigma_amp, a.sigma_mean, uts).ok_or_else(|| {
            Error::InvalidInput(format!("anchor mean stress {} reaches the UTS {uts}", a.sigma_mean))
        })?;
        points.push((sigma_ar, a.cycles));
    }
    if points.is_empty() {
        return Err(Error::UnderDetermined(
            "no failure anchors; runouts alone cannot fix the S-N curve".into(),
        ));
    }
    if points.len() < 2 && fixed_b.is_none() {
        return Err(Error::UnderDetermined(
            "a single failure anchor needs a fixed b".into(),
        ));
    }
    fit_log_log(&points, fixed_b)
}
