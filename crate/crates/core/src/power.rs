//! Utilization-to-watts curves: evaluation and calibration from measured
//! samples.
//!
//! All three supported families are linear in their parameters after a
//! transform, so calibration is a closed-form least-squares fit per family
//! followed by a goodness-of-faith comparison in the original watts domain.

use crate::domain::{PowerFamily, PowerModel};
use crate::error::Error;

/// Lowest utilization a curve is ever evaluated at. Log-shaped families
/// diverge toward zero, and real nodes never report less than a percent.
pub const MIN_UTILIZATION: f64 = 0.01;

/// Evaluates a curve at a utilization fraction, clamping the input to
/// `[0.01, 1.0]` first. The curves take utilization in percent internally.
pub fn eval_power(model: &PowerModel, utilization: f64) -> f64 {
    let pct = 100.0 * utilization.clamp(MIN_UTILIZATION, 1.0);
    raw_eval(model, pct)
}

fn raw_eval(model: &PowerModel, pct: f64) -> f64 {
    match model.family {
        PowerFamily::PowerLaw => model.coeff_a * pct.powf(model.coeff_b),
        PowerFamily::Exponential => model.coeff_a * (model.coeff_b * pct).exp(),
        PowerFamily::Logarithmic => model.coeff_a + model.coeff_b * pct.ln(),
    }
}

/// One measured point on a node's power curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    /// CPU utilization fraction in `(0, 1]`.
    pub utilization: f64,
    /// Wall power draw at that utilization, in watts. Must be positive.
    pub watts: f64,
}

/// A fitted family with its coefficient of determination in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitCandidate {
    pub model: PowerModel,
    pub r_squared: f64,
}

/// Outcome of a calibration: the winning fit plus every candidate tried,
/// in the fixed order power-law, exponential, logarithmic.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub chosen: PowerModel,
    pub r_squared_by_family: Vec<(PowerFamily, f64)>,
    pub candidates: Vec<FitCandidate>,
}

impl FitReport {
    /// R² of the chosen family.
    pub fn chosen_r_squared(&self) -> f64 {
        self.r_squared_by_family
            .iter()
            .find(|(family, _)| *family == self.chosen.family)
            .map(|&(_, r2)| r2)
            .expect("chosen family is always one of the fitted candidates")
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Fits all three families to the samples and picks the one with the best
/// coefficient of determination, computed in the watts domain after
/// transforming back. Exact ties keep the earlier family in the fixed order.
///
/// Needs at least three samples covering at least two distinct utilizations,
/// all with positive utilization and positive watts.
pub fn fit_power_model(samples: &[CalibrationSample]) -> Result<FitReport, Error> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData {
            reason: format!("need at least 3 samples, got {}", samples.len()),
        });
    }
    for (i, s) in samples.iter().enumerate() {
        if !(s.utilization.is_finite() && s.utilization > 0.0 && s.utilization <= 1.0) {
            return Err(Error::InsufficientData {
                reason: format!(
                    "sample {} has utilization {} outside (0, 1]",
                    i + 1,
                    s.utilization
                ),
            });
        }
        if !(s.watts.is_finite() && s.watts > 0.0) {
            return Err(Error::InsufficientData {
                reason: format!("sample {} has non-positive watts {}", i + 1, s.watts),
            });
        }
    }
    let first = samples[0].utilization;
    if samples.iter().all(|s| s.utilization == first) {
        return Err(Error::InsufficientData {
            reason: "samples cover only one utilization level".to_string(),
        });
    }

    let pcts: Vec<f64> = samples.iter().map(|s| 100.0 * s.utilization).collect();
    let watts: Vec<f64> = samples.iter().map(|s| s.watts).collect();
    let mean_w = watts.iter().sum::<f64>() / watts.len() as f64;
    let ss_tot: f64 = watts.iter().map(|w| (w - mean_w).powi(2)).sum();
    // Scale-aware threshold below which a sum of squares counts as zero.
    let eps = 1e-12 * watts.len() as f64 * mean_w * mean_w;

    let mut candidates = Vec::with_capacity(3);
    for family in [
        PowerFamily::PowerLaw,
        PowerFamily::Exponential,
        PowerFamily::Logarithmic,
    ] {
        let xs: Vec<f64> = match family {
            PowerFamily::PowerLaw | PowerFamily::Logarithmic => {
                pcts.iter().map(|p| p.ln()).collect()
            }
            PowerFamily::Exponential => pcts.clone(),
        };
        let ys: Vec<f64> = match family {
            PowerFamily::PowerLaw | PowerFamily::Exponential => {
                watts.iter().map(|w| w.ln()).collect()
            }
            PowerFamily::Logarithmic => watts.clone(),
        };
        let (slope, intercept) = least_squares(&xs, &ys);
        let model = PowerModel {
            family,
            coeff_a: match family {
                PowerFamily::PowerLaw | PowerFamily::Exponential => intercept.exp(),
                PowerFamily::Logarithmic => intercept,
            },
            coeff_b: slope,
        };
        // Residuals are judged at the raw sample utilizations, unclamped,
        // mirroring the domain the regression ran in.
        let ss_res: f64 = pcts
            .iter()
            .zip(&watts)
            .map(|(&p, &w)| (w - raw_eval(&model, p)).powi(2))
            .sum();
        let r_squared = if ss_tot > eps {
            1.0 - ss_res / ss_tot
        } else if ss_res <= eps {
            // Constant samples reproduced exactly: a perfect fit even though
            // the usual ratio is undefined.
            1.0
        } else {
            0.0
        };
        candidates.push(FitCandidate { model, r_squared });
    }

    let chosen = candidates
        .iter()
        .copied()
        .reduce(|best, c| if c.r_squared > best.r_squared { c } else { best })
        .expect("three candidates were just pushed");
    Ok(FitReport {
        chosen: chosen.model,
        r_squared_by_family: candidates
            .iter()
            .map(|c| (c.model.family, c.r_squared))
            .collect(),
        candidates,
    })
}
