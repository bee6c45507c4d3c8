use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gaussian-kernel density estimate at `x`, summing over the whole sample.
/// Cost is linear in the sample size for every query.
pub fn kde_eval_naive(sample: &[f64], bandwidth: f64, x: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let norm = 1.0 / ((2.0 * PI).sqrt() * bandwidth * sample.len() as f64);
    let sum: f64 = sample
        .iter()
        .map(|&xi| {
            let z = (x - xi) / bandwidth;
            (-0.5 * z * z).exp()
        })
        .sum();
    Ok(sum * norm)
}
