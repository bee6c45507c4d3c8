//! Physical dependence measures `δ_k = Var(X_k - X*_k)^{1/2}`.
//!
//! `X*` is the same process with the innovation at time 0 replaced by an
//! independent copy: both paths share the whole history before time 0 and
//! every innovation after it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::TimeSeriesModel;
use crate::simulate::{replication_rng, simulate_from_innovations};

/// Minimum number of replications accepted by [`estimate_delta`].
pub const MIN_REPLICATIONS: usize = 100;

/// Lags whose estimate is not above this many standard errors are left out
/// of decay-rate fits.
pub const NOISE_FLOOR_SE: f64 = 5.0;

/// Allowed excess of the fitted log-decay slope over `ln ρ`.
pub const SLOPE_TOLERANCE: f64 = 0.05;

/// Everything random in one coupled draw.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingDraw {
    /// Initial state before the burn-in.
    pub init: f64,
    /// Innovations up to time -1.
    pub history: Vec<f64>,
    pub eps0: f64,
    pub eps0_prime: f64,
    /// Innovations at times 1..=k.
    pub shared: Vec<f64>,
}

impl CouplingDraw {
    /// Draws a coupling for lags `0..=k` from stream `seed`. The burn-in is
    /// the model default.
    pub fn draw(model: &TimeSeriesModel, k: usize, seed: u64) -> Result<Self> {
        model.validate()?;
        let mut rng = replication_rng(seed, 0);
        let noise = *model.noise();
        let init = noise.sample(&mut rng);
        let history = (0..model.default_burn_in()).map(|_| noise.sample(&mut rng)).collect();
        let eps0 = noise.sample(&mut rng);
        let eps0_prime = noise.sample(&mut rng);
        let shared = (0..k).map(|_| noise.sample(&mut rng)).collect();
        Ok(Self {
            init,
            history,
            eps0,
            eps0_prime,
            shared,
        })
    }

    /// The same draw with `ε_0` and `ε_0'` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            eps0: self.eps0_prime,
            eps0_prime: self.eps0,
            ..self.clone()
        }
    }

    fn path(&self, model: &TimeSeriesModel, eps0: f64) -> Vec<f64> {
        let mut innovations = Vec::with_capacity(self.history.len() + 1 + self.shared.len());
        innovations.extend_from_slice(&self.history);
        innovations.push(eps0);
        innovations.extend_from_slice(&self.shared);
        let mut path = simulate_from_innovations(model, self.init, &innovations);
        path.split_off(self.history.len())
    }

    pub fn run(&self, model: &TimeSeriesModel) -> CoupledPair {
        CoupledPair {
            original: self.path(model, self.eps0),
            coupled: self.path(model, self.eps0_prime),
        }
    }
}

/// `X_0..X_k` and `X*_0..X*_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    pub original: Vec<f64>,
    pub coupled: Vec<f64>,
}

impl CoupledPair {
    pub fn differences(&self) -> Vec<f64> {
        self.original.iter().zip(&self.coupled).map(|(x, y)| x - y).collect()
    }

    /// Lags `k >= 1` at which `|X_k - X*_k| <= ρ |X_{k-1} - X*_{k-1}|` fails.
    ///
    /// The comparison allows four machine epsilons of the magnitudes of the
    /// four states involved, the rounding committed when the two paths are
    /// computed in floating point.
    pub fn contraction_violations(&self, rho: f64) -> Vec<usize> {
        let (x, y) = (&self.original, &self.coupled);
        (1..x.len())
            .filter(|&k| {
                let slack = 4.0 * f64::EPSILON * (x[k].abs() + y[k].abs() + x[k - 1].abs() + y[k - 1].abs());
                (x[k] - y[k]).abs() > rho * (x[k - 1] - y[k - 1]).abs() + slack
            })
            .collect()
    }
}

/// Coupled paths for lags `0..=k` from stream `seed`.
pub fn simulate_coupled(model: &TimeSeriesModel, k: usize, seed: u64) -> Result<CoupledPair> {
    Ok(CouplingDraw::draw(model, k, seed)?.run(model))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub k: usize,
    pub delta_hat: f64,
    pub std_error: f64,
    pub replications: usize,
}

/// Monte Carlo estimates of `δ_0..δ_{k_max}` from `replications` independent
/// coupled draws. Replication `r` uses stream `seed + r`; aggregation runs
/// in replication order.
pub fn estimate_deltas(
    model: &TimeSeriesModel,
    k_max: usize,
    replications: usize,
    seed: u64,
) -> Result<Vec<DeltaEstimate>> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::invalid(format!(
            "need at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    model.validate()?;
    let diffs: Vec<Vec<f64>> = (0..replications as u64)
        .into_par_iter()
        .map(|r| simulate_coupled(model, k_max, seed.wrapping_add(r)).map(|p| p.differences()))
        .collect::<Result<_>>()?;
    Ok((0..=k_max)
        .map(|k| {
            let column: Vec<f64> = diffs.iter().map(|d| d[k]).collect();
            let (delta_hat, std_error) = sd_with_error(&column);
            DeltaEstimate {
                k,
                delta_hat,
                std_error,
                replications,
            }
        })
        .collect())
}

/// Estimate of `δ_k` alone.
pub fn estimate_delta(model: &TimeSeriesModel, k: usize, replications: usize, seed: u64) -> Result<DeltaEstimate> {
    Ok(estimate_deltas(model, k, replications, seed)?[k])
}

/// Sample standard deviation (two-pass) and its delta-method standard error
/// `sqrt((m4 - s⁴) / R) / (2 s)`.
fn sd_with_error(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let var = m2 / (r - 1.0);
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / r;
    let sd = var.sqrt();
    if sd == 0.0 {
        return (0.0, 0.0);
    }
    let var_of_var = ((m4 - (m2 / r).powi(2)) / r).max(0.0);
    (sd, var_of_var.sqrt() / (2.0 * sd))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Fitted decay is at least as fast as the contraction rate.
    Consistent,
    /// Fitted decay is slower than the contraction rate allows.
    Violated,
    /// Fewer than two lags above the noise floor, or no rate to compare to.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    /// Lags used in the log-linear fit.
    pub fitted_lags: Vec<usize>,
    /// Least-squares slope of `ln δ̂_k` on `k`.
    pub slope: Option<f64>,
    /// `ln ρ`, when a contraction rate was supplied.
    pub log_rate: Option<f64>,
    pub partial_sum: f64,
    /// Geometric continuation of the last lag, `(δ̂_K + 2 se_K) ρ / (1 - ρ)`.
    pub tail_bound: f64,
    /// `partial_sum + tail_bound`, an estimated bound on `Σ δ_k`.
    pub certificate: f64,
    pub verdict: Verdict,
}

/// Fits the geometric decay of `δ̂_k` and bounds `Σ δ_k`.
///
/// `deltas` must be consecutive lags starting at 0. `rho` is the
/// contraction rate the decay is compared with; without it the tail is
/// continued at the fitted rate and the verdict is inconclusive.
pub fn check_summability(deltas: &[DeltaEstimate], rho: Option<f64>) -> Result<SummabilityReport> {
    if deltas.is_empty() || deltas.iter().enumerate().any(|(i, d)| d.k != i) {
        return Err(Error::invalid("deltas must cover consecutive lags starting at 0"));
    }
    if let Some(r) = rho {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::invalid(format!("contraction rate {r} is not in [0, 1)")));
        }
    }
    let fitted: Vec<&DeltaEstimate> = deltas
        .iter()
        .filter(|d| d.delta_hat > NOISE_FLOOR_SE * d.std_error && d.delta_hat > 0.0)
        .collect();
    let slope = (fitted.len() >= 2).then(|| {
        let pts: Vec<(f64, f64)> = fitted.iter().map(|d| (d.k as f64, d.delta_hat.ln())).collect();
        least_squares_slope(&pts)
    });
    let partial_sum: f64 = deltas.iter().map(|d| d.delta_hat).sum();
    let last = deltas[deltas.len() - 1];
    let tail_rate = rho.or_else(|| slope.map(f64::exp).filter(|r| *r < 1.0));
    let tail_bound = match tail_rate {
        Some(r) => (last.delta_hat + 2.0 * last.std_error) * r / (1.0 - r),
        None => f64::INFINITY,
    };
    let log_rate = rho.map(f64::ln);
    let verdict = match (slope, log_rate) {
        (Some(s), Some(l)) if s <= l + SLOPE_TOLERANCE => Verdict::Consistent,
        (Some(_), Some(_)) => Verdict::Violated,
        _ => Verdict::Inconclusive,
    };
    Ok(SummabilityReport {
        fitted_lags: fitted.iter().map(|d| d.k).collect(),
        slope,
        log_rate,
        partial_sum,
        tail_bound,
        certificate: partial_sum + tail_bound,
        verdict,
    })
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// CSV with header `k,delta_hat,std_error,replications`.
pub fn deltas_to_csv(deltas: &[DeltaEstimate]) -> String {
    let mut out = String::from("k,delta_hat,std_error,replications\n");
    for d in deltas {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{}\n",
            d.k, d.delta_hat, d.std_error, d.replications
        ));
    }
    out
}
