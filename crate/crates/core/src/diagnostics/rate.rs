//! Convergence-rate experiment: sup-norm error of the estimate against the
//! known marginal over a geometric grid of sample sizes, with a log-log
//! slope fit on the per-size medians.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modulus::modulus_exact;
use super::{sup_error, EvalGrid};
use crate::bandwidth::stone_bandwidth;
use crate::binning::BinningScheme;
use crate::dependence::least_squares_slope;
use crate::ecdf::EmpiricalCdf;
use crate::error::{Error, Result};
use crate::estimate::DensityEstimate;
use crate::histogram::{shifted_bin, HalfShift, SparseHistogram};
use crate::marginal::{marginal_law, MarginalLaw};
use crate::models::TimeSeriesModel;
use crate::simulate::{replication_rng, simulate};

/// Exponent of the optimal uniform rate `(ln n / n)^{1/3}`.
pub const TARGET_SLOPE: f64 = -1.0 / 3.0;

/// Fewer replications than this trigger a warning.
pub const RECOMMENDED_REPS: usize = 10;

/// At least this many distinct sizes are required.
pub const MIN_SIZES: usize = 5;

/// `n_max / n_min` must reach this.
pub const MIN_SIZE_RATIO: f64 = 64.0;

/// Rounding allowance of the decomposition inequality.
pub const DECOMPOSITION_SLACK: f64 = 1e-9;

/// Median ratios may not exceed this multiple of their median.
pub const RATIO_BOUND_FACTOR: f64 = 3.0;

const BOOTSTRAP_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateEstimator {
    FrequencyPolygon,
    Histogram,
    /// The true density itself; its error is identically zero.
    Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub n_values: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub estimator: RateEstimator,
    /// Multiplier applied to the Stone bandwidth.
    pub bandwidth_factor: f64,
    /// Burn-in; the model default when `None`.
    pub burn_in: Option<usize>,
    pub bootstrap_resamples: usize,
}

impl RateConfig {
    pub fn new(n_values: Vec<usize>, reps: usize, seed: u64) -> Self {
        Self {
            n_values,
            reps,
            seed,
            estimator: RateEstimator::FrequencyPolygon,
            bandwidth_factor: 1.0,
            burn_in: None,
            bootstrap_resamples: 1000,
        }
    }

    /// Stream of replication `rep` at size index `n_index`.
    pub fn replication_seed(&self, n_index: usize, rep: usize) -> u64 {
        self.seed.wrapping_add((n_index * self.reps + rep) as u64)
    }

    fn validate(&self) -> Result<()> {
        let mut sizes = self.n_values.clone();
        sizes.sort_unstable();
        sizes.dedup();
        if sizes.len() != self.n_values.len() {
            return Err(Error::invalid("sample sizes must be distinct"));
        }
        if sizes.len() < MIN_SIZES {
            return Err(Error::invalid(format!(
                "need at least {MIN_SIZES} sample sizes, got {}",
                sizes.len()
            )));
        }
        if sizes[0] < 16 {
            return Err(Error::invalid(format!("sample sizes must be >= 16, got {}", sizes[0])));
        }
        let ratio = sizes[sizes.len() - 1] as f64 / sizes[0] as f64;
        if ratio < MIN_SIZE_RATIO {
            return Err(Error::invalid(format!(
                "sample sizes span a ratio of {ratio}, need at least {MIN_SIZE_RATIO}"
            )));
        }
        if self.reps == 0 {
            return Err(Error::invalid("need at least one replication"));
        }
        if !(self.bandwidth_factor.is_finite() && self.bandwidth_factor > 0.0) {
            return Err(Error::invalid(format!(
                "bandwidth factor {} must be positive",
                self.bandwidth_factor
            )));
        }
        Ok(())
    }
}

/// `n_min, 2 n_min, 4 n_min, ...` up to `n_max`.
pub fn geometric_sizes(n_min: usize, n_max: usize) -> Result<Vec<usize>> {
    if n_min == 0 || n_min >= n_max {
        return Err(Error::invalid(format!("need 0 < n_min < n_max, got {n_min}, {n_max}")));
    }
    Ok(std::iter::successors(Some(n_min), |&n| n.checked_mul(2))
        .take_while(|&n| n <= n_max)
        .collect())
}

/// The proof chain `||g_n - f|| <= 2 Δ_n(b) / (√n b) + 2 bias + shift`,
/// evaluated on the grid of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub delta_n_b: f64,
    /// `max |A_n F - f|` at the half-shifted grid points.
    pub bias_term: f64,
    /// `max |f(x ± b/2) - f(x)|` over the grid.
    pub shift_term: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupErrorRecord {
    pub n: usize,
    pub b: f64,
    pub replication: usize,
    pub sup_error: f64,
    pub eval_points: usize,
    /// Estimate construction plus grid evaluation.
    #[serde(with = "millis")]
    pub wall_time: Duration,
    /// `Δ_n(b)` of the replication's sample.
    pub delta_n_b: f64,
    pub decomposition: Option<DecompositionCheck>,
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1e3)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)? / 1e3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub n: usize,
    pub b: f64,
    pub median_sup_error: f64,
    pub mean_sup_error: f64,
    /// Median over replications of `Δ_n(b) / √(b ln n)`.
    pub median_modulus_ratio: f64,
}

/// Boundedness of `Δ_n(b_n) / √(b_n ln n)` across sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioDiagnostic {
    pub max: f64,
    pub median: f64,
    /// `max <= 3 median`.
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config: RateConfig,
    /// Ordered by size, then replication.
    pub records: Vec<SupErrorRecord>,
    pub summaries: Vec<RateSummary>,
    /// Least-squares slope of `ln median` on `ln n`.
    pub fitted_slope: f64,
    /// Percentile bootstrap 95% interval; absent with fewer than two
    /// replications.
    pub slope_ci: Option<(f64, f64)>,
    pub target_slope: f64,
    pub ratio_diagnostic: RatioDiagnostic,
    pub warnings: Vec<String>,
}

impl RateReport {
    /// Long format with columns `n,b,replication,sup_error,wall_time_ms`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,b,replication,sup_error,wall_time_ms\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.16e},{},{:.16e},{:.16e}\n",
                r.n,
                r.b,
                r.replication,
                r.sup_error,
                r.wall_time.as_secs_f64() * 1e3
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Median error at the smallest size over the median at the largest.
    pub fn error_reduction(&self) -> f64 {
        let first = self.summaries[0].median_sup_error;
        first / self.summaries[self.summaries.len() - 1].median_sup_error
    }

    /// Replications whose decomposition inequality failed.
    pub fn decomposition_failures(&self) -> Vec<&SupErrorRecord> {
        self.records
            .iter()
            .filter(|r| r.decomposition.is_some_and(|d| !d.holds))
            .collect()
    }
}

/// Runs the experiment. The model needs a known marginal (Gaussian
/// ARMA/linear, or Gaussian TAR through its numerical oracle).
pub fn rate_experiment(model: &TimeSeriesModel, config: &RateConfig) -> Result<RateReport> {
    config.validate()?;
    model.validate()?;
    let law = marginal_law(model)?;
    let mut warnings = Vec::new();
    if config.reps < RECOMMENDED_REPS {
        warnings.push(format!(
            "{} replications per size; at least {RECOMMENDED_REPS} are recommended",
            config.reps
        ));
    }
    if config.reps < 2 {
        warnings.push("no slope confidence interval with a single replication".to_string());
    }

    let mut setups = Vec::with_capacity(config.n_values.len());
    for &n in &config.n_values {
        let b = config.bandwidth_factor * stone_bandwidth(n as u64)?;
        setups.push((n, b, EvalGrid::for_law(law.as_ref(), b)?));
    }
    let jobs: Vec<(usize, usize)> = (0..setups.len())
        .flat_map(|i| (0..config.reps).map(move |r| (i, r)))
        .collect();
    let records: Vec<SupErrorRecord> = jobs
        .par_iter()
        .map(|&(i, rep)| {
            let (n, b, grid) = &setups[i];
            run_replication(model, &law, config, *n, *b, grid, rep, config.replication_seed(i, rep))
        })
        .collect::<Result<_>>()?;

    let mut summaries = Vec::with_capacity(setups.len());
    for (i, &(n, b, _)) in setups.iter().enumerate() {
        let group = &records[i * config.reps..(i + 1) * config.reps];
        let errors: Vec<f64> = group.iter().map(|r| r.sup_error).collect();
        let ln_n = (n as f64).ln();
        let ratios: Vec<f64> = group.iter().map(|r| r.delta_n_b / (b * ln_n).sqrt()).collect();
        summaries.push(RateSummary {
            n,
            b,
            median_sup_error: median(&errors),
            mean_sup_error: errors.iter().sum::<f64>() / errors.len() as f64,
            median_modulus_ratio: median(&ratios),
        });
    }

    if let Some(s) = summaries.iter().find(|s| !(s.median_sup_error > 0.0)) {
        return Err(Error::Degenerate(format!(
            "median sup error {} at n = {}; log-log slope undefined",
            s.median_sup_error, s.n
        )));
    }
    let points: Vec<(f64, f64)> = summaries
        .iter()
        .map(|s| ((s.n as f64).ln(), s.median_sup_error.ln()))
        .collect();
    let fitted_slope = least_squares_slope(&points);
    let slope_ci = (config.reps >= 2 && config.bootstrap_resamples > 0)
        .then(|| bootstrap_ci(config, &records, &summaries))
        .flatten();

    let ratios: Vec<f64> = summaries.iter().map(|s| s.median_modulus_ratio).collect();
    let ratio_median = median(&ratios);
    let ratio_max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for r in records.iter().filter(|r| r.decomposition.is_some_and(|d| !d.holds)) {
        warnings.push(format!(
            "decomposition bound failed at n = {}, replication {}",
            r.n, r.replication
        ));
    }

    Ok(RateReport {
        config: config.clone(),
        records,
        summaries,
        fitted_slope,
        slope_ci,
        target_slope: TARGET_SLOPE,
        ratio_diagnostic: RatioDiagnostic {
            max: ratio_max,
            median: ratio_median,
            bounded: ratio_max <= RATIO_BOUND_FACTOR * ratio_median,
        },
        warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_replication(
    model: &TimeSeriesModel,
    law: &Arc<dyn MarginalLaw>,
    config: &RateConfig,
    n: usize,
    b: f64,
    grid: &EvalGrid,
    replication: usize,
    seed: u64,
) -> Result<SupErrorRecord> {
    let sample = simulate(model, n, config.burn_in, seed)?;
    let scheme = BinningScheme::new(b)?;
    let started = Instant::now();
    let (error, histogram) = match config.estimator {
        RateEstimator::FrequencyPolygon => {
            let h = Arc::new(SparseHistogram::build(&sample, scheme)?);
            let est = DensityEstimate::FrequencyPolygon(h.clone());
            (sup_error(&est, law.as_ref(), grid)?, Some(h))
        }
        RateEstimator::Histogram => {
            let est = DensityEstimate::histogram(&sample, scheme)?;
            (sup_error(&est, law.as_ref(), grid)?, None)
        }
        RateEstimator::Truth => {
            let truth = |x: f64| law.pdf(x);
            (sup_error(&truth, law.as_ref(), grid)?, None)
        }
    };
    let wall_time = started.elapsed();
    let ecdf = EmpiricalCdf::new(&sample)?;
    let delta_n_b = modulus_exact(&ecdf, |x| law.cdf(x), b)?;
    let decomposition = match histogram {
        Some(h) => Some(decomposition_check(&h, law.as_ref(), grid, delta_n_b, error.value)?),
        None => None,
    };
    Ok(SupErrorRecord {
        n,
        b,
        replication,
        sup_error: error.value,
        eval_points: grid.len(),
        wall_time,
        delta_n_b,
        decomposition,
    })
}

fn decomposition_check(
    h: &SparseHistogram,
    law: &dyn MarginalLaw,
    grid: &EvalGrid,
    delta_n_b: f64,
    sup_error: f64,
) -> Result<DecompositionCheck> {
    let scheme = h.scheme();
    let b = scheme.bin_width();
    let an_truth = |z: i64| (law.cdf(scheme.edge(z + 1)) - law.cdf(scheme.edge(z))) / b;
    let mut bias_term = 0.0f64;
    let mut shift_term = 0.0f64;
    for x in grid.points() {
        let fx = law.pdf(x);
        for (shift, y) in [(HalfShift::Right, x - 0.5 * b), (HalfShift::Left, x + 0.5 * b)] {
            let fy = law.pdf(y);
            bias_term = bias_term.max((an_truth(shifted_bin(scheme, x, shift)?) - fy).abs());
            shift_term = shift_term.max((fy - fx).abs());
        }
    }
    let n = h.n() as f64;
    let bound = 2.0 * delta_n_b / (n.sqrt() * b) + 2.0 * bias_term + shift_term;
    Ok(DecompositionCheck {
        delta_n_b,
        bias_term,
        shift_term,
        bound,
        holds: sup_error <= bound + DECOMPOSITION_SLACK,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Percentile interval of the slope, resampling replications within each
/// size.
fn bootstrap_ci(config: &RateConfig, records: &[SupErrorRecord], summaries: &[RateSummary]) -> Option<(f64, f64)> {
    let reps = config.reps;
    let mut rng = replication_rng(config.seed, BOOTSTRAP_STREAM);
    let mut slopes = Vec::with_capacity(config.bootstrap_resamples);
    let mut resample = vec![0.0; reps];
    for _ in 0..config.bootstrap_resamples {
        let mut points = Vec::with_capacity(summaries.len());
        for (i, s) in summaries.iter().enumerate() {
            for slot in resample.iter_mut() {
                *slot = records[i * reps + rng.random_range(0..reps)].sup_error;
            }
            points.push(((s.n as f64).ln(), median(&resample).ln()));
        }
        let slope = least_squares_slope(&points);
        if slope.is_finite() {
            slopes.push(slope);
        }
    }
    if slopes.is_empty() {
        return None;
    }
    slopes.sort_unstable_by(f64::total_cmp);
    let at = |q: f64| slopes[((slopes.len() - 1) as f64 * q).round() as usize];
    Some((at(0.025), at(0.975)))
}
