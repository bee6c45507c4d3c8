//! Ground-truth stationary marginal laws used by the experiments.
//!
//! Gaussian ARMA and Gaussian linear processes have exact normal marginals.
//! For threshold autoregressions the stationary density is the fixed point
//! of the Markov density operator
//!
//! ```text
//! f(x) = ∫ φ_σ(x - r(y)) f(y) dy
//! ```
//!
//! discretised with the trapezoid rule on a grid. Off-grid values are
//! interpolated by cubic Hermite splines whose node derivatives come from
//! differentiating the same operator, so the density and CDF are smooth and
//! cheap to evaluate.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rayon::prelude::*;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::models::{TarModel, TimeSeriesModel};
use crate::noise::NoiseSpec;

/// Stop the fixed-point iteration once the sup-norm change drops below this.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Grid half-width of the default oracle grid, in units of the stationary
/// standard-deviation bound.
const ORACLE_HALF_WIDTH_SDS: f64 = 9.0;

/// Required coverage of a user grid, in units of the standard-deviation bound.
const ORACLE_COVERAGE_SDS: f64 = 8.0;

pub trait MarginalLaw: Send + Sync {
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    /// Lipschitz constant of the density, `sup |f'|`.
    fn lipschitz(&self) -> f64;
    /// Interval `(lo, hi)` with `F(lo) <= tail` and `1 - F(hi) <= tail`.
    fn support(&self, tail: f64) -> (f64, f64);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMarginal {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianMarginal {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(Error::invalid(format!("invalid normal law N({mean}, {sd}²)")));
        }
        Ok(Self { mean, sd })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, sd: 1.0 }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

impl MarginalLaw for GaussianMarginal {
    fn pdf(&self, x: f64) -> f64 {
        normal_pdf((x - self.mean) / self.sd) / self.sd
    }

    fn cdf(&self, x: f64) -> f64 {
        normal_cdf((x - self.mean) / self.sd)
    }

    fn lipschitz(&self) -> f64 {
        // max |φ'| is attained at ±1
        normal_pdf(1.0) / (self.sd * self.sd)
    }

    fn support(&self, tail: f64) -> (f64, f64) {
        let z = normal_quantile(tail);
        (self.mean + z * self.sd, self.mean - z * self.sd)
    }
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let m = grid.len();
    (0..m)
        .map(|i| {
            let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
            let right = if i + 1 < m { grid[i + 1] - grid[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn gaussian_sigma(noise: &NoiseSpec) -> Result<f64> {
    match *noise {
        NoiseSpec::Gaussian { sigma } => Ok(sigma),
        _ => Err(Error::Unsupported(
            "the TAR marginal oracle needs Gaussian noise".to_string(),
        )),
    }
}

/// Stationary density of a Gaussian TAR model on `grid`, by fixed-point
/// iteration of the trapezoid-discretised Markov density operator
/// (renormalised to unit mass at every step) until the sup-norm change is
/// below [`ORACLE_TOLERANCE`].
///
/// The grid must be strictly increasing and cover `±8 σ / sqrt(1 - ρ²)`,
/// an upper bound on eight stationary standard deviations.
pub fn tar_marginal_oracle(model: &TarModel, grid: &[f64], max_iterations: usize) -> Result<Vec<f64>> {
    gaussian_sigma(&model.noise)?;
    if model.contraction() >= 1.0 {
        return Err(Error::NonStationary("TAR model is not contractive".into()));
    }
    if grid.len() < 3 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Grid("oracle grid must be finite, strictly increasing, length >= 3".into()));
    }
    let reach = ORACLE_COVERAGE_SDS * model.std_dev_bound() * (1.0 - 1e-12);
    if grid[0] > -reach || grid[grid.len() - 1] < reach {
        return Err(Error::Grid(format!(
            "oracle grid [{}, {}] does not cover ±{reach}",
            grid[0],
            grid[grid.len() - 1]
        )));
    }
    let noise = model.noise;
    let weights = trapezoid_weights(grid);
    let shifted: Vec<f64> = grid.iter().map(|&y| model.regression(y)).collect();
    let m = grid.len();
    // kernel[i * m + j] = w_j φ_σ(x_i - r(y_j))
    let kernel: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let x = grid[i];
            let weights = &weights;
            shifted
                .iter()
                .zip(weights.iter())
                .map(move |(&ry, &w)| w * noise.pdf(x - ry))
        })
        .collect();

    let mut density: Vec<f64> = grid.iter().map(|&x| noise.pdf(x)).collect();
    normalise(&mut density, &weights);
    let mut last_change = f64::INFINITY;
    for _ in 0..max_iterations {
        let mut next: Vec<f64> = kernel
            .par_chunks(m)
            .map(|row| row.iter().zip(&density).map(|(k, f)| k * f).sum())
            .collect();
        normalise(&mut next, &weights);
        last_change = next
            .iter()
            .zip(&density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        density = next;
        if last_change < ORACLE_TOLERANCE {
            return Ok(density);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        last_change,
    })
}

fn normalise(density: &mut [f64], weights: &[f64]) {
    let mass: f64 = density.iter().zip(weights).map(|(f, w)| f * w).sum();
    density.iter_mut().for_each(|f| *f /= mass);
}

/// Evenly spaced grid of `points` nodes on `±9 σ / sqrt(1 - ρ²)`.
pub fn default_oracle_grid(model: &TarModel, points: usize) -> Vec<f64> {
    let half = ORACLE_HALF_WIDTH_SDS * model.std_dev_bound();
    let step = 2.0 * half / (points - 1) as f64;
    (0..points).map(|i| -half + i as f64 * step).collect()
}

/// Numerically exact stationary law of a Gaussian TAR model.
#[derive(Debug, Clone)]
pub struct TarStationaryLaw {
    nodes: Vec<f64>,
    pdf: Vec<f64>,
    pdf_slope: Vec<f64>,
    cdf: Vec<f64>,
    lipschitz: f64,
}

impl TarStationaryLaw {
    pub const DEFAULT_POINTS: usize = 1601;
    pub const DEFAULT_ITERATIONS: usize = 2000;

    pub fn new(model: &TarModel) -> Result<Self> {
        Self::with_grid(model, &default_oracle_grid(model, Self::DEFAULT_POINTS))
    }

    pub fn with_grid(model: &TarModel, grid: &[f64]) -> Result<Self> {
        let sigma = gaussian_sigma(&model.noise)?;
        let density = tar_marginal_oracle(model, grid, Self::DEFAULT_ITERATIONS)?;
        let weights = trapezoid_weights(grid);
        let mass: Vec<(f64, f64)> = grid
            .iter()
            .zip(weights.iter().zip(&density))
            .map(|(&y, (&w, &f))| (model.regression(y), w * f))
            .collect();
        // one more application of the operator gives f, f' and F in closed form
        let rows: Vec<(f64, f64, f64)> = grid
            .par_iter()
            .map(|&x| {
                let mut f = 0.0;
                let mut df = 0.0;
                let mut cdf = 0.0;
                for &(ry, wf) in &mass {
                    let z = (x - ry) / sigma;
                    let phi = normal_pdf(z) / sigma;
                    f += wf * phi;
                    df -= wf * phi * z / sigma;
                    cdf += wf * normal_cdf(z);
                }
                (f, df, cdf)
            })
            .collect();
        let lipschitz = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        Ok(Self {
            nodes: grid.to_vec(),
            pdf: rows.iter().map(|r| r.0).collect(),
            pdf_slope: rows.iter().map(|r| r.1).collect(),
            cdf: rows.iter().map(|r| r.2).collect(),
            lipschitz,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn hermite(&self, x: f64, values: &[f64], slopes: &[f64]) -> f64 {
        let i = self.nodes.partition_point(|&v| v <= x).clamp(1, self.nodes.len() - 1) - 1;
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * values[i] + h10 * h * slopes[i] + h01 * values[i + 1] + h11 * h * slopes[i + 1]
    }

    fn lo(&self) -> f64 {
        self.nodes[0]
    }

    fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

impl MarginalLaw for TarStationaryLaw {
    fn pdf(&self, x: f64) -> f64 {
        if x < self.lo() || x > self.hi() {
            return 0.0;
        }
        self.hermite(x, &self.pdf, &self.pdf_slope).max(0.0)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo() {
            return 0.0;
        }
        if x >= self.hi() {
            return 1.0;
        }
        self.hermite(x, &self.cdf, &self.pdf).clamp(0.0, 1.0)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn support(&self, tail: f64) -> (f64, f64) {
        let solve = |target: f64| {
            let (mut a, mut b) = (self.lo(), self.hi());
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if self.cdf(mid) < target {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        };
        (solve(tail), solve(1.0 - tail))
    }
}

/// Ground-truth marginal law of `model`, when one is available: Gaussian
/// ARMA and linear processes, and Gaussian TAR models.
pub fn marginal_law(model: &TimeSeriesModel) -> Result<Arc<dyn MarginalLaw>> {
    match model {
        TimeSeriesModel::Arma(m) => {
            let (mean, var) = m.marginal()?;
            Ok(Arc::new(GaussianMarginal::new(mean, var.sqrt())?))
        }
        TimeSeriesModel::Linear(m) if m.noise.is_gaussian() => {
            Ok(Arc::new(GaussianMarginal::new(m.mean, m.variance().sqrt())?))
        }
        TimeSeriesModel::Tar(m) => Ok(Arc::new(TarStationaryLaw::new(m)?)),
        _ => Err(Error::Unsupported(format!(
            "no ground-truth marginal for this {} model",
            model.family_name()
        ))),
    }
}
