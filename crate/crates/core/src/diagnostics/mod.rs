//! Sup-norm errors, the empirical process `G_n = √n (F_n - F)`, its modulus
//! of continuity and the convergence-rate experiment.

mod modulus;
mod rate;

pub use modulus::{modulus_envelope, modulus_exact, ModulusRecord};
pub use rate::{
    geometric_sizes, rate_experiment, DecompositionCheck, RateConfig, RateEstimator, RateReport, RateSummary,
    RatioDiagnostic, SupErrorRecord, TARGET_SLOPE,
};

use serde::{Deserialize, Serialize};

use crate::ecdf::EmpiricalCdf;
use crate::error::{Error, Result};
use crate::estimate::Density;
use crate::marginal::MarginalLaw;

/// Tail mass left outside the default evaluation grid on each side.
pub const GRID_TAIL: f64 = 1e-9;

/// Default grid spacing, as a fraction of the bin width.
pub const GRID_STEPS_PER_BIN: f64 = 10.0;

/// Default grid margin beyond the truth's effective support, in bin widths.
pub const GRID_MARGIN_BINS: f64 = 4.0;

/// Uniform grid `lo, lo + step, ..., lo + (len - 1) step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    lo: f64,
    step: f64,
    len: usize,
}

impl EvalGrid {
    /// Grid from `lo` through the first point at or beyond `hi`.
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
            return Err(Error::Grid(format!("invalid grid [{lo}, {hi}] step {step}")));
        }
        let intervals = ((hi - lo) / step).ceil();
        if intervals > 1e9 {
            return Err(Error::Grid(format!("{intervals} grid intervals is too many")));
        }
        Ok(Self {
            lo,
            step,
            len: intervals as usize + 1,
        })
    }

    /// Spacing `b / 10` over the `1e-9` quantile range of `law` widened by
    /// `4 b` on each side.
    pub fn for_law(law: &dyn MarginalLaw, b: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Grid(format!("bin width {b} must be positive")));
        }
        let (lo, hi) = law.support(GRID_TAIL);
        let margin = GRID_MARGIN_BINS * b;
        Self::new(lo - margin, hi + margin, b / GRID_STEPS_PER_BIN)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.point(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupError {
    /// `max |g(x) - f(x)|` over the grid.
    pub value: f64,
    /// Grid point attaining the maximum.
    pub argmax: f64,
    /// Bound on `sup_x |g - f| - value`, `(Lip(f) + max slope of g) · step`,
    /// when the estimate is piecewise linear.
    pub discretisation_bound: Option<f64>,
}

/// Largest absolute difference between `estimate` and the truth over
/// `grid`. The grid must contain the truth's `1e-9` quantile range.
pub fn sup_error<E: Density + ?Sized>(estimate: &E, truth: &dyn MarginalLaw, grid: &EvalGrid) -> Result<SupError> {
    let (lo, hi) = truth.support(GRID_TAIL);
    if grid.lo() > lo || grid.hi() < hi {
        return Err(Error::Grid(format!(
            "grid [{}, {}] does not cover the support [{lo}, {hi}]",
            grid.lo(),
            grid.hi()
        )));
    }
    let mut value = 0.0;
    let mut argmax = grid.lo();
    for x in grid.points() {
        let err = (estimate.density(x) - truth.pdf(x)).abs();
        if err > value {
            value = err;
            argmax = x;
        }
    }
    Ok(SupError {
        value,
        argmax,
        discretisation_bound: estimate.max_slope().map(|s| (truth.lipschitz() + s) * grid.step()),
    })
}

/// `G_n(x) = √n (F_n(x) - F(x))`.
pub fn empirical_process<F: Fn(f64) -> f64>(ecdf: &EmpiricalCdf, truth_cdf: F, x: f64) -> f64 {
    (ecdf.n() as f64).sqrt() * (ecdf.eval(x) - truth_cdf(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::BinningScheme;
    use crate::estimate::DensityEstimate;
    use crate::marginal::{normal_cdf, GaussianMarginal};
    use crate::stone_bandwidth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn grid_layout() {
        let g = EvalGrid::new(-1.0, 1.0, 0.25).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.hi(), 1.0);
        assert!(EvalGrid::new(1.0, 0.0, 0.1).is_err());
        assert!(EvalGrid::new(0.0, 1.0, 0.0).is_err());
        let law = GaussianMarginal::standard();
        let g = EvalGrid::for_law(&law, 0.1).unwrap();
        assert!((g.step() - 0.01).abs() < 1e-15);
        let (lo, hi) = law.support(GRID_TAIL);
        assert!(g.lo() <= lo - 0.4 + 1e-12 && g.hi() >= hi + 0.4 - 1e-12);
        assert!((lo + 5.997807015).abs() < 1e-8);
    }

    #[test]
    fn truth_has_zero_error() {
        let law = GaussianMarginal::standard();
        let grid = EvalGrid::for_law(&law, 0.1).unwrap();
        let truth = |x: f64| law.pdf(x);
        let e = sup_error(&truth, &law, &grid).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.discretisation_bound, None);
    }

    #[test]
    fn narrow_grid_rejected() {
        let law = GaussianMarginal::standard();
        let grid = EvalGrid::new(-3.0, 3.0, 0.01).unwrap();
        let truth = |x: f64| law.pdf(x);
        assert!(matches!(sup_error(&truth, &law, &grid), Err(Error::Grid(_))));
    }

    #[test]
    fn histogram_error_scale() {
        let n = 1_000_000;
        let sample = normal_sample(n, 7);
        let b = stone_bandwidth(n as u64).unwrap();
        let est = DensityEstimate::histogram(&sample, BinningScheme::new(b).unwrap()).unwrap();
        let law = GaussianMarginal::standard();
        let e = sup_error(&est, &law, &EvalGrid::for_law(&law, b).unwrap()).unwrap();
        assert!((0.005..0.05).contains(&e.value), "{e:?}");
    }

    #[test]
    fn polygon_beats_histogram() {
        let n = 100_000;
        let b = stone_bandwidth(n as u64).unwrap();
        let scheme = BinningScheme::new(b).unwrap();
        let law = GaussianMarginal::standard();
        let grid = EvalGrid::for_law(&law, b).unwrap();
        let wins = (0..50)
            .filter(|&r| {
                let sample = normal_sample(n, 100 + r);
                let fp = DensityEstimate::frequency_polygon(&sample, scheme).unwrap();
                let hist = DensityEstimate::histogram(&sample, scheme).unwrap();
                let fp_err = sup_error(&fp, &law, &grid).unwrap();
                assert!(fp_err.discretisation_bound.unwrap() < 0.1);
                fp_err.value <= sup_error(&hist, &law, &grid).unwrap().value
            })
            .count();
        assert!(wins >= 30, "{wins} of 50");
    }

    #[test]
    fn empirical_process_values() {
        let one = EmpiricalCdf::new(&[0.0]).unwrap();
        assert_eq!(empirical_process(&one, normal_cdf, 0.0), 0.5);
        assert_eq!(empirical_process(&one, |_| 0.0, -1.0), 0.0);
    }

    #[test]
    fn empirical_process_is_order_one() {
        let n = 10_000;
        let grid = EvalGrid::new(-5.0, 5.0, 0.001).unwrap();
        let bounded = (0..100)
            .filter(|&r| {
                let ecdf = EmpiricalCdf::new(&normal_sample(n, r)).unwrap();
                grid.points().map(|x| empirical_process(&ecdf, normal_cdf, x).abs()).fold(0.0, f64::max) < 3.0
            })
            .count();
        assert!(bounded >= 99, "{bounded} of 100");
    }
}
