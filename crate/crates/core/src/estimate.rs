use std::sync::Arc;

use crate::binning::BinningScheme;
use crate::error::Result;
use crate::histogram::SparseHistogram;
use crate::kde::kde_eval_naive;
use crate::operators::fp_eval;

/// Anything that can be evaluated as a density at a point.
pub trait Density {
    fn density(&self, x: f64) -> f64;

    /// Largest absolute slope, when the density is piecewise linear.
    fn max_slope(&self) -> Option<f64> {
        None
    }
}

impl<F: Fn(f64) -> f64> Density for F {
    fn density(&self, x: f64) -> f64 {
        self(x)
    }
}

/// A fitted density estimate.
#[derive(Debug, Clone)]
pub enum DensityEstimate {
    Histogram(Arc<SparseHistogram>),
    FrequencyPolygon(Arc<SparseHistogram>),
    KdeBaseline { sample: Arc<Vec<f64>>, bandwidth: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    Histogram,
    FrequencyPolygon,
    KdeBaseline,
}

impl DensityEstimate {
    pub fn histogram(sample: &[f64], scheme: BinningScheme) -> Result<Self> {
        Ok(Self::Histogram(Arc::new(SparseHistogram::build(sample, scheme)?)))
    }

    pub fn frequency_polygon(sample: &[f64], scheme: BinningScheme) -> Result<Self> {
        Ok(Self::FrequencyPolygon(Arc::new(SparseHistogram::build(sample, scheme)?)))
    }

    pub fn kind(&self) -> EstimateKind {
        match self {
            Self::Histogram(_) => EstimateKind::Histogram,
            Self::FrequencyPolygon(_) => EstimateKind::FrequencyPolygon,
            Self::KdeBaseline { .. } => EstimateKind::KdeBaseline,
        }
    }

    /// Binning of histogram-backed estimates; `None` for the kernel baseline.
    pub fn scheme(&self) -> Option<&BinningScheme> {
        match self {
            Self::Histogram(h) | Self::FrequencyPolygon(h) => Some(h.scheme()),
            Self::KdeBaseline { .. } => None,
        }
    }

    /// Smoothing scale: bin width or kernel bandwidth.
    pub fn smoothing(&self) -> f64 {
        match self {
            Self::Histogram(h) | Self::FrequencyPolygon(h) => h.bin_width(),
            Self::KdeBaseline { bandwidth, .. } => *bandwidth,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Self::Histogram(h) => h.eval(x),
            Self::FrequencyPolygon(h) => fp_eval(h.as_ref(), x),
            Self::KdeBaseline { sample, bandwidth } => kde_eval_naive(sample, *bandwidth, x),
        }
    }

    /// Largest slope of the estimate, where it is finite (piecewise-linear
    /// polygon); `None` for the other kinds.
    pub fn max_slope(&self) -> Option<f64> {
        match self {
            Self::FrequencyPolygon(h) => Some(h.fp_max_slope()),
            _ => None,
        }
    }
}

impl Density for DensityEstimate {
    /// Panics on non-finite or out-of-range `x`.
    fn density(&self, x: f64) -> f64 {
        self.eval(x).expect("density evaluated at an invalid point")
    }

    fn max_slope(&self) -> Option<f64> {
        DensityEstimate::max_slope(self)
    }
}
