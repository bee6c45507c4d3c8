//! Sparse histogram: a hash map from bin index to count.
//!
//! Only occupied bins are stored, so memory and query cost scale with the
//! number of occupied bins `p_n` rather than with the range of the data.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{BinningScheme, GridPhase};
use crate::error::{Error, Result};

/// Read access to per-bin densities. The frequency polygon is written
/// against this so its lookup count can be observed.
pub trait BinDensity {
    fn scheme(&self) -> &BinningScheme;
    /// Density of bin `z`: `count(z) / (n b)`, zero for empty bins.
    fn bin_density(&self, z: i64) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseHistogram {
    scheme: BinningScheme,
    counts: HashMap<i64, u64>,
    n: u64,
}

impl SparseHistogram {
    /// Counts `sample` into bins of `scheme` in a single pass.
    ///
    /// Rejects empty samples, and samples with non-finite entries (all such
    /// indices are reported).
    pub fn build(sample: &[f64], scheme: BinningScheme) -> Result<Self> {
        check_sample(sample)?;
        let mut builder = HistogramBuilder::new(scheme);
        for &x in sample {
            builder.push(x)?;
        }
        builder.finish()
    }

    /// Parallel build: chunks are counted independently and merged by
    /// addition. The result is identical to [`SparseHistogram::build`].
    pub fn build_parallel(sample: &[f64], scheme: BinningScheme) -> Result<Self> {
        check_sample(sample)?;
        let counts = sample
            .par_chunks(1 << 14)
            .map(|chunk| {
                let mut local: HashMap<i64, u64> = HashMap::new();
                for &x in chunk {
                    // finiteness already checked
                    let z = scheme.bin_index(x)?;
                    *local.entry(z).or_insert(0) += 1;
                }
                Ok(local)
            })
            .try_reduce(HashMap::new, |mut a, b| {
                if a.len() < b.len() {
                    return Ok(merge_into(b, a));
                }
                a = merge_into(a, b);
                Ok(a)
            })?;
        Ok(Self {
            scheme,
            counts,
            n: sample.len() as u64,
        })
    }

    /// Assembles a histogram from explicit counts. Zero counts are dropped.
    pub fn from_counts(
        scheme: BinningScheme,
        counts: impl IntoIterator<Item = (i64, u64)>,
        n: u64,
    ) -> Result<Self> {
        let mut map = HashMap::new();
        for (z, c) in counts {
            if c > 0 {
                *map.entry(z).or_insert(0) += c;
            }
        }
        let total: u64 = map.values().sum();
        if n == 0 || total > n {
            return Err(Error::invalid(format!(
                "sample size {n} must be positive and at least the total count {total}"
            )));
        }
        Ok(Self {
            scheme,
            counts: map,
            n,
        })
    }

    pub fn scheme(&self) -> &BinningScheme {
        &self.scheme
    }

    pub fn bin_width(&self) -> f64 {
        self.scheme.bin_width()
    }

    /// Sample size `n`.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of occupied bins, `p_n`.
    pub fn occupied_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, z: i64) -> u64 {
        self.counts.get(&z).copied().unwrap_or(0)
    }

    pub fn total_count(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Occupied bins sorted by index.
    pub fn sorted_bins(&self) -> Vec<(i64, u64)> {
        let mut bins: Vec<_> = self.counts.iter().map(|(&z, &c)| (z, c)).collect();
        bins.sort_unstable_by_key(|&(z, _)| z);
        bins
    }

    /// Histogram density `f_n(x) = count(bin of x) / (n b)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let z = self.scheme.bin_index(x)?;
        Ok(self.bin_density(z))
    }

    /// `f_n` at the point `x - b/2` (`shift = Right`) or `x + b/2`
    /// (`shift = Left`), located on the half-shifted grid so that no
    /// rounding is introduced by forming `x ± b/2`.
    pub fn eval_shifted(&self, x: f64, shift: HalfShift) -> Result<f64> {
        Ok(self.bin_density(shifted_bin(&self.scheme, x, shift)?))
    }

    /// Largest absolute slope of the frequency polygon, i.e. the largest
    /// jump between adjacent bin densities divided by `b`.
    pub fn fp_max_slope(&self) -> f64 {
        let b = self.bin_width();
        let mut worst = 0.0f64;
        for &z in self.counts.keys() {
            let d = self.bin_density(z);
            worst = worst
                .max((d - self.bin_density(z - 1)).abs())
                .max((d - self.bin_density(z + 1)).abs());
        }
        worst / b
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&HistogramJson::from(self)).expect("histogram serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: HistogramJson =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("histogram json: {e}")))?;
        let scheme = BinningScheme::new(parsed.bin_width)?;
        Self::from_counts(scheme, parsed.bins.into_iter().map(|[z, c]| (z, c as u64)), parsed.n)
    }
}

/// Direction of the half-bin translation `τ_{±b/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfShift {
    /// `τ_{b/2} f(x) = f(x - b/2)`.
    Right,
    /// `τ_{-b/2} f(x) = f(x + b/2)`.
    Left,
}

/// Bin of the translated point `x ∓ b/2`.
pub(crate) fn shifted_bin(scheme: &BinningScheme, x: f64, shift: HalfShift) -> Result<i64> {
    // x - b/2 lies in bin z  <=>  (z + 1/2) b < x <= (z + 3/2) b
    // x + b/2 lies in bin z  <=>  (z - 1/2) b < x <= (z + 1/2) b
    match shift {
        HalfShift::Right => scheme.cell_index(x, GridPhase::Midpoints),
        HalfShift::Left => scheme.cell_index(x, GridPhase::HalfBinLeft),
    }
}

impl BinDensity for SparseHistogram {
    fn scheme(&self) -> &BinningScheme {
        &self.scheme
    }

    #[inline]
    fn bin_density(&self, z: i64) -> f64 {
        match self.counts.get(&z) {
            Some(&c) => c as f64 / (self.n as f64 * self.scheme.bin_width()),
            None => 0.0,
        }
    }
}

fn check_sample(sample: &[f64]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let bad: Vec<usize> = sample
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_finite())
        .map(|(i, _)| i)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::NonFinite { indices: bad })
    }
}

fn merge_into(mut into: HashMap<i64, u64>, from: HashMap<i64, u64>) -> HashMap<i64, u64> {
    for (z, c) in from {
        *into.entry(z).or_insert(0) += c;
    }
    into
}

/// Streaming construction, one observation at a time. Memory is
/// proportional to the number of occupied bins.
#[derive(Debug, Clone)]
pub struct HistogramBuilder {
    scheme: BinningScheme,
    counts: HashMap<i64, u64>,
    seen: u64,
    rejected: Vec<usize>,
}

impl HistogramBuilder {
    pub fn new(scheme: BinningScheme) -> Self {
        Self {
            scheme,
            counts: HashMap::new(),
            seen: 0,
            rejected: Vec::new(),
        }
    }

    /// Adds one observation. Non-finite values are remembered and reported
    /// by [`HistogramBuilder::finish`]; out-of-range finite values fail here.
    pub fn push(&mut self, x: f64) -> Result<()> {
        let index = self.seen as usize;
        self.seen += 1;
        if !x.is_finite() {
            self.rejected.push(index);
            return Ok(());
        }
        let z = self.scheme.bin_index(x)?;
        *self.counts.entry(z).or_insert(0) += 1;
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.seen
    }

    pub fn is_empty(&self) -> bool {
        self.seen == 0
    }

    pub fn finish(self) -> Result<SparseHistogram> {
        if self.seen == 0 {
            return Err(Error::EmptySample);
        }
        if !self.rejected.is_empty() {
            return Err(Error::NonFinite {
                indices: self.rejected,
            });
        }
        Ok(SparseHistogram {
            scheme: self.scheme,
            counts: self.counts,
            n: self.seen,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct HistogramJson {
    bin_width: f64,
    n: u64,
    bins: Vec<[i64; 2]>,
}

impl From<&SparseHistogram> for HistogramJson {
    fn from(h: &SparseHistogram) -> Self {
        HistogramJson {
            bin_width: h.bin_width(),
            n: h.n,
            bins: h
                .sorted_bins()
                .into_iter()
                .map(|(z, c)| [z, c as i64])
                .collect(),
        }
    }
}
