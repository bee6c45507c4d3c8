use crate::error::{Error, Result};

/// Empirical distribution function of a sample, stored as the sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let bad: Vec<usize> = (0..sample.len()).filter(|&i| !sample[i].is_finite()).collect();
        if !bad.is_empty() {
            return Err(Error::NonFinite { indices: bad });
        }
        let mut sorted = sample.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted_sample(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of observations `<= x`.
    pub fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    /// `F_n(x) = #{X_i <= x} / n`, right-continuous.
    pub fn eval(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.n() as f64
    }

    /// Largest number of tied observations.
    pub fn max_multiplicity(&self) -> usize {
        let mut best = 0;
        let mut run = 0;
        for (i, &v) in self.sorted.iter().enumerate() {
            run = if i > 0 && self.sorted[i - 1] == v { run + 1 } else { 1 };
            best = best.max(run);
        }
        best
    }
}
