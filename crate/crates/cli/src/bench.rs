//! Frequency polygon versus naive kernel density evaluation.
//!
//! Both estimators use the Stone bandwidth on the same i.i.d. standard
//! normal sample; queries are uniform over the sample range. Each timing
//! is the minimum over repeated runs.

use std::hint::black_box;
use std::time::{Duration, Instant};

use polyfreq::{fp_eval, kde_eval_naive, stone_bandwidth, BinningScheme, SparseHistogram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::CliResult;

pub const BENCH_REPEATS: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub m: usize,
    pub bandwidth: f64,
    /// Occupied bins.
    pub p_n: usize,
    pub fp_build_ms: f64,
    pub fp_query_ms: f64,
    pub fp_total_ms: f64,
    pub kde_ms: f64,
    /// `kde_ms / fp_total_ms`.
    pub speedup: f64,
}

fn sample_and_queries(n: usize, m: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let queries = (0..m).map(|_| rng.random_range(lo..=hi)).collect();
    (sample, queries)
}

fn min_time(repeats: usize, mut f: impl FnMut() -> CliResult<()>) -> CliResult<Duration> {
    let mut best = Duration::MAX;
    for _ in 0..repeats {
        let started = Instant::now();
        f()?;
        best = best.min(started.elapsed());
    }
    Ok(best)
}

fn fp_queries(h: &SparseHistogram, queries: &[f64]) -> CliResult<f64> {
    let mut acc = 0.0;
    for &x in queries {
        acc += fp_eval(h, x)?;
    }
    Ok(acc)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Times the polygon (build plus `m` queries) against `m` naive kernel
/// evaluations.
pub fn run_bench(n: usize, m: usize, seed: u64, repeats: usize) -> CliResult<BenchReport> {
    let (sample, queries) = sample_and_queries(n, m, seed);
    let bandwidth = stone_bandwidth(n as u64)?;
    let scheme = BinningScheme::new(bandwidth)?;
    let build = min_time(repeats, || {
        black_box(SparseHistogram::build(black_box(&sample), scheme)?);
        Ok(())
    })?;
    let h = SparseHistogram::build(&sample, scheme)?;
    let query = min_time(repeats, || {
        black_box(fp_queries(&h, black_box(&queries))?);
        Ok(())
    })?;
    let kde = min_time(repeats, || {
        let mut acc = 0.0;
        for &x in &queries {
            acc += kde_eval_naive(black_box(&sample), bandwidth, x)?;
        }
        black_box(acc);
        Ok(())
    })?;
    let fp_total_ms = ms(build) + ms(query);
    Ok(BenchReport {
        n,
        m,
        bandwidth,
        p_n: h.occupied_bins(),
        fp_build_ms: ms(build),
        fp_query_ms: ms(query),
        fp_total_ms,
        kde_ms: ms(kde),
        speedup: ms(kde) / fp_total_ms,
    })
}

/// Query-only cost of the polygon at two sample sizes.
#[derive(Debug, Clone, Serialize)]
pub struct QueryScaling {
    pub m: usize,
    pub small_n: usize,
    pub large_n: usize,
    pub small_p_n: usize,
    pub large_p_n: usize,
    pub small_query_ms: f64,
    pub large_query_ms: f64,
}

impl QueryScaling {
    /// `large_query_ms / small_query_ms`.
    pub fn time_ratio(&self) -> f64 {
        self.large_query_ms / self.small_query_ms
    }
}

pub fn query_scaling(small_n: usize, large_n: usize, m: usize, seed: u64, repeats: usize) -> CliResult<QueryScaling> {
    let mut timings = Vec::with_capacity(2);
    for n in [small_n, large_n] {
        let (sample, queries) = sample_and_queries(n, m, seed);
        let h = SparseHistogram::build(&sample, BinningScheme::new(stone_bandwidth(n as u64)?)?)?;
        drop(sample);
        let t = min_time(repeats, || {
            black_box(fp_queries(&h, black_box(&queries))?);
            Ok(())
        })?;
        timings.push((h.occupied_bins(), ms(t)));
    }
    Ok(QueryScaling {
        m,
        small_n,
        large_n,
        small_p_n: timings[0].0,
        large_p_n: timings[1].0,
        small_query_ms: timings[0].1,
        large_query_ms: timings[1].1,
    })
}
