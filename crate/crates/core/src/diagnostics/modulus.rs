//! Exact modulus of continuity of the empirical process,
//! `Δ_n(b) = sup_{|u - v| <= b} |G_n(u) - G_n(v)|`.
//!
//! Windows are half-open, `(v, u]`, matching the right-continuous `F_n`.
//! With `D(v, u) = F_n(u) - F_n(v) - (F(u) - F(v))`, `Δ_n(b) / √n` is the
//! larger of `sup D` and `sup -D` over `v <= u <= v + b`.
//!
//! - `sup D`: the window is shrunk onto its sample points, `u = X_j` and
//!   `v -> X_i-`, giving `(j - i + 1)/n - (F(X_j) - F(X_i))` for pairs with
//!   `X_j - X_i < b`.
//! - `sup -D`: the window is grown until it is blocked by a sample point on
//!   both sides or reaches width `b`. Blocked windows give
//!   `F(X_j) - F(X_i) - (j - i - 1)/n` for `X_j - X_i <= b`. Full-width
//!   windows give `W(v) - N(v)/n` with `W(v) = F(v + b) - F(v)`, where the
//!   count `N(v)` of sample points in `(v, v + b]` is piecewise constant
//!   with breakpoints `X_k - b` and `X_k`.
//!
//! `W` is maximised on each constancy interval by branch and bound: a piece
//! `[lo, hi]` is discarded once `F(hi + b) - F(lo) - N/n` cannot beat the
//! running maximum, and pieces narrower than `b / 8` are scanned and refined
//! with golden-section search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::ecdf::EmpiricalCdf;
use crate::error::{Error, Result};

const LEAF_PIECES_PER_WIDTH: f64 = 8.0;
const LEAF_SCAN: usize = 8;
const GOLDEN_ITERATIONS: usize = 80;
const MAX_TAIL_DOUBLINGS: usize = 1100;

/// `Δ_n(b)`, the modulus of continuity of `G_n = √n (F_n - F)` at scale `b`,
/// for a continuous CDF `truth_cdf`.
pub fn modulus_exact<F: Fn(f64) -> f64>(ecdf: &EmpiricalCdf, truth_cdf: F, b: f64) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::invalid(format!("window width {b} must be positive")));
    }
    let x = ecdf.sorted_sample();
    let n = x.len() as f64;
    let fx: Vec<f64> = x.iter().map(|&v| truth_cdf(v)).collect();

    let mut best = positive_excursion(x, &fx, b).max(blocked_negative_excursion(x, &fx, b));
    let mut search = WindowSearch {
        cdf: &truth_cdf,
        b,
        n,
        best: &mut best,
    };
    search.full_width(x);
    Ok(n.sqrt() * best.max(0.0))
}

/// `max (j - i + 1)/n - (F(X_j) - F(X_i))` over `i <= j`, `X_j - X_i < b`.
fn positive_excursion(x: &[f64], fx: &[f64], b: f64) -> f64 {
    let n = x.len() as f64;
    let key = |i: usize| fx[i] - i as f64 / n;
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut best = f64::NEG_INFINITY;
    for j in 0..x.len() {
        while window.back().is_some_and(|&i| key(i) <= key(j)) {
            window.pop_back();
        }
        window.push_back(j);
        while window.front().is_some_and(|&i| x[j] - x[i] >= b) {
            window.pop_front();
        }
        let i = window[0];
        best = best.max((j + 1) as f64 / n - fx[j] + key(i));
    }
    best
}

/// `max F(X_j) - F(X_i) - (j - i - 1)/n` over `i < j`, `X_j - X_i <= b`.
fn blocked_negative_excursion(x: &[f64], fx: &[f64], b: f64) -> f64 {
    let n = x.len() as f64;
    let key = |i: usize| i as f64 / n - fx[i];
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut best = f64::NEG_INFINITY;
    for j in 0..x.len() {
        while window.front().is_some_and(|&i| x[j] - x[i] > b) {
            window.pop_front();
        }
        if let Some(&i) = window.front() {
            best = best.max(fx[j] - (j as f64 - 1.0) / n + key(i));
        }
        while window.back().is_some_and(|&i| key(i) <= key(j)) {
            window.pop_back();
        }
        window.push_back(j);
    }
    best
}

struct WindowSearch<'a, F> {
    cdf: &'a F,
    b: f64,
    n: f64,
    best: &'a mut f64,
}

impl<F: Fn(f64) -> f64> WindowSearch<'_, F> {
    fn w(&self, v: f64) -> f64 {
        (self.cdf)(v + self.b) - (self.cdf)(v)
    }

    /// Full-width windows `(v, v + b]` over all `v`.
    fn full_width(&mut self, x: &[f64]) {
        let n = x.len();
        // Merge the breakpoints X_k - b (count +1) and X_k (count -1).
        let mut breaks: Vec<(f64, i64)> = Vec::with_capacity(2 * n);
        let (mut i, mut j) = (0, 0);
        while i < n || j < n {
            let start = if i < n { x[i] - self.b } else { f64::INFINITY };
            let end = if j < n { x[j] } else { f64::INFINITY };
            let (pos, step) = if start <= end {
                i += 1;
                (start, 1)
            } else {
                j += 1;
                (end, -1)
            };
            match breaks.last_mut() {
                Some(last) if last.0 == pos => last.1 += step,
                _ => breaks.push((pos, step)),
            }
        }
        let lower: Vec<f64> = breaks.iter().map(|&(c, _)| (self.cdf)(c)).collect();
        let upper: Vec<f64> = breaks.iter().map(|&(c, _)| (self.cdf)(c + self.b)).collect();

        let mut counts = Vec::with_capacity(breaks.len());
        let mut count = 0i64;
        for (l, &(_, step)) in breaks.iter().enumerate() {
            count += step;
            counts.push(count as f64 / self.n);
            let wl = upper[l] - lower[l];
            let mut value = wl - count as f64 / self.n;
            if l > 0 {
                value = value.max(wl - counts[l - 1]);
            }
            *self.best = self.best.max(value);
        }
        for l in 0..breaks.len().saturating_sub(1) {
            if upper[l + 1] - lower[l] - counts[l] > *self.best {
                self.maximise(breaks[l].0, breaks[l + 1].0, counts[l]);
            }
        }
        self.tail(breaks[0].0, -1.0);
        self.tail(breaks[breaks.len() - 1].0, 1.0);
    }

    /// Empty full-width windows beyond the outermost breakpoint. The
    /// searched stretch doubles until the mass left beyond it cannot beat
    /// the running maximum.
    fn tail(&mut self, from: f64, direction: f64) {
        let mut reach = self.b;
        for _ in 0..MAX_TAIL_DOUBLINGS {
            let far = from + direction * reach;
            let remaining = if direction < 0.0 {
                (self.cdf)(far + self.b)
            } else {
                1.0 - (self.cdf)(far)
            };
            if remaining <= *self.best || !far.is_finite() {
                break;
            }
            reach *= 2.0;
        }
        let far = from + direction * reach;
        let (lo, hi) = if direction < 0.0 { (far, from) } else { (from, far) };
        self.maximise(lo, hi, 0.0);
    }

    /// `max W(v) - offset` over `[lo, hi]`, by bisection pruned with
    /// `W <= F(hi + b) - F(lo)` on each piece, and a scan refined by
    /// golden-section search on pieces narrower than `b / 8`.
    fn maximise(&mut self, lo: f64, hi: f64, offset: f64) {
        let leaf = self.b / LEAF_PIECES_PER_WIDTH;
        let mut stack = vec![(lo, hi)];
        while let Some((lo, hi)) = stack.pop() {
            if (self.cdf)(hi + self.b) - (self.cdf)(lo) - offset <= *self.best {
                continue;
            }
            if hi - lo > leaf {
                let mid = 0.5 * (lo + hi);
                if mid > lo && mid < hi {
                    stack.push((lo, mid));
                    stack.push((mid, hi));
                    continue;
                }
            }
            let at = |k: usize| if k == LEAF_SCAN { hi } else { lo + (hi - lo) * k as f64 / LEAF_SCAN as f64 };
            let (mut arg, mut top) = (0, f64::NEG_INFINITY);
            for k in 0..=LEAF_SCAN {
                let value = self.w(at(k));
                if value > top {
                    top = value;
                    arg = k;
                }
            }
            let refined = self.golden(at(arg.saturating_sub(1)), at((arg + 1).min(LEAF_SCAN)));
            *self.best = self.best.max(top.max(refined) - offset);
        }
    }

    fn golden(&self, mut lo: f64, mut hi: f64) -> f64 {
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - ratio * (hi - lo);
        let mut d = lo + ratio * (hi - lo);
        let (mut wc, mut wd) = (self.w(c), self.w(d));
        for _ in 0..GOLDEN_ITERATIONS {
            if wc >= wd {
                hi = d;
                d = c;
                wd = wc;
                c = hi - ratio * (hi - lo);
                wc = self.w(c);
            } else {
                lo = c;
                c = d;
                wc = wd;
                d = lo + ratio * (hi - lo);
                wd = self.w(d);
            }
        }
        wc.max(wd)
    }
}

/// The two envelope terms `(√(b ln n), b κ_n)` with
/// `κ_n = (ln n)^{1/2} ln ln n`.
pub fn modulus_envelope(n: u64, b: f64) -> Result<(f64, f64)> {
    if n < 16 {
        return Err(Error::invalid(format!("envelope needs n >= 16, got {n}")));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::invalid(format!("window width {b} must be positive")));
    }
    let ln_n = (n as f64).ln();
    let kappa = ln_n.sqrt() * ln_n.ln();
    Ok(((b * ln_n).sqrt(), b * kappa))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusRecord {
    pub n: u64,
    pub b: f64,
    pub delta_n_b: f64,
    /// `√(b ln n)`.
    pub envelope_sqrt: f64,
    /// `b κ_n`.
    pub envelope_kappa: f64,
}

impl ModulusRecord {
    pub fn compute<F: Fn(f64) -> f64>(ecdf: &EmpiricalCdf, truth_cdf: F, b: f64) -> Result<Self> {
        let n = ecdf.n() as u64;
        let (envelope_sqrt, envelope_kappa) = modulus_envelope(n, b)?;
        Ok(Self {
            n,
            b,
            delta_n_b: modulus_exact(ecdf, truth_cdf, b)?,
            envelope_sqrt,
            envelope_kappa,
        })
    }

    /// `Δ_n(b) / √(b ln n)`.
    pub fn ratio(&self) -> f64 {
        self.delta_n_b / self.envelope_sqrt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginal::normal_cdf;
    use crate::stone_bandwidth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    /// Direct maximisation over candidate points: a uniform grid, the grid
    /// shifted by `b`, and the sample points, their `b`-shifts and their
    /// neighbours at distance `1e-10`. `F_n` is counted linearly.
    fn brute_force(sample: &[f64], cdf: impl Fn(f64) -> f64, b: f64, grid_points: usize) -> f64 {
        let n = sample.len() as f64;
        let lo = sample.iter().copied().fold(f64::INFINITY, f64::min) - 6.0;
        let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 6.0;
        let mut cand: Vec<f64> = (0..grid_points)
            .map(|i| lo + (hi - lo) * i as f64 / (grid_points - 1) as f64)
            .collect();
        cand.extend(cand.clone().iter().map(|g| g + b));
        for &s in sample {
            for base in [s, s - b, s + b] {
                cand.extend([base - 1e-10, base, base + 1e-10]);
            }
        }
        cand.sort_by(f64::total_cmp);
        let g: Vec<f64> = cand
            .iter()
            .map(|&c| sample.iter().filter(|&&s| s <= c).count() as f64 / n - cdf(c))
            .collect();
        let mut best = 0.0f64;
        let mut start = 0;
        for j in 0..cand.len() {
            while cand[j] - cand[start] > b * (1.0 + 1e-12) {
                start += 1;
            }
            for i in start..j {
                best = best.max((g[j] - g[i]).abs());
            }
        }
        n.sqrt() * best
    }

    #[test]
    fn single_observation() {
        let ecdf = EmpiricalCdf::new(&[0.0]).unwrap();
        let d = modulus_exact(&ecdf, normal_cdf, 0.2).unwrap();
        // sup attained in the limit of a vanishing window around the jump
        assert!((d - 1.0).abs() < 1e-15, "{d}");
        assert!(d >= 1.0 - (normal_cdf(0.0) - normal_cdf(-0.2)));
    }

    #[test]
    fn vanishing_width_gives_largest_jump() {
        let sample = [0.5, 0.5, 0.5, -1.0, 2.0, 0.25, 0.25];
        let ecdf = EmpiricalCdf::new(&sample).unwrap();
        let d = modulus_exact(&ecdf, normal_cdf, 1e-9).unwrap();
        let expected = 3.0 / 7.0 * 7f64.sqrt();
        assert!((d - expected).abs() < 1e-8, "{d} vs {expected}");
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..30u64 {
            let n = rng.random_range(1..=50);
            let b = [0.05, 0.2, 0.7, 2.0][case as usize % 4];
            let sample = normal_sample(n, case);
            let ecdf = EmpiricalCdf::new(&sample).unwrap();
            let exact = modulus_exact(&ecdf, normal_cdf, b).unwrap();
            let brute = brute_force(&sample, normal_cdf, b, 10_000);
            assert!(exact >= brute - 1e-9, "case {case}: {exact} < {brute}");
            assert!(exact - brute <= 1e-6, "case {case}: {exact} vs {brute}");
        }
    }

    #[test]
    fn monotone_in_width() {
        for seed in 0..20 {
            let ecdf = EmpiricalCdf::new(&normal_sample(200, seed)).unwrap();
            let mut last = 0.0;
            for k in 1..=40 {
                let d = modulus_exact(&ecdf, normal_cdf, 0.025 * k as f64).unwrap();
                assert!(d >= last, "seed {seed}, width {}: {d} < {last}", 0.025 * k as f64);
                last = d;
            }
        }
    }

    #[test]
    fn rejects_bad_width() {
        let ecdf = EmpiricalCdf::new(&[0.0]).unwrap();
        assert!(modulus_exact(&ecdf, normal_cdf, 0.0).is_err());
        assert!(modulus_exact(&ecdf, normal_cdf, f64::NAN).is_err());
    }

    #[test]
    fn envelope_terms() {
        assert!(modulus_envelope(15, 0.1).is_err());
        let b = stone_bandwidth(10_000).unwrap();
        let (t1, t2) = modulus_envelope(10_000, b).unwrap();
        assert!((t1 - 0.946637678988326903).abs() < 1e-12, "{t1}");
        let (d1, d2) = modulus_envelope(10_000, 2.0 * b).unwrap();
        assert!((d1 / t1 - 2f64.sqrt()).abs() < 1e-14);
        assert!((d2 / t2 - 2.0).abs() < 1e-14);
        // ln ln n = 1 at n ≈ e^e; at n = 16 κ_n = √(ln 16) · ln ln 16
        let (_, k) = modulus_envelope(16, 1.0).unwrap();
        let ln16 = 16f64.ln();
        assert!((k - ln16.sqrt() * ln16.ln()).abs() < 1e-15);
    }

    #[test]
    fn record_ratio() {
        let n = 4096;
        let ecdf = EmpiricalCdf::new(&normal_sample(n, 3)).unwrap();
        let b = stone_bandwidth(n as u64).unwrap();
        let r = ModulusRecord::compute(&ecdf, normal_cdf, b).unwrap();
        assert!(r.delta_n_b > 0.0 && r.ratio() > 0.1 && r.ratio() < 3.0, "{r:?}");
    }
}
