//! The histogram operator `A_n`, the interpolation weight `u_n` and the
//! frequency polygon in operator form `B_n F_n` and in the classical
//! piecewise-linear form.
//!
//! With bins `(z b, (z+1) b]`:
//!
//! ```text
//! A_n F (x) = (F((z+1) b) - F(z b)) / b,          z = bin of x
//! B_n       = (1 - u_n) τ_{b/2} A_n + u_n τ_{-b/2} A_n
//! g_n       = B_n F_n
//! ```
//!
//! `τ_a f(x) = f(x - a)`. Applied to `F_n`, `A_n` reproduces the histogram,
//! and `B_n` reproduces the frequency polygon.

use crate::binning::{BinningScheme, GridPhase};
use crate::error::{ensure_finite, Result};
use crate::histogram::{shifted_bin, BinDensity, HalfShift, SparseHistogram};

/// `A_n F` at `x` for an arbitrary bounded function `F`.
pub fn apply_an<F>(f: F, scheme: &BinningScheme, x: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let z = scheme.bin_index(x)?;
    Ok((f(scheme.edge(z + 1)) - f(scheme.edge(z))) / scheme.bin_width())
}

/// Interpolation weight `u_n(x) = 1/2 - k + x/b`, with `k` the integer such
/// that `k b - b/2 < x <= k b + b/2`.
///
/// Evaluated as the relative position of `x` between the knots
/// `(k - 1/2) b` and `(k + 1/2) b`, so the result lies in `(0, 1]` and is
/// exactly `1` at a knot.
pub fn u_weight(x: f64, scheme: &BinningScheme) -> Result<f64> {
    let k = scheme.cell_index(x, GridPhase::HalfBinLeft)?;
    Ok(weight_in_cell(scheme, k, x))
}

#[inline]
fn weight_in_cell(scheme: &BinningScheme, k: i64, x: f64) -> f64 {
    let left = scheme.midpoint(k - 1);
    let right = scheme.midpoint(k);
    (x - left) / (right - left)
}

/// Frequency polygon `g_n(x) = (B_n F_n)(x)`, the operator form.
///
/// Reads exactly two bin densities: the histogram translated right by half
/// a bin and the histogram translated left by half a bin.
pub fn fp_eval<H: BinDensity + ?Sized>(h: &H, x: f64) -> Result<f64> {
    ensure_finite(x, "evaluation point")?;
    let scheme = h.scheme();
    let u = u_weight(x, scheme)?;
    let shifted_right = h.bin_density(shifted_bin(scheme, x, HalfShift::Right)?);
    let shifted_left = h.bin_density(shifted_bin(scheme, x, HalfShift::Left)?);
    Ok((1.0 - u) * shifted_right + u * shifted_left)
}

/// Frequency polygon in its classical form: for `k b - b/2 < x <= k b + b/2`,
///
/// ```text
/// g_n(x) = (1/2 + k - x/b) f_n(k b) + (1/2 - k + x/b) f_n((k+1) b)
/// ```
pub fn fp_eval_classic(h: &SparseHistogram, x: f64) -> Result<f64> {
    ensure_finite(x, "evaluation point")?;
    let scheme = h.scheme();
    let k = scheme.cell_index(x, GridPhase::HalfBinLeft)?;
    let t = x / scheme.bin_width();
    let kf = k as f64;
    let at_k = h.eval(scheme.edge(k))?;
    let at_k1 = h.eval(scheme.edge(k + 1))?;
    Ok((0.5 + kf - t) * at_k + (0.5 - kf + t) * at_k1)
}
