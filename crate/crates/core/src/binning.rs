//! Bin geometry on the regular grid `z * b`, `z` an integer.
//!
//! Bins are half-open on the left: bin `z` is `(z*b, (z+1)*b]`, so the bin
//! origin of `x` is the greatest grid point strictly below `x`. Grid points
//! are the rounded products `fl(z * b)`; every membership test compares `x`
//! against those rounded edges, which makes bin assignment reproducible
//! bit-for-bit and keeps the histogram consistent with the empirical CDF
//! evaluated at the same edges.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Largest |x / b| accepted. Keeps `z` and `z + 0.5` exactly representable.
const MAX_SCALED: f64 = 4.0e15;

/// Bin width with the origin pinned at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    bin_width: f64,
}

/// Phase of a grid relative to the bin edges, in units of the bin width.
///
/// `Edges` is the bin grid itself. `Midpoints` is the same grid moved right
/// by half a bin: its cell `z` is `((z + 1/2) b, (z + 3/2) b]`.
/// `HalfBinLeft` is moved left by half a bin: cell `k` is
/// `((k - 1/2) b, (k + 1/2) b]`, the interval on which the frequency polygon
/// interpolates between the knots of bins `k - 1` and `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPhase {
    Edges,
    Midpoints,
    HalfBinLeft,
}

impl GridPhase {
    fn offset(self) -> f64 {
        match self {
            GridPhase::Edges => 0.0,
            GridPhase::Midpoints => 0.5,
            GridPhase::HalfBinLeft => -0.5,
        }
    }
}

impl BinningScheme {
    pub fn new(bin_width: f64) -> Result<Self> {
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::invalid(format!(
                "bin width must be positive and finite, got {bin_width}"
            )));
        }
        Ok(Self { bin_width })
    }

    #[inline]
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Lower edge of bin `z`, `fl(z * b)`.
    #[inline]
    pub fn edge(&self, z: i64) -> f64 {
        z as f64 * self.bin_width
    }

    /// Midpoint of bin `z`, `fl((z + 1/2) * b)`. This is where the frequency
    /// polygon has its knots.
    #[inline]
    pub fn midpoint(&self, z: i64) -> f64 {
        (z as f64 + 0.5) * self.bin_width
    }

    #[inline]
    fn boundary(&self, z: i64, phase: GridPhase) -> f64 {
        (z as f64 + phase.offset()) * self.bin_width
    }

    /// Index `z` of the cell `(B(z), B(z+1)]` containing `x`, where `B` are the
    /// boundaries of the requested grid phase.
    pub fn cell_index(&self, x: f64, phase: GridPhase) -> Result<i64> {
        ensure_finite(x, "evaluation point")?;
        let scaled = x / self.bin_width - phase.offset();
        if scaled.abs() > MAX_SCALED {
            return Err(Error::invalid(format!(
                "x = {x} is too far from the origin for bin width {}",
                self.bin_width
            )));
        }
        Ok(self.cell_index_unchecked(x, scaled, phase))
    }

    #[inline]
    fn cell_index_unchecked(&self, x: f64, scaled: f64, phase: GridPhase) -> i64 {
        let mut z = scaled.ceil() as i64 - 1;
        // x / b may be off by an ulp near a boundary; settle against the
        // rounded boundaries themselves.
        while self.boundary(z, phase) >= x {
            z -= 1;
        }
        while self.boundary(z + 1, phase) < x {
            z += 1;
        }
        z
    }

    /// Index of the bin `(z b, (z+1) b]` containing `x`.
    #[inline]
    pub fn bin_index(&self, x: f64) -> Result<i64> {
        self.cell_index(x, GridPhase::Edges)
    }

    /// Greatest grid point strictly below `x`.
    pub fn bin_origin(&self, x: f64) -> Result<f64> {
        self.bin_index(x).map(|z| self.edge(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_width() {
        assert!(BinningScheme::new(0.0).is_err());
        assert!(BinningScheme::new(-1.0).is_err());
        assert!(BinningScheme::new(f64::NAN).is_err());
        assert!(BinningScheme::new(f64::INFINITY).is_err());
    }

    #[test]
    fn origin_examples() {
        let unit = BinningScheme::new(1.0).unwrap();
        assert_eq!(unit.bin_origin(2.5).unwrap(), 2.0);
        // exact grid point belongs to the bin below it
        assert_eq!(unit.bin_origin(3.0).unwrap(), 2.0);
        let half = BinningScheme::new(0.5).unwrap();
        assert_eq!(half.bin_origin(-0.2).unwrap(), -0.5);
        assert_eq!(half.bin_origin(0.0).unwrap(), -0.5);
    }

    #[test]
    fn non_finite_is_a_domain_error() {
        let s = BinningScheme::new(1.0).unwrap();
        assert!(s.bin_origin(f64::NAN).is_err());
        assert!(s.bin_origin(f64::NEG_INFINITY).is_err());
        assert!(s.bin_origin(1e300).is_err());
    }

    #[test]
    fn rounded_edges_are_upper_closed() {
        let s = BinningScheme::new(0.1).unwrap();
        for z in -200..200 {
            let e = s.edge(z);
            assert_eq!(s.bin_index(e).unwrap(), z - 1, "edge {e}");
            let above = f64::from_bits(if e >= 0.0 { e.to_bits() + 1 } else { e.to_bits() - 1 });
            let above = if e == 0.0 { f64::MIN_POSITIVE } else { above };
            assert_eq!(s.bin_index(above).unwrap(), z, "just above {e}");
        }
    }

    #[test]
    fn phases_are_shifted_copies() {
        let s = BinningScheme::new(0.3).unwrap();
        for &x in &[-1.0, -0.45, -0.15, 0.0, 0.15, 0.3, 0.45, 0.6, 2.0] {
            let k = s.cell_index(x, GridPhase::HalfBinLeft).unwrap();
            let m = s.cell_index(x, GridPhase::Midpoints).unwrap();
            assert_eq!(m, k - 1);
        }
    }

    proptest! {
        #[test]
        fn origin_brackets_x(x in -1.0e6f64..1.0e6, b in 1e-3f64..10.0) {
            let s = BinningScheme::new(b).unwrap();
            let z = s.bin_index(x).unwrap();
            prop_assert!(s.edge(z) < x);
            prop_assert!(x <= s.edge(z + 1));
            prop_assert_eq!(s.bin_origin(x).unwrap(), s.edge(z));
        }

        #[test]
        fn half_bin_cells_bracket_x(x in -1.0e4f64..1.0e4, b in 1e-3f64..10.0) {
            let s = BinningScheme::new(b).unwrap();
            let k = s.cell_index(x, GridPhase::HalfBinLeft).unwrap();
            prop_assert!(s.midpoint(k - 1) < x && x <= s.midpoint(k));
        }
    }
}
