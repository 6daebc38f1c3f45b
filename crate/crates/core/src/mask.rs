//! Boolean raster masks and terrain-slope selection.
//!
//! Azimuth-anisotropy statistics are only meaningful where the scattering
//! geometry is controlled; the standard guard is to restrict analysis to
//! near-flat terrain by thresholding an azimuth-slope raster. Masks carry a
//! free-text `note` recording how they were made, which ends up in report
//! sidecars.

use crate::error::{CoreError, Result};
use crate::real::Real;

/// Boolean raster, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
    /// Free-text provenance (how the mask was derived).
    pub note: String,
}

impl RasterMask {
    /// All-true mask.
    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![true; rows * cols],
            note: "all pixels".into(),
        }
    }

    /// Wraps an existing bit vector (length must be rows×cols).
    pub fn from_bits(rows: usize, cols: usize, bits: Vec<bool>, note: String) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(CoreError::Argument(format!(
                "mask has {} bits, expected {}x{} = {}",
                bits.len(),
                rows,
                cols,
                rows * cols
            )));
        }
        Ok(Self { rows, cols, bits, note })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Value at (row, col); out of range is simply false.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols && self.bits[row * self.cols + col]
    }

    /// Raw bits, row-major.
    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of selected pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Pixel-wise AND with another mask of identical dimensions.
    pub fn and(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(CoreError::Argument(format!(
                "mask dimensions differ: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let bits = self
            .bits
            .iter()
            .zip(other.bits.iter())
            .map(|(&a, &b)| a && b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            bits,
            note: format!("({}) and ({})", self.note, other.note),
        })
    }
}

/// Terrain-slope raster in degrees, row-major. NaN marks missing data.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeRaster<T: Real> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
    /// Free-text provenance label.
    pub label: String,
}

impl<T: Real> SlopeRaster<T> {
    /// Wraps existing values (length must be rows×cols).
    pub fn new(rows: usize, cols: usize, values: Vec<T>, label: String) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(CoreError::Argument(format!(
                "slope raster has {} values, expected {}x{} = {}",
                values.len(),
                rows,
                cols,
                rows * cols
            )));
        }
        Ok(Self { rows, cols, values, label })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Raw values, row-major.
    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Selects pixels with slope in the closed interval [lo, hi] degrees.
    ///
    /// NaN slopes (missing data) never select — both comparisons fail — so
    /// gaps in a slope product silently fall outside any analysis window.
    pub fn select_range(&self, lo: f64, hi: f64) -> Result<RasterMask> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(CoreError::Argument(format!(
                "slope interval [{lo}, {hi}] is not a valid closed range"
            )));
        }
        let lo_t = T::from_f64(lo).unwrap();
        let hi_t = T::from_f64(hi).unwrap();
        let bits = self
            .values
            .iter()
            .map(|&v| v >= lo_t && v <= hi_t)
            .collect();
        RasterMask::from_bits(
            self.rows,
            self.cols,
            bits,
            format!("azimuth slope in [{lo}, {hi}] deg of '{}'", self.label),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_selection_is_inclusive_and_nan_safe() {
        let values = vec![-3.0, -2.0, 0.0, 2.0, 2.001, f64::NAN];
        let r = SlopeRaster::new(2, 3, values, "test".into()).unwrap();
        let m = r.select_range(-2.0, 2.0).unwrap();
        assert_eq!(m.bits(), &[false, true, true, true, false, false]);
        assert_eq!(m.count(), 3);
        assert!(r.select_range(2.0, -2.0).is_err());
    }

    #[test]
    fn mask_and_combines_and_records_provenance() {
        let a = RasterMask::from_bits(1, 3, vec![true, true, false], "a".into()).unwrap();
        let b = RasterMask::from_bits(1, 3, vec![true, false, false], "b".into()).unwrap();
        let c = a.and(&b).unwrap();
        assert_eq!(c.bits(), &[true, false, false]);
        assert!(c.note.contains('a') && c.note.contains('b'));
        let d = RasterMask::full(2, 2);
        assert!(a.and(&d).is_err());
    }

    #[test]
    fn out_of_range_get_is_false() {
        let m = RasterMask::full(2, 2);
        assert!(m.get(1, 1));
        assert!(!m.get(2, 0));
        assert!(!m.get(0, 2));
    }

    #[test]
    fn constructors_validate_lengths() {
        assert!(RasterMask::from_bits(2, 2, vec![true; 3], "x".into()).is_err());
        assert!(SlopeRaster::new(2, 2, vec![0.0f64; 5], "x".into()).is_err());
    }
}
