//! Single-look-complex image container and Pauli-basis conversions.
//!
//! A fully polarimetric SLC acquisition carries three complex channels (HH,
//! HV with reciprocity, VV) on a common row-major raster: rows are azimuth
//! samples, columns are range gates. The Pauli scattering vector
//!
//!   k = ( (HH+VV)/√2, (HH−VV)/√2, √2·HV )
//!
//! is the working basis for coherency analysis — its outer product ⟨k·kᴴ⟩ is
//! the coherency matrix, and its squared norm equals the span
//! |HH|² + 2|HV|² + |VV|² (the conversion is unitary, so total power is
//! preserved exactly up to rounding).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::real::{cast, Real};

/// Polarimetric channel index into an [`SlcImage`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Hh = 0,
    Hv = 1,
    Vv = 2,
}

impl Channel {
    /// All channels in storage order.
    pub const ALL: [Channel; 3] = [Channel::Hh, Channel::Hv, Channel::Vv];

    /// Lower-case name used in file metadata and reports.
    pub fn name(&self) -> &'static str {
        match self {
            Channel::Hh => "hh",
            Channel::Hv => "hv",
            Channel::Vv => "vv",
        }
    }
}

/// Acquisition metadata carried alongside the samples.
///
/// Kept in double precision regardless of the image sample type — these are
/// a handful of scalars, and downstream geometry (Doppler rates, ambiguity
/// intervals) should not lose precision to a storage decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcqMeta {
    /// Radar wavelength [m].
    pub wavelength_m: f64,
    /// Platform velocity [m/s].
    pub velocity_mps: f64,
    /// Azimuth pixel spacing [m].
    pub az_spacing_m: f64,
    /// Pulse repetition frequency [Hz].
    pub prf_hz: f64,
    /// Free-text provenance label.
    #[serde(default)]
    pub label: String,
}

impl Default for AcqMeta {
    /// Placeholder geometry for synthetic scenes: P-band wavelength, a
    /// typical airborne velocity, metre-scale azimuth sampling.
    fn default() -> Self {
        Self {
            wavelength_m: 0.6897,
            velocity_mps: 100.0,
            az_spacing_m: 1.0,
            prf_hz: 1000.0,
            label: String::new(),
        }
    }
}

/// Pauli-basis scattering vector of one pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteringVector<T: Real> {
    /// Components (k₀, k₁, k₂): surface-like, dihedral-like, 45°-tilted.
    pub k: [Complex<T>; 3],
}

impl<T: Real> ScatteringVector<T> {
    /// Builds the Pauli vector from lexicographic channel samples.
    #[inline]
    pub fn from_channels(hh: Complex<T>, hv: Complex<T>, vv: Complex<T>) -> Self {
        let inv_sqrt2 = cast::<T>(std::f64::consts::FRAC_1_SQRT_2);
        let sqrt2 = cast::<T>(std::f64::consts::SQRT_2);
        Self {
            k: [
                (hh + vv).scale(inv_sqrt2),
                (hh - vv).scale(inv_sqrt2),
                hv.scale(sqrt2),
            ],
        }
    }

    /// Inverse conversion back to (HH, HV, VV).
    #[inline]
    pub fn to_channels(&self) -> (Complex<T>, Complex<T>, Complex<T>) {
        let inv_sqrt2 = cast::<T>(std::f64::consts::FRAC_1_SQRT_2);
        let hh = (self.k[0] + self.k[1]).scale(inv_sqrt2);
        let vv = (self.k[0] - self.k[1]).scale(inv_sqrt2);
        let hv = self.k[2].scale(inv_sqrt2);
        (hh, hv, vv)
    }

    /// Total power |k|² (equals the span of the pixel).
    #[inline]
    pub fn power(&self) -> T {
        self.k[0].norm_sqr() + self.k[1].norm_sqr() + self.k[2].norm_sqr()
    }
}

/// Three-channel single-look-complex image, row-major, channel-planar.
#[derive(Clone, Debug, PartialEq)]
pub struct SlcImage<T: Real> {
    rows: usize,
    cols: usize,
    meta: AcqMeta,
    /// One plane per channel in [`Channel::ALL`] order, each rows×cols.
    planes: [Vec<Complex<T>>; 3],
}

impl<T: Real> SlcImage<T> {
    /// Allocates a zero-filled image.
    ///
    /// Azimuth processing needs at least two rows; a single range column is
    /// allowed (degenerate but well-defined).
    pub fn zeros(rows: usize, cols: usize, meta: AcqMeta) -> Result<Self> {
        Self::check_dims(rows, cols)?;
        let zero = Complex::new(T::zero(), T::zero());
        Ok(Self {
            rows,
            cols,
            meta,
            planes: [
                vec![zero; rows * cols],
                vec![zero; rows * cols],
                vec![zero; rows * cols],
            ],
        })
    }

    /// Wraps existing channel planes (HH, HV, VV order). Plane lengths must
    /// equal rows×cols.
    pub fn from_planes(
        rows: usize,
        cols: usize,
        meta: AcqMeta,
        planes: [Vec<Complex<T>>; 3],
    ) -> Result<Self> {
        Self::check_dims(rows, cols)?;
        for (ch, p) in Channel::ALL.iter().zip(planes.iter()) {
            if p.len() != rows * cols {
                return Err(CoreError::Argument(format!(
                    "{} plane has {} samples, expected {}",
                    ch.name(),
                    p.len(),
                    rows * cols
                )));
            }
        }
        Ok(Self { rows, cols, meta, planes })
    }

    fn check_dims(rows: usize, cols: usize) -> Result<()> {
        if rows < 2 || cols < 1 {
            return Err(CoreError::Argument(format!(
                "image must have at least 2 rows and 1 column, got {rows}x{cols}"
            )));
        }
        Ok(())
    }

    /// Azimuth extent (rows).
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Range extent (columns).
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Acquisition metadata.
    #[inline]
    pub fn meta(&self) -> &AcqMeta {
        &self.meta
    }

    /// Mutable metadata (e.g. to restamp the provenance label).
    #[inline]
    pub fn meta_mut(&mut self) -> &mut AcqMeta {
        &mut self.meta
    }

    /// Read-only channel plane, row-major.
    #[inline]
    pub fn plane(&self, ch: Channel) -> &[Complex<T>] {
        &self.planes[ch as usize]
    }

    /// Mutable channel plane, row-major.
    #[inline]
    pub fn plane_mut(&mut self, ch: Channel) -> &mut [Complex<T>] {
        &mut self.planes[ch as usize]
    }

    /// Flat index of (row, col).
    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Bounds-checked single-sample read.
    pub fn sample(&self, ch: Channel, row: usize, col: usize) -> Result<Complex<T>> {
        self.check_pixel(row, col)?;
        Ok(self.planes[ch as usize][row * self.cols + col])
    }

    /// Bounds-checked single-sample write.
    pub fn set_sample(
        &mut self,
        ch: Channel,
        row: usize,
        col: usize,
        v: Complex<T>,
    ) -> Result<()> {
        self.check_pixel(row, col)?;
        self.planes[ch as usize][row * self.cols + col] = v;
        Ok(())
    }

    fn check_pixel(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            return Err(CoreError::Argument(format!(
                "pixel ({row}, {col}) outside {}x{} image",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Pauli scattering vector of one pixel.
    pub fn pauli(&self, row: usize, col: usize) -> Result<ScatteringVector<T>> {
        self.check_pixel(row, col)?;
        let i = row * self.cols + col;
        Ok(ScatteringVector::from_channels(
            self.planes[0][i],
            self.planes[1][i],
            self.planes[2][i],
        ))
    }

    /// Coherent sum of two images of identical dimensions; metadata is taken
    /// from `self`. This is how multi-layer scenes are composited.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(CoreError::Argument(format!(
                "cannot add {}x{} image to {}x{} image",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        let mut out = self.clone();
        for (plane, rhs) in out.planes.iter_mut().zip(other.planes.iter()) {
            for (a, b) in plane.iter_mut().zip(rhs.iter()) {
                *a = *a + *b;
            }
        }
        Ok(out)
    }

    /// Verifies that every sample of every channel is finite.
    ///
    /// Container I/O runs this on load and before save; in-memory pipelines
    /// that only apply FFTs and linear maps to validated inputs do not need
    /// to re-check at every stage.
    pub fn validate_finite(&self) -> Result<()> {
        for ch in Channel::ALL {
            for (i, v) in self.planes[ch as usize].iter().enumerate() {
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(CoreError::Validation(format!(
                        "non-finite sample in {} plane at flat index {i}",
                        ch.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    #[test]
    fn pauli_round_trip_is_identity() {
        let hh = c(1.0, -2.0);
        let hv = c(0.3, 0.7);
        let vv = c(-1.5, 0.25);
        let k = ScatteringVector::from_channels(hh, hv, vv);
        let (hh2, hv2, vv2) = k.to_channels();
        assert_abs_diff_eq!((hh2 - hh).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((hv2 - hv).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((vv2 - vv).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pauli_power_equals_span() {
        let hh = c(1.0, -2.0);
        let hv = c(0.3, 0.7);
        let vv = c(-1.5, 0.25);
        let k = ScatteringVector::from_channels(hh, hv, vv);
        let span = hh.norm_sqr() + 2.0 * hv.norm_sqr() + vv.norm_sqr();
        assert_abs_diff_eq!(k.power(), span, epsilon = 1e-12);
    }

    #[test]
    fn trihedral_and_dihedral_land_on_pure_pauli_components() {
        // Trihedral: HH = VV, no cross-pol -> pure k0.
        let k = ScatteringVector::from_channels(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert_abs_diff_eq!(k.k[0].re, 2.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(k.k[1].norm(), 0.0, epsilon = 1e-15);
        // Dihedral: HH = -VV -> pure k1.
        let k = ScatteringVector::from_channels(c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
        assert_abs_diff_eq!(k.k[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.k[1].re, 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn dimension_validation() {
        assert!(SlcImage::<f64>::zeros(1, 8, AcqMeta::default()).is_err());
        assert!(SlcImage::<f64>::zeros(8, 0, AcqMeta::default()).is_err());
        assert!(SlcImage::<f64>::zeros(2, 1, AcqMeta::default()).is_ok());
        let bad = SlcImage::from_planes(
            4,
            4,
            AcqMeta::default(),
            [vec![c(0.0, 0.0); 16], vec![c(0.0, 0.0); 15], vec![c(0.0, 0.0); 16]],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn sample_accessors_are_bounds_checked() {
        let mut img = SlcImage::<f64>::zeros(4, 3, AcqMeta::default()).unwrap();
        assert!(img.set_sample(Channel::Hv, 2, 1, c(5.0, -1.0)).is_ok());
        assert_eq!(img.sample(Channel::Hv, 2, 1).unwrap(), c(5.0, -1.0));
        assert!(img.sample(Channel::Hh, 4, 0).is_err());
        assert!(img.sample(Channel::Hh, 0, 3).is_err());
        assert!(img.set_sample(Channel::Vv, 0, 3, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn add_requires_matching_dimensions_and_sums_samples() {
        let mut a = SlcImage::<f64>::zeros(3, 2, AcqMeta::default()).unwrap();
        let mut b = SlcImage::<f64>::zeros(3, 2, AcqMeta::default()).unwrap();
        a.set_sample(Channel::Hh, 1, 1, c(1.0, 2.0)).unwrap();
        b.set_sample(Channel::Hh, 1, 1, c(0.5, -1.0)).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.sample(Channel::Hh, 1, 1).unwrap(), c(1.5, 1.0));
        let c3 = SlcImage::<f64>::zeros(3, 3, AcqMeta::default()).unwrap();
        assert!(a.add(&c3).is_err());
    }

    #[test]
    fn finiteness_validation_pinpoints_the_plane() {
        let mut img = SlcImage::<f64>::zeros(2, 2, AcqMeta::default()).unwrap();
        assert!(img.validate_finite().is_ok());
        img.set_sample(Channel::Vv, 1, 0, c(f64::NAN, 0.0)).unwrap();
        let err = img.validate_finite().unwrap_err();
        assert!(err.to_string().contains("vv"), "got: {err}");
    }

    proptest! {
        #[test]
        fn pauli_conversion_preserves_power(
            re in proptest::collection::vec(-3.0..3.0f64, 6)
        ) {
            let hh = c(re[0], re[1]);
            let hv = c(re[2], re[3]);
            let vv = c(re[4], re[5]);
            let k = ScatteringVector::from_channels(hh, hv, vv);
            let span = hh.norm_sqr() + 2.0 * hv.norm_sqr() + vv.norm_sqr();
            prop_assert!((k.power() - span).abs() <= 1e-12 * (1.0 + span));
            let (hh2, hv2, vv2) = k.to_channels();
            prop_assert!((hh2 - hh).norm() <= 1e-12 * (1.0 + hh.norm()));
            prop_assert!((hv2 - hv).norm() <= 1e-12 * (1.0 + hv.norm()));
            prop_assert!((vv2 - vv).norm() <= 1e-12 * (1.0 + vv.norm()));
        }
    }
}
