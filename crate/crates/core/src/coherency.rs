//! Coherency-matrix estimation by boxcar averaging.
//!
//! The per-pixel outer product k·kᴴ of the Pauli vector is a rank-one,
//! single-look sample; every polarimetric statistic in this crate needs the
//! locally averaged coherency matrix T = ⟨k·kᴴ⟩ instead. The estimator here
//! is the plain boxcar: a centered odd window, clipped at the image edges,
//! averaging over however many pixels actually fall inside.
//!
//! The two-pass separable implementation recomputes each window sum from
//! scratch instead of sliding a running sum along the row. That costs a
//! factor of the window size but keeps the result independent of traversal
//! order — re-running the estimator (serial or parallel) reproduces the
//! exact same bits, which the determinism guarantees of the batch tool rely
//! on.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::herm3::Herm3;
use crate::real::{cast, Real};
use crate::slc::SlcImage;

/// Raster of estimated coherency matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherencyField<T: Real> {
    rows: usize,
    cols: usize,
    window: usize,
    n_samples: u32,
    data: Vec<Herm3<T>>,
}

impl<T: Real> CoherencyField<T> {
    /// Wraps existing per-pixel matrices.
    ///
    /// `n_samples` is the nominal look count the matrices were averaged
    /// over (window², or a sum when fields have been averaged together).
    pub fn from_parts(
        rows: usize,
        cols: usize,
        window: usize,
        n_samples: u32,
        data: Vec<Herm3<T>>,
    ) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CoreError::Argument(format!(
                "coherency field has {} matrices, expected {}x{} = {}",
                data.len(),
                rows,
                cols,
                rows * cols
            )));
        }
        Ok(Self { rows, cols, window, n_samples, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Boxcar window the field was estimated with.
    #[inline]
    pub fn window(&self) -> usize {
        self.window
    }

    /// Nominal number of averaged looks (window²); edge pixels average
    /// fewer due to clipping.
    #[inline]
    pub fn n_samples(&self) -> u32 {
        self.n_samples
    }

    /// Matrix at (row, col).
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &Herm3<T> {
        &self.data[row * self.cols + col]
    }

    /// All matrices, row-major.
    #[inline]
    pub fn data(&self) -> &[Herm3<T>] {
        &self.data
    }

    /// True for pixels whose boxcar window is fully inside the image —
    /// the "interior" on which population statistics are quoted.
    pub fn is_interior(&self, row: usize, col: usize) -> bool {
        let h = self.window / 2;
        row >= h && row + h < self.rows && col >= h && col + h < self.cols
    }
}

/// Estimates the coherency field of an image with an odd boxcar window.
///
/// Edge pixels average over the clipped window (no padding, no wrap):
/// the top-left pixel of a 3×3 boxcar averages 4 samples. The nominal
/// `n_samples` reported on the field is window².
pub fn boxcar_coherency<T: Real>(
    img: &SlcImage<T>,
    window: usize,
) -> Result<CoherencyField<T>> {
    if window == 0 || window % 2 == 0 {
        return Err(CoreError::Argument(format!(
            "boxcar window must be odd and positive, got {window}"
        )));
    }
    if window > img.rows().min(img.cols()) {
        return Err(CoreError::Argument(format!(
            "boxcar window {window} exceeds image extent {}x{}",
            img.rows(),
            img.cols()
        )));
    }
    let rows = img.rows();
    let cols = img.cols();
    let h = window / 2;

    // Pass 0: per-pixel outer products.
    let mut outer = vec![Herm3::<T>::zero(); rows * cols];
    {
        let hh = img.plane(crate::slc::Channel::Hh);
        let hv = img.plane(crate::slc::Channel::Hv);
        let vv = img.plane(crate::slc::Channel::Vv);
        outer
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(r, out_row)| {
                let base = r * cols;
                for (c, out) in out_row.iter_mut().enumerate() {
                    let k = crate::slc::ScatteringVector::from_channels(
                        hh[base + c],
                        hv[base + c],
                        vv[base + c],
                    );
                    *out = Herm3::outer(&k.k);
                }
            });
    }

    // Pass 1: horizontal clipped sums.
    let mut horiz = vec![Herm3::<T>::zero(); rows * cols];
    horiz
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(r, out_row)| {
            let in_row = &outer[r * cols..(r + 1) * cols];
            for (c, out) in out_row.iter_mut().enumerate() {
                let lo = c.saturating_sub(h);
                let hi = (c + h).min(cols - 1);
                let mut acc = Herm3::zero();
                for s in &in_row[lo..=hi] {
                    acc.accumulate(s);
                }
                *out = acc;
            }
        });
    drop(outer);

    // Pass 2: vertical clipped sums and normalization by the true count.
    let mut data = vec![Herm3::<T>::zero(); rows * cols];
    data.par_chunks_mut(cols)
        .enumerate()
        .for_each(|(r, out_row)| {
            let rlo = r.saturating_sub(h);
            let rhi = (r + h).min(rows - 1);
            for (c, out) in out_row.iter_mut().enumerate() {
                let mut acc = Herm3::zero();
                for rr in rlo..=rhi {
                    acc.accumulate(&horiz[rr * cols + c]);
                }
                let clo = c.saturating_sub(h);
                let chi = (c + h).min(cols - 1);
                let count = (rhi - rlo + 1) * (chi - clo + 1);
                *out = acc.scale(T::one() / cast::<T>(count as f64));
            }
        });

    CoherencyField::from_parts(rows, cols, window, (window * window) as u32, data)
}

/// Pixel-wise mean of several coherency fields of identical geometry.
///
/// Look counts add: averaging q fields of N looks each yields q·N looks,
/// which is what sample-starved estimators (small boxcars over repeated
/// acquisitions or sub-apertures) rely on.
pub fn average_coherency<T: Real>(
    fields: &[&CoherencyField<T>],
) -> Result<CoherencyField<T>> {
    let first = fields
        .first()
        .ok_or_else(|| CoreError::Argument("cannot average zero fields".into()))?;
    for f in fields {
        if f.rows != first.rows || f.cols != first.cols {
            return Err(CoreError::Argument(format!(
                "field dimensions differ: {}x{} vs {}x{}",
                f.rows, f.cols, first.rows, first.cols
            )));
        }
    }
    let inv = T::one() / cast::<T>(fields.len() as f64);
    let data: Vec<Herm3<T>> = (0..first.data.len())
        .map(|i| {
            let mut acc = Herm3::zero();
            for f in fields {
                acc.accumulate(&f.data[i]);
            }
            acc.scale(inv)
        })
        .collect();
    let n: u32 = fields.iter().map(|f| f.n_samples).sum();
    CoherencyField::from_parts(first.rows, first.cols, first.window, n, data)
}
