//! Polarimetric metric rasters derived from coherency fields.
//!
//! The central quantity is the 3-D degree of polarisation of the averaged
//! coherency matrix T,
//!
//!   m = √(1 − 27·det(T)/tr³(T)),
//!
//! which is 0 for fully depolarised scattering (T ∝ I) and 1 for a single
//! deterministic mechanism (rank-one T). Its complement 1 − m scaled by the
//! span is the volume (unpolarised) power estimate P_v = (1 − m)·span that
//! the correction stage operates on. Entropy and the radar vegetation index
//! are computed alongside as cross-checks — they respond to the same
//! eigenvalue spread through different functionals.
//!
//! Raster operations never abort on a degenerate pixel (zero span, slightly
//! non-PSD after rounding): the pixel becomes a NaN sentinel and a counter
//! on the raster records how many there were. The exception is a matrix
//! that is non-PSD *beyond* numerical tolerance, which indicates a broken
//! input rather than an unlucky pixel and raises an error.

use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

use crate::coherency::CoherencyField;
use crate::error::{CoreError, Result};
use crate::herm3::Herm3;
use crate::real::{cast, Real};

/// Tolerance for the degree-of-polarisation radicand: values within this
/// distance outside [0, 1] are rounding residue and get clamped; anything
/// farther out marks the pixel degenerate.
const RADICAND_TOL: f64 = 1e-12;

/// Relative eigenvalue tolerance for positive-semidefiniteness checks.
///
/// The closed-form eigensolver loses absolute accuracy of order
/// √machine-epsilon·tr near repeated or zero eigenvalues (a rank-one
/// matrix can report a minimum eigenvalue around ±4e-9·tr), so a PSD
/// gate tighter than that rejects valid matrices. 1e-7 clears the
/// solver's floor with margin while still catching anything genuinely
/// indefinite.
const EIGEN_TOL: f64 = 1e-7;

/// Identifies what a [`MetricRaster`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricId {
    /// Degree of polarisation m.
    MFp,
    /// Depolarised fraction 1 − m.
    OneMinusMFp,
    /// Total power tr(T).
    Span,
    /// Volume power (1 − m)·span.
    PV,
    /// Eigenvalue entropy (log base 3), in [0, 1].
    Entropy,
    /// Radar vegetation index.
    Rvi,
    /// Sublook-to-full span ratio.
    SpanRatio,
    /// Log-likelihood stationarity statistic log₁₀Λ.
    LogLambda,
    /// Anisotropy flag level (0..3).
    Flag,
}

impl MetricId {
    /// Stable lower-case identifier used in file metadata and filenames.
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::MFp => "m_fp",
            MetricId::OneMinusMFp => "one_minus_m_fp",
            MetricId::Span => "span",
            MetricId::PV => "p_v",
            MetricId::Entropy => "entropy",
            MetricId::Rvi => "rvi",
            MetricId::SpanRatio => "span_ratio",
            MetricId::LogLambda => "log_lambda",
            MetricId::Flag => "flag",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "m_fp" => MetricId::MFp,
            "one_minus_m_fp" => MetricId::OneMinusMFp,
            "span" => MetricId::Span,
            "p_v" => MetricId::PV,
            "entropy" => MetricId::Entropy,
            "rvi" => MetricId::Rvi,
            "span_ratio" => MetricId::SpanRatio,
            "log_lambda" => MetricId::LogLambda,
            "flag" => MetricId::Flag,
            other => {
                return Err(CoreError::Format(format!(
                    "unknown metric id '{other}'"
                )))
            }
        })
    }
}

/// Where a metric was computed from: the full-aperture image or one of the
/// sublooks (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Full,
    Sublook(usize),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Full => f.write_str("full"),
            Source::Sublook(i) => write!(f, "sublook_{i}"),
        }
    }
}

impl FromStr for Source {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(Source::Full);
        }
        if let Some(idx) = s.strip_prefix("sublook_") {
            if let Ok(i) = idx.parse::<usize>() {
                return Ok(Source::Sublook(i));
            }
        }
        Err(CoreError::Format(format!("unknown metric source '{s}'")))
    }
}

/// Scalar raster with provenance and a degenerate-pixel counter.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRaster<T: Real> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
    /// What the values are.
    pub metric: MetricId,
    /// What they were computed from.
    pub source: Source,
    /// How many pixels are NaN sentinels from degenerate inputs.
    pub degenerate: usize,
}

impl<T: Real> MetricRaster<T> {
    /// Wraps existing values (length must be rows×cols).
    pub fn from_values(
        rows: usize,
        cols: usize,
        values: Vec<T>,
        metric: MetricId,
        source: Source,
        degenerate: usize,
    ) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(CoreError::Argument(format!(
                "metric raster has {} values, expected {}x{} = {}",
                values.len(),
                rows,
                cols,
                rows * cols
            )));
        }
        Ok(Self { rows, cols, values, metric, source, degenerate })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Value at (row, col); panics on out-of-range indices.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        assert!(row < self.rows && col < self.cols, "raster index out of range");
        self.values[row * self.cols + col]
    }

    /// All values, row-major.
    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// New raster with every value multiplied by `factor`; provenance and
    /// the degenerate counter carry over (NaN stays NaN).
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| v * factor).collect(),
            metric: self.metric,
            source: self.source,
            degenerate: self.degenerate,
        }
    }
}

/// Radicand of the degree of polarisation for one matrix, or `None` for a
/// degenerate pixel (zero/negative span, or non-PSD beyond tolerance).
#[inline]
fn dop_radicand<T: Real>(t: &Herm3<T>) -> Option<T> {
    let tr = t.trace();
    if tr <= T::zero() {
        return None;
    }
    let r = T::one() - cast::<T>(27.0) * t.det() / (tr * tr * tr);
    let tol = cast::<T>(RADICAND_TOL);
    if r < -tol || r > T::one() + tol {
        return None;
    }
    Some(r.max(T::zero()).min(T::one()))
}

/// Per-pixel map over a field with a degenerate counter.
fn map_field<T: Real, F>(
    field: &CoherencyField<T>,
    metric: MetricId,
    source: Source,
    f: F,
) -> MetricRaster<T>
where
    F: Fn(&Herm3<T>) -> Option<T> + Sync,
{
    let values: Vec<T> = field
        .data()
        .par_iter()
        .map(|t| f(t).unwrap_or_else(T::nan))
        .collect();
    let degenerate = values.iter().filter(|v| v.is_nan()).count();
    MetricRaster {
        rows: field.rows(),
        cols: field.cols(),
        values,
        metric,
        source,
        degenerate,
    }
}

/// Degree of polarisation m ∈ [0, 1].
pub fn m_fp<T: Real>(field: &CoherencyField<T>, source: Source) -> MetricRaster<T> {
    map_field(field, MetricId::MFp, source, |t| {
        dop_radicand(t).map(|r| r.sqrt())
    })
}

/// Depolarised fraction 1 − m ∈ [0, 1].
pub fn one_minus_m_fp<T: Real>(
    field: &CoherencyField<T>,
    source: Source,
) -> MetricRaster<T> {
    map_field(field, MetricId::OneMinusMFp, source, |t| {
        dop_radicand(t).map(|r| T::one() - r.sqrt())
    })
}

/// Total power span = tr(T).
pub fn span<T: Real>(field: &CoherencyField<T>, source: Source) -> MetricRaster<T> {
    map_field(field, MetricId::Span, source, |t| Some(t.trace()))
}

/// Volume power P_v = (1 − m)·span.
pub fn p_v<T: Real>(field: &CoherencyField<T>, source: Source) -> MetricRaster<T> {
    map_field(field, MetricId::PV, source, |t| {
        dop_radicand(t).map(|r| (T::one() - r.sqrt()) * t.trace())
    })
}

/// Eigenvalue entropy H = −Σ pᵢ·log₃ pᵢ, clamped to [0, 1].
///
/// Eigenvalues in [−tol·tr, 0] are rounding residue and clamp to zero; an
/// eigenvalue below that marks the whole field as numerically broken and
/// raises [`CoreError::Degenerate`], because a clearly indefinite "coherency
/// matrix" means the estimation upstream went wrong.
pub fn entropy<T: Real>(
    field: &CoherencyField<T>,
    source: Source,
) -> Result<MetricRaster<T>> {
    let tol = cast::<T>(EIGEN_TOL);
    // Two-phase: detect hard failures first so the error can name a pixel.
    let bad = field.data().par_iter().position_any(|t| {
        let tr = t.trace();
        tr > T::zero() && t.eigenvalues()[0] < -tol * tr
    });
    if let Some(i) = bad {
        return Err(CoreError::Degenerate(format!(
            "coherency matrix at pixel ({}, {}) is not positive semidefinite",
            i / field.cols(),
            i % field.cols()
        )));
    }
    Ok(map_field(field, MetricId::Entropy, source, |t| {
        let tr = t.trace();
        if tr <= T::zero() {
            return None;
        }
        let eig = t.eigenvalues();
        let clamped = [
            eig[0].max(T::zero()),
            eig[1].max(T::zero()),
            eig[2].max(T::zero()),
        ];
        let total = clamped[0] + clamped[1] + clamped[2];
        if total <= T::zero() {
            return None;
        }
        let ln3 = cast::<T>(3.0f64.ln());
        let mut h = T::zero();
        for &l in &clamped {
            if l > T::zero() {
                let p = l / total;
                h -= p * p.ln() / ln3;
            }
        }
        Some(h.max(T::zero()).min(T::one()))
    }))
}

/// Radar vegetation index RVI = 8σ_hv / (σ_hh + σ_vv + 2σ_hv), with the
/// backscatter coefficients recovered from the Pauli-basis coherency
/// matrix. The denominator equals tr(T), so RVI ranges over [0, 4].
pub fn rvi<T: Real>(field: &CoherencyField<T>, source: Source) -> MetricRaster<T> {
    let half = cast::<T>(0.5);
    let eight = cast::<T>(8.0);
    let two = cast::<T>(2.0);
    map_field(field, MetricId::Rvi, source, move |t| {
        let d = t.diag();
        let re01 = t.off()[0].re;
        let s_hh = half * (d[0] + d[1]) + re01;
        let s_vv = half * (d[0] + d[1]) - re01;
        let s_hv = half * d[2];
        let denom = s_hh + s_vv + two * s_hv;
        if denom <= T::zero() {
            return None;
        }
        Some(eight * s_hv / denom)
    })
}

/// Sublook-to-full span ratio tr(T_sub)/tr(T_full), pixel by pixel.
pub fn span_ratio<T: Real>(
    sub: &CoherencyField<T>,
    full: &CoherencyField<T>,
    source: Source,
) -> Result<MetricRaster<T>> {
    if sub.rows() != full.rows() || sub.cols() != full.cols() {
        return Err(CoreError::Argument(format!(
            "span ratio needs matching fields, got {}x{} vs {}x{}",
            sub.rows(),
            sub.cols(),
            full.rows(),
            full.cols()
        )));
    }
    let values: Vec<T> = sub
        .data()
        .par_iter()
        .zip(full.data().par_iter())
        .map(|(s, f)| {
            let denom = f.trace();
            if denom <= T::zero() {
                T::nan()
            } else {
                s.trace() / denom
            }
        })
        .collect();
    let degenerate = values.iter().filter(|v| v.is_nan()).count();
    MetricRaster::from_values(
        sub.rows(),
        sub.cols(),
        values,
        MetricId::SpanRatio,
        source,
        degenerate,
    )
}
