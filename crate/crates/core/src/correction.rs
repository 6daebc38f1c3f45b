//! Span-weighted volume-power correction.
//!
//! The full-aperture volume power P_v = (1 − m)·span is biased high on
//! anisotropic scatterers: a response concentrated in one look direction is
//! diluted by the looks that miss it, the matrix looks more "random", and
//! the depolarised fraction 1 − m inflates. The correction re-estimates the
//! depolarised fraction from the sublooks, each weighted by its share of
//! the total power:
//!
//!   d′ = Σᵢ wᵢ·dᵢ,   wᵢ = spanᵢ/span,   dᵢ = 1 − mᵢ,
//!
//! then P′_v = d′·span, ΔP_v = P′_v − P_v, m′ = (span − P′_v)/span. The
//! power ΔP_v leaves the volume estimate; decomposition components that
//! were fed from P_v (notably the helix term) are rescaled proportionally:
//!
//!   P′_c = P_c·(1 − ΔP_v/(span − P_v)).
//!
//! The weights are *not* renormalized: with non-overlapping rectangular
//! sublooks Σwᵢ = 1 holds analytically, and a violation beyond 5% is a
//! diagnostic (overlapping bands, tapering, or a broken stack), so it is
//! counted rather than hidden.

use crate::error::{CoreError, Result};
use crate::metrics::{MetricId, MetricRaster, Source};
use crate::real::{cast, Real};

/// Weight-sum deviations |Σwᵢ − 1| above this are counted as suspicious.
pub const WEIGHT_SUM_TOLERANCE: f64 = 0.05;

/// Corrected depolarised fraction d′ = Σ wᵢ·dᵢ of one pixel.
///
/// Weights are used as given (no renormalization). All-zero weights carry
/// no information and yield NaN, as does any NaN input.
pub fn corrected_depolarisation<T: Real>(weights: &[T], d: &[T]) -> Result<T> {
    if weights.len() != d.len() || weights.len() < 2 {
        return Err(CoreError::Argument(format!(
            "need matching weight/depolarisation slices of at least 2 sublooks, \
             got {} and {}",
            weights.len(),
            d.len()
        )));
    }
    let mut acc = T::zero();
    let mut wsum = T::zero();
    for (&w, &di) in weights.iter().zip(d.iter()) {
        if w.is_nan() || di.is_nan() {
            return Ok(T::nan());
        }
        acc += w * di;
        wsum += w;
    }
    if wsum == T::zero() {
        return Ok(T::nan());
    }
    Ok(acc)
}

/// |Σwᵢ − 1|, the partition defect of the sublook power weights.
pub fn weight_sum_deviation<T: Real>(weights: &[T]) -> T {
    let sum = weights.iter().fold(T::zero(), |a, &w| a + w);
    (sum - T::one()).abs()
}

/// Volume-power quantities derived from a corrected depolarised fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeCorrection<T: Real> {
    /// Corrected volume power P′_v = d′·span.
    pub p_v_prime: T,
    /// Power removed from the volume estimate: ΔP_v = P′_v − P_v.
    pub delta_p_v: T,
    /// Corrected degree of polarisation m′ = (span − P′_v)/span.
    pub m_fp_prime: T,
}

/// Applies a corrected depolarised fraction to one pixel's powers.
/// Non-positive span has no meaningful decomposition and yields NaNs.
pub fn corrected_volume<T: Real>(span: T, p_v: T, d_prime: T) -> VolumeCorrection<T> {
    if !(span > T::zero()) || p_v.is_nan() || d_prime.is_nan() {
        return VolumeCorrection {
            p_v_prime: T::nan(),
            delta_p_v: T::nan(),
            m_fp_prime: T::nan(),
        };
    }
    let p_v_prime = d_prime * span;
    VolumeCorrection {
        p_v_prime,
        delta_p_v: p_v_prime - p_v,
        m_fp_prime: (span - p_v_prime) / span,
    }
}

/// Rescales a helix power P_c for the volume power change:
/// P′_c = P_c·(1 − ΔP_v/(span − P_v)). Undefined (NaN) when span = P_v,
/// where the polarised remainder the helix lives in has zero power.
pub fn adjust_helix<T: Real>(p_c: T, delta_p_v: T, span: T, p_v: T) -> T {
    let remainder = span - p_v;
    if remainder == T::zero() {
        return T::nan();
    }
    p_c * (T::one() - delta_p_v / remainder)
}

/// Raster outputs of the correction stage.
#[derive(Clone, Debug)]
pub struct CorrectionField<T: Real> {
    pub d_prime: MetricRaster<T>,
    pub p_v_prime: MetricRaster<T>,
    pub delta_p_v: MetricRaster<T>,
    pub m_fp_prime: MetricRaster<T>,
    /// Present only when a helix-power raster was supplied.
    pub p_c_prime: Option<MetricRaster<T>>,
    /// Pixels whose weight sum strayed more than
    /// [`WEIGHT_SUM_TOLERANCE`] from 1.
    pub weight_sum_violations: usize,
    /// Largest |Σwᵢ − 1| observed.
    pub max_weight_deviation: f64,
}

/// Runs the correction over whole rasters.
///
/// `ratios[i]` is sublook i's span-ratio raster (the weights) and
/// `d_subs[i]` its depolarised-fraction raster; `span` and `p_v` are the
/// full-aperture rasters the correction adjusts. Degenerate pixels (NaN
/// anywhere in the inputs, zero weights, zero span) produce NaN across all
/// outputs and are counted per output raster.
pub fn correct_field<T: Real>(
    ratios: &[&MetricRaster<T>],
    d_subs: &[&MetricRaster<T>],
    span: &MetricRaster<T>,
    p_v: &MetricRaster<T>,
    p_c: Option<&MetricRaster<T>>,
) -> Result<CorrectionField<T>> {
    if ratios.len() != d_subs.len() || ratios.len() < 2 {
        return Err(CoreError::Argument(format!(
            "need matching ratio/depolarisation stacks of at least 2 sublooks, \
             got {} and {}",
            ratios.len(),
            d_subs.len()
        )));
    }
    let rows = span.rows();
    let cols = span.cols();
    let dims_ok = |r: &MetricRaster<T>| r.rows() == rows && r.cols() == cols;
    if !dims_ok(p_v)
        || !ratios.iter().all(|r| dims_ok(r))
        || !d_subs.iter().all(|r| dims_ok(r))
        || !p_c.map_or(true, |r| dims_ok(r))
    {
        return Err(CoreError::Argument(format!(
            "correction inputs must all be {rows}x{cols}"
        )));
    }

    let n = rows * cols;
    let k = ratios.len();
    let mut d_prime = vec![T::nan(); n];
    let mut p_v_prime = vec![T::nan(); n];
    let mut delta = vec![T::nan(); n];
    let mut m_prime = vec![T::nan(); n];
    let mut c_prime = vec![T::nan(); n];
    let mut violations = 0usize;
    let mut max_dev = 0.0f64;
    let tol = cast::<T>(WEIGHT_SUM_TOLERANCE);

    let mut w = vec![T::zero(); k];
    let mut d = vec![T::zero(); k];
    for i in 0..n {
        for j in 0..k {
            w[j] = ratios[j].values()[i];
            d[j] = d_subs[j].values()[i];
        }
        let dp = corrected_depolarisation(&w, &d)?;
        if dp.is_nan() {
            continue;
        }
        let dev = weight_sum_deviation(&w);
        if dev > tol {
            violations += 1;
        }
        max_dev = max_dev.max(dev.to_f64().unwrap());
        let s = span.values()[i];
        let pv = p_v.values()[i];
        let vc = corrected_volume(s, pv, dp);
        d_prime[i] = dp;
        p_v_prime[i] = vc.p_v_prime;
        delta[i] = vc.delta_p_v;
        m_prime[i] = vc.m_fp_prime;
        if let Some(pc) = p_c {
            let v = pc.values()[i];
            if !v.is_nan() && !vc.delta_p_v.is_nan() {
                c_prime[i] = adjust_helix(v, vc.delta_p_v, s, pv);
            }
        }
    }

    let raster = |values: Vec<T>, metric: MetricId| {
        let degenerate = values.iter().filter(|v| v.is_nan()).count();
        MetricRaster::from_values(rows, cols, values, metric, Source::Full, degenerate)
    };
    Ok(CorrectionField {
        d_prime: raster(d_prime, MetricId::OneMinusMFp)?,
        p_v_prime: raster(p_v_prime, MetricId::PV)?,
        delta_p_v: raster(delta, MetricId::PV)?,
        m_fp_prime: raster(m_prime, MetricId::MFp)?,
        p_c_prime: if p_c.is_some() {
            Some(raster(c_prime, MetricId::PV)?)
        } else {
            None
        },
        weight_sum_violations: violations,
        max_weight_deviation: max_dev,
    })
}
