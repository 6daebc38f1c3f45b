//! Normalized Doppler-frequency bookkeeping.
//!
//! The azimuth dimension of an SLC image is sampled at the pulse repetition
//! frequency, so its spectrum lives on the normalized interval [−0.5, 0.5)
//! in cycles per sample. Both the scene simulator (band-limited textures)
//! and the sublook extractor (band-pass filters) need to agree *exactly* on
//! which FFT bin belongs to which frequency interval — a disagreement of a
//! single bin breaks energy-partition identities. This module is that single
//! source of truth.
//!
//! All frequency arithmetic here is `f64` regardless of the image sample
//! type: band membership of a bin must never depend on working precision.
//!
//! Conventions:
//! - bin `b` of an `n`-point FFT maps to `b/n`, wrapped into [−0.5, 0.5)
//!   (bins past the midpoint are negative frequencies);
//! - bands are half-open `[lo, hi)`, so adjacent bands share no bin;
//! - a zero-overlap band set is built from one shared edge array, which
//!   makes the partition of bins exact rather than "equal up to rounding".

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Half-open interval [lo, hi) of normalized frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqBand {
    pub lo: f64,
    pub hi: f64,
}

impl FreqBand {
    /// Validated constructor: requires −0.5 ≤ lo < hi ≤ 0.5.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < -0.5 || hi > 0.5 || lo >= hi {
            return Err(CoreError::Argument(format!(
                "frequency band [{lo}, {hi}) must satisfy -0.5 <= lo < hi <= 0.5"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Membership test (half-open).
    #[inline]
    pub fn contains(&self, f: f64) -> bool {
        self.lo <= f && f < self.hi
    }

    /// Width of the band as a fraction of the full spectrum.
    #[inline]
    pub fn measure(&self) -> f64 {
        self.hi - self.lo
    }

    /// Center frequency.
    #[inline]
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Indices of the FFT bins (of an `n`-point transform) inside the band.
    pub fn bins(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|&b| self.contains(bin_frequency(b, n))).collect()
    }

    /// Number of FFT bins inside the band.
    pub fn bin_count(&self, n: usize) -> usize {
        (0..n).filter(|&b| self.contains(bin_frequency(b, n))).count()
    }
}

/// Normalized frequency of bin `b` in an `n`-point FFT, in [−0.5, 0.5).
///
/// Bins at or past the midpoint alias to negative frequencies. `2*b >= n`
/// (rather than a floating comparison) keeps the split exact for every `n`.
#[inline]
pub fn bin_frequency(b: usize, n: usize) -> f64 {
    debug_assert!(b < n, "bin index out of range");
    if 2 * b >= n {
        b as f64 / n as f64 - 1.0
    } else {
        b as f64 / n as f64
    }
}

/// Builds `n_sub` sublook bands covering [−0.5, 0.5) with the given overlap
/// fraction between neighbours.
///
/// Width and spacing follow from requiring the first band to start at −0.5,
/// the last to end at +0.5, and each neighbour pair to overlap by
/// `overlap * width`:
///
///   width   = 1 / (n_sub − overlap·(n_sub − 1))
///   spacing = width · (1 − overlap)
///
/// For `overlap == 0` the bands are cut from one shared edge array, so the
/// partition of FFT bins is exact: every bin falls in exactly one band, by
/// construction rather than by rounding luck. The last band's upper edge is
/// pinned to +0.5 in all cases.
pub fn sublook_bands(n_sub: usize, overlap: f64) -> Result<Vec<FreqBand>> {
    if n_sub < 2 {
        return Err(CoreError::Argument(format!(
            "sublook count must be at least 2, got {n_sub}"
        )));
    }
    if !(0.0..0.95).contains(&overlap) {
        return Err(CoreError::Argument(format!(
            "overlap fraction must lie in [0, 0.95), got {overlap}"
        )));
    }
    let k = n_sub as f64;
    let width = 1.0 / (k - overlap * (k - 1.0));
    let spacing = width * (1.0 - overlap);

    if overlap == 0.0 {
        // Shared edges: band i is [edge(i), edge(i+1)).
        let edges: Vec<f64> = (0..=n_sub)
            .map(|j| {
                if j == n_sub {
                    0.5
                } else {
                    -0.5 + j as f64 * width
                }
            })
            .collect();
        return Ok((0..n_sub)
            .map(|i| FreqBand { lo: edges[i], hi: edges[i + 1] })
            .collect());
    }

    Ok((0..n_sub)
        .map(|i| {
            let lo = -0.5 + i as f64 * spacing;
            let hi = if i == n_sub - 1 { 0.5 } else { lo + width };
            FreqBand { lo, hi }
        })
        .collect())
}
