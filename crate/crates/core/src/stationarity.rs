//! Azimuth-stationarity testing and anisotropy flagging.
//!
//! Two complementary detectors run over the sublook coherency fields:
//!
//! 1. The Wishart maximum-likelihood equality test. Under the stationary
//!    hypothesis all sublooks share one coherency matrix, and the likelihood
//!    ratio for k sublooks of N looks each is
//!
//!      Λ = ( Π det(Tᵢ) / det(T̄)^k )^N,   T̄ = (1/k)·Σ Tᵢ,
//!
//!    reported as log₁₀Λ. By the concavity of log-det, Λ ≤ 1 always; values
//!    near 1 (log near 0) mean the sublook matrices agree. The statistic is
//!    computed pixel-wise in log space via LDLᴴ — plain determinant products
//!    underflow long before the statistic stops being informative.
//!
//! 2. Degree-of-polarisation dispersion. The test above compares whole
//!    matrices and is dominated by their common power; a scatterer can pass
//!    it while its *depolarisation* swings between looks. The flagging
//!    stage thresholds the spread D = max(dᵢ) − min(dᵢ) of the sublook
//!    depolarised fractions dᵢ = 1 − mᵢ (equal to the maximum pairwise
//!    difference) into weak/moderate/strong levels, optionally gated to
//!    pixels the likelihood test calls stationary — precisely the pixels
//!    where dispersion is the only witness of anisotropy.

use rayon::prelude::*;

use crate::coherency::CoherencyField;
use crate::error::{CoreError, Result};
use crate::herm3::Herm3;
use crate::mask::RasterMask;
use crate::metrics::{MetricId, MetricRaster, Source};
use crate::real::{cast, Real};

/// Default log₁₀Λ threshold: a pixel is azimuth-stationary when its
/// statistic lies strictly above this.
pub const DEFAULT_LOG_LAMBDA_THRESHOLD: f64 = -1.0;

/// Outcome of the likelihood-ratio test over a sublook set.
#[derive(Clone, Debug)]
pub struct StationarityResult<T: Real> {
    /// Per-pixel log₁₀Λ. −∞ marks a singular sublook matrix (the ratio is
    /// genuinely zero); NaN marks a singular *mean* matrix, where the test
    /// is undefined (counted in the raster's degenerate counter).
    pub log_lambda: MetricRaster<T>,
    /// Threshold the mask was cut at.
    pub threshold: f64,
    /// True where log₁₀Λ > threshold (strict; NaN never passes).
    pub stationary: RasterMask,
}

/// Computes the Wishart ML equality statistic over sublook coherency
/// fields, with `n_looks` as the per-sublook look count N in the exponent.
///
/// `n_looks = 1` gives the per-look statistic log₁₀Λ^(1/N), on the same
/// scale regardless of estimator window — that is what thresholds in this
/// crate are calibrated for. The classification mask is cut at
/// [`DEFAULT_LOG_LAMBDA_THRESHOLD`]; use [`classify`] to re-cut at another
/// threshold.
pub fn ml_ratio<T: Real>(
    fields: &[&CoherencyField<T>],
    n_looks: u32,
) -> Result<StationarityResult<T>> {
    if fields.len() < 2 {
        return Err(CoreError::Argument(format!(
            "the equality test needs at least 2 sublook fields, got {}",
            fields.len()
        )));
    }
    if n_looks == 0 {
        return Err(CoreError::Argument("look count must be positive".into()));
    }
    let first = fields[0];
    for f in fields {
        if f.rows() != first.rows() || f.cols() != first.cols() {
            return Err(CoreError::Argument(format!(
                "sublook field dimensions differ: {}x{} vs {}x{}",
                f.rows(),
                f.cols(),
                first.rows(),
                first.cols()
            )));
        }
    }
    let k = fields.len();
    let inv_k = T::one() / cast::<T>(k as f64);
    let n_t = cast::<T>(n_looks as f64);
    let ln10 = cast::<T>(std::f64::consts::LN_10);

    let values: Vec<T> = (0..first.data().len())
        .into_par_iter()
        .map(|i| {
            let mut mean = Herm3::zero();
            for f in fields {
                mean.accumulate(&f.data()[i]);
            }
            let mean = mean.scale(inv_k);
            let ld_mean = match mean.log_det() {
                Some(v) => v,
                // Mean of PSD matrices singular => every sublook matrix is
                // singular too; no determinant ratio exists.
                None => return T::nan(),
            };
            let mut sum = T::zero();
            for f in fields {
                match f.data()[i].log_det() {
                    Some(v) => sum += v,
                    // One singular sublook with a regular mean: Λ = 0.
                    None => return T::neg_infinity(),
                }
            }
            // Per-look value first, then the look-count scale: keeps the
            // statistic bitwise linear in `n_looks`.
            n_t * ((sum - cast::<T>(k as f64) * ld_mean) / ln10)
        })
        .collect();
    let degenerate = values.iter().filter(|v| v.is_nan()).count();
    let log_lambda = MetricRaster::from_values(
        first.rows(),
        first.cols(),
        values,
        MetricId::LogLambda,
        Source::Full,
        degenerate,
    )?;
    let stationary = classify(&log_lambda, DEFAULT_LOG_LAMBDA_THRESHOLD)?;
    Ok(StationarityResult {
        log_lambda,
        threshold: DEFAULT_LOG_LAMBDA_THRESHOLD,
        stationary,
    })
}

/// Cuts a stationarity mask from a log₁₀Λ raster: stationary where the
/// value is strictly above `threshold`. NaN (undefined test) never passes.
pub fn classify<T: Real>(
    log_lambda: &MetricRaster<T>,
    threshold: f64,
) -> Result<RasterMask> {
    if log_lambda.metric != MetricId::LogLambda {
        return Err(CoreError::Argument(format!(
            "classification needs a log_lambda raster, got {}",
            log_lambda.metric
        )));
    }
    let th = T::from_f64(threshold).unwrap();
    let bits = log_lambda.values().iter().map(|&v| v > th).collect();
    RasterMask::from_bits(
        log_lambda.rows(),
        log_lambda.cols(),
        bits,
        format!("log10 Lambda > {threshold}"),
    )
}

/// Dispersion thresholds on D = max(dᵢ) − min(dᵢ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlagThresholds {
    pub weak: f64,
    pub moderate: f64,
    pub strong: f64,
}

impl Default for FlagThresholds {
    fn default() -> Self {
        Self { weak: 0.1, moderate: 0.15, strong: 0.2 }
    }
}

impl FlagThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.weak > 0.0 && self.weak < self.moderate && self.moderate < self.strong)
        {
            return Err(CoreError::Argument(format!(
                "flag thresholds must be strictly increasing and positive, \
                 got {} / {} / {}",
                self.weak, self.moderate, self.strong
            )));
        }
        Ok(())
    }
}

/// Anisotropy level of one pixel. Levels nest: every strong pixel is also
/// beyond the moderate and weak thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum FlagLevel {
    None = 0,
    Weak = 1,
    Moderate = 2,
    Strong = 3,
}

impl FlagLevel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlagLevel::None => "none",
            FlagLevel::Weak => "weak",
            FlagLevel::Moderate => "moderate",
            FlagLevel::Strong => "strong",
        }
    }
}

/// Per-pixel anisotropy flags.
#[derive(Clone, Debug)]
pub struct AnisotropyFlags {
    rows: usize,
    cols: usize,
    levels: Vec<FlagLevel>,
    pub thresholds: FlagThresholds,
    /// Whether the stationarity gate was applied.
    pub gated: bool,
    /// Pixels that could not be classified (NaN in some sublook dᵢ).
    pub degenerate: usize,
}

impl AnisotropyFlags {
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> FlagLevel {
        assert!(row < self.rows && col < self.cols, "flag index out of range");
        self.levels[row * self.cols + col]
    }

    /// All levels, row-major.
    #[inline]
    pub fn levels(&self) -> &[FlagLevel] {
        &self.levels
    }

    /// Pixel counts per level, indexed by `FlagLevel as usize`.
    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0usize; 4];
        for &l in &self.levels {
            c[l as usize] += 1;
        }
        c
    }
}

/// Thresholds the sublook depolarisation spread into anisotropy flags.
///
/// `d_subs` are the per-sublook 1 − m rasters. A pixel with any NaN input
/// flags `None` and counts as degenerate. With `gate` set, pixels the
/// likelihood test rejected (non-stationary) also flag `None`: the flags
/// then isolate scatterers whose *total* covariance looks azimuth-stable
/// while their depolarisation is not.
pub fn flag_anisotropy<T: Real>(
    d_subs: &[&MetricRaster<T>],
    stat: &StationarityResult<T>,
    thresholds: FlagThresholds,
    gate: bool,
) -> Result<AnisotropyFlags> {
    thresholds.validate()?;
    if d_subs.len() < 2 {
        return Err(CoreError::Argument(format!(
            "flagging needs at least 2 sublook rasters, got {}",
            d_subs.len()
        )));
    }
    let rows = stat.log_lambda.rows();
    let cols = stat.log_lambda.cols();
    for d in d_subs {
        if d.rows() != rows || d.cols() != cols {
            return Err(CoreError::Argument(format!(
                "sublook raster is {}x{}, stationarity result is {rows}x{cols}",
                d.rows(),
                d.cols()
            )));
        }
    }
    let weak = T::from_f64(thresholds.weak).unwrap();
    let moderate = T::from_f64(thresholds.moderate).unwrap();
    let strong = T::from_f64(thresholds.strong).unwrap();

    let mut degenerate = 0usize;
    let mut levels = Vec::with_capacity(rows * cols);
    for i in 0..rows * cols {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let mut bad = false;
        for d in d_subs {
            let v = d.values()[i];
            if v.is_nan() {
                bad = true;
                break;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if bad {
            degenerate += 1;
            levels.push(FlagLevel::None);
            continue;
        }
        if gate && !stat.stationary.bits()[i] {
            levels.push(FlagLevel::None);
            continue;
        }
        let spread = hi - lo;
        levels.push(if spread > strong {
            FlagLevel::Strong
        } else if spread > moderate {
            FlagLevel::Moderate
        } else if spread > weak {
            FlagLevel::Weak
        } else {
            FlagLevel::None
        });
    }
    Ok(AnisotropyFlags { rows, cols, levels, thresholds, gated: gate, degenerate })
}
