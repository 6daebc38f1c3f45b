//! Subaperture (sublook) decomposition along azimuth.
//!
//! A SAR image integrates echoes over the whole synthetic aperture; each
//! azimuth-frequency band of its spectrum corresponds to a sub-interval of
//! look angles. Splitting the per-column azimuth spectrum into bands and
//! transforming each band back therefore yields images of the same scene
//! seen from slightly different directions — the raw material for every
//! anisotropy statistic in this crate.
//!
//! All transforms here are unitary (scaled by 1/√n in both directions), so
//! with rectangular tapers, zero overlap, and no compensation the sublooks
//! form an exact partition: they sum back to the original image pixel by
//! pixel, and their energies sum to the original energy.
//!
//! Real antennas impose an azimuth illumination pattern that makes outer
//! bands systematically weaker than central ones, which would masquerade as
//! anisotropy. [`estimate_weighting`] measures that envelope as the
//! column-and-channel-averaged magnitude spectrum (smoothed, unit mean) and
//! extraction can divide it out before banding.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::freq::{bin_frequency, sublook_bands, FreqBand};
use crate::real::{cast, Real};
use crate::slc::{Channel, SlcImage};

/// Spectral taper applied over each band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Taper {
    /// Hard band edges; keeps the zero-overlap partition exact.
    Rectangular,
    /// Tukey window: cosine rolloff over `rolloff`·width/2 at each band
    /// edge (0 = rectangular, 1 = full Hann), zero at the edges.
    RaisedCosine { rolloff: f64 },
}

impl Taper {
    fn validate(&self) -> Result<()> {
        if let Taper::RaisedCosine { rolloff } = self {
            if !(0.0..=1.0).contains(rolloff) {
                return Err(CoreError::Argument(format!(
                    "raised-cosine rolloff must lie in [0, 1], got {rolloff}"
                )));
            }
        }
        Ok(())
    }

    /// Gain at normalized position `u` ∈ [0, 1) across the band.
    fn gain(&self, u: f64) -> f64 {
        match *self {
            Taper::Rectangular => 1.0,
            Taper::RaisedCosine { rolloff } => {
                if rolloff == 0.0 {
                    return 1.0;
                }
                let half = rolloff / 2.0;
                if u < half {
                    0.5 * (1.0 - (std::f64::consts::PI * u / half).cos())
                } else if u > 1.0 - half {
                    0.5 * (1.0 - (std::f64::consts::PI * (1.0 - u) / half).cos())
                } else {
                    1.0
                }
            }
        }
    }
}

impl fmt::Display for Taper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Taper::Rectangular => f.write_str("rectangular"),
            Taper::RaisedCosine { rolloff } => write!(f, "raised_cosine:{rolloff}"),
        }
    }
}

impl FromStr for Taper {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "rectangular" || s == "rect" {
            return Ok(Taper::Rectangular);
        }
        if let Some(r) = s.strip_prefix("raised_cosine:").or_else(|| s.strip_prefix("rc:")) {
            let rolloff: f64 = r.parse().map_err(|_| {
                CoreError::Argument(format!("cannot parse taper rolloff '{r}'"))
            })?;
            let t = Taper::RaisedCosine { rolloff };
            t.validate()?;
            return Ok(t);
        }
        Err(CoreError::Argument(format!(
            "unknown taper '{s}' (expected 'rectangular' or 'raised_cosine:<rolloff>')"
        )))
    }
}

/// Sublook extraction parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SublookConfig {
    /// Number of bands (≥ 2).
    pub n_sub: usize,
    /// Fractional overlap between neighbouring bands, in [0, 0.95).
    pub overlap: f64,
    pub taper: Taper,
    /// Divide the spectrum by the estimated weighting envelope first.
    pub compensate: bool,
}

impl Default for SublookConfig {
    /// Three non-overlapping rectangular sublooks, no compensation — the
    /// configuration all reference statistics in this crate are quoted for.
    fn default() -> Self {
        Self {
            n_sub: 3,
            overlap: 0.0,
            taper: Taper::Rectangular,
            compensate: false,
        }
    }
}

impl SublookConfig {
    pub fn validate(&self) -> Result<()> {
        // Band-count and overlap ranges are enforced by the band builder.
        sublook_bands(self.n_sub, self.overlap)?;
        self.taper.validate()
    }
}

/// The sublook images plus everything needed to interpret them.
#[derive(Clone, Debug)]
pub struct SublookStack<T: Real> {
    pub sublooks: Vec<SlcImage<T>>,
    pub bands: Vec<FreqBand>,
    /// Per-bin weighting envelope that was (or would be) divided out;
    /// all ones when compensation was off.
    pub weighting: Vec<T>,
    pub config: SublookConfig,
}

/// JSON manifest describing a persisted sublook stack.
#[derive(Debug, Serialize, Deserialize)]
pub struct StackManifest {
    pub n_sub: usize,
    pub overlap: f64,
    pub taper: String,
    pub compensated: bool,
    pub bands: Vec<FreqBand>,
    /// Unit-mean weighting envelope (length = azimuth rows).
    pub weighting: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub source_label: String,
    /// Relative file names of the sublook images, band order.
    pub files: Vec<String>,
}

impl<T: Real> SublookStack<T> {
    /// Builds the stack's manifest given the file names it was written to.
    pub fn manifest(&self, files: Vec<String>) -> StackManifest {
        StackManifest {
            n_sub: self.config.n_sub,
            overlap: self.config.overlap,
            taper: self.config.taper.to_string(),
            compensated: self.config.compensate,
            bands: self.bands.clone(),
            weighting: self
                .weighting
                .iter()
                .map(|w| w.to_f64().unwrap())
                .collect(),
            rows: self.sublooks[0].rows(),
            cols: self.sublooks[0].cols(),
            source_label: self.sublooks[0].meta().label.clone(),
            files,
        }
    }
}

/// Per-column unitary azimuth spectrum of one channel, same (bin, col)
/// layout as the image plane.
pub fn azimuth_spectrum<T: Real>(img: &SlcImage<T>, ch: Channel) -> Vec<Complex<T>> {
    let rows = img.rows();
    let cols = img.cols();
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(rows);
    let plane = img.plane(ch);
    let norm = cast::<T>(1.0 / (rows as f64).sqrt());

    let columns: Vec<Vec<Complex<T>>> = (0..cols)
        .into_par_iter()
        .map(|c| {
            let mut buf: Vec<Complex<T>> =
                (0..rows).map(|r| plane[r * cols + c]).collect();
            fft.process(&mut buf);
            for v in buf.iter_mut() {
                *v = v.scale(norm);
            }
            buf
        })
        .collect();

    let mut out = vec![Complex::new(T::zero(), T::zero()); rows * cols];
    for (c, col) in columns.iter().enumerate() {
        for (b, &v) in col.iter().enumerate() {
            out[b * cols + c] = v;
        }
    }
    out
}

/// Estimates the azimuth weighting envelope of an image.
///
/// The estimate is the magnitude spectrum averaged over all range columns
/// and all three channels, smoothed by a circular moving average of length
/// max(3, rows/64), and normalized to unit mean. At least 16 columns are
/// required for the average to mean anything; an image with no spectral
/// energy at all is degenerate.
pub fn estimate_weighting<T: Real>(img: &SlcImage<T>) -> Result<Vec<T>> {
    if img.cols() < 16 {
        return Err(CoreError::Argument(format!(
            "weighting estimation needs at least 16 range columns, got {}",
            img.cols()
        )));
    }
    let rows = img.rows();
    let cols = img.cols();
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(rows);

    // Mean |X(bin)| over channels and columns. The unitary 1/√n and the
    // 1/(3·cols) averaging factor cancel in the final unit-mean
    // normalization, so neither is applied here.
    let mut mag = vec![0.0f64; rows];
    for ch in Channel::ALL {
        let plane = img.plane(ch);
        let partial: Vec<f64> = (0..cols)
            .into_par_iter()
            .fold(
                || vec![0.0f64; rows],
                |mut acc, c| {
                    let mut buf: Vec<Complex<T>> =
                        (0..rows).map(|r| plane[r * cols + c]).collect();
                    fft.process(&mut buf);
                    for (a, v) in acc.iter_mut().zip(buf.iter()) {
                        *a += v.norm().to_f64().unwrap();
                    }
                    acc
                },
            )
            .reduce(
                || vec![0.0f64; rows],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b.iter()) {
                        *x += y;
                    }
                    a
                },
            );
        for (m, p) in mag.iter_mut().zip(partial.iter()) {
            *m += p;
        }
    }

    // Circular moving average; for even lengths the window extends one bin
    // further up than down.
    let len = (rows / 64).max(3);
    let down = (len - 1) / 2;
    let smoothed: Vec<f64> = (0..rows)
        .map(|b| {
            let mut s = 0.0;
            for k in 0..len {
                let idx = (b + rows + k - down) % rows;
                s += mag[idx];
            }
            s / len as f64
        })
        .collect();

    let mean: f64 = smoothed.iter().sum::<f64>() / rows as f64;
    if !(mean > 0.0) {
        return Err(CoreError::Degenerate(
            "image has no azimuth spectral energy to estimate a weighting from".into(),
        ));
    }
    let w: Vec<T> = smoothed.iter().map(|&v| cast::<T>(v / mean)).collect();
    if w.iter().any(|v| !(*v > T::zero())) {
        return Err(CoreError::Degenerate(
            "estimated weighting envelope is not strictly positive".into(),
        ));
    }
    Ok(w)
}

/// Splits an image into sublooks.
///
/// Needs at least 4·n_sub azimuth rows so each band holds a few bins. With
/// compensation enabled the weighting envelope is estimated from this very
/// image and divided out of the spectrum (floored at 1e-3 of its maximum so
/// near-nulls cannot blow up noise) before the bands are cut.
pub fn extract_sublooks<T: Real>(
    img: &SlcImage<T>,
    config: &SublookConfig,
) -> Result<SublookStack<T>> {
    config.validate()?;
    let rows = img.rows();
    let cols = img.cols();
    if rows < 4 * config.n_sub {
        return Err(CoreError::Argument(format!(
            "{} azimuth rows cannot support {} sublooks (need at least {})",
            rows,
            config.n_sub,
            4 * config.n_sub
        )));
    }
    let bands = sublook_bands(config.n_sub, config.overlap)?;
    let weighting: Vec<T> = if config.compensate {
        estimate_weighting(img)?
    } else {
        vec![T::one(); rows]
    };

    // Per-bin compensation divisor and per-band taper gains, in f64 then
    // cast once: bin/band geometry must not depend on T.
    let w_max = weighting
        .iter()
        .map(|v| v.to_f64().unwrap())
        .fold(0.0f64, f64::max);
    let floor = 1e-3 * w_max;
    let divisor: Vec<T> = weighting
        .iter()
        .map(|v| cast::<T>(v.to_f64().unwrap().max(floor)))
        .collect();
    let gains: Vec<Vec<T>> = bands
        .iter()
        .map(|band| {
            (0..rows)
                .map(|b| {
                    let f = bin_frequency(b, rows);
                    if band.contains(f) {
                        let u = (f - band.lo) / band.measure();
                        cast::<T>(config.taper.gain(u))
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect();

    let mut planner = FftPlanner::<T>::new();
    let fwd: Arc<dyn rustfft::Fft<T>> = planner.plan_fft_forward(rows);
    let inv: Arc<dyn rustfft::Fft<T>> = planner.plan_fft_inverse(rows);
    let unit = cast::<T>(1.0 / rows as f64); // two unitary 1/√n passes

    // columns[col][sub][ch] = azimuth buffer.
    let columns: Vec<Vec<[Vec<Complex<T>>; 3]>> = (0..cols)
        .into_par_iter()
        .map(|c| {
            let mut out: Vec<[Vec<Complex<T>>; 3]> = (0..config.n_sub)
                .map(|_| [vec![], vec![], vec![]])
                .collect();
            for ch in Channel::ALL {
                let plane = img.plane(ch);
                let mut spec: Vec<Complex<T>> =
                    (0..rows).map(|r| plane[r * cols + c]).collect();
                fwd.process(&mut spec);
                if config.compensate {
                    for (v, d) in spec.iter_mut().zip(divisor.iter()) {
                        *v = v.unscale(*d);
                    }
                }
                for (s, gain) in gains.iter().enumerate() {
                    let mut banded: Vec<Complex<T>> = spec
                        .iter()
                        .zip(gain.iter())
                        .map(|(v, &g)| v.scale(g * unit))
                        .collect();
                    inv.process(&mut banded);
                    out[s][ch as usize] = banded;
                }
            }
            out
        })
        .collect();

    let mut sublooks = Vec::with_capacity(config.n_sub);
    for s in 0..config.n_sub {
        let mut meta = img.meta().clone();
        meta.label = if meta.label.is_empty() {
            format!("sublook_{s}")
        } else {
            format!("{} / sublook_{s}", meta.label)
        };
        let mut sub = SlcImage::zeros(rows, cols, meta)?;
        for ch in Channel::ALL {
            let plane = sub.plane_mut(ch);
            for (c, col) in columns.iter().enumerate() {
                for (r, &v) in col[s][ch as usize].iter().enumerate() {
                    plane[r * cols + c] = v;
                }
            }
        }
        sublooks.push(sub);
    }

    Ok(SublookStack { sublooks, bands, weighting, config: config.clone() })
}

/// Doppler centroid f_D = (2V/λ)·sin(φ) of scatterers seen at azimuth angle
/// φ from broadside [Hz].
pub fn doppler_frequency<T: Real>(
    velocity_mps: T,
    wavelength_m: T,
    azimuth_angle_rad: T,
) -> Result<T> {
    if !(wavelength_m > T::zero()) {
        return Err(CoreError::Argument(format!(
            "wavelength must be positive, got {wavelength_m}"
        )));
    }
    Ok(cast::<T>(2.0) * velocity_mps * azimuth_angle_rad.sin() / wavelength_m)
}

/// Angular interval Δφ = λ/(2·δ_az) of look directions integrated by an
/// aperture achieving azimuth resolution δ_az [rad].
pub fn azimuth_angular_interval<T: Real>(
    wavelength_m: T,
    az_resolution_m: T,
) -> Result<T> {
    if !(wavelength_m > T::zero()) || !(az_resolution_m > T::zero()) {
        return Err(CoreError::Argument(format!(
            "wavelength and azimuth resolution must be positive, got \
             {wavelength_m} and {az_resolution_m}"
        )));
    }
    Ok(wavelength_m / (cast::<T>(2.0) * az_resolution_m))
}
