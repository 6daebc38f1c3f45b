//! Azimuth-anisotropy analysis for polarimetric SAR imagery.
//!
//! Distributed scatterers are usually modelled as azimuth-stationary: the
//! polarimetric response does not depend on the direction the radar looks
//! from within its synthetic aperture. Oriented structures — plantation
//! rows, buildings, corner-like alignments — break that assumption, and the
//! breakage is invisible in full-resolution imagery because the full
//! aperture averages over it. This crate detects it by splitting the
//! azimuth spectrum into sublooks, estimating a coherency matrix per
//! sublook, and comparing the 3-D degree of polarisation
//!
//!   m = √(1 − 27·det(T)/tr³(T))
//!
//! across sublooks. Pixels whose depolarisation depends on the look
//! direction get flagged, and their volume power can be re-estimated from
//! span-weighted sublook contributions instead of the biased full-aperture
//! value.
//!
//! The crate is organized along the processing chain:
//!
//! - [`slc`]: single-look-complex image container, Pauli conversions;
//! - [`pslc`]: binary containers for images, slope rasters, metric rasters;
//! - [`sim`]: synthetic scene generator with analytically known answers;
//! - [`freq`]: normalized-frequency and FFT-bin bookkeeping;
//! - [`sublook`]: azimuth-spectrum splitting and weighting compensation;
//! - [`coherency`]: boxcar coherency-matrix estimation;
//! - [`metrics`]: degree of polarisation, span, entropy, RVI rasters;
//! - [`stationarity`]: Wishart likelihood-ratio test and anisotropy flags;
//! - [`correction`]: span-weighted volume-power correction;
//! - [`herm3`]: the underlying 3×3 Hermitian matrix algebra;
//! - [`mask`], [`export`]: region selection and portable exports.
//!
//! Numeric kernels are generic over the scalar type via [`Real`]
//! (`f32` or `f64`); the aliases below fix common concrete types.

pub mod coherency;
pub mod correction;
pub mod error;
pub mod export;
pub mod freq;
pub mod herm3;
pub mod mask;
pub mod metrics;
pub mod pslc;
pub mod real;
pub mod sim;
pub mod slc;
pub mod stationarity;
pub mod sublook;

pub use error::{CoreError, Result};
pub use real::{cast, Real};

/// Single-precision complex sample.
pub type C32 = num_complex::Complex<f32>;
/// Double-precision complex sample.
pub type C64 = num_complex::Complex<f64>;

/// Single-precision image (matches the on-disk sample format).
pub type SlcImage32 = slc::SlcImage<f32>;
/// Double-precision image (the batch pipeline's working type).
pub type SlcImage64 = slc::SlcImage<f64>;
/// Double-precision Hermitian coherency matrix.
pub type Herm64 = herm3::Herm3<f64>;
/// Single-precision Hermitian coherency matrix.
pub type Herm32 = herm3::Herm3<f32>;
/// Double-precision coherency field.
pub type CoherencyField64 = coherency::CoherencyField<f64>;
/// Double-precision metric raster.
pub type MetricRaster64 = metrics::MetricRaster<f64>;
/// Double-precision scene description.
pub type SceneSpec64 = sim::SceneSpec<f64>;
/// Double-precision sublook stack.
pub type SublookStack64 = sublook::SublookStack<f64>;
