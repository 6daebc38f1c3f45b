//! Binary containers for images, slope rasters, and metric rasters.
//!
//! Three sibling formats share one little-endian layout and differ only in
//! magic, channel count, and payload element type:
//!
//! ```text
//! magic    [u8; 4]   "PSLC" | "PSLP" | "PMTR"
//! version  u16       1
//! rows     u32
//! cols     u32
//! nchan    u16       3 for PSLC, 1 otherwise
//! meta_len u32
//! meta     [u8]      UTF-8 JSON
//! payload  [f32]     channel-planar, row-major
//! ```
//!
//! - `PSLC`: three complex channels (HH, HV, VV), each sample an (re, im)
//!   `f32` pair; metadata is the acquisition record. Samples must be finite
//!   — validated on load and before save, so a NaN can never round-trip.
//! - `PSLP`: one real plane of terrain slope in degrees; NaN marks gaps.
//! - `PMTR`: one real plane of a derived metric; metadata records which
//!   metric, its source, and its degenerate-pixel count. NaN sentinels are
//!   part of the data.
//!
//! Saving is deterministic: the same in-memory value always produces the
//! same bytes (fixed field order, shortest-round-trip float formatting in
//! the JSON), which lets byte comparison stand in for semantic comparison
//! in reproducibility checks.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::mask::SlopeRaster;
use crate::metrics::{MetricId, MetricRaster, Source};
use crate::real::Real;
use crate::slc::{AcqMeta, Channel, SlcImage};

/// Magic of the three-channel complex image container.
pub const SLC_MAGIC: [u8; 4] = *b"PSLC";
/// Magic of the slope-raster container.
pub const SLOPE_MAGIC: [u8; 4] = *b"PSLP";
/// Magic of the metric-raster container.
pub const METRIC_MAGIC: [u8; 4] = *b"PMTR";
/// Only supported container version.
pub const VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
struct SlopeMeta {
    label: String,
}

#[derive(Serialize, Deserialize)]
struct MetricMeta {
    metric: String,
    source: String,
    degenerate: usize,
}

// ---------------------------------------------------------------------------
// encoding
// ---------------------------------------------------------------------------

fn encode_header(magic: [u8; 4], rows: usize, cols: usize, nchan: u16, meta: &[u8]) -> Result<Vec<u8>> {
    let rows32 = u32::try_from(rows)
        .map_err(|_| CoreError::Argument(format!("row count {rows} exceeds u32")))?;
    let cols32 = u32::try_from(cols)
        .map_err(|_| CoreError::Argument(format!("column count {cols} exceeds u32")))?;
    let meta_len = u32::try_from(meta.len())
        .map_err(|_| CoreError::Argument("metadata exceeds u32 length".into()))?;
    let mut buf = Vec::with_capacity(20 + meta.len());
    buf.extend_from_slice(&magic);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&rows32.to_le_bytes());
    buf.extend_from_slice(&cols32.to_le_bytes());
    buf.extend_from_slice(&nchan.to_le_bytes());
    buf.extend_from_slice(&meta_len.to_le_bytes());
    buf.extend_from_slice(meta);
    Ok(buf)
}

/// Converts a sample to the storage precision, rejecting values that do not
/// survive the trip (overflow to infinity).
#[inline]
fn to_storage<T: Real>(v: T, what: &str) -> Result<f32> {
    let f = v.to_f32().unwrap_or(f32::NAN);
    if v.is_finite() && !f.is_finite() {
        return Err(CoreError::Validation(format!(
            "{what} value {v} exceeds single-precision range"
        )));
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// decoding
// ---------------------------------------------------------------------------

struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(CoreError::Corrupt(format!(
                "truncated while reading {what}: need {n} bytes, have {}",
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

struct Header {
    rows: usize,
    cols: usize,
    meta: Vec<u8>,
}

/// Parses and validates the common header; checks magic, version, channel
/// count, and that the payload length matches `rows·cols·nchan·elem_size`
/// exactly (no truncation, no trailing bytes).
fn decode_header<'a>(
    dec: &mut Decoder<'a>,
    expect_magic: [u8; 4],
    expect_nchan: u16,
    elem_size: usize,
) -> Result<Header> {
    let magic: [u8; 4] = dec.take(4, "magic")?.try_into().unwrap();
    if magic != expect_magic {
        let found = String::from_utf8_lossy(&magic).into_owned();
        let want = String::from_utf8_lossy(&expect_magic).into_owned();
        return Err(CoreError::Format(format!(
            "expected {want} container, found signature '{found}'"
        )));
    }
    let version = dec.u16("version")?;
    if version != VERSION {
        return Err(CoreError::Format(format!(
            "unsupported container version {version} (this build reads {VERSION})"
        )));
    }
    let rows = dec.u32("rows")? as usize;
    let cols = dec.u32("cols")? as usize;
    if rows == 0 || cols == 0 {
        return Err(CoreError::Corrupt(format!(
            "container declares empty raster {rows}x{cols}"
        )));
    }
    let nchan = dec.u16("channel count")?;
    if nchan != expect_nchan {
        return Err(CoreError::Corrupt(format!(
            "container declares {nchan} channels, expected {expect_nchan}"
        )));
    }
    let meta_len = dec.u32("metadata length")? as usize;
    let meta = dec.take(meta_len, "metadata")?.to_vec();
    let expected = (rows as u64)
        .checked_mul(cols as u64)
        .and_then(|v| v.checked_mul(nchan as u64))
        .and_then(|v| v.checked_mul(elem_size as u64))
        .ok_or_else(|| {
            CoreError::Corrupt(format!("raster dimensions {rows}x{cols} overflow"))
        })?;
    if dec.remaining() as u64 != expected {
        return Err(CoreError::Corrupt(format!(
            "payload is {} bytes, expected {expected}",
            dec.remaining()
        )));
    }
    Ok(Header { rows, cols, meta })
}

fn decode_f32_plane<T: Real>(dec: &mut Decoder<'_>, n: usize) -> Result<Vec<T>> {
    let bytes = dec.take(4 * n, "sample plane")?;
    Ok(bytes
        .chunks_exact(4)
        .map(|b| {
            let f = f32::from_le_bytes(b.try_into().unwrap());
            T::from_f32(f).unwrap_or_else(T::nan)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// PSLC: three-channel complex image
// ---------------------------------------------------------------------------

/// Saves an image, validating sample finiteness first.
pub fn save_slc<T: Real>(path: &Path, img: &SlcImage<T>) -> Result<()> {
    img.validate_finite()?;
    let meta = serde_json::to_vec(img.meta())?;
    let mut buf = encode_header(SLC_MAGIC, img.rows(), img.cols(), 3, &meta)?;
    buf.reserve(img.rows() * img.cols() * 3 * 8);
    for ch in Channel::ALL {
        for v in img.plane(ch) {
            buf.extend_from_slice(&to_storage(v.re, ch.name())?.to_le_bytes());
            buf.extend_from_slice(&to_storage(v.im, ch.name())?.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Loads an image, validating structure and sample finiteness.
pub fn load_slc<T: Real>(path: &Path) -> Result<SlcImage<T>> {
    let buf = fs::read(path)?;
    let mut dec = Decoder::new(&buf);
    let hdr = decode_header(&mut dec, SLC_MAGIC, 3, 8)?;
    let meta: AcqMeta = serde_json::from_slice(&hdr.meta)?;
    let n = hdr.rows * hdr.cols;
    let mut planes: [Vec<num_complex::Complex<T>>; 3] = [vec![], vec![], vec![]];
    for plane in planes.iter_mut() {
        let raw = decode_f32_plane::<T>(&mut dec, 2 * n)?;
        *plane = raw
            .chunks_exact(2)
            .map(|p| num_complex::Complex::new(p[0], p[1]))
            .collect();
    }
    let img = SlcImage::from_planes(hdr.rows, hdr.cols, meta, planes)?;
    img.validate_finite()?;
    Ok(img)
}

// ---------------------------------------------------------------------------
// PSLP: slope raster
// ---------------------------------------------------------------------------

/// Saves a terrain-slope raster (degrees; NaN gaps allowed).
pub fn save_slope<T: Real>(path: &Path, raster: &SlopeRaster<T>) -> Result<()> {
    let meta = serde_json::to_vec(&SlopeMeta { label: raster.label.clone() })?;
    let mut buf = encode_header(SLOPE_MAGIC, raster.rows(), raster.cols(), 1, &meta)?;
    buf.reserve(raster.values().len() * 4);
    for &v in raster.values() {
        buf.extend_from_slice(&to_storage(v, "slope")?.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Loads a terrain-slope raster.
pub fn load_slope<T: Real>(path: &Path) -> Result<SlopeRaster<T>> {
    let buf = fs::read(path)?;
    let mut dec = Decoder::new(&buf);
    let hdr = decode_header(&mut dec, SLOPE_MAGIC, 1, 4)?;
    let meta: SlopeMeta = serde_json::from_slice(&hdr.meta)?;
    let values = decode_f32_plane::<T>(&mut dec, hdr.rows * hdr.cols)?;
    SlopeRaster::new(hdr.rows, hdr.cols, values, meta.label)
}

// ---------------------------------------------------------------------------
// PMTR: metric raster
// ---------------------------------------------------------------------------

/// Saves a metric raster (NaN sentinels are part of the data).
pub fn save_metric<T: Real>(path: &Path, raster: &MetricRaster<T>) -> Result<()> {
    let meta = serde_json::to_vec(&MetricMeta {
        metric: raster.metric.to_string(),
        source: raster.source.to_string(),
        degenerate: raster.degenerate,
    })?;
    let mut buf = encode_header(METRIC_MAGIC, raster.rows(), raster.cols(), 1, &meta)?;
    buf.reserve(raster.values().len() * 4);
    for &v in raster.values() {
        buf.extend_from_slice(&to_storage(v, raster.metric.as_str())?.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Loads a metric raster.
pub fn load_metric<T: Real>(path: &Path) -> Result<MetricRaster<T>> {
    let buf = fs::read(path)?;
    let mut dec = Decoder::new(&buf);
    let hdr = decode_header(&mut dec, METRIC_MAGIC, 1, 4)?;
    let meta: MetricMeta = serde_json::from_slice(&hdr.meta)?;
    let metric: MetricId = meta.metric.parse()?;
    let source: Source = meta.source.parse()?;
    let values = decode_f32_plane::<T>(&mut dec, hdr.rows * hdr.cols)?;
    MetricRaster::from_values(hdr.rows, hdr.cols, values, metric, source, meta.degenerate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slc::AcqMeta;
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn sample_image() -> SlcImage<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let meta = AcqMeta { label: "unit test scene".into(), ..AcqMeta::default() };
        let mut img = SlcImage::zeros(4, 3, meta).unwrap();
        for ch in Channel::ALL {
            for v in img.plane_mut(ch) {
                *v = Complex::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            }
        }
        img
    }

    #[test]
    fn slc_round_trip_is_byte_exact() {
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("a.pslc");
        let p2 = dir.path().join("b.pslc");
        let img = sample_image();
        save_slc(&p1, &img).unwrap();
        let back: SlcImage<f32> = load_slc(&p1).unwrap();
        assert_eq!(back, img);
        save_slc(&p2, &back).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn slc_round_trip_through_f64_is_byte_exact() {
        // f32 -> f64 widening is exact, so loading into f64 and saving back
        // must reproduce identical bytes.
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("a.pslc");
        let p2 = dir.path().join("b.pslc");
        save_slc(&p1, &sample_image()).unwrap();
        let wide: SlcImage<f64> = load_slc(&p1).unwrap();
        save_slc(&p2, &wide).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn slc_rejects_non_finite_samples_on_save() {
        let dir = tempdir().unwrap();
        let mut img = sample_image();
        img.set_sample(Channel::Hv, 0, 0, Complex::new(f32::NAN, 0.0)).unwrap();
        let err = save_slc(&dir.path().join("bad.pslc"), &img).unwrap_err();
        assert!(matches!(err, CoreError::Validation(_)), "got {err:?}");
    }

    #[test]
    fn f64_samples_beyond_f32_range_are_rejected() {
        let dir = tempdir().unwrap();
        let mut img: SlcImage<f64> = SlcImage::zeros(2, 2, AcqMeta::default()).unwrap();
        img.set_sample(Channel::Hh, 0, 0, Complex::new(1e300, 0.0)).unwrap();
        let err = save_slc(&dir.path().join("wide.pslc"), &img).unwrap_err();
        assert!(matches!(err, CoreError::Validation(_)), "got {err:?}");
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("x.bin");
        fs::write(&p, b"JUNKxxxxxxxxxxxxxxxxxxxx").unwrap();
        let err = load_slc::<f32>(&p).unwrap_err();
        assert!(matches!(err, CoreError::Format(_)), "got {err:?}");
        // A sibling container's magic is also a format error, with a hint.
        let slope = SlopeRaster::new(2, 2, vec![0.0f32; 4], "s".into()).unwrap();
        let ps = dir.path().join("s.pslp");
        save_slope(&ps, &slope).unwrap();
        let err = load_slc::<f32>(&ps).unwrap_err();
        assert!(err.to_string().contains("PSLP"), "got {err}");
    }

    #[test]
    fn unsupported_version_is_a_format_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("v.pslc");
        save_slc(&p, &sample_image()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[4] = 9; // version low byte
        fs::write(&p, &bytes).unwrap();
        let err = load_slc::<f32>(&p).unwrap_err();
        assert!(matches!(err, CoreError::Format(_)), "got {err:?}");
    }

    #[test]
    fn truncation_and_trailing_bytes_are_corrupt() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("t.pslc");
        save_slc(&p, &sample_image()).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(load_slc::<f32>(&p).unwrap_err(), CoreError::Corrupt(_)));
        let mut extended = bytes.clone();
        extended.extend_from_slice(&[0u8; 3]);
        fs::write(&p, &extended).unwrap();
        assert!(matches!(load_slc::<f32>(&p).unwrap_err(), CoreError::Corrupt(_)));
    }

    #[test]
    fn zero_dimension_is_corrupt() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("z.pslc");
        save_slc(&p, &sample_image()).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[6..10].copy_from_slice(&0u32.to_le_bytes()); // rows
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_slc::<f32>(&p).unwrap_err(), CoreError::Corrupt(_)));
    }

    #[test]
    fn slope_round_trip_preserves_nan_gaps() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("s.pslp");
        let slope = SlopeRaster::new(
            2,
            2,
            vec![1.5f32, -2.25, f32::NAN, 0.0],
            "lidar-derived".into(),
        )
        .unwrap();
        save_slope(&p, &slope).unwrap();
        let back: SlopeRaster<f32> = load_slope(&p).unwrap();
        assert_eq!(back.label, "lidar-derived");
        assert_eq!(back.values()[0], 1.5);
        assert!(back.values()[2].is_nan());
    }

    #[test]
    fn metric_round_trip_preserves_provenance() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.pmtr");
        let m = MetricRaster::from_values(
            1,
            3,
            vec![0.25f32, f32::NAN, 0.75],
            MetricId::MFp,
            Source::Sublook(2),
            1,
        )
        .unwrap();
        save_metric(&p, &m).unwrap();
        let back: MetricRaster<f32> = load_metric(&p).unwrap();
        assert_eq!(back.metric, MetricId::MFp);
        assert_eq!(back.source, Source::Sublook(2));
        assert_eq!(back.degenerate, 1);
        assert!(back.values()[1].is_nan());
        assert_eq!(back.values()[2], 0.75);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_slc::<f32>(Path::new("/nonexistent/x.pslc")).unwrap_err();
        assert!(matches!(err, CoreError::Io(_)), "got {err:?}");
    }
}
