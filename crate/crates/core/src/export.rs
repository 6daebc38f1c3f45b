//! Portable exports: 8-bit PGM quicklooks with JSON sidecars, and CSV.
//!
//! PGM is deliberately primitive — every image tool reads it, and a byte
//! payload plus a text header gives bit-reproducible outputs. Each PGM gets
//! a `<name>.json` sidecar recording how physical values map to bytes, so
//! the quicklook can always be traced back to numbers:
//!
//! - metric rasters use affine min/max scaling (NaN renders black and is
//!   counted in the sidecar);
//! - log₁₀Λ rasters use the standard three-band stretch: black for
//!   [−1, 0] (stationary), a linear grey ramp over (−2, −1), white at and
//!   below −2 (strongly non-stationary);
//! - flag rasters use a fixed 4-level palette with the legend in the
//!   sidecar.
//!
//! CSV dumps are plain `row,col,value` with shortest-round-trip float
//! formatting; NaN sentinels are written as `NaN`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::metrics::{MetricId, MetricRaster};
use crate::real::Real;
use crate::stationarity::{AnisotropyFlags, FlagLevel};
use crate::CoreError;

/// Sidecar path: the raster path with `.json` appended (keeps the pairing
/// obvious in a directory listing).
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    PathBuf::from(s)
}

fn write_pgm(path: &Path, rows: usize, cols: usize, bytes: &[u8]) -> Result<()> {
    let mut buf = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    buf.extend_from_slice(bytes);
    fs::write(path, buf)?;
    Ok(())
}

#[derive(Serialize)]
struct AffineSidecar {
    format: &'static str,
    rows: usize,
    cols: usize,
    metric: String,
    source: String,
    /// Physical value mapped to byte 0 (absent if no finite pixels).
    min: Option<f64>,
    /// Physical value mapped to byte 255 (absent if no finite pixels).
    max: Option<f64>,
    nan_count: usize,
    degenerate: usize,
}

/// Writes a metric raster as an affine-scaled PGM plus sidecar.
pub fn write_metric_pgm<T: Real>(path: &Path, raster: &MetricRaster<T>) -> Result<()> {
    let finite: Vec<f64> = raster
        .values()
        .iter()
        .filter_map(|v| {
            let f = v.to_f64().unwrap_or(f64::NAN);
            f.is_finite().then_some(f)
        })
        .collect();
    let (min, max) = if finite.is_empty() {
        (None, None)
    } else {
        let mn = finite.iter().cloned().fold(f64::MAX, f64::min);
        let mx = finite.iter().cloned().fold(f64::MIN, f64::max);
        (Some(mn), Some(mx))
    };
    let nan_count = raster.values().len() - finite.len();

    let bytes: Vec<u8> = raster
        .values()
        .iter()
        .map(|v| {
            let f = v.to_f64().unwrap_or(f64::NAN);
            match (min, max) {
                (Some(mn), Some(mx)) if f.is_finite() && mx > mn => {
                    (255.0 * (f - mn) / (mx - mn)).round().clamp(0.0, 255.0) as u8
                }
                (Some(_), Some(_)) if f.is_finite() => 0, // constant raster
                _ => 0,                                   // NaN/Inf or empty
            }
        })
        .collect();
    write_pgm(path, raster.rows(), raster.cols(), &bytes)?;

    let sidecar = AffineSidecar {
        format: "pgm-affine-v1",
        rows: raster.rows(),
        cols: raster.cols(),
        metric: raster.metric.to_string(),
        source: raster.source.to_string(),
        min,
        max,
        nan_count,
        degenerate: raster.degenerate,
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

#[derive(Serialize)]
struct BandSidecar {
    format: &'static str,
    rows: usize,
    cols: usize,
    metric: String,
    black: &'static str,
    grey: &'static str,
    white: &'static str,
    nan_count: usize,
}

/// Writes a log₁₀Λ raster with the three-band stationarity stretch.
pub fn write_loglambda_pgm<T: Real>(
    path: &Path,
    raster: &MetricRaster<T>,
) -> Result<()> {
    if raster.metric != MetricId::LogLambda {
        return Err(CoreError::Argument(format!(
            "banded export expects a log_lambda raster, got {}",
            raster.metric
        )));
    }
    let mut nan_count = 0usize;
    let bytes: Vec<u8> = raster
        .values()
        .iter()
        .map(|v| {
            let f = v.to_f64().unwrap_or(f64::NAN);
            if f.is_nan() {
                nan_count += 1;
                0
            } else if f >= -1.0 {
                0
            } else if f <= -2.0 {
                255
            } else {
                (255.0 * (-1.0 - f)).round() as u8
            }
        })
        .collect();
    write_pgm(path, raster.rows(), raster.cols(), &bytes)?;
    let sidecar = BandSidecar {
        format: "pgm-loglambda-bands-v1",
        rows: raster.rows(),
        cols: raster.cols(),
        metric: raster.metric.to_string(),
        black: "log10 Lambda in [-1, 0] (stationary)",
        grey: "linear ramp over (-2, -1)",
        white: "log10 Lambda <= -2 (strongly non-stationary)",
        nan_count,
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

#[derive(Serialize)]
struct FlagsSidecar {
    format: &'static str,
    rows: usize,
    cols: usize,
    /// Byte value of each level, in level order none..strong.
    palette: [(u8, &'static str); 4],
    weak_threshold: f64,
    moderate_threshold: f64,
    strong_threshold: f64,
    gated: bool,
    degenerate: usize,
}

/// Byte used for each flag level in PGM exports.
pub fn flag_byte(level: FlagLevel) -> u8 {
    match level {
        FlagLevel::None => 0,
        FlagLevel::Weak => 85,
        FlagLevel::Moderate => 170,
        FlagLevel::Strong => 255,
    }
}

/// Writes anisotropy flags as a fixed-palette PGM plus legend sidecar.
pub fn write_flags_pgm(path: &Path, flags: &AnisotropyFlags) -> Result<()> {
    let bytes: Vec<u8> = flags.levels().iter().map(|&l| flag_byte(l)).collect();
    write_pgm(path, flags.rows(), flags.cols(), &bytes)?;
    let sidecar = FlagsSidecar {
        format: "pgm-flag-palette-v1",
        rows: flags.rows(),
        cols: flags.cols(),
        palette: [
            (0, FlagLevel::None.as_str()),
            (85, FlagLevel::Weak.as_str()),
            (170, FlagLevel::Moderate.as_str()),
            (255, FlagLevel::Strong.as_str()),
        ],
        weak_threshold: flags.thresholds.weak,
        moderate_threshold: flags.thresholds.moderate,
        strong_threshold: flags.thresholds.strong,
        gated: flags.gated,
        degenerate: flags.degenerate,
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

#[derive(Serialize)]
struct MaskSidecar {
    format: &'static str,
    rows: usize,
    cols: usize,
    note: String,
    true_count: usize,
}

/// Writes a boolean mask as a black/white PGM plus sidecar (255 = true).
pub fn write_mask_pgm(path: &Path, mask: &crate::mask::RasterMask) -> Result<()> {
    let bytes: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_pgm(path, mask.rows(), mask.cols(), &bytes)?;
    let sidecar = MaskSidecar {
        format: "pgm-mask-v1",
        rows: mask.rows(),
        cols: mask.cols(),
        note: mask.note.clone(),
        true_count: mask.count(),
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

/// Writes a raster as `row,col,value` CSV.
pub fn write_metric_csv<T: Real>(path: &Path, raster: &MetricRaster<T>) -> Result<()> {
    let mut out = String::with_capacity(16 * raster.values().len() + 16);
    out.push_str("row,col,value\n");
    for row in 0..raster.rows() {
        for col in 0..raster.cols() {
            let v = raster.get(row, col);
            out.push_str(&format!("{row},{col},{v}\n"));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Source;
    use crate::stationarity::{classify, flag_anisotropy, FlagThresholds, StationarityResult};
    use tempfile::tempdir;

    fn raster(values: Vec<f64>, metric: MetricId) -> MetricRaster<f64> {
        let n = values.len();
        let degenerate = values.iter().filter(|v| v.is_nan()).count();
        MetricRaster::from_values(1, n, values, metric, Source::Full, degenerate).unwrap()
    }

    fn pgm_payload(bytes: &[u8]) -> &[u8] {
        // Skip three header lines: magic, dims, maxval.
        let mut rest = bytes;
        for _ in 0..3 {
            let nl = rest.iter().position(|&b| b == b'\n').unwrap();
            rest = &rest[nl + 1..];
        }
        rest
    }

    #[test]
    fn affine_pgm_scales_min_to_black_max_to_white() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        let r = raster(vec![2.0, 4.0, 3.0, f64::NAN], MetricId::Span);
        write_metric_pgm(&p, &r).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P5\n4 1\n255\n"));
        assert_eq!(pgm_payload(&bytes), &[0, 255, 128, 0]);
        let sidecar: serde_json::Value =
            serde_json::from_slice(&fs::read(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(sidecar["min"], 2.0);
        assert_eq!(sidecar["max"], 4.0);
        assert_eq!(sidecar["nan_count"], 1);
        assert_eq!(sidecar["metric"], "span");
    }

    #[test]
    fn constant_and_all_nan_rasters_render_black() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.pgm");
        write_metric_pgm(&p, &raster(vec![7.0, 7.0], MetricId::Span)).unwrap();
        assert_eq!(pgm_payload(&fs::read(&p).unwrap()), &[0, 0]);
        let q = dir.path().join("n.pgm");
        write_metric_pgm(&q, &raster(vec![f64::NAN, f64::NAN], MetricId::Span)).unwrap();
        assert_eq!(pgm_payload(&fs::read(&q).unwrap()), &[0, 0]);
        let sidecar: serde_json::Value =
            serde_json::from_slice(&fs::read(sidecar_path(&q)).unwrap()).unwrap();
        assert!(sidecar["min"].is_null());
    }

    #[test]
    fn loglambda_banding_maps_the_three_regimes() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ll.pgm");
        let r = raster(
            vec![0.0, -1.0, -1.5, -2.0, -5.0, f64::NAN],
            MetricId::LogLambda,
        );
        write_loglambda_pgm(&p, &r).unwrap();
        assert_eq!(pgm_payload(&fs::read(&p).unwrap()), &[0, 0, 128, 255, 255, 0]);
        // Wrong metric is refused.
        let s = raster(vec![1.0], MetricId::Span);
        assert!(write_loglambda_pgm(&dir.path().join("x.pgm"), &s).is_err());
    }

    #[test]
    fn flags_pgm_uses_the_fixed_palette() {
        let dir = tempdir().unwrap();
        let d1 = raster(vec![0.5, 0.5, 0.5, 0.5], MetricId::OneMinusMFp);
        let d2 = raster(vec![0.55, 0.62, 0.67, 0.75], MetricId::OneMinusMFp);
        let ll = raster(vec![0.0; 4], MetricId::LogLambda);
        let stationary = classify(&ll, -1.0).unwrap();
        let stat = StationarityResult { log_lambda: ll, threshold: -1.0, stationary };
        let flags =
            flag_anisotropy(&[&d1, &d2], &stat, FlagThresholds::default(), false).unwrap();
        let p = dir.path().join("flags.pgm");
        write_flags_pgm(&p, &flags).unwrap();
        assert_eq!(pgm_payload(&fs::read(&p).unwrap()), &[0, 85, 170, 255]);
        let sidecar: serde_json::Value =
            serde_json::from_slice(&fs::read(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(sidecar["palette"][1][1], "weak");
        assert_eq!(sidecar["gated"], false);
    }

    #[test]
    fn mask_pgm_is_black_and_white() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("mask.pgm");
        let m = crate::mask::RasterMask::from_bits(
            1,
            3,
            vec![true, false, true],
            "slope within [-2, 2] deg".into(),
        )
        .unwrap();
        write_mask_pgm(&p, &m).unwrap();
        assert_eq!(pgm_payload(&fs::read(&p).unwrap()), &[255, 0, 255]);
        let sidecar: serde_json::Value =
            serde_json::from_slice(&fs::read(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(sidecar["true_count"], 2);
        assert_eq!(sidecar["note"], "slope within [-2, 2] deg");
    }

    #[test]
    fn csv_prints_header_and_nan() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("v.csv");
        let r = MetricRaster::from_values(
            2,
            2,
            vec![0.25, f64::NAN, -1.5, 2.0],
            MetricId::MFp,
            Source::Full,
            1,
        )
        .unwrap();
        write_metric_csv(&p, &r).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, "row,col,value\n0,0,0.25\n0,1,NaN\n1,0,-1.5\n1,1,2\n");
    }
}
