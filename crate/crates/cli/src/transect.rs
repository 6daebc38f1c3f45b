//! Transect extraction: a per-pixel metric table along a pixel path,
//! the standard way to inspect how sublook depolarisation diverges across
//! a field boundary.

use std::path::Path;

use anisar_core::mask::SlopeRaster;
use anisar_core::metrics::MetricRaster;
use anisar_core::pslc::load_metric;
use anisar_core::stationarity::FlagLevel;
use anisar_core::{CoreError, Result};

/// Inclusive Bresenham traversal from (r0, c0) to (r1, c1); both endpoints
/// are part of the path, so a horizontal segment of n columns yields n
/// pixels and a zero-length segment yields one.
pub fn trace_segment(r0: usize, c0: usize, r1: usize, c1: usize) -> Vec<(usize, usize)> {
    let (mut r, mut c) = (r0 as i64, c0 as i64);
    let (re, ce) = (r1 as i64, c1 as i64);
    let dr = (re - r).abs();
    let dc = (ce - c).abs();
    let sr = if r < re { 1 } else { -1 };
    let sc = if c < ce { 1 } else { -1 };
    let mut err = dc - dr;
    let mut out = Vec::new();
    loop {
        out.push((r as usize, c as usize));
        if r == re && c == ce {
            break;
        }
        let e2 = 2 * err;
        if e2 >= -dr {
            err -= dr;
            c += sc;
        }
        if e2 <= dc {
            err += dc;
            r += sr;
        }
    }
    out
}

/// Parses "row,col".
pub fn parse_pixel(s: &str) -> Result<(usize, usize)> {
    let mut it = s.split(',');
    let bad = || CoreError::Argument(format!("cannot parse pixel '{s}' (expected row,col)"));
    let row = it.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let col = it.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    if it.next().is_some() {
        return Err(bad());
    }
    Ok((row, col))
}

/// The rasters of a finished pipeline run that transects and scatter
/// reports draw from, loaded from the run directory's binary outputs.
pub struct RunRasters {
    pub d_full: MetricRaster<f64>,
    pub d_subs: Vec<MetricRaster<f64>>,
    pub ratios: Vec<MetricRaster<f64>>,
    pub log_lambda: MetricRaster<f64>,
    pub flags: MetricRaster<f64>,
}

impl RunRasters {
    /// Loads from a run directory, discovering the sublook count from the
    /// files present. Requires the run to have exported raw rasters.
    pub fn load(dir: &Path) -> Result<Self> {
        let d_full = load_metric(&dir.join("full_one_minus_m_fp.pmtr"))?;
        let mut d_subs = Vec::new();
        let mut ratios = Vec::new();
        loop {
            let i = d_subs.len() + 1;
            let d_path = dir.join(format!("sublook_{i}_one_minus_m_fp.pmtr"));
            if !d_path.exists() {
                break;
            }
            d_subs.push(load_metric(&d_path)?);
            ratios.push(load_metric(&dir.join(format!("sublook_{i}_span_ratio.pmtr")))?);
        }
        if d_subs.len() < 2 {
            return Err(CoreError::Argument(format!(
                "run directory {} holds {} sublook rasters, need at least 2 \
                 (was the run exported with the raw format?)",
                dir.display(),
                d_subs.len()
            )));
        }
        Ok(Self {
            d_full,
            d_subs,
            ratios,
            log_lambda: load_metric(&dir.join("log_lambda.pmtr"))?,
            flags: load_metric(&dir.join("flags.pmtr"))?,
        })
    }

    pub fn rows(&self) -> usize {
        self.d_full.rows()
    }

    pub fn cols(&self) -> usize {
        self.d_full.cols()
    }
}

fn flag_name(level: f64) -> &'static str {
    match level as i64 {
        1 => FlagLevel::Weak.as_str(),
        2 => FlagLevel::Moderate.as_str(),
        3 => FlagLevel::Strong.as_str(),
        _ => FlagLevel::None.as_str(),
    }
}

/// Renders the transect table as CSV: one row per pixel with the
/// full-aperture depolarisation, every sublook's depolarisation and power
/// share, the stationarity statistic, the flag level, and the terrain
/// slope (NaN when no slope raster is given).
pub fn transect_csv(
    run: &RunRasters,
    pixels: &[(usize, usize)],
    slope: Option<&SlopeRaster<f64>>,
) -> Result<String> {
    if pixels.is_empty() {
        return Err(CoreError::Argument("transect has no pixels".into()));
    }
    for &(r, c) in pixels {
        if r >= run.rows() || c >= run.cols() {
            return Err(CoreError::Argument(format!(
                "transect pixel ({r}, {c}) is outside the {}x{} rasters",
                run.rows(),
                run.cols()
            )));
        }
    }
    if let Some(s) = slope {
        if s.rows() != run.rows() || s.cols() != run.cols() {
            return Err(CoreError::Argument(format!(
                "slope raster is {}x{}, rasters are {}x{}",
                s.rows(),
                s.cols(),
                run.rows(),
                run.cols()
            )));
        }
    }

    let n = run.d_subs.len();
    let mut out = String::from("row,col,slope_deg,d_full");
    for i in 1..=n {
        out.push_str(&format!(",d_{i}"));
    }
    for i in 1..=n {
        out.push_str(&format!(",w_{i}"));
    }
    out.push_str(",log_lambda,flag\n");

    for &(r, c) in pixels {
        let s = slope.map_or(f64::NAN, |s| s.values()[r * run.cols() + c]);
        out.push_str(&format!("{r},{c},{s},{}", run.d_full.get(r, c)));
        for d in &run.d_subs {
            out.push_str(&format!(",{}", d.get(r, c)));
        }
        for w in &run.ratios {
            out.push_str(&format!(",{}", w.get(r, c)));
        }
        out.push_str(&format!(
            ",{},{}\n",
            run.log_lambda.get(r, c),
            flag_name(run.flags.get(r, c))
        ));
    }
    Ok(out)
}
