//! Scatter-report CSV: one (pixel, sublook) row pairing each sublook's
//! power share with its depolarisation, the raw material for the
//! share-versus-depolarisation analysis.

use anisar_core::mask::RasterMask;
use anisar_core::metrics::MetricRaster;
use anisar_core::{CoreError, Result};

/// Writes `row,col,sublook,w,d` rows (sublook is 1-based), restricted to
/// pixels where `mask` is true. An all-false mask yields just the header.
pub fn scatter_csv(
    d_subs: &[&MetricRaster<f64>],
    ratios: &[&MetricRaster<f64>],
    mask: Option<&RasterMask>,
) -> Result<String> {
    if d_subs.len() != ratios.len() || d_subs.is_empty() {
        return Err(CoreError::Argument(format!(
            "need matching depolarisation/share stacks, got {} and {}",
            d_subs.len(),
            ratios.len()
        )));
    }
    let rows = d_subs[0].rows();
    let cols = d_subs[0].cols();
    let dims_ok =
        |r: &MetricRaster<f64>| r.rows() == rows && r.cols() == cols;
    if !d_subs.iter().all(|r| dims_ok(r)) || !ratios.iter().all(|r| dims_ok(r)) {
        return Err(CoreError::Argument(format!(
            "scatter inputs must all be {rows}x{cols}"
        )));
    }
    if let Some(m) = mask {
        if m.rows() != rows || m.cols() != cols {
            return Err(CoreError::Argument(format!(
                "mask is {}x{}, rasters are {rows}x{cols}",
                m.rows(),
                m.cols()
            )));
        }
    }

    let mut out = String::from("row,col,sublook,w,d\n");
    for row in 0..rows {
        for col in 0..cols {
            if let Some(m) = mask {
                if !m.get(row, col) {
                    continue;
                }
            }
            for (i, (d, w)) in d_subs.iter().zip(ratios.iter()).enumerate() {
                out.push_str(&format!(
                    "{row},{col},{},{},{}\n",
                    i + 1,
                    w.get(row, col),
                    d.get(row, col)
                ));
            }
        }
    }
    Ok(out)
}
