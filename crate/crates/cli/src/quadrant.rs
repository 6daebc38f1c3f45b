//! Quadrant grouping for multi-look acquisitions: a declared number of
//! azimuth looks (divisible by 4) is split into four equal angular
//! quadrants, and coherency is averaged per quadrant to expose
//! direction-dependent power.

use std::fs;
use std::path::{Path, PathBuf};

use anisar_core::coherency::{average_coherency, boxcar_coherency, CoherencyField};
use anisar_core::metrics::{m_fp, one_minus_m_fp, span, Source};
use anisar_core::pslc::load_slc;
use anisar_core::slc::SlcImage;
use anisar_core::{CoreError, Result};
use serde::Serialize;

use crate::config::ExportFormat;
use crate::pipeline::Emitter;

/// Averages the coherency of the requested quadrant (1-based, 1..=4).
/// The looks must be in angular order; their count defines the quadrant
/// size and must be divisible by 4.
pub fn quadrant_group(
    looks: &[&CoherencyField<f64>],
    group: usize,
) -> Result<CoherencyField<f64>> {
    if looks.is_empty() || looks.len() % 4 != 0 {
        return Err(CoreError::Argument(format!(
            "{} looks cannot form 4 quadrants (count must be a positive \
             multiple of 4)",
            looks.len()
        )));
    }
    if !(1..=4).contains(&group) {
        return Err(CoreError::Argument(format!(
            "quadrant must be 1..=4, got {group}"
        )));
    }
    let per = looks.len() / 4;
    let slice = &looks[(group - 1) * per..group * per];
    average_coherency(slice)
}

/// Fraction of the total power carried by one quadrant average:
/// mean span of the quadrant over 4× the mean span of the full average.
/// Equal-power quadrants give 1/4.
pub fn span_share(quadrant: &CoherencyField<f64>, full: &CoherencyField<f64>) -> f64 {
    let mean_span = |f: &CoherencyField<f64>| {
        let s = span(f, Source::Full);
        s.values().iter().sum::<f64>() / s.values().len() as f64
    };
    mean_span(quadrant) / (4.0 * mean_span(full))
}

/// What [`run_quadrant`] reports back and records in `quadrant.json`.
#[derive(Debug, Serialize)]
pub struct QuadrantSummary {
    pub group: usize,
    pub n_looks: usize,
    /// Boxcar window applied per look before averaging (1 = none).
    pub window: usize,
    /// Power share of each quadrant; equal-power looks give 0.25 each.
    pub span_shares: [f64; 4],
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub files: Vec<String>,
}

/// Loads azimuth looks (PSLC, in angular order), averages the requested
/// quadrant's coherency, and writes its metric rasters plus a
/// `quadrant.json` summary — written last, as the completion marker.
pub fn run_quadrant(
    looks: &[PathBuf],
    group: usize,
    window: usize,
    out_dir: &Path,
    formats: &[ExportFormat],
) -> Result<QuadrantSummary> {
    let imgs: Vec<SlcImage<f64>> = looks.iter().map(|p| load_slc(p)).collect::<Result<_>>()?;
    let fields: Vec<CoherencyField<f64>> = imgs
        .iter()
        .map(|i| boxcar_coherency(i, window))
        .collect::<Result<_>>()?;
    let refs: Vec<&CoherencyField<f64>> = fields.iter().collect();
    let q = quadrant_group(&refs, group)?;
    let full = average_coherency(&refs)?;
    let mut span_shares = [0.0; 4];
    for (g, share) in span_shares.iter_mut().enumerate() {
        *share = span_share(&quadrant_group(&refs, g + 1)?, &full);
    }

    fs::create_dir_all(out_dir)?;
    let mut em = Emitter::new(out_dir, formats);
    let stem = format!("quadrant_{group}");
    em.metric(&format!("{stem}_m_fp"), &m_fp(&q, Source::Full))?;
    em.metric(&format!("{stem}_one_minus_m_fp"), &one_minus_m_fp(&q, Source::Full))?;
    em.metric(&format!("{stem}_span"), &span(&q, Source::Full))?;
    em.metric("full_span", &span(&full, Source::Full))?;

    let summary = QuadrantSummary {
        group,
        n_looks: looks.len(),
        window,
        span_shares,
        out_dir: out_dir.to_path_buf(),
        files: em.files,
    };
    fs::write(
        out_dir.join("quadrant.json"),
        serde_json::to_vec_pretty(&summary)?,
    )?;
    Ok(summary)
}
