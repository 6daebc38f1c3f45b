//! Scene builders shared by the statistical integration tests.

use anisar_core::freq::FreqBand;
use anisar_core::sim::{RegionSpec, SceneSpec};
use anisar_core::slc::AcqMeta;
use anisar_core::Herm64;

/// Single-strip scene with full Doppler support: every sample is an
/// independent draw from the population, so boxcar windows on a stride
/// equal to the window size are independent Wishart samples.
pub fn iso_scene(rows: usize, cols: usize, sigma: Herm64, seed: u64) -> SceneSpec<f64> {
    SceneSpec {
        rows,
        cols,
        meta: AcqMeta::default(),
        regions: vec![RegionSpec {
            col_start: 0,
            col_end: cols,
            sigma,
            doppler_support: vec![FreqBand::new(-0.5, 0.5).unwrap()],
        }],
        point_targets: vec![],
        rng_seed: seed,
    }
}

/// Doppler support concentrated on the middle third of the spectrum (the
/// central band of a 3-way split), plus two thin spurs inside the outer
/// thirds so the side sublooks keep estimable, non-zero coherency.
pub fn band2_dominant_support() -> Vec<FreqBand> {
    vec![
        FreqBand::new(-0.45, -0.44).unwrap(),
        FreqBand::new(-1.0 / 6.0, 1.0 / 6.0).unwrap(),
        FreqBand::new(0.44, 0.45).unwrap(),
    ]
}

/// Two-strip scene: isotropic speckle on the left, azimuth-banded speckle
/// (same total power) on the right half.
pub fn half_banded_scene(rows: usize, cols: usize, seed: u64) -> SceneSpec<f64> {
    let split = cols / 2;
    SceneSpec {
        rows,
        cols,
        meta: AcqMeta::default(),
        regions: vec![
            RegionSpec {
                col_start: 0,
                col_end: split,
                sigma: Herm64::identity(),
                doppler_support: vec![FreqBand::new(-0.5, 0.5).unwrap()],
            },
            RegionSpec {
                col_start: split,
                col_end: cols,
                sigma: Herm64::identity(),
                doppler_support: band2_dominant_support(),
            },
        ],
        point_targets: vec![],
        rng_seed: seed,
    }
}
