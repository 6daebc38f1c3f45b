//! End-to-end sublook statistics: the simulate → split → boxcar → span
//! chain, spectral-weighting recovery, and compensation.

mod common;

use anisar_core::coherency::boxcar_coherency;
use anisar_core::metrics::{span, Source};
use anisar_core::sim::simulate;
use anisar_core::slc::{Channel, SlcImage};
use anisar_core::sublook::{extract_sublooks, SublookConfig, Taper};
use anisar_core::Herm64;
use common::iso_scene;
use num_complex::Complex;
use rustfft::FftPlanner;

const WINDOW: usize = 9;

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

#[test]
fn sublook_spans_partition_the_full_span() {
    let scene = iso_scene(256, 96, Herm64::identity(), 0x5eed_1001);
    let img = simulate(&scene).unwrap();
    let stack = extract_sublooks(&img, &SublookConfig::default()).unwrap();
    assert_eq!(stack.sublooks.len(), 3);

    let full = boxcar_coherency(&img, WINDOW).unwrap();
    let full_span = span(&full, Source::Full);
    let sub_spans: Vec<_> = stack
        .sublooks
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let f = boxcar_coherency(s, WINDOW).unwrap();
            span(&f, Source::Sublook(i))
        })
        .collect();

    // Strip-averaged power shares: a flat spectrum splits into thirds.
    let mut interior = Vec::new();
    for row in 0..full.rows() {
        for col in 0..full.cols() {
            if full.is_interior(row, col) {
                interior.push((row, col));
            }
        }
    }
    let total: f64 = interior.iter().map(|&(r, c)| full_span.get(r, c)).sum();
    for s in &sub_spans {
        let sub: f64 = interior.iter().map(|&(r, c)| s.get(r, c)).sum();
        let share = sub / total;
        assert!(
            (share - 1.0 / 3.0).abs() < 0.02,
            "sublook power share {share:.4} not a third"
        );
    }

    // Per-pixel span sums track the full span loosely, not exactly: the
    // bands redistribute energy spatially and the boxcar only partially
    // averages that out. The median deviation is small, the tail is not.
    let mut dev: Vec<f64> = interior
        .iter()
        .map(|&(r, c)| {
            let sum: f64 = sub_spans.iter().map(|s| s.get(r, c)).sum();
            (sum - full_span.get(r, c)).abs() / full_span.get(r, c)
        })
        .collect();
    dev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = percentile(&dev, 0.5);
    let p99 = percentile(&dev, 0.99);
    assert!(median < 0.025, "median span-sum deviation {median:.4}");
    assert!(p99 < 0.10, "p99 span-sum deviation {p99:.4}");
}

/// Multiplies each azimuth-spectrum bin of every channel by `envelope[bin]`
/// — the test-side counterpart of an antenna/processor weighting.
fn impose_envelope(img: &mut SlcImage<f64>, envelope: &[f64]) {
    let rows = img.rows();
    let cols = img.cols();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(rows);
    let inv = planner.plan_fft_inverse(rows);
    for ch in Channel::ALL {
        let plane = img.plane_mut(ch);
        for col in 0..cols {
            let mut buf: Vec<Complex<f64>> =
                (0..rows).map(|r| plane[r * cols + col]).collect();
            fwd.process(&mut buf);
            for (b, v) in buf.iter_mut().enumerate() {
                *v *= envelope[b];
            }
            inv.process(&mut buf);
            let scale = 1.0 / rows as f64;
            for (r, v) in buf.iter().enumerate() {
                plane[r * cols + col] = v * scale;
            }
        }
    }
}

#[test]
fn weighting_estimate_recovers_an_imposed_envelope() {
    let rows = 256;
    let scene = iso_scene(rows, 64, Herm64::identity(), 0x5eed_1002);
    let mut img = simulate(&scene).unwrap();
    let envelope: Vec<f64> = (0..rows)
        .map(|b| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * b as f64 / rows as f64).sin())
        .collect();
    impose_envelope(&mut img, &envelope);

    let est = anisar_core::sublook::estimate_weighting(&img).unwrap();
    // Compare shapes: both unit-mean by construction/normalization.
    let env_mean: f64 = envelope.iter().sum::<f64>() / rows as f64;
    let rms = (0..rows)
        .map(|b| {
            let want = envelope[b] / env_mean;
            (est[b] - want).powi(2)
        })
        .sum::<f64>()
        / rows as f64;
    let rms = rms.sqrt();
    assert!(rms < 0.10, "weighting recovery RMS error {rms:.4}");
}

#[test]
fn compensation_restores_equal_band_power_under_a_skewed_envelope() {
    let rows = 256;
    let scene = iso_scene(rows, 64, Herm64::identity(), 0x5eed_1003);
    let mut img = simulate(&scene).unwrap();
    // One full sine period across the spectrum: suppresses the band of
    // negative frequencies below −1/6, boosts the band above +1/6.
    let envelope: Vec<f64> = (0..rows)
        .map(|b| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * b as f64 / rows as f64).sin())
        .collect();
    impose_envelope(&mut img, &envelope);

    let band_shares = |img: &SlcImage<f64>, compensate: bool| -> Vec<f64> {
        let config = SublookConfig {
            n_sub: 3,
            overlap: 0.0,
            taper: Taper::Rectangular,
            compensate,
        };
        let stack = extract_sublooks(img, &config).unwrap();
        let energies: Vec<f64> = stack
            .sublooks
            .iter()
            .map(|s| {
                Channel::ALL
                    .iter()
                    .map(|&ch| s.plane(ch).iter().map(|v| v.norm_sqr()).sum::<f64>())
                    .sum::<f64>()
            })
            .collect();
        let total: f64 = energies.iter().sum();
        energies.iter().map(|e| e / total).collect()
    };

    let raw = band_shares(&img, false);
    assert!(raw[0] < 0.2, "suppressed band share {:.3}", raw[0]);
    assert!(raw[2] > 0.45, "boosted band share {:.3}", raw[2]);

    let fixed = band_shares(&img, true);
    for share in &fixed {
        assert!(
            (share - 1.0 / 3.0).abs() < 0.05,
            "compensated band share {share:.3} not a third"
        );
    }
}
