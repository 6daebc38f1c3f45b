//! Synthetic polarimetric scene generator.
//!
//! Every statistical claim in this crate is checked against scenes whose
//! true answers are known in closed form, and this module builds those
//! scenes. A scene is a set of disjoint column strips (azimuth-invariant,
//! matching the physics of azimuth anisotropy: the scatterer population
//! varies across range, not along a single azimuth line), each with:
//!
//! - a prescribed Pauli-basis covariance Σ (Hermitian PSD), and
//! - a normalized Doppler support: the sub-interval(s) of [−0.5, 0.5) the
//!   scatterers actually respond over.
//!
//! Sampling draws k = F·z per pixel, where F·Fᴴ = Σ (clamped LDLᴴ square
//! root) and z is circular complex white noise, giving exactly
//! ⟨k·kᴴ⟩ = Σ. Band-limiting then projects each column onto the support
//! bins and rescales by √(n/kept), which preserves the expected total power
//! under the discrete spectral measure — the per-strip span bookkeeping the
//! verification scenes rely on is exact, not approximate.
//!
//! Determinism contract: every column owns an independent RNG stream,
//! `ChaCha8` keyed by `splitmix64(seed ⊕ col·0x9E3779B97F4A7C15)`, and each
//! pixel consumes exactly six standard normals in the fixed order
//! re₀, im₀, re₁, im₁, re₂, im₂ (each scaled by 1/√2). Re-running a scene
//! reproduces it bit for bit, on any thread count, and editing one region's
//! covariance leaves every other region's samples untouched.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::freq::{bin_frequency, FreqBand};
use crate::herm3::Herm3;
use crate::real::{cast, Real};
use crate::slc::{AcqMeta, Channel, ScatteringVector, SlcImage};

/// Human-readable name of the sampling stream, written into provenance
/// sidecars so a scene file alone identifies the exact generator.
pub const RNG_ALGORITHM: &str =
    "chacha8(splitmix64(seed xor col*0x9E3779B97F4A7C15))";

/// Pivot slack for factoring region covariances: LDLᴴ pivots in
/// [−tol, 0] are treated as exact rank deficiency, anything lower is
/// indefinite. Relative to the trace so the judgment is scale-free.
fn factor_pivot_tol<T: Real>(sigma: &Herm3<T>) -> T {
    cast::<T>(1e-12) * sigma.trace().max(T::zero())
}

/// One azimuth-invariant column strip of a scene.
#[derive(Clone, Debug)]
pub struct RegionSpec<T: Real> {
    /// First column (inclusive).
    pub col_start: usize,
    /// One past the last column (exclusive).
    pub col_end: usize,
    /// Pauli-basis covariance of the scatterer population.
    pub sigma: Herm3<T>,
    /// Normalized Doppler support: sorted, non-overlapping intervals.
    pub doppler_support: Vec<FreqBand>,
}

impl<T: Real> RegionSpec<T> {
    /// Total support measure (fraction of the spectrum occupied).
    pub fn support_measure(&self) -> f64 {
        self.doppler_support.iter().map(|b| b.measure()).sum()
    }
}

/// Deterministic point scatterer added coherently on top of the clutter.
#[derive(Clone, Debug)]
pub struct PointTarget<T: Real> {
    pub row: usize,
    pub col: usize,
    /// Pauli-basis amplitude.
    pub amplitude: [Complex<T>; 3],
}

/// Complete synthetic scene description.
#[derive(Clone, Debug)]
pub struct SceneSpec<T: Real> {
    pub rows: usize,
    pub cols: usize,
    pub meta: AcqMeta,
    /// Strips must be disjoint and cover every column.
    pub regions: Vec<RegionSpec<T>>,
    pub point_targets: Vec<PointTarget<T>>,
    pub rng_seed: u64,
}

impl<T: Real> SceneSpec<T> {
    /// Checks the structural invariants: strip coverage, PSD covariances,
    /// valid supports, in-bounds point targets.
    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 1 {
            return Err(CoreError::Validation(format!(
                "scene must be at least 2x1, got {}x{}",
                self.rows, self.cols
            )));
        }
        let mut order: Vec<usize> = (0..self.regions.len()).collect();
        order.sort_by_key(|&i| self.regions[i].col_start);
        let mut expected_start = 0usize;
        for &i in &order {
            let r = &self.regions[i];
            if r.col_start != expected_start {
                return Err(CoreError::Validation(format!(
                    "regions must tile all columns: expected a region starting \
                     at column {expected_start}, found [{}, {})",
                    r.col_start, r.col_end
                )));
            }
            if r.col_end <= r.col_start || r.col_end > self.cols {
                return Err(CoreError::Validation(format!(
                    "region [{}, {}) is empty or exceeds {} columns",
                    r.col_start, r.col_end, self.cols
                )));
            }
            expected_start = r.col_end;
            self.validate_region(r)?;
        }
        if expected_start != self.cols {
            return Err(CoreError::Validation(format!(
                "regions cover columns [0, {expected_start}) but the scene has {} columns",
                self.cols
            )));
        }
        for t in &self.point_targets {
            if t.row >= self.rows || t.col >= self.cols {
                return Err(CoreError::Validation(format!(
                    "point target at ({}, {}) outside {}x{} scene",
                    t.row, t.col, self.rows, self.cols
                )));
            }
            for a in &t.amplitude {
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(CoreError::Validation(
                        "point-target amplitude must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_region(&self, r: &RegionSpec<T>) -> Result<()> {
        let tr = r.sigma.trace();
        let diag = r.sigma.diag();
        let off = r.sigma.off();
        let finite = diag.iter().all(|d| d.is_finite())
            && off.iter().all(|o| o.re.is_finite() && o.im.is_finite());
        if !finite {
            return Err(CoreError::Validation(format!(
                "covariance of region [{}, {}) has non-finite entries",
                r.col_start, r.col_end
            )));
        }
        if tr > T::zero() {
            // Probe with the same factorization the simulator will run, so
            // validation and simulation can never disagree about a matrix.
            if let Err(e) = r.sigma.lower_factor(factor_pivot_tol(&r.sigma)) {
                return Err(CoreError::Validation(format!(
                    "covariance of region [{}, {}) is not positive \
                     semidefinite ({e})",
                    r.col_start, r.col_end
                )));
            }
        } else if tr < T::zero() {
            return Err(CoreError::Validation(format!(
                "covariance of region [{}, {}) has negative trace",
                r.col_start, r.col_end
            )));
        }
        if r.doppler_support.is_empty() {
            return Err(CoreError::Validation(format!(
                "region [{}, {}) has empty Doppler support",
                r.col_start, r.col_end
            )));
        }
        for (i, band) in r.doppler_support.iter().enumerate() {
            // Re-validate bounds (specs may arrive from JSON).
            FreqBand::new(band.lo, band.hi)?;
            if i > 0 && band.lo < r.doppler_support[i - 1].hi {
                return Err(CoreError::Validation(format!(
                    "Doppler support of region [{}, {}) must be sorted and \
                     non-overlapping",
                    r.col_start, r.col_end
                )));
            }
        }
        Ok(())
    }
}

/// splitmix64 finalizer: decorrelates consecutive column indices into
/// statistically independent ChaCha keys.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed of the per-column sampling stream.
pub fn column_stream_seed(scene_seed: u64, col: usize) -> u64 {
    splitmix64(scene_seed ^ (col as u64).wrapping_mul(0x9E3779B97F4A7C15))
}

/// Generates the scene.
///
/// Columns are sampled independently (see the module docs for the exact
/// stream contract), band-limited onto their region's Doppler support, and
/// point targets are added last as coherent spatial deltas.
pub fn simulate<T: Real>(spec: &SceneSpec<T>) -> Result<SlcImage<T>> {
    spec.validate()?;
    let rows = spec.rows;
    let cols = spec.cols;

    // Per-region precomputation: sampling factor and support bins.
    let mut factors = Vec::with_capacity(spec.regions.len());
    let mut keeps: Vec<Option<(Vec<bool>, usize)>> = Vec::with_capacity(spec.regions.len());
    for r in &spec.regions {
        factors.push(r.sigma.lower_factor(factor_pivot_tol(&r.sigma))?);
        let keep: Vec<bool> = (0..rows)
            .map(|b| {
                let f = bin_frequency(b, rows);
                r.doppler_support.iter().any(|band| band.contains(f))
            })
            .collect();
        let kept = keep.iter().filter(|&&k| k).count();
        if kept == 0 && r.sigma.trace() > T::zero() {
            return Err(CoreError::Validation(format!(
                "Doppler support of region [{}, {}) contains no FFT bin at \
                 {rows} azimuth samples",
                r.col_start, r.col_end
            )));
        }
        // Full support: band-limiting is the identity, skip the FFT pair so
        // samples stay exactly the drawn Gaussians.
        keeps.push(if kept == rows { None } else { Some((keep, kept)) });
    }
    let mut col_region = vec![0usize; cols];
    for (i, r) in spec.regions.iter().enumerate() {
        for c in r.col_start..r.col_end {
            col_region[c] = i;
        }
    }

    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(rows);
    let inv = planner.plan_fft_inverse(rows);
    let inv_sqrt2 = cast::<T>(std::f64::consts::FRAC_1_SQRT_2);

    let columns: Vec<[Vec<Complex<T>>; 3]> = (0..cols)
        .into_par_iter()
        .map(|col| {
            let region_idx = col_region[col];
            let f = &factors[region_idx];
            let mut rng =
                ChaCha8Rng::seed_from_u64(column_stream_seed(spec.rng_seed, col));
            let mut hh = Vec::with_capacity(rows);
            let mut hv = Vec::with_capacity(rows);
            let mut vv = Vec::with_capacity(rows);
            for _ in 0..rows {
                let mut z = [Complex::new(T::zero(), T::zero()); 3];
                for zi in z.iter_mut() {
                    let re = T::standard_normal(&mut rng) * inv_sqrt2;
                    let im = T::standard_normal(&mut rng) * inv_sqrt2;
                    *zi = Complex::new(re, im);
                }
                let k = [
                    f[0][0] * z[0],
                    f[1][0] * z[0] + f[1][1] * z[1],
                    f[2][0] * z[0] + f[2][1] * z[1] + f[2][2] * z[2],
                ];
                let (s_hh, s_hv, s_vv) = ScatteringVector { k }.to_channels();
                hh.push(s_hh);
                hv.push(s_hv);
                vv.push(s_vv);
            }
            if let Some((keep, kept)) = &keeps[region_idx] {
                for chan in [&mut hh, &mut hv, &mut vv] {
                    band_limit(chan, keep, *kept, fwd.as_ref(), inv.as_ref());
                }
            }
            [hh, hv, vv]
        })
        .collect();

    let mut img = SlcImage::zeros(rows, cols, spec.meta.clone())?;
    for ch in Channel::ALL {
        let plane = img.plane_mut(ch);
        for (col, bufs) in columns.iter().enumerate() {
            for (row, &v) in bufs[ch as usize].iter().enumerate() {
                plane[row * cols + col] = v;
            }
        }
    }

    for t in &spec.point_targets {
        let (hh, hv, vv) = ScatteringVector { k: t.amplitude }.to_channels();
        let i = img.index(t.row, t.col);
        img.plane_mut(Channel::Hh)[i] += hh;
        img.plane_mut(Channel::Hv)[i] += hv;
        img.plane_mut(Channel::Vv)[i] += vv;
    }
    Ok(img)
}

/// Projects one column onto the kept bins, rescaling by √(n/kept) so the
/// expected power is preserved under the discrete spectral measure.
fn band_limit<T: Real>(
    column: &mut [Complex<T>],
    keep: &[bool],
    kept: usize,
    fwd: &dyn rustfft::Fft<T>,
    inv: &dyn rustfft::Fft<T>,
) {
    let n = column.len();
    fwd.process(column);
    // Unitary forward (1/√n), amplitude compensation √(n/kept), unitary
    // inverse (1/√n) fold into one factor on the kept bins.
    let gain = cast::<T>(1.0 / ((n as f64) * (kept as f64)).sqrt());
    let zero = Complex::new(T::zero(), T::zero());
    for (v, &k) in column.iter_mut().zip(keep.iter()) {
        *v = if k { v.scale(gain) } else { zero };
    }
    inv.process(column);
}

/// Degree of polarisation of a covariance in closed form:
/// m = √(1 − 27·det(Σ)/tr³(Σ)).
///
/// This is the analytic value the estimation chain converges to on a scene
/// drawn from Σ. The radicand is clamped into [0, 1] when within 1e-12 of
/// the bounds; farther out means Σ was not PSD and is an error, as is a
/// non-positive trace.
pub fn analytic_mfp<T: Real>(sigma: &Herm3<T>) -> Result<T> {
    let tr = sigma.trace();
    if !(tr > T::zero()) {
        return Err(CoreError::Argument(
            "degree of polarisation needs a positive trace".into(),
        ));
    }
    let r = T::one() - cast::<T>(27.0) * sigma.det() / (tr * tr * tr);
    let tol = cast::<T>(1e-12);
    if r < -tol || r > T::one() + tol {
        return Err(CoreError::Degenerate(format!(
            "radicand {r} outside [0, 1]: covariance is not PSD"
        )));
    }
    Ok(r.max(T::zero()).min(T::one()).sqrt())
}

// ---------------------------------------------------------------------------
// JSON scene files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SceneFile {
    rows: usize,
    cols: usize,
    meta: AcqMeta,
    rng_seed: u64,
    regions: Vec<RegionFile>,
    #[serde(default)]
    point_targets: Vec<TargetFile>,
}

#[derive(Serialize, Deserialize)]
struct RegionFile {
    col_start: usize,
    col_end: usize,
    /// Full 3×3 matrix of [re, im] pairs, row-major.
    sigma: [[[f64; 2]; 3]; 3],
    /// Intervals as [lo, hi) pairs of normalized frequency.
    doppler_support: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct TargetFile {
    row: usize,
    col: usize,
    /// Pauli amplitude as [re, im] pairs.
    amplitude: [[f64; 2]; 3],
}

fn herm_from_full<T: Real>(m: &[[[f64; 2]; 3]; 3]) -> Result<Herm3<T>> {
    let scale = m
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    let tol = 1e-9 * scale.max(1.0);
    for i in 0..3 {
        if m[i][i][1].abs() > tol {
            return Err(CoreError::Validation(format!(
                "sigma diagonal entry ({i}, {i}) has imaginary part {}",
                m[i][i][1]
            )));
        }
        for j in (i + 1)..3 {
            let herm_ok = (m[i][j][0] - m[j][i][0]).abs() <= tol
                && (m[i][j][1] + m[j][i][1]).abs() <= tol;
            if !herm_ok {
                return Err(CoreError::Validation(format!(
                    "sigma entries ({i}, {j}) and ({j}, {i}) are not conjugate"
                )));
            }
        }
    }
    Ok(Herm3::new(
        [
            cast::<T>(m[0][0][0]),
            cast::<T>(m[1][1][0]),
            cast::<T>(m[2][2][0]),
        ],
        [
            Complex::new(cast::<T>(m[0][1][0]), cast::<T>(m[0][1][1])),
            Complex::new(cast::<T>(m[0][2][0]), cast::<T>(m[0][2][1])),
            Complex::new(cast::<T>(m[1][2][0]), cast::<T>(m[1][2][1])),
        ],
    ))
}

fn herm_to_full<T: Real>(h: &Herm3<T>) -> [[[f64; 2]; 3]; 3] {
    let mut out = [[[0.0f64; 2]; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let v = h.get(i, j);
            *cell = [v.re.to_f64().unwrap(), v.im.to_f64().unwrap()];
        }
    }
    out
}

impl<T: Real> SceneSpec<T> {
    /// Parses and validates a JSON scene description.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        let regions = file
            .regions
            .iter()
            .map(|r| {
                Ok(RegionSpec {
                    col_start: r.col_start,
                    col_end: r.col_end,
                    sigma: herm_from_full(&r.sigma)?,
                    doppler_support: r
                        .doppler_support
                        .iter()
                        .map(|&[lo, hi]| FreqBand::new(lo, hi))
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let point_targets = file
            .point_targets
            .iter()
            .map(|t| PointTarget {
                row: t.row,
                col: t.col,
                amplitude: [
                    Complex::new(cast::<T>(t.amplitude[0][0]), cast::<T>(t.amplitude[0][1])),
                    Complex::new(cast::<T>(t.amplitude[1][0]), cast::<T>(t.amplitude[1][1])),
                    Complex::new(cast::<T>(t.amplitude[2][0]), cast::<T>(t.amplitude[2][1])),
                ],
            })
            .collect();
        let spec = SceneSpec {
            rows: file.rows,
            cols: file.cols,
            meta: file.meta,
            regions,
            point_targets,
            rng_seed: file.rng_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Serializes the scene to pretty JSON.
    pub fn to_json(&self) -> Result<String> {
        let file = SceneFile {
            rows: self.rows,
            cols: self.cols,
            meta: self.meta.clone(),
            rng_seed: self.rng_seed,
            regions: self
                .regions
                .iter()
                .map(|r| RegionFile {
                    col_start: r.col_start,
                    col_end: r.col_end,
                    sigma: herm_to_full(&r.sigma),
                    doppler_support: r
                        .doppler_support
                        .iter()
                        .map(|b| [b.lo, b.hi])
                        .collect(),
                })
                .collect(),
            point_targets: self
                .point_targets
                .iter()
                .map(|t| TargetFile {
                    row: t.row,
                    col: t.col,
                    amplitude: [
                        [
                            t.amplitude[0].re.to_f64().unwrap(),
                            t.amplitude[0].im.to_f64().unwrap(),
                        ],
                        [
                            t.amplitude[1].re.to_f64().unwrap(),
                            t.amplitude[1].im.to_f64().unwrap(),
                        ],
                        [
                            t.amplitude[2].re.to_f64().unwrap(),
                            t.amplitude[2].im.to_f64().unwrap(),
                        ],
                    ],
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

// ---------------------------------------------------------------------------
// ground truth sidecar
// ---------------------------------------------------------------------------

/// Analytic per-region answers, written next to generated scenes so that
/// downstream estimates can always be compared against what the generator
/// actually encoded.
#[derive(Debug, Serialize, Deserialize)]
pub struct SceneTruth {
    pub rng: String,
    pub rng_seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub regions: Vec<RegionTruth>,
}

/// Truth for one strip; the degree of polarisation is absent for zero-power
/// strips where it is undefined.
#[derive(Debug, Serialize, Deserialize)]
pub struct RegionTruth {
    pub col_start: usize,
    pub col_end: usize,
    pub trace: f64,
    pub support_measure: f64,
    pub m_fp: Option<f64>,
    pub one_minus_m_fp: Option<f64>,
}

/// Computes the analytic sidecar for a scene.
pub fn scene_truth<T: Real>(spec: &SceneSpec<T>) -> SceneTruth {
    SceneTruth {
        rng: RNG_ALGORITHM.into(),
        rng_seed: spec.rng_seed,
        rows: spec.rows,
        cols: spec.cols,
        regions: spec
            .regions
            .iter()
            .map(|r| {
                let m = analytic_mfp(&r.sigma)
                    .ok()
                    .map(|v| v.to_f64().unwrap());
                RegionTruth {
                    col_start: r.col_start,
                    col_end: r.col_end,
                    trace: r.sigma.trace().to_f64().unwrap(),
                    support_measure: r.support_measure(),
                    m_fp: m,
                    one_minus_m_fp: m.map(|v| 1.0 - v),
                }
            })
            .collect(),
    }
}
