//! The batch pipeline: input → sublooks → coherency → metrics →
//! stationarity → flags → correction → exports, with a closing manifest.
//!
//! Every subcommand except the extraction ones runs a prefix of this one
//! chain, selected by [`Stage`]: `simulate` stops after writing the scene,
//! `metrics` after the rasters, `report` runs everything. Later stages
//! recompute what they need in memory — coherency fields have no file
//! format, so "re-running a stage" always means re-deriving from the
//! documented inputs (PSLC images plus the config), which is also what
//! makes stage outputs independent of how the run was split up.
//!
//! Every output of a run lands in one directory. `manifest.json` is written
//! last and doubles as the completion marker: a directory without it is an
//! aborted run and must not be trusted. With a fixed scene seed the whole
//! directory is bit-reproducible — nothing in the outputs depends on time,
//! environment or thread scheduling.
//!
//! The stationarity map always evaluates the per-look statistic (look
//! count 1): that is the scale the −1 threshold and the PGM banding are
//! calibrated for, and the manifest records it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anisar_core::coherency::{boxcar_coherency, CoherencyField};
use anisar_core::correction::correct_field;
use anisar_core::export::{
    write_flags_pgm, write_loglambda_pgm, write_mask_pgm, write_metric_csv, write_metric_pgm,
};
use anisar_core::metrics::{
    entropy, m_fp, one_minus_m_fp, p_v, rvi, span, span_ratio, MetricId, MetricRaster, Source,
};
use anisar_core::pslc::{load_slc, load_slope, save_metric, save_slc};
use anisar_core::sim::{scene_truth, simulate, SceneSpec};
use anisar_core::slc::SlcImage;
use anisar_core::stationarity::{
    classify, flag_anisotropy, ml_ratio, StationarityResult, DEFAULT_LOG_LAMBDA_THRESHOLD,
};
use anisar_core::sublook::{extract_sublooks, StackManifest};
use anisar_core::{CoreError, Result};
use serde::Serialize;

use crate::config::{ExportFormat, PipelineConfig};

/// How far along the chain a run goes. Stages form a prefix order: each
/// one includes everything before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Simulate the scene and stop (requires a scene description).
    Simulate,
    /// ... + azimuth sublook extraction.
    Sublook,
    /// ... + coherency estimation and metric rasters.
    Metrics,
    /// ... + the likelihood-ratio stationarity map.
    Stationarity,
    /// ... + anisotropy flags.
    Flag,
    /// ... + span-weighted volume-power correction.
    Correct,
    /// Everything, plus the optional slope mask.
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Simulate => "simulate",
            Stage::Sublook => "sublook",
            Stage::Metrics => "metrics",
            Stage::Stationarity => "stationarity",
            Stage::Flag => "flag",
            Stage::Correct => "correct",
            Stage::Report => "report",
        })
    }
}

/// What a finished run reports back. Fields owned by stages the run never
/// reached are `None`.
#[derive(Debug)]
pub struct RunSummary {
    pub stage: Stage,
    pub out_dir: PathBuf,
    pub manifest_path: PathBuf,
    /// Relative names of every file written before the manifest, in write
    /// order.
    pub files: Vec<String>,
    pub stationary_fraction: Option<f64>,
    /// Pixels at flag level none/weak/moderate/strong.
    pub flag_counts: Option<[usize; 4]>,
}

#[derive(Serialize)]
struct ManifestTool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct ManifestInput {
    source: String,
    rows: usize,
    cols: usize,
    label: String,
}

#[derive(Serialize)]
struct ManifestRng {
    algorithm: String,
    seed: u64,
}

#[derive(Serialize)]
struct ManifestStatistic {
    form: &'static str,
    n_looks: u32,
    threshold: f64,
}

#[derive(Default, Serialize)]
struct ManifestStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    stationary_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flag_counts: Option<[usize; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flags_gated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight_sum_violations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_weight_deviation: Option<f64>,
    /// NaN-sentinel pixel count per raster (only rasters that have any).
    degenerate: BTreeMap<String, usize>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: ManifestTool,
    stage: Stage,
    config: &'a PipelineConfig,
    input: ManifestInput,
    #[serde(skip_serializing_if = "Option::is_none")]
    rng: Option<ManifestRng>,
    #[serde(skip_serializing_if = "Option::is_none")]
    statistic: Option<ManifestStatistic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sublooks: Option<StackManifest>,
    stats: ManifestStats,
    outputs: &'a [String],
}

/// Writes one metric raster in every requested format and records its
/// degenerate-pixel count.
pub(crate) struct Emitter<'a> {
    dir: &'a Path,
    formats: &'a [ExportFormat],
    pub(crate) files: Vec<String>,
    degenerate: BTreeMap<String, usize>,
}

impl<'a> Emitter<'a> {
    pub(crate) fn new(dir: &'a Path, formats: &'a [ExportFormat]) -> Self {
        Self {
            dir,
            formats,
            files: Vec::new(),
            degenerate: BTreeMap::new(),
        }
    }

    fn push(&mut self, name: String) {
        self.files.push(name);
    }

    pub(crate) fn metric(&mut self, stem: &str, raster: &MetricRaster<f64>) -> Result<()> {
        self.metric_formats(stem, raster, &[ExportFormat::Raw, ExportFormat::Pgm, ExportFormat::Csv])
    }

    /// Like [`Self::metric`], but only for the intersection of the
    /// requested formats with `allowed` (flags get their PGM from the
    /// palette writer instead of the affine one, for example).
    fn metric_formats(
        &mut self,
        stem: &str,
        raster: &MetricRaster<f64>,
        allowed: &[ExportFormat],
    ) -> Result<()> {
        if raster.degenerate > 0 {
            self.degenerate.insert(stem.to_string(), raster.degenerate);
        }
        for f in self.formats.iter().filter(|f| allowed.contains(f)) {
            match f {
                ExportFormat::Raw => {
                    save_metric(&self.dir.join(format!("{stem}.pmtr")), raster)?;
                    self.push(format!("{stem}.pmtr"));
                }
                ExportFormat::Pgm => {
                    let name = format!("{stem}.pgm");
                    if raster.metric == MetricId::LogLambda {
                        write_loglambda_pgm(&self.dir.join(&name), raster)?;
                    } else {
                        write_metric_pgm(&self.dir.join(&name), raster)?;
                    }
                    self.push(name.clone());
                    self.push(format!("{name}.json"));
                }
                ExportFormat::Csv => {
                    write_metric_csv(&self.dir.join(format!("{stem}.csv")), raster)?;
                    self.push(format!("{stem}.csv"));
                }
            }
        }
        Ok(())
    }
}

fn flags_to_raster(flags: &anisar_core::stationarity::AnisotropyFlags) -> MetricRaster<f64> {
    let values: Vec<f64> = flags.levels().iter().map(|&l| l as usize as f64).collect();
    MetricRaster::from_values(
        flags.rows(),
        flags.cols(),
        values,
        MetricId::Flag,
        Source::Full,
        flags.degenerate,
    )
    .expect("flag raster dims are consistent by construction")
}

/// Bundles everything the closing manifest needs; built up as the run
/// advances and written exactly once, whatever stage the run stops at.
struct RunState<'a> {
    cfg: &'a PipelineConfig,
    stage: Stage,
    em: Emitter<'a>,
    input: ManifestInput,
    rng: Option<ManifestRng>,
    sublooks: Option<StackManifest>,
    statistic: Option<ManifestStatistic>,
    stats: ManifestStats,
}

impl RunState<'_> {
    /// Writes `manifest.json` (always the run's final file) and returns
    /// the summary.
    fn finish(mut self) -> Result<RunSummary> {
        std::mem::swap(&mut self.stats.degenerate, &mut self.em.degenerate);
        let stationary_fraction = self.stats.stationary_fraction;
        let flag_counts = self.stats.flag_counts;
        let manifest = Manifest {
            tool: ManifestTool {
                name: "anisar",
                version: env!("CARGO_PKG_VERSION"),
            },
            stage: self.stage,
            config: self.cfg,
            input: self.input,
            rng: self.rng,
            statistic: self.statistic,
            sublooks: self.sublooks,
            stats: self.stats,
            outputs: &self.em.files,
        };
        let manifest_path = self.cfg.out_dir.join("manifest.json");
        fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(RunSummary {
            stage: self.stage,
            out_dir: self.cfg.out_dir.clone(),
            manifest_path,
            files: self.em.files,
            stationary_fraction,
            flag_counts,
        })
    }
}

/// Runs the full chain described by `cfg` (equivalent to
/// [`run_to`] with [`Stage::Report`]).
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    run_to(cfg, Stage::Report)
}

/// Runs the chain up to and including `stage`.
pub fn run_to(cfg: &PipelineConfig, stage: Stage) -> Result<RunSummary> {
    cfg.validate()?;
    if stage == Stage::Simulate && cfg.scene.is_none() {
        return Err(CoreError::Argument(
            "simulate needs a scene description (--scene or the config's `scene`)".into(),
        ));
    }
    fs::create_dir_all(&cfg.out_dir)?;
    let mut em = Emitter::new(&cfg.out_dir, &cfg.formats);

    // Input: load an image or simulate a scene.
    let (img, input_source, rng): (SlcImage<f64>, String, Option<ManifestRng>) =
        if let Some(scene_path) = &cfg.scene {
            let text = fs::read_to_string(scene_path)?;
            let mut spec = SceneSpec::<f64>::from_json(&text)?;
            if let Some(seed) = cfg.seed {
                spec.rng_seed = seed;
            }
            let img = simulate(&spec)?;
            save_slc(&cfg.out_dir.join("scene.pslc"), &img)?;
            em.push("scene.pslc".into());
            let truth = scene_truth(&spec);
            fs::write(
                cfg.out_dir.join("truth.json"),
                serde_json::to_vec_pretty(&truth)?,
            )?;
            em.push("truth.json".into());
            let rng = ManifestRng {
                algorithm: truth.rng,
                seed: spec.rng_seed,
            };
            (img, format!("scene {}", scene_path.display()), Some(rng))
        } else {
            let path = cfg.input.as_ref().expect("validated");
            (
                load_slc(path)?,
                format!("image {}", path.display()),
                None,
            )
        };

    let mut state = RunState {
        cfg,
        stage,
        em,
        input: ManifestInput {
            source: input_source,
            rows: img.rows(),
            cols: img.cols(),
            label: img.meta().label.clone(),
        },
        rng,
        sublooks: None,
        statistic: None,
        stats: ManifestStats::default(),
    };
    if stage == Stage::Simulate {
        return state.finish();
    }

    // Sublooks.
    let stack = extract_sublooks(&img, &cfg.sublook_config()?)?;
    let mut sub_files = Vec::new();
    for (i, s) in stack.sublooks.iter().enumerate() {
        let name = format!("sublook_{}.pslc", i + 1);
        save_slc(&cfg.out_dir.join(&name), s)?;
        state.em.push(name.clone());
        sub_files.push(name);
    }
    let stack_manifest = stack.manifest(sub_files);
    fs::write(
        cfg.out_dir.join("stack.json"),
        serde_json::to_vec_pretty(&stack_manifest)?,
    )?;
    state.em.push("stack.json".into());
    state.sublooks = Some(stack_manifest);
    if stage == Stage::Sublook {
        return state.finish();
    }

    // Coherency estimation.
    let full = boxcar_coherency(&img, cfg.boxcar)?;
    let sub_fields: Vec<CoherencyField<f64>> = stack
        .sublooks
        .iter()
        .map(|s| boxcar_coherency(s, cfg.boxcar))
        .collect::<Result<_>>()?;

    // Full-aperture metrics.
    let span_full = span(&full, Source::Full);
    let p_v_full = p_v(&full, Source::Full);
    state.em.metric("full_m_fp", &m_fp(&full, Source::Full))?;
    state.em.metric("full_one_minus_m_fp", &one_minus_m_fp(&full, Source::Full))?;
    state.em.metric("full_span", &span_full)?;
    state.em.metric("full_p_v", &p_v_full)?;
    state.em.metric("full_entropy", &entropy(&full, Source::Full)?)?;
    state.em.metric("full_rvi", &rvi(&full, Source::Full))?;

    // Per-sublook depolarisation and power shares.
    let mut d_subs = Vec::new();
    let mut ratios = Vec::new();
    for (i, f) in sub_fields.iter().enumerate() {
        let src = Source::Sublook(i);
        let d = one_minus_m_fp(f, src);
        let w = span_ratio(f, &full, src)?;
        state.em.metric(&format!("sublook_{}_one_minus_m_fp", i + 1), &d)?;
        state.em.metric(&format!("sublook_{}_span", i + 1), &span(f, src))?;
        state.em.metric(&format!("sublook_{}_span_ratio", i + 1), &w)?;
        d_subs.push(d);
        ratios.push(w);
    }
    if stage == Stage::Metrics {
        return state.finish();
    }

    // Stationarity (per-look scale; see module docs).
    let field_refs: Vec<&CoherencyField<f64>> = sub_fields.iter().collect();
    let mut stat = ml_ratio(&field_refs, 1)?;
    if cfg.log_lambda_threshold != DEFAULT_LOG_LAMBDA_THRESHOLD {
        stat = StationarityResult {
            stationary: classify(&stat.log_lambda, cfg.log_lambda_threshold)?,
            threshold: cfg.log_lambda_threshold,
            log_lambda: stat.log_lambda,
        };
    }
    state.em.metric("log_lambda", &stat.log_lambda)?;
    if cfg.wants(ExportFormat::Pgm) {
        write_mask_pgm(&cfg.out_dir.join("stationary.pgm"), &stat.stationary)?;
        state.em.push("stationary.pgm".into());
        state.em.push("stationary.pgm.json".into());
    }
    state.statistic = Some(ManifestStatistic {
        form: "log10 of the per-look likelihood ratio",
        n_looks: 1,
        threshold: stat.threshold,
    });
    state.stats.stationary_fraction =
        Some(stat.stationary.count() as f64 / (full.rows() * full.cols()) as f64);
    if stage == Stage::Stationarity {
        return state.finish();
    }

    // Anisotropy flags: raw/csv through the generic writers, PGM through
    // the fixed level palette.
    let d_refs: Vec<&MetricRaster<f64>> = d_subs.iter().collect();
    let flags = flag_anisotropy(&d_refs, &stat, cfg.thresholds()?, cfg.gate_flags)?;
    state.em.metric_formats(
        "flags",
        &flags_to_raster(&flags),
        &[ExportFormat::Raw, ExportFormat::Csv],
    )?;
    if cfg.wants(ExportFormat::Pgm) {
        write_flags_pgm(&cfg.out_dir.join("flags.pgm"), &flags)?;
        state.em.push("flags.pgm".into());
        state.em.push("flags.pgm.json".into());
    }
    state.stats.flag_counts = Some(flags.counts());
    state.stats.flags_gated = Some(cfg.gate_flags);
    if stage == Stage::Flag {
        return state.finish();
    }

    // Span-weighted correction of the volume power.
    let ratio_refs: Vec<&MetricRaster<f64>> = ratios.iter().collect();
    let corr = correct_field(&ratio_refs, &d_refs, &span_full, &p_v_full, None)?;
    state.em.metric("d_prime", &corr.d_prime)?;
    state.em.metric("p_v_prime", &corr.p_v_prime)?;
    state.em.metric("delta_p_v", &corr.delta_p_v)?;
    state.em.metric("m_fp_prime", &corr.m_fp_prime)?;
    state.stats.weight_sum_violations = Some(corr.weight_sum_violations);
    state.stats.max_weight_deviation = Some(corr.max_weight_deviation);
    if stage == Stage::Correct {
        return state.finish();
    }

    // Terrain mask, when a slope raster is supplied.
    if let Some(slope_path) = &cfg.slope {
        let slope = load_slope::<f64>(slope_path)?;
        if slope.rows() != img.rows() || slope.cols() != img.cols() {
            return Err(CoreError::Argument(format!(
                "slope raster is {}x{}, image is {}x{}",
                slope.rows(),
                slope.cols(),
                img.rows(),
                img.cols()
            )));
        }
        let mask = slope.select_range(cfg.slope_min, cfg.slope_max)?;
        write_mask_pgm(&cfg.out_dir.join("slope_mask.pgm"), &mask)?;
        state.em.push("slope_mask.pgm".into());
        state.em.push("slope_mask.pgm.json".into());
    }

    // Manifest last: its presence marks the run complete.
    state.finish()
}
