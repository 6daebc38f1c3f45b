//! `anisar` — batch azimuth-anisotropy analysis for polarimetric SLC
//! imagery.
//!
//! Stage subcommands (`simulate` … `correct`) run a prefix of the chain;
//! `report` is the composite. `transect`, `scatter` and `quadrant` read
//! back finished outputs. Exit codes: 0 ok, 2 configuration/argument
//! error, 3 input error, 4 numerical degeneracy.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use anisar_cli::config::{ExportFormat, Overrides, PipelineConfig};
use anisar_cli::exit_code;
use anisar_cli::pipeline::{run_to, RunSummary, Stage};
use anisar_cli::quadrant::run_quadrant;
use anisar_cli::scatter::scatter_csv;
use anisar_cli::transect::{parse_pixel, trace_segment, transect_csv, RunRasters};
use anisar_core::mask::RasterMask;
use anisar_core::metrics::MetricRaster;
use anisar_core::pslc::load_slope;
use anisar_core::stationarity::DEFAULT_LOG_LAMBDA_THRESHOLD;
use anisar_core::{CoreError, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "anisar",
    version,
    about = "Azimuth-anisotropy analysis for polarimetric SLC imagery",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a synthetic scene and write it as a PSLC image.
    Simulate(PipelineArgs),
    /// ... + split the input into azimuth sublooks.
    Sublook(PipelineArgs),
    /// ... + estimate coherency and write the metric rasters.
    Metrics(PipelineArgs),
    /// ... + run the likelihood-ratio stationarity test.
    Stationarity(PipelineArgs),
    /// ... + flag anisotropic pixels by depolarisation spread.
    Flag(PipelineArgs),
    /// ... + apply the span-weighted volume-power correction.
    Correct(PipelineArgs),
    /// Run every stage, including the optional slope mask (composite).
    Report(PipelineArgs),
    /// Extract a per-pixel metric table along a segment or pixel list.
    Transect(TransectArgs),
    /// Dump (span share, depolarisation) pairs for scatter analysis.
    Scatter(ScatterArgs),
    /// Average one azimuth-look quadrant's coherency and power share.
    Quadrant(QuadrantArgs),
}

/// Flags shared by all pipeline stages; every one overrides the matching
/// config-file field (flags win).
#[derive(Args)]
struct PipelineArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input image (PSLC). Exactly one of --input/--scene is required.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Scene description (JSON) to simulate as the input.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Terrain slope raster (PSLP) for the report's slope mask.
    #[arg(long)]
    slope: Option<PathBuf>,
    /// Number of sublooks.
    #[arg(long)]
    nsub: Option<usize>,
    /// Fractional band overlap in [0, 0.95).
    #[arg(long)]
    overlap: Option<f64>,
    /// Band taper: "rectangular" or "raised_cosine:<rolloff>".
    #[arg(long)]
    taper: Option<String>,
    /// Divide the estimated spectral weighting out before band cuts.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    compensate: Option<bool>,
    /// Boxcar window side (odd).
    #[arg(long)]
    boxcar: Option<usize>,
    /// Lower slope bound (degrees, inclusive) for the terrain mask.
    #[arg(long)]
    slope_min: Option<f64>,
    /// Upper slope bound (degrees, inclusive) for the terrain mask.
    #[arg(long)]
    slope_max: Option<f64>,
    /// Stationarity cut on the per-look log10 likelihood ratio.
    #[arg(long)]
    loglambda_threshold: Option<f64>,
    /// Weak,moderate,strong depolarisation-spread thresholds.
    #[arg(long, value_parser = parse_thresholds_arg)]
    dmfp_thresholds: Option<[f64; 3]>,
    /// Flag only pixels that pass the stationarity test.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    gate_flags: Option<bool>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scene seed override (simulated inputs only).
    #[arg(long)]
    seed: Option<u64>,
    /// Raster export format(s), repeatable or comma-separated.
    #[arg(long = "format", value_parser = parse_format_arg, value_delimiter = ',')]
    format: Vec<ExportFormat>,
}

impl PipelineArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        cfg.apply(&Overrides {
            input: self.input.clone(),
            scene: self.scene.clone(),
            slope: self.slope.clone(),
            out_dir: self.out.clone(),
            n_sub: self.nsub,
            overlap: self.overlap,
            taper: self.taper.clone(),
            compensate: self.compensate,
            boxcar: self.boxcar,
            slope_min: self.slope_min,
            slope_max: self.slope_max,
            log_lambda_threshold: self.loglambda_threshold,
            flag_thresholds: self.dmfp_thresholds,
            gate_flags: self.gate_flags,
            formats: if self.format.is_empty() {
                None
            } else {
                Some(self.format.clone())
            },
            seed: self.seed,
        });
        Ok(cfg)
    }
}

#[derive(Args)]
struct TransectArgs {
    /// Finished run directory (needs raw-format rasters).
    #[arg(long)]
    run: PathBuf,
    /// Segment start "row,col".
    #[arg(long, value_parser = parse_pixel_arg, conflicts_with = "pixels")]
    from: Option<(usize, usize)>,
    /// Segment end "row,col"; defaults to --from (single pixel).
    #[arg(long, value_parser = parse_pixel_arg, requires = "from")]
    to: Option<(usize, usize)>,
    /// Explicit pixel "row,col", repeatable; alternative to --from/--to.
    #[arg(long = "pixel", value_parser = parse_pixel_arg)]
    pixels: Vec<(usize, usize)>,
    /// Slope raster (PSLP) for the slope column.
    #[arg(long)]
    slope: Option<PathBuf>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScatterArgs {
    /// Finished run directory (needs raw-format rasters).
    #[arg(long)]
    run: PathBuf,
    /// Which pixels to include.
    #[arg(long = "where", value_enum, default_value_t = Selection::All)]
    selection: Selection,
    /// log10-ratio cut for the stationary/nonstationary selections.
    #[arg(long, default_value_t = DEFAULT_LOG_LAMBDA_THRESHOLD)]
    loglambda_threshold: f64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Selection {
    /// Every pixel.
    All,
    /// Pixels flagged anisotropic at any level.
    Flagged,
    /// Pixels whose log10 ratio is above the threshold.
    Stationary,
    /// Pixels whose log10 ratio is at or below the threshold.
    Nonstationary,
}

#[derive(Args)]
struct QuadrantArgs {
    /// Look images (PSLC) in angular order; count must be divisible by 4.
    #[arg(required = true)]
    looks: Vec<PathBuf>,
    /// Quadrant to average, 1..=4.
    #[arg(long)]
    group: usize,
    /// Boxcar window applied per look before averaging (odd; 1 = none).
    #[arg(long, default_value_t = 1)]
    boxcar: usize,
    /// Output directory.
    #[arg(long, default_value = "quadrant-out")]
    out: PathBuf,
    /// Raster export format(s), repeatable or comma-separated.
    #[arg(long = "format", value_parser = parse_format_arg, value_delimiter = ',')]
    format: Vec<ExportFormat>,
}

fn parse_format_arg(s: &str) -> std::result::Result<ExportFormat, String> {
    ExportFormat::from_str(s).map_err(|e| e.to_string())
}

fn parse_thresholds_arg(s: &str) -> std::result::Result<[f64; 3], String> {
    anisar_cli::config::parse_thresholds(s)
}

fn parse_pixel_arg(s: &str) -> std::result::Result<(usize, usize), String> {
    parse_pixel(s).map_err(|e| e.to_string())
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate(a) => run_stage(&a, Stage::Simulate),
        Cmd::Sublook(a) => run_stage(&a, Stage::Sublook),
        Cmd::Metrics(a) => run_stage(&a, Stage::Metrics),
        Cmd::Stationarity(a) => run_stage(&a, Stage::Stationarity),
        Cmd::Flag(a) => run_stage(&a, Stage::Flag),
        Cmd::Correct(a) => run_stage(&a, Stage::Correct),
        Cmd::Report(a) => run_stage(&a, Stage::Report),
        Cmd::Transect(a) => run_transect(&a),
        Cmd::Scatter(a) => run_scatter(&a),
        Cmd::Quadrant(a) => run_quadrant_cmd(&a),
    }
}

fn run_stage(args: &PipelineArgs, stage: Stage) -> Result<()> {
    let cfg = args.resolve()?;
    let summary = run_to(&cfg, stage)?;
    report_summary(&summary);
    Ok(())
}

fn report_summary(s: &RunSummary) {
    println!(
        "{}: wrote {} files + manifest to {}",
        s.stage,
        s.files.len(),
        s.out_dir.display()
    );
    if let Some(f) = s.stationary_fraction {
        println!("stationary fraction: {f:.4}");
    }
    if let Some([none, weak, moderate, strong]) = s.flag_counts {
        println!("flags: none {none}, weak {weak}, moderate {moderate}, strong {strong}");
    }
}

fn run_transect(args: &TransectArgs) -> Result<()> {
    let pixels: Vec<(usize, usize)> = if !args.pixels.is_empty() {
        args.pixels.clone()
    } else {
        let from = args.from.ok_or_else(|| {
            CoreError::Argument("transect needs --from row,col or --pixel entries".into())
        })?;
        let to = args.to.unwrap_or(from);
        trace_segment(from.0, from.1, to.0, to.1)
    };
    let run = RunRasters::load(&args.run)?;
    let slope = match &args.slope {
        Some(p) => Some(load_slope::<f64>(p)?),
        None => None,
    };
    let csv = transect_csv(&run, &pixels, slope.as_ref())?;
    emit_text(args.out.as_deref(), &csv)
}

fn run_scatter(args: &ScatterArgs) -> Result<()> {
    let run = RunRasters::load(&args.run)?;
    let mask = selection_mask(&run, args.selection, args.loglambda_threshold)?;
    let d_refs: Vec<&MetricRaster<f64>> = run.d_subs.iter().collect();
    let w_refs: Vec<&MetricRaster<f64>> = run.ratios.iter().collect();
    let csv = scatter_csv(&d_refs, &w_refs, mask.as_ref())?;
    emit_text(args.out.as_deref(), &csv)
}

fn selection_mask(
    run: &RunRasters,
    selection: Selection,
    threshold: f64,
) -> Result<Option<RasterMask>> {
    let (rows, cols) = (run.rows(), run.cols());
    let mask = match selection {
        Selection::All => return Ok(None),
        Selection::Flagged => RasterMask::from_bits(
            rows,
            cols,
            run.flags.values().iter().map(|&v| v > 0.0).collect(),
            "flagged anisotropic at any level".into(),
        )?,
        // NaN statistics (degenerate pixels) select under neither branch.
        Selection::Stationary => RasterMask::from_bits(
            rows,
            cols,
            run.log_lambda.values().iter().map(|&v| v > threshold).collect(),
            format!("log10 ratio > {threshold}"),
        )?,
        Selection::Nonstationary => RasterMask::from_bits(
            rows,
            cols,
            run.log_lambda.values().iter().map(|&v| v <= threshold).collect(),
            format!("log10 ratio <= {threshold}"),
        )?,
    };
    Ok(Some(mask))
}

fn run_quadrant_cmd(args: &QuadrantArgs) -> Result<()> {
    let formats = if args.format.is_empty() {
        vec![ExportFormat::Pgm, ExportFormat::Raw]
    } else {
        args.format.clone()
    };
    let summary = run_quadrant(&args.looks, args.group, args.boxcar, &args.out, &formats)?;
    println!(
        "quadrant {} of {} looks: wrote {} files + quadrant.json to {}",
        summary.group,
        summary.n_looks,
        summary.files.len(),
        summary.out_dir.display()
    );
    let [a, b, c, d] = summary.span_shares;
    println!("span shares: {a:.4} {b:.4} {c:.4} {d:.4}");
    Ok(())
}

fn emit_text(out: Option<&std::path::Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
