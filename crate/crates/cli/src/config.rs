//! Pipeline configuration: defaults, JSON config files, flag overrides.
//!
//! Settings resolve in three layers — built-in defaults, then a JSON config
//! file, then command-line flags — with later layers winning. The defaults
//! are the reference processing settings every statistic in the workspace
//! is quoted for: 9×9 boxcar, 3 rectangular non-overlapping sublooks, no
//! spectral compensation, ±2° slope interval, log₁₀Λ threshold −1 and
//! depolarisation-spread thresholds 0.1/0.15/0.2.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anisar_core::stationarity::{FlagThresholds, DEFAULT_LOG_LAMBDA_THRESHOLD};
use anisar_core::sublook::{SublookConfig, Taper};
use anisar_core::CoreError;
use serde::{Deserialize, Serialize};

/// On-disk raster export selections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    /// `row,col,value` text dumps.
    Csv,
    /// 8-bit PGM quicklooks with JSON sidecars.
    Pgm,
    /// Binary metric rasters (PMTR), the format other stages re-read.
    Raw,
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Pgm => "pgm",
            ExportFormat::Raw => "raw",
        })
    }
}

impl FromStr for ExportFormat {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "pgm" => Ok(ExportFormat::Pgm),
            "raw" => Ok(ExportFormat::Raw),
            other => Err(CoreError::Argument(format!(
                "unknown export format '{other}' (expected csv, pgm or raw)"
            ))),
        }
    }
}

/// Full configuration of a pipeline run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Input image (PSLC). Exactly one of `input`/`scene` must be set.
    pub input: Option<PathBuf>,
    /// Scene description (JSON); the run simulates it as its input.
    pub scene: Option<PathBuf>,
    /// Optional terrain slope raster (PSLP) for masking.
    pub slope: Option<PathBuf>,
    /// Output directory; created if missing.
    pub out_dir: PathBuf,
    /// Number of sublooks.
    pub n_sub: usize,
    /// Fractional band overlap in [0, 0.95).
    pub overlap: f64,
    /// Band taper ("rectangular" or "raised_cosine:<rolloff>").
    pub taper: String,
    /// Divide the estimated spectral weighting out before band cuts.
    pub compensate: bool,
    /// Boxcar window side (odd).
    pub boxcar: usize,
    /// Slope interval (degrees, inclusive) for the terrain mask.
    pub slope_min: f64,
    pub slope_max: f64,
    /// Stationarity cut on log₁₀Λ (strictly greater passes).
    pub log_lambda_threshold: f64,
    /// Weak/moderate/strong depolarisation-spread thresholds.
    pub flag_thresholds: [f64; 3],
    /// Flag only pixels that pass the stationarity test.
    pub gate_flags: bool,
    /// Raster export formats to write.
    pub formats: Vec<ExportFormat>,
    /// Scene seed override (simulated inputs only).
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: None,
            scene: None,
            slope: None,
            out_dir: PathBuf::from("anisar-out"),
            n_sub: 3,
            overlap: 0.0,
            taper: "rectangular".into(),
            compensate: false,
            boxcar: 9,
            slope_min: -2.0,
            slope_max: 2.0,
            log_lambda_threshold: DEFAULT_LOG_LAMBDA_THRESHOLD,
            flag_thresholds: [0.1, 0.15, 0.2],
            gate_flags: true,
            formats: vec![ExportFormat::Pgm, ExportFormat::Raw],
            seed: None,
        }
    }
}

/// Command-line overrides; `None` means "keep the current value".
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub scene: Option<PathBuf>,
    pub slope: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub n_sub: Option<usize>,
    pub overlap: Option<f64>,
    pub taper: Option<String>,
    pub compensate: Option<bool>,
    pub boxcar: Option<usize>,
    pub slope_min: Option<f64>,
    pub slope_max: Option<f64>,
    pub log_lambda_threshold: Option<f64>,
    pub flag_thresholds: Option<[f64; 3]>,
    pub gate_flags: Option<bool>,
    pub formats: Option<Vec<ExportFormat>>,
    pub seed: Option<u64>,
}

impl PipelineConfig {
    /// Reads a JSON config file. Parse failures keep serde's line/column
    /// and field diagnostics.
    pub fn load(path: &Path) -> Result<Self, CoreError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| {
            CoreError::Argument(format!("config {}: {e}", path.display()))
        })?;
        Ok(cfg)
    }

    /// Applies command-line overrides on top (flags win over the file).
    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = &o.$field {
                    self.$field = Some(v.clone());
                }
            };
        }
        take!(input);
        take!(scene);
        take!(slope);
        if let Some(v) = &o.out_dir {
            self.out_dir = v.clone();
        }
        if let Some(v) = o.n_sub {
            self.n_sub = v;
        }
        if let Some(v) = o.overlap {
            self.overlap = v;
        }
        if let Some(v) = &o.taper {
            self.taper = v.clone();
        }
        if let Some(v) = o.compensate {
            self.compensate = v;
        }
        if let Some(v) = o.boxcar {
            self.boxcar = v;
        }
        if let Some(v) = o.slope_min {
            self.slope_min = v;
        }
        if let Some(v) = o.slope_max {
            self.slope_max = v;
        }
        if let Some(v) = o.log_lambda_threshold {
            self.log_lambda_threshold = v;
        }
        if let Some(v) = o.flag_thresholds {
            self.flag_thresholds = v;
        }
        if let Some(v) = o.gate_flags {
            self.gate_flags = v;
        }
        if let Some(v) = &o.formats {
            self.formats = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = Some(v);
        }
    }

    /// Structural validation beyond what downstream stages re-check.
    pub fn validate(&self) -> Result<(), CoreError> {
        match (&self.input, &self.scene) {
            (None, None) => {
                return Err(CoreError::Argument(
                    "config needs an input image or a scene description".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(CoreError::Argument(
                    "config sets both an input image and a scene; pick one".into(),
                ))
            }
            _ => {}
        }
        if self.boxcar % 2 == 0 || self.boxcar == 0 {
            return Err(CoreError::Argument(format!(
                "boxcar window must be odd and positive, got {}",
                self.boxcar
            )));
        }
        if !(self.slope_min <= self.slope_max) {
            return Err(CoreError::Argument(format!(
                "slope interval [{}, {}] is empty",
                self.slope_min, self.slope_max
            )));
        }
        if self.formats.is_empty() {
            return Err(CoreError::Argument(
                "at least one export format is required".into(),
            ));
        }
        self.sublook_config()?.validate()?;
        self.thresholds()?.validate()?;
        if !self.log_lambda_threshold.is_finite() {
            return Err(CoreError::Argument(format!(
                "log-lambda threshold must be finite, got {}",
                self.log_lambda_threshold
            )));
        }
        Ok(())
    }

    pub fn sublook_config(&self) -> Result<SublookConfig, CoreError> {
        Ok(SublookConfig {
            n_sub: self.n_sub,
            overlap: self.overlap,
            taper: Taper::from_str(&self.taper)?,
            compensate: self.compensate,
        })
    }

    pub fn thresholds(&self) -> Result<FlagThresholds, CoreError> {
        let t = FlagThresholds {
            weak: self.flag_thresholds[0],
            moderate: self.flag_thresholds[1],
            strong: self.flag_thresholds[2],
        };
        t.validate()?;
        Ok(t)
    }

    pub fn wants(&self, f: ExportFormat) -> bool {
        self.formats.contains(&f)
    }
}

/// Parses "w,m,s" into flag thresholds (clap value parser).
pub fn parse_thresholds(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three comma-separated thresholds, got '{s}'"
        ));
    }
    let mut out = [0.0f64; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse threshold '{p}'"))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_settings() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.boxcar, 9);
        assert_eq!(cfg.n_sub, 3);
        assert_eq!(cfg.overlap, 0.0);
        assert_eq!(cfg.taper, "rectangular");
        assert!(!cfg.compensate);
        assert_eq!((cfg.slope_min, cfg.slope_max), (-2.0, 2.0));
        assert_eq!(cfg.log_lambda_threshold, -1.0);
        assert_eq!(cfg.flag_thresholds, [0.1, 0.15, 0.2]);
        assert!(cfg.gate_flags);
    }

    #[test]
    fn empty_or_malformed_config_files_name_the_problem() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.json");
        std::fs::write(&p, "").unwrap();
        let err = PipelineConfig::load(&p).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "no location in: {msg}");

        std::fs::write(&p, r#"{"boxcar": 9, "boxcarr": 1}"#).unwrap();
        let err = PipelineConfig::load(&p).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("boxcarr"), "no field name in: {msg}");
    }

    #[test]
    fn overrides_win_over_file_values() {
        let mut cfg = PipelineConfig {
            boxcar: 7,
            ..PipelineConfig::default()
        };
        cfg.apply(&Overrides {
            boxcar: Some(11),
            gate_flags: Some(false),
            formats: Some(vec![ExportFormat::Csv]),
            ..Overrides::default()
        });
        assert_eq!(cfg.boxcar, 11);
        assert!(!cfg.gate_flags);
        assert_eq!(cfg.formats, vec![ExportFormat::Csv]);
    }

    #[test]
    fn validation_rejects_inconsistent_setups() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate().is_err()); // no input at all
        cfg.input = Some("a.pslc".into());
        cfg.scene = Some("b.json".into());
        assert!(cfg.validate().is_err()); // both inputs
        cfg.scene = None;
        cfg.validate().unwrap();
        cfg.boxcar = 8;
        assert!(cfg.validate().is_err());
        cfg.boxcar = 9;
        cfg.flag_thresholds = [0.2, 0.15, 0.1];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = PipelineConfig {
            input: Some("x.pslc".into()),
            formats: vec![ExportFormat::Csv, ExportFormat::Raw],
            seed: Some(7),
            ..PipelineConfig::default()
        };
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
