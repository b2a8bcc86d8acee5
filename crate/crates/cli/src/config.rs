//! Pipeline configuration: defaults, a TOML file, then command-line overrides.
//!
//! Relative paths inside a config file resolve against the file's directory;
//! paths given on the command line resolve against the working directory.

use std::path::{Path, PathBuf};

use depthpair::augmentation::{AugmentPolicy, Pivot};
use depthpair::baselines::{BilateralParams, RollingGuidanceParams};
use depthpair::dataset::{Dataset, Split, SplitFractions};
use depthpair::geometry::Intrinsics;
use depthpair::masking::MaskParams;
use depthpair::metrics::{default_bins, validate_bins, Bin, MseDomain};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Dotted keys with their values, applied in order.
pub type Overrides = Vec<(String, toml::Value)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub dataset: PathBuf,
    /// `id,xh,yh,zh,xl,yl,zl` CSV for `calibrate`.
    pub correspondences: Option<PathBuf>,
    /// Defaults to `<dataset>/calibration.json`.
    pub calibration: Option<PathBuf>,
    /// Override the intrinsics stored in the dataset.
    pub intrinsics_lq: Option<PathBuf>,
    pub intrinsics_hq: Option<PathBuf>,
    /// Prediction rasters written by `denoise` and read by `evaluate`.
    /// Defaults to `<dataset>/predictions`.
    pub predictions: Option<PathBuf>,
    /// Defaults to `<dataset>/reports`.
    pub reports: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("dataset"),
            correspondences: None,
            calibration: None,
            intrinsics_lq: None,
            intrinsics_hq: None,
            predictions: None,
            reports: None,
        }
    }
}

/// Augmentation settings; the random stream comes from the global seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub k: u32,
    pub max_translation_m: f64,
    pub max_rotation_deg: f64,
    pub pivot: Pivot,
    pub min_object_pixels: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        let p = AugmentPolicy::default();
        Self {
            k: p.k,
            max_translation_m: p.max_translation_m,
            max_rotation_deg: p.max_rotation_deg,
            pivot: p.pivot,
            min_object_pixels: p.min_object_pixels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub bins: Vec<Bin>,
    pub mse_domain: MseDomain,
    /// Restrict evaluation to one split.
    pub split: Option<Split>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            bins: default_bins(),
            mse_domain: MseDomain::Mask,
            split: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Bilateral,
    Rgf,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bilateral => "bilateral",
            Method::Rgf => "rgf",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub method: Method,
    pub split: Option<Split>,
    pub bilateral: BilateralParams,
    pub rgf: RollingGuidanceParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub tuples: usize,
    pub correspondences: usize,
    pub correspondence_noise_m: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            tuples: 8,
            correspondences: 12,
            correspondence_noise_m: 0.001,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seeds augmentation, splitting and synthetic data.
    pub seed: u64,
    /// Worker threads; all available CPUs when unset.
    pub workers: Option<usize>,
    pub paths: Paths,
    pub masking: MaskParams,
    pub augment: AugmentConfig,
    pub split: SplitFractions,
    pub metrics: MetricsConfig,
    pub denoise: DenoiseConfig,
    pub synth: SynthConfig,
}

impl PipelineConfig {
    /// Reads `file` (if any) over the defaults and applies `overrides` in order.
    pub fn load(file: Option<&Path>, overrides: &[(String, toml::Value)]) -> CliResult<Self> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                let mut table: toml::Table = text
                    .parse()
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new(""));
                rebase_paths(&mut table, base);
                table
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            set_dotted(&mut table, key, value.clone())?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))
    }

    pub fn augment_policy(&self) -> AugmentPolicy {
        let a = &self.augment;
        AugmentPolicy {
            k: a.k,
            max_translation_m: a.max_translation_m,
            max_rotation_deg: a.max_rotation_deg,
            rng_seed: self.seed,
            pivot: a.pivot,
            min_object_pixels: a.min_object_pixels,
        }
    }

    pub fn validate_general(&self) -> CliResult<()> {
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn validate_metrics(&self) -> CliResult<()> {
        Ok(validate_bins(&self.metrics.bins)?)
    }

    pub fn validate_denoise(&self) -> CliResult<()> {
        match self.denoise.method {
            Method::Bilateral => self.denoise.bilateral.validate()?,
            Method::Rgf => self.denoise.rgf.validate()?,
        }
        Ok(())
    }

    pub fn calibration_path(&self) -> PathBuf {
        self.paths
            .calibration
            .clone()
            .unwrap_or_else(|| self.paths.dataset.join("calibration.json"))
    }

    pub fn predictions_dir(&self) -> PathBuf {
        self.paths
            .predictions
            .clone()
            .unwrap_or_else(|| self.paths.dataset.join("predictions"))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.paths
            .reports
            .clone()
            .unwrap_or_else(|| self.paths.dataset.join("reports"))
    }

    pub fn intrinsics(&self, ds: &Dataset) -> CliResult<(Intrinsics, Intrinsics)> {
        let lq = match &self.paths.intrinsics_lq {
            Some(p) => Intrinsics::load(p)?,
            None => ds.intrinsics_lq()?,
        };
        let hq = match &self.paths.intrinsics_hq {
            Some(p) => Intrinsics::load(p)?,
            None => ds.intrinsics_hq()?,
        };
        Ok((lq, hq))
    }

    /// SHA-256 over the processing parameters. Paths and worker count are
    /// left out because they do not change any artifact.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().expect("config is an object");
        obj.remove("paths");
        obj.remove("workers");
        let text = serde_json::to_string(&v).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

fn rebase_paths(table: &mut toml::Table, base: &Path) {
    let Some(toml::Value::Table(paths)) = table.get_mut("paths") else {
        return;
    };
    for (_, value) in paths.iter_mut() {
        if let Some(s) = value.as_str().filter(|s| Path::new(s).is_relative()) {
            *value = toml::Value::String(base.join(s).to_string_lossy().into_owned());
        }
    }
}

/// Parses a command-line value as TOML, falling back to a bare string.
pub fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> CliResult<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("malformed override key {key:?}")));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut node = table;
    for p in parents {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("{key}: {p} is not a section"))),
        };
    }
    node.insert(last.to_string(), value);
    Ok(())
}
