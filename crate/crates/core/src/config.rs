//! Run configuration: one JSON document with `source`, `geometry`, `binning`,
//! `analysis` and `output` sections. Unknown keys are rejected and every
//! default is materialized so the effective configuration can be echoed and
//! embedded in output files.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::FitMethod;
use crate::error::{Error, Result};
use crate::events::{BinningScheme, DEFAULT_NOISE_THRESHOLD_KEV};
use crate::montecarlo::{GeometryConfig, SourceConfig};
use crate::physics::Compton;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    #[default]
    Jsonl,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub method: FitMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: EventFormat,
    /// Also write events that missed the acceptance (flagged `lost`).
    pub keep_lost: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { path: None, format: EventFormat::Jsonl, keep_lost: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub source: SourceConfig,
    pub geometry: GeometryConfig,
    /// Defaults to quantile bins for the source energy when omitted.
    pub binning: Option<BinningScheme>,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parses, validates and materializes defaults. Errors carry the JSON path
    /// of the offending field.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.resolved()
    }

    pub fn resolved(mut self) -> Result<Self> {
        self.source.validate()?;
        self.geometry.validate()?;
        if self.binning.is_none() {
            self.binning = Some(BinningScheme::klein_nishina(
                &Compton::STANDARD,
                self.source.energy_kev,
                DEFAULT_NOISE_THRESHOLD_KEV,
            )?);
        }
        self.binning().validate()?;
        Ok(self)
    }

    /// The binning scheme; call on a resolved config.
    pub fn binning(&self) -> &BinningScheme {
        self.binning.as_ref().expect("config not resolved")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
