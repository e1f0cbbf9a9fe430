use std::path::{Path, PathBuf};

use npi_core::design::{ClusterBy, EstimationSpec};
use npi_core::ingest::{CanonicalFileSet, CASES_FILE, COVARIATES_FILE, MOBILITY_FILE, POLICIES_FILE};
use npi_core::simgen::SimulationConfig;
use npi_core::{OutcomeKind, PolicyKind, Variant};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn tool_version() -> String {
    format!("npi {}", env!("CARGO_PKG_VERSION"))
}

/// Paths of the four canonical input files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFiles {
    pub policies: PathBuf,
    pub cases: PathBuf,
    pub mobility: PathBuf,
    pub covariates: PathBuf,
}

impl InputFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            policies: dir.join(POLICIES_FILE),
            cases: dir.join(CASES_FILE),
            mobility: dir.join(MOBILITY_FILE),
            covariates: dir.join(COVARIATES_FILE),
        }
    }

    pub fn load(&self) -> npi_core::Result<CanonicalFileSet> {
        CanonicalFileSet::load(&self.policies, &self.cases, &self.mobility, &self.covariates)
    }
}

/// One requested regression, kept as text so that a bad entry fails on its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecEntry {
    pub policy: String,
    pub outcome: String,
    pub variant: String,
    pub window_lo: i64,
    pub window_hi: i64,
    pub reference: i64,
    pub cluster: String,
}

impl SpecEntry {
    pub fn id(&self) -> String {
        format!("{}__{}__{}", self.policy, self.outcome, self.variant)
    }

    pub fn resolve(&self) -> npi_core::Result<EstimationSpec> {
        let mut spec = EstimationSpec::new(
            self.policy.parse::<PolicyKind>()?,
            self.outcome.parse::<OutcomeKind>()?,
            self.variant.parse::<Variant>()?,
        );
        spec.window_lo = self.window_lo;
        spec.window_hi = self.window_hi;
        spec.reference = self.reference;
        spec.cluster_by = self.cluster.parse::<ClusterBy>()?;
        spec.validate()?;
        Ok(spec)
    }
}

impl From<&EstimationSpec> for SpecEntry {
    fn from(spec: &EstimationSpec) -> Self {
        Self {
            policy: spec.policy.to_string(),
            outcome: spec.outcome.to_string(),
            variant: spec.variant.to_string(),
            window_lo: spec.window_lo,
            window_hi: spec.window_hi,
            reference: spec.reference,
            cluster: "country".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    Simulate {
        config: SimulationConfig,
    },
    Estimate {
        inputs: InputFiles,
        specs: Vec<SpecEntry>,
    },
    Summary {
        inputs: InputFiles,
    },
}

/// Everything needed to regenerate the contents of an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub command: Command,
}

impl RunManifest {
    pub fn new(out_dir: PathBuf, command: Command) -> Self {
        let seed = match &command {
            Command::Simulate { config } => Some(config.seed()),
            _ => None,
        };
        Self {
            tool_version: tool_version(),
            out_dir,
            seed,
            command,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid manifest {}: {e}", path.display())))
    }
}
