//! Command-line front end: simulation, batch estimation, summaries and
//! reruns from a saved manifest.

pub mod commands;
pub mod manifest;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use npi_core::design::{DEFAULT_REFERENCE, DEFAULT_WINDOW_HI, DEFAULT_WINDOW_LO};
use npi_core::simgen::{LinearDgpConfig, SimulationConfig, SirDgpConfig};
use npi_core::{OutcomeKind, PolicyKind};

pub use commands::{run_manifest, RunReport};
pub use manifest::{Command, InputFiles, RunManifest, SpecEntry};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config or manifest.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Core(#[from] npi_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) | CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "npi",
    version,
    about = "Event-study estimation of policy intensity effects"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Template {
    Linear,
    Sir,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding policies.csv, cases.csv, mobility.csv and covariates.csv.
    #[arg(long, conflicts_with_all = ["policies", "cases", "mobility", "covariates"])]
    pub data: Option<PathBuf>,
    #[arg(long, requires_all = ["cases", "mobility", "covariates"])]
    pub policies: Option<PathBuf>,
    #[arg(long)]
    pub cases: Option<PathBuf>,
    #[arg(long)]
    pub mobility: Option<PathBuf>,
    #[arg(long)]
    pub covariates: Option<PathBuf>,
}

impl DataArgs {
    fn inputs(&self) -> Result<InputFiles, CliError> {
        let files = match (
            &self.data,
            &self.policies,
            &self.cases,
            &self.mobility,
            &self.covariates,
        ) {
            (Some(dir), ..) => InputFiles::in_dir(dir),
            (None, Some(p), Some(c), Some(m), Some(v)) => InputFiles {
                policies: p.clone(),
                cases: c.clone(),
                mobility: m.clone(),
                covariates: v.clone(),
            },
            _ => {
                return Err(CliError::Usage(
                    "give --data DIR or all of --policies, --cases, --mobility, --covariates".into(),
                ))
            }
        };
        Ok(InputFiles {
            policies: absolute(&files.policies)?,
            cases: absolute(&files.cases)?,
            mobility: absolute(&files.mobility)?,
            covariates: absolute(&files.covariates)?,
        })
    }
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn parse_window(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("bad LO: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("bad HI: {e}"))?;
    if lo >= hi {
        return Err(format!("empty window {lo}:{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Generate a synthetic panel as canonical files plus its ground truth.
    Simulate {
        /// TOML or JSON simulation config.
        #[arg(long, conflicts_with = "template", required_unless_present = "template")]
        config: Option<PathBuf>,
        /// Built-in configuration to use instead of a config file.
        #[arg(long, value_enum)]
        template: Option<Template>,
        /// Overrides the seed of the config or template.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a built-in simulation config as TOML.
    Template {
        #[arg(value_enum)]
        kind: Template,
    },
    /// Estimate one or more event-study regressions.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        /// Policy of interest; repeat or comma-separate for several.
        #[arg(long, value_delimiter = ',')]
        policy: Vec<String>,
        /// Outcome; repeat or comma-separate for several.
        #[arg(long, value_delimiter = ',', default_value = "cases_ihs_ma3")]
        outcome: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "eq3")]
        variant: Vec<String>,
        /// Event-time window as LO:HI.
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<(i64, i64)>,
        /// Omitted reference event time.
        #[arg(long = "ref", allow_hyphen_values = true)]
        reference: Option<i64>,
        #[arg(long, default_value = "country")]
        cluster: String,
        /// Every policy against every main outcome.
        #[arg(long, conflicts_with_all = ["policy", "outcome"])]
        all: bool,
        /// Worker threads for the batch; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Implementation timing and mobility distributions around the first case.
    Summary {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate an output directory from its manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

pub fn template(kind: Template) -> SimulationConfig {
    match kind {
        Template::Linear => SimulationConfig::Linear(LinearDgpConfig::default()),
        Template::Sir => SimulationConfig::Sir(SirDgpConfig::staggered_single_policy(
            60,
            PolicyKind::StayAtHome,
            0.5,
            1,
        )),
    }
}

fn with_seed(config: SimulationConfig, seed: u64) -> SimulationConfig {
    match config {
        SimulationConfig::Linear(c) => SimulationConfig::Linear(LinearDgpConfig { seed, ..c }),
        SimulationConfig::Sir(c) => SimulationConfig::Sir(SirDgpConfig { seed, ..c }),
    }
}

pub fn read_config(path: &Path) -> Result<SimulationConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Expand estimation flags into manifest entries, policy-major.
pub fn spec_entries(
    policies: &[String],
    outcomes: &[String],
    variants: &[String],
    window: Option<(i64, i64)>,
    reference: Option<i64>,
    cluster: &str,
) -> Vec<SpecEntry> {
    let (window_lo, window_hi) = window.unwrap_or((DEFAULT_WINDOW_LO, DEFAULT_WINDOW_HI));
    let reference = reference.unwrap_or(if window.is_some() {
        window_lo
    } else {
        DEFAULT_REFERENCE
    });
    let mut specs = Vec::new();
    for policy in policies {
        for outcome in outcomes {
            for variant in variants {
                specs.push(SpecEntry {
                    policy: policy.clone(),
                    outcome: outcome.clone(),
                    variant: variant.clone(),
                    window_lo,
                    window_hi,
                    reference,
                    cluster: cluster.to_owned(),
                });
            }
        }
    }
    specs
}

/// Build the manifest for a command line; `None` for commands that only print.
pub fn manifest_for(command: &CliCommand) -> Result<Option<(RunManifest, Option<usize>)>, CliError> {
    let manifest = match command {
        CliCommand::Simulate {
            config,
            template: kind,
            seed,
            out,
        } => {
            let mut cfg = match (config, kind) {
                (Some(path), _) => read_config(path)?,
                (None, Some(kind)) => template(*kind),
                (None, None) => return Err(CliError::Usage("give --config or --template".into())),
            };
            if let Some(seed) = seed {
                cfg = with_seed(cfg, *seed);
            }
            (
                RunManifest::new(absolute(out)?, Command::Simulate { config: cfg }),
                None,
            )
        }
        CliCommand::Template { .. } => return Ok(None),
        CliCommand::Estimate {
            data,
            policy,
            outcome,
            variant,
            window,
            reference,
            cluster,
            all,
            jobs,
            out,
        } => {
            let (policies, outcomes) = if *all {
                (
                    PolicyKind::ALL.iter().map(ToString::to_string).collect(),
                    OutcomeKind::main_outcomes()
                        .iter()
                        .map(ToString::to_string)
                        .collect(),
                )
            } else if policy.is_empty() {
                return Err(CliError::Usage("give --policy or --all".into()));
            } else {
                (policy.clone(), outcome.clone())
            };
            let specs = spec_entries(&policies, &outcomes, variant, *window, *reference, cluster);
            let command = Command::Estimate {
                inputs: data.inputs()?,
                specs,
            };
            (RunManifest::new(absolute(out)?, command), *jobs)
        }
        CliCommand::Summary { data, out } => {
            let command = Command::Summary {
                inputs: data.inputs()?,
            };
            (RunManifest::new(absolute(out)?, command), None)
        }
        CliCommand::Rerun { manifest, jobs } => {
            let m = RunManifest::read(manifest)?;
            if m.tool_version != manifest::tool_version() {
                eprintln!(
                    "warning: manifest written by {}, running {}",
                    m.tool_version,
                    manifest::tool_version()
                );
            }
            (m, *jobs)
        }
    };
    Ok(Some(manifest))
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let CliCommand::Template { kind } = &cli.command {
        match toml::to_string_pretty(&template(*kind)) {
            Ok(text) => {
                print!("{text}");
                return 0;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        }
    }
    let result = manifest_for(&cli.command).and_then(|m| {
        let (manifest, jobs) = m.expect("printing commands handled above");
        run_manifest(&manifest, jobs)
    });
    match result {
        Ok(report) => report.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
