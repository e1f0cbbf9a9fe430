use std::collections::BTreeMap;
use std::path::Path;

use npi_core::estimator::estimate;
use npi_core::ingest::{write_canonical, write_file, CanonicalFileSet};
use npi_core::simgen::SimulationConfig;
use npi_core::{MobilityCategory, Panel, PolicyKind};
use rayon::prelude::*;

use crate::manifest::{Command, InputFiles, RunManifest, SpecEntry, MANIFEST_FILE};
use crate::output::{
    diagnostics_row, number, write_coefficients, write_csv, SpecOutcome, DIAGNOSTICS_FILE, DIAGNOSTICS_HEADER,
};
use crate::CliError;

pub const TRUTH_FILE: &str = "truth.json";
pub const OFFSETS_FILE: &str = "implementation_offsets.csv";
pub const OFFSET_SUMMARY_FILE: &str = "implementation_offsets_summary.csv";
pub const MOBILITY_PERIODS_FILE: &str = "mobility_by_period.csv";
pub const MOBILITY_SUMMARY_FILE: &str = "mobility_by_period_summary.csv";

/// Result of a completed run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunReport {
    pub succeeded: usize,
    pub failed: usize,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 {
            0
        } else {
            1
        }
    }
}

/// Execute a manifest, writing every output file plus the manifest itself.
///
/// `jobs` limits batch parallelism; it does not affect any output byte.
pub fn run_manifest(manifest: &RunManifest, jobs: Option<usize>) -> Result<RunReport, CliError> {
    let out = &manifest.out_dir;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Failed(format!("cannot create {}: {e}", out.display())))?;
    let report = match &manifest.command {
        Command::Simulate { config } => simulate(config, out)?,
        Command::Estimate { inputs, specs } => estimate_batch(inputs, specs, out, jobs)?,
        Command::Summary { inputs } => summary(inputs, out)?,
    };
    write_file(&out.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    Ok(report)
}

pub fn simulate(config: &SimulationConfig, out: &Path) -> Result<RunReport, CliError> {
    let (data, truth) = config.simulate().map_err(|e| CliError::Usage(e.to_string()))?;
    write_canonical(out, &data.schedules, &data.epi, &data.mobility, &data.covariates)?;
    let mut json = serde_json::to_string_pretty(&truth).expect("truth serializes");
    json.push('\n');
    write_file(&out.join(TRUTH_FILE), json.as_bytes())?;
    Ok(RunReport {
        succeeded: 1,
        failed: 0,
    })
}

fn run_spec(panel: &Panel, entry: &SpecEntry, out: &Path) -> SpecOutcome {
    let result = entry
        .resolve()
        .and_then(|spec| estimate(panel, &spec))
        .and_then(|res| write_coefficients(out, &entry.id(), &res).map(|()| res));
    match result {
        Ok(res) => SpecOutcome::Ok(res.diagnostics),
        Err(e) => SpecOutcome::Failed(e.to_string()),
    }
}

pub fn estimate_batch(
    inputs: &InputFiles,
    specs: &[SpecEntry],
    out: &Path,
    jobs: Option<usize>,
) -> Result<RunReport, CliError> {
    let panel = inputs.load()?.build_panel()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let outcomes: Vec<SpecOutcome> =
        pool.install(|| specs.par_iter().map(|s| run_spec(&panel, s, out)).collect());

    let mut report = RunReport::default();
    let rows: Vec<Vec<String>> = specs
        .iter()
        .zip(&outcomes)
        .map(|(s, o)| {
            match o {
                SpecOutcome::Ok(_) => report.succeeded += 1,
                SpecOutcome::Failed(msg) => {
                    report.failed += 1;
                    eprintln!("spec {} failed: {msg}", s.id());
                }
            }
            diagnostics_row(&s.id(), o)
        })
        .collect();
    write_csv(&out.join(DIAGNOSTICS_FILE), &DIAGNOSTICS_HEADER, rows)?;
    Ok(report)
}

/// Count, mean, sample sd, min, median and max; empty input gives `NA`s.
fn describe(values: &[f64]) -> Vec<String> {
    let n = values.len();
    if n == 0 {
        return std::iter::once("0".to_owned())
            .chain(std::iter::repeat_n("NA".into(), 5))
            .collect();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    vec![
        n.to_string(),
        number(mean),
        number(sd),
        number(sorted[0]),
        number(median),
        number(sorted[n - 1]),
    ]
}

const STATS_HEADER: [&str; 6] = ["count", "mean", "sd", "min", "median", "max"];

pub fn summary(inputs: &InputFiles, out: &Path) -> Result<RunReport, CliError> {
    let files: CanonicalFileSet = inputs.load()?;
    let panel = files.build_panel()?;

    let mut offsets: BTreeMap<PolicyKind, Vec<f64>> = BTreeMap::new();
    let mut offset_rows = Vec::new();
    for &policy in PolicyKind::ALL {
        for c in panel.countries() {
            let Some(date) = c.schedule(policy).implementation_date() else {
                continue;
            };
            let offset = (date - c.first_case_date).num_days();
            offsets.entry(policy).or_default().push(offset as f64);
            offset_rows.push(vec![
                policy.to_string(),
                c.id.to_string(),
                date.to_string(),
                c.first_case_date.to_string(),
                offset.to_string(),
            ]);
        }
    }
    write_csv(
        &out.join(OFFSETS_FILE),
        &[
            "policy",
            "country_iso3",
            "implementation_date",
            "first_case_date",
            "offset_days",
        ],
        offset_rows,
    )?;
    let header: Vec<&str> = std::iter::once("policy").chain(STATS_HEADER).collect();
    write_csv(
        &out.join(OFFSET_SUMMARY_FILE),
        &header,
        PolicyKind::ALL.iter().map(|p| {
            let values = offsets.get(p).map(Vec::as_slice).unwrap_or(&[]);
            std::iter::once(p.to_string()).chain(describe(values)).collect()
        }),
    )?;

    // Mobility before the first case is not part of the panel, so read it from the raw series.
    let mut by_period: BTreeMap<(MobilityCategory, bool), Vec<f64>> = BTreeMap::new();
    let mut mobility_rows = Vec::new();
    let mut series: Vec<_> = files.mobility.iter().collect();
    series.sort_by(|a, b| a.country.cmp(&b.country));
    for &category in MobilityCategory::ALL {
        for m in &series {
            let Some(first_case) = panel.country(&m.country).map(|c| c.first_case_date) else {
                continue;
            };
            for (&date, &value) in m.category(category) {
                let after = date >= first_case;
                by_period.entry((category, after)).or_default().push(value);
                mobility_rows.push(vec![
                    category.to_string(),
                    if after { "after" } else { "before" }.to_owned(),
                    m.country.to_string(),
                    date.to_string(),
                    number(value),
                ]);
            }
        }
    }
    write_csv(
        &out.join(MOBILITY_PERIODS_FILE),
        &["category", "period", "country_iso3", "date", "value"],
        mobility_rows,
    )?;
    let header: Vec<&str> = ["category", "period"].into_iter().chain(STATS_HEADER).collect();
    let rows = MobilityCategory::ALL.iter().flat_map(|&c| {
        let by_period = &by_period;
        [false, true].into_iter().map(move |after| {
            let values = by_period.get(&(c, after)).map(Vec::as_slice).unwrap_or(&[]);
            [c.to_string(), if after { "after" } else { "before" }.to_owned()]
                .into_iter()
                .chain(describe(values))
                .collect()
        })
    });
    write_csv(&out.join(MOBILITY_SUMMARY_FILE), &header, rows)?;
    Ok(RunReport {
        succeeded: 1,
        failed: 0,
    })
}
