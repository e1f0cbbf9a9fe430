//! Plain-text output files.

use std::path::Path;

use npi_core::estimator::{Diagnostics, EventStudyResult};
use npi_core::ingest::{format_real, write_file};

pub const COEFFICIENT_HEADER: [&str; 7] = ["j", "alpha", "se", "ci_lo", "ci_hi", "beta", "beta_se"];
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const DIAGNOSTICS_HEADER: [&str; 9] = [
    "spec",
    "status",
    "n",
    "p",
    "p_retained",
    "clusters",
    "rss",
    "dropped_columns",
    "error",
];

pub fn coefficient_file_name(spec_id: &str) -> String {
    format!("coef__{spec_id}.csv")
}

pub fn number(v: f64) -> String {
    if v.is_finite() {
        format_real(v)
    } else {
        "NA".into()
    }
}

fn to_csv<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> npi_core::Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    write_file(path, &to_csv(header, rows))
}

pub fn coefficient_rows(result: &EventStudyResult) -> Vec<Vec<String>> {
    let optional = |v: Option<f64>| v.map(number).unwrap_or_default();
    result
        .estimates
        .iter()
        .map(|e| {
            vec![
                e.j.to_string(),
                number(e.alpha),
                number(e.se),
                number(e.ci_lo),
                number(e.ci_hi),
                optional(e.beta),
                optional(e.beta_se),
            ]
        })
        .collect()
}

pub fn write_coefficients(dir: &Path, spec_id: &str, result: &EventStudyResult) -> npi_core::Result<()> {
    write_csv(
        &dir.join(coefficient_file_name(spec_id)),
        &COEFFICIENT_HEADER,
        coefficient_rows(result),
    )
}

/// Outcome of one spec in a batch, as recorded in the diagnostics file.
#[derive(Debug, Clone)]
pub enum SpecOutcome {
    Ok(Diagnostics),
    Failed(String),
}

pub fn diagnostics_row(spec_id: &str, outcome: &SpecOutcome) -> Vec<String> {
    match outcome {
        SpecOutcome::Ok(d) => vec![
            spec_id.to_owned(),
            "ok".into(),
            d.n.to_string(),
            d.p.to_string(),
            d.p_retained.to_string(),
            d.clusters.to_string(),
            number(d.rss),
            d.dropped_columns.join(";"),
            String::new(),
        ],
        SpecOutcome::Failed(msg) => {
            let mut row = vec![spec_id.to_owned(), "error".into()];
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.push(msg.clone());
            row
        }
    }
}
