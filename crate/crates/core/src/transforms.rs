//! Outcome and control transformations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{MobilityCategory, PanelRow};

/// Window of the smoothed case outcome.
pub const CASES_SMOOTHING_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OutcomeKind {
    /// ihs of the trailing 3-day mean of new cases.
    CasesIhsMa3,
    /// ihs of unsmoothed new cases.
    CasesIhs,
    MobilityDeviation(MobilityCategory),
}

impl OutcomeKind {
    /// The main outcomes: smoothed cases plus the six mobility categories.
    pub fn main_outcomes() -> Vec<OutcomeKind> {
        std::iter::once(OutcomeKind::CasesIhsMa3)
            .chain(
                MobilityCategory::ALL
                    .iter()
                    .map(|&c| OutcomeKind::MobilityDeviation(c)),
            )
            .collect()
    }

    pub fn all() -> Vec<OutcomeKind> {
        let mut v = Self::main_outcomes();
        v.insert(1, OutcomeKind::CasesIhs);
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::CasesIhsMa3 => "cases_ihs_ma3",
            OutcomeKind::CasesIhs => "cases_ihs",
            OutcomeKind::MobilityDeviation(c) => c.name(),
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutcomeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cases_ihs_ma3" => Ok(OutcomeKind::CasesIhsMa3),
            "cases_ihs" => Ok(OutcomeKind::CasesIhs),
            other => other
                .parse::<MobilityCategory>()
                .map(OutcomeKind::MobilityDeviation)
                .map_err(|_| Error::InvalidValue(format!("unknown outcome {other:?}"))),
        }
    }
}

impl TryFrom<String> for OutcomeKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<OutcomeKind> for String {
    fn from(o: OutcomeKind) -> Self {
        o.name().to_owned()
    }
}

/// Trailing mean over the last `window` values, using whatever is available at the start.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidValue(
            "moving-average window must be at least 1".into(),
        ));
    }
    Ok((0..series.len())
        .map(|i| {
            let from = (i + 1).saturating_sub(window);
            let span = &series[from..=i];
            span.iter().sum::<f64>() / span.len() as f64
        })
        .collect())
}

/// Inverse hyperbolic sine, `ln(x + sqrt(x^2 + 1))`.
pub fn ihs(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x.asinh())
    } else {
        Err(Error::InvalidValue(format!("ihs of non-finite value {x}")))
    }
}

/// `ln` of cumulative cases on the previous day; `None` when undefined.
pub fn log_prevalence_lag(row: &PanelRow) -> Option<f64> {
    if row.t == 0 || row.cumulative_lag1 == 0 {
        None
    } else {
        Some((row.cumulative_lag1 as f64).ln())
    }
}

/// Smoothed new cases for one country's rows, indexed by `t`.
pub fn smoothed_cases(rows: &[PanelRow]) -> Vec<f64> {
    let raw: Vec<f64> = rows.iter().map(|r| r.new_cases as f64).collect();
    if raw.is_empty() {
        return raw;
    }
    moving_average(&raw, CASES_SMOOTHING_WINDOW).expect("window is positive")
}

/// Outcome value for a row. `smoothed` is the country's [`smoothed_cases`].
pub fn outcome_value(row: &PanelRow, kind: OutcomeKind, smoothed: &[f64]) -> Option<f64> {
    match kind {
        OutcomeKind::CasesIhsMa3 => {
            let v = *smoothed.get(usize::try_from(row.t).ok()?)?;
            ihs(v).ok()
        }
        OutcomeKind::CasesIhs => ihs(row.new_cases as f64).ok(),
        OutcomeKind::MobilityDeviation(c) => row.mobility[c.index()],
    }
}
