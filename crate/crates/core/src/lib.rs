//! Multiple-events panel event-study estimation of policy intensity effects.
//!
//! The crate turns country-level policy schedules, case counts, mobility
//! deviations and covariates into an aligned [`panel::Panel`], builds the
//! regression design for a policy of interest with optional controls for
//! concurrent policies, fits it by pivoted QR and reports event-time
//! coefficients with country-clustered standard errors. Synthetic generators
//! in [`simgen`] supply panels with known coefficients.

pub mod design;
pub mod error;
pub mod estimator;
pub mod ingest;
mod iso;
pub mod panel;
pub mod simgen;
pub mod transforms;

pub use design::{build_design, ColumnLabel, DesignProblem, EstimationSpec, Variant};
pub use error::{Error, Result};
pub use estimator::{estimate, fit_least_squares, EventStudyResult, FitResult};
pub use panel::{
    build_panel, CountryCovariates, CountryId, EpiSeries, MobilityCategory, MobilitySeries, Panel,
    PolicyKind, PolicySchedule, Region,
};
pub use transforms::OutcomeKind;

/// Officially assigned ISO 3166-1 alpha-3 codes, sorted.
pub fn iso3_codes() -> &'static [&'static str] {
    iso::codes()
}
