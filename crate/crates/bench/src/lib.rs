//! Shared fixtures for the benchmarks.

use npi_core::simgen::{simulate_linear_panel, LinearDgpConfig};
use npi_core::{EstimationSpec, MobilityCategory, OutcomeKind, Panel, Variant};

/// Linear synthetic panel with `n_countries` countries over 150 days.
pub fn linear_panel(n_countries: usize) -> Panel {
    let cfg = LinearDgpConfig {
        n_countries,
        ..LinearDgpConfig::default()
    };
    simulate_linear_panel(&cfg)
        .expect("default config is valid")
        .0
        .panel
}

pub fn residential_spec(variant: Variant) -> EstimationSpec {
    EstimationSpec::new(
        LinearDgpConfig::default().policy,
        OutcomeKind::MobilityDeviation(MobilityCategory::Residential),
        variant,
    )
}
