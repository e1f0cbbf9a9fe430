//! Synthetic panels with known ground truth.
//!
//! Every country draws from its own ChaCha stream, so the output depends only
//! on the seed and the configuration.

mod linear;
mod sir;

use chrono::{NaiveDate, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use linear::{simulate_linear_panel, LinearDgpConfig, LinearTruth, PolicyTiming};
pub use sir::{simulate_sir_panel, SirCountry, SirDgpConfig, SirPolicyChange, SirTrajectory, SirTruth};

use crate::error::Result;
use crate::panel::{CountryCovariates, CountryId, EpiSeries, MobilitySeries, Panel, PolicySchedule, Region};

/// Raw source records together with the panel built from them.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub schedules: Vec<PolicySchedule>,
    pub epi: Vec<EpiSeries>,
    pub mobility: Vec<MobilitySeries>,
    pub covariates: Vec<CountryCovariates>,
    pub panel: Panel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum SimulationConfig {
    Linear(LinearDgpConfig),
    Sir(SirDgpConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Truth {
    Linear(LinearTruth),
    Sir(SirTruth),
}

impl SimulationConfig {
    pub fn seed(&self) -> u64 {
        match self {
            SimulationConfig::Linear(c) => c.seed,
            SimulationConfig::Sir(c) => c.seed,
        }
    }

    pub fn simulate(&self) -> Result<(SimulatedData, Truth)> {
        match self {
            SimulationConfig::Linear(c) => simulate_linear_panel(c).map(|(d, t)| (d, Truth::Linear(t))),
            SimulationConfig::Sir(c) => simulate_sir_panel(c).map(|(d, t)| (d, Truth::Sir(t))),
        }
    }
}

pub(crate) fn country_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Covariates on a plausible scale; regions cycle so every region is populated.
pub(crate) fn draw_covariates(rng: &mut ChaCha8Rng, id: &CountryId, i: usize) -> CountryCovariates {
    CountryCovariates {
        country: id.clone(),
        region: Region::ALL[i % Region::ALL.len()],
        gdp_per_capita: rng.random_range(6.5..11.5f64).exp(),
        population: rng.random_range(13.0..19.0f64).exp(),
        population_density: rng.random_range(1.0..6.0f64).exp(),
        urbanization_rate: rng.random_range(15.0..95.0),
    }
}

pub(crate) fn draw_first_case_spread(rng: &mut ChaCha8Rng, start: NaiveDate, spread: i64) -> NaiveDate {
    start + TimeDelta::days(rng.random_range(0..=spread))
}
