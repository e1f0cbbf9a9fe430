//! Discrete-time SIR epidemic with policy-dependent transmission and
//! Poisson-noised, weekday-modulated case reporting.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, TimeDelta};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{country_rng, draw_covariates, SimulatedData};
use crate::error::{Error, Result};
use crate::iso3_codes;
use crate::panel::{
    build_panel, CountryId, EpiSeries, PolicyKind, PolicySchedule, MAX_INTENSITY, N_POLICIES,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirPolicyChange {
    pub policy: PolicyKind,
    /// Days since the simulation start.
    pub day: i64,
    pub level: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirCountry {
    pub population: f64,
    pub initial_infected: f64,
    /// Transmission rate with no policy in force.
    pub beta0: f64,
    pub recovery_rate: f64,
    #[serde(default)]
    pub policies: Vec<SirPolicyChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirDgpConfig {
    pub start_date: NaiveDate,
    pub n_days: usize,
    pub countries: Vec<SirCountry>,
    /// Proportional transmission reduction at full intensity, per policy.
    #[serde(default)]
    pub policy_effects: BTreeMap<PolicyKind, f64>,
    pub detection_rate: f64,
    /// Reporting multiplier per weekday, Monday first.
    pub dow_multipliers: [f64; 7],
    pub seed: u64,
}

impl SirDgpConfig {
    /// Epidemics of varying size and speed, each with one policy adopted at a
    /// random point of its course.
    pub fn staggered_single_policy(n_countries: usize, policy: PolicyKind, effect: f64, seed: u64) -> Self {
        let mut rng = country_rng(seed, u64::MAX);
        let countries = (0..n_countries)
            .map(|_| SirCountry {
                population: rng.random_range(14.0..17.0f64).exp().round(),
                initial_infected: rng.random_range(1..=20) as f64,
                beta0: rng.random_range(0.25..0.4),
                recovery_rate: rng.random_range(0.08..0.15),
                policies: vec![SirPolicyChange {
                    policy,
                    day: rng.random_range(25..=75),
                    level: rng.random_range(3..=MAX_INTENSITY),
                }],
            })
            .collect();
        Self {
            start_date: NaiveDate::from_ymd_opt(2020, 2, 1).expect("valid date"),
            n_days: 150,
            countries,
            policy_effects: BTreeMap::from([(policy, effect)]),
            detection_rate: 0.3,
            dow_multipliers: [1.1, 1.1, 1.05, 1.0, 1.0, 0.9, 0.85],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.countries.is_empty() || self.countries.len() > iso3_codes().len() {
            return Err(Error::InvalidConfig(format!(
                "need between 1 and {} countries",
                iso3_codes().len()
            )));
        }
        if self.n_days == 0 {
            return Err(Error::InvalidConfig("n_days must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.detection_rate) {
            return Err(Error::InvalidConfig("detection_rate must lie in [0, 1]".into()));
        }
        if self.dow_multipliers.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidConfig(
                "weekday multipliers must be finite and non-negative".into(),
            ));
        }
        for (policy, e) in &self.policy_effects {
            if !(0.0..=1.0).contains(e) {
                return Err(Error::InvalidConfig(format!(
                    "effect of {policy} must lie in [0, 1], got {e}"
                )));
            }
        }
        for (i, c) in self.countries.iter().enumerate() {
            let ok = c.population.is_finite()
                && c.population > 0.0
                && c.initial_infected >= 0.0
                && c.initial_infected <= c.population
                && c.beta0.is_finite()
                && c.beta0 >= 0.0
                && (0.0..=1.0).contains(&c.recovery_rate);
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "country {i} has invalid epidemic parameters"
                )));
            }
            if let Some(p) = c.policies.iter().find(|p| p.level > MAX_INTENSITY) {
                return Err(Error::InvalidConfig(format!(
                    "country {i}: level {} of {} exceeds {MAX_INTENSITY}",
                    p.level, p.policy
                )));
            }
        }
        Ok(())
    }
}

/// Latent epidemic state of one country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirTrajectory {
    pub country: String,
    /// State at the start of each day.
    pub susceptible: Vec<f64>,
    pub infected: Vec<f64>,
    pub recovered: Vec<f64>,
    pub new_infections: Vec<f64>,
    pub transmission_rate: Vec<f64>,
    pub reported: Vec<u64>,
    /// Set when new infections had to be capped at the susceptible pool.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirTruth {
    pub policy_effects: BTreeMap<PolicyKind, f64>,
    pub trajectories: Vec<SirTrajectory>,
}

fn levels_on(changes: &[SirPolicyChange], day: i64) -> [u8; N_POLICIES] {
    let mut levels = [0u8; N_POLICIES];
    let mut last_day = [i64::MIN; N_POLICIES];
    for c in changes {
        let k = c.policy.index();
        if c.day <= day && c.day >= last_day[k] {
            levels[k] = c.level;
            last_day[k] = c.day;
        }
    }
    levels
}

pub fn simulate_sir_panel(config: &SirDgpConfig) -> Result<(SimulatedData, SirTruth)> {
    config.validate()?;
    let codes = iso3_codes();
    let mut effects = [0.0; N_POLICIES];
    for (p, e) in &config.policy_effects {
        effects[p.index()] = *e;
    }

    let mut schedules = Vec::new();
    let mut epi = Vec::new();
    let mut covariates = Vec::new();
    let mut trajectories = Vec::new();

    for (i, country) in config.countries.iter().enumerate() {
        let id = CountryId::new(codes[i])?;
        let mut rng = country_rng(config.seed, i as u64);
        covariates.push(draw_covariates(&mut rng, &id, i));

        let n = country.population;
        let (mut s, mut inf, mut r) = (n - country.initial_infected, country.initial_infected, 0.0);
        let mut traj = SirTrajectory {
            country: id.to_string(),
            susceptible: Vec::with_capacity(config.n_days),
            infected: Vec::with_capacity(config.n_days),
            recovered: Vec::with_capacity(config.n_days),
            new_infections: Vec::with_capacity(config.n_days),
            transmission_rate: Vec::with_capacity(config.n_days),
            reported: Vec::with_capacity(config.n_days),
            clamped: false,
        };
        for day in 0..config.n_days {
            let date = config.start_date + TimeDelta::days(day as i64);
            let levels = levels_on(&country.policies, day as i64);
            let beta_t = country.beta0
                * levels
                    .iter()
                    .zip(&effects)
                    .map(|(&l, e)| 1.0 - e * f64::from(l) / f64::from(MAX_INTENSITY))
                    .product::<f64>();
            let mut new_inf = beta_t * s * inf / n;
            if new_inf > s {
                new_inf = s;
                traj.clamped = true;
            }
            let recoveries = country.recovery_rate * inf;
            traj.susceptible.push(s);
            traj.infected.push(inf);
            traj.recovered.push(r);
            traj.new_infections.push(new_inf);
            traj.transmission_rate.push(beta_t);

            let lambda = config.detection_rate
                * new_inf
                * config.dow_multipliers[date.weekday().num_days_from_monday() as usize];
            let reported = if lambda > 0.0 {
                Poisson::new(lambda)
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?
                    .sample(&mut rng) as u64
            } else {
                0
            };
            traj.reported.push(reported);

            s -= new_inf;
            inf += new_inf - recoveries;
            r += recoveries;
        }

        let mut by_policy: BTreeMap<PolicyKind, BTreeMap<NaiveDate, u8>> = BTreeMap::new();
        for c in &country.policies {
            by_policy
                .entry(c.policy)
                .or_default()
                .insert(config.start_date + TimeDelta::days(c.day), c.level);
        }
        for (policy, changes) in by_policy {
            schedules.push(PolicySchedule::new(id.clone(), policy, changes)?);
        }
        epi.push(EpiSeries::from_new_cases(
            id,
            config.start_date,
            traj.reported.clone(),
        ));
        trajectories.push(traj);
    }

    let panel = build_panel(&schedules, &epi, &[], &covariates)?;
    Ok((
        SimulatedData {
            schedules,
            epi,
            mobility: Vec::new(),
            covariates,
            panel,
        },
        SirTruth {
            policy_effects: config.policy_effects.clone(),
            trajectories,
        },
    ))
}
