//! Panel whose outcome is exactly the intensity-weighted multiple-events
//! regression plus Gaussian noise.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{country_rng, draw_covariates, draw_first_case_spread, SimulatedData};
use crate::design::{
    ColumnLabel, Covariate, ReferenceLevels, DEFAULT_REFERENCE, DEFAULT_WINDOW_HI, DEFAULT_WINDOW_LO,
};
use crate::error::{Error, Result};
use crate::iso3_codes;
use crate::panel::{
    build_panel, CountryId, EpiSeries, MobilityCategory, MobilitySeries, PolicyKind, PolicySchedule,
    N_POLICIES,
};

/// How implementation dates and intensity paths are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTiming {
    /// Probability that a country adopts the policy of interest.
    pub interest_adoption: f64,
    /// Implementation day of the policy of interest relative to the first case, inclusive range.
    pub interest_start: (i64, i64),
    /// Probability that a country adopts each of the other policies.
    pub other_adoption: f64,
    /// Offset of other policies from the policy of interest's implementation day.
    pub other_offset: (i64, i64),
    /// Probability that an adopted policy changes level once.
    pub change_probability: f64,
    /// Days after implementation at which the change happens.
    pub change_delay: (i64, i64),
}

impl Default for PolicyTiming {
    fn default() -> Self {
        Self {
            interest_adoption: 0.85,
            interest_start: (-5, 80),
            other_adoption: 0.6,
            other_offset: (-30, 20),
            change_probability: 0.4,
            change_delay: (5, 30),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearDgpConfig {
    pub n_countries: usize,
    pub n_days: usize,
    /// Earliest first-case date.
    pub start_date: NaiveDate,
    /// First-case dates are spread uniformly over this many days after `start_date`.
    pub first_case_spread: i64,
    /// Days of outcome recorded before the first case. These fall outside the
    /// panel and only carry the intercept, weekday and region terms plus noise.
    #[serde(default)]
    pub pre_period_days: usize,
    pub policy: PolicyKind,
    /// Mobility category that carries the generated outcome.
    pub outcome: MobilityCategory,
    pub window_lo: i64,
    pub window_hi: i64,
    pub reference: i64,
    /// One value per event time `window_lo..=window_hi`; zero at the reference.
    pub true_alpha: Vec<f64>,
    /// One value per event time `window_lo..=window_hi`.
    pub true_beta: Vec<f64>,
    pub intercept: f64,
    /// One value per day since first case, `0..n_days`.
    pub gamma_time: Vec<f64>,
    /// Monday first.
    pub delta_dow: [f64; 7],
    /// In [`crate::panel::Region`] order.
    pub rho_region: [f64; 7],
    pub phi: f64,
    /// In [`Covariate::ALL`] order.
    pub theta: [f64; 4],
    pub noise_sd: f64,
    pub timing: PolicyTiming,
    pub seed: u64,
}

impl Default for LinearDgpConfig {
    fn default() -> Self {
        let window = DEFAULT_WINDOW_LO..=DEFAULT_WINDOW_HI;
        let n_days = 150;
        Self {
            n_countries: 135,
            n_days,
            start_date: NaiveDate::from_ymd_opt(2020, 2, 1).expect("valid date"),
            first_case_spread: 45,
            pre_period_days: 14,
            policy: PolicyKind::SchoolClosure,
            outcome: MobilityCategory::Residential,
            window_lo: DEFAULT_WINDOW_LO,
            window_hi: DEFAULT_WINDOW_HI,
            reference: DEFAULT_REFERENCE,
            true_alpha: window
                .clone()
                .map(|j| if j < 0 { 0.0 } else { -0.05 * j as f64 })
                .collect(),
            true_beta: window.map(|j| -0.02 * (j - DEFAULT_WINDOW_LO) as f64).collect(),
            intercept: 2.0,
            gamma_time: (0..n_days)
                .map(|t| 0.5 * (t as f64 / 15.0).sin() + 0.01 * t as f64)
                .collect(),
            delta_dow: [0.0, 0.3, 0.2, 0.1, 0.4, -0.5, -0.8],
            rho_region: [0.0, 1.0, -1.0, 0.5, 2.0, -0.5, 1.5],
            phi: 0.8,
            theta: [0.3, -0.1, 0.2, 0.02],
            noise_sd: 0.1,
            timing: PolicyTiming::default(),
            seed: 1,
        }
    }
}

fn check_range(name: &str, (lo, hi): (i64, i64)) -> Result<()> {
    if lo > hi {
        return Err(Error::InvalidConfig(format!("{name}: empty range ({lo}, {hi})")));
    }
    Ok(())
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!(
            "{name} must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

impl LinearDgpConfig {
    pub fn window_len(&self) -> usize {
        (self.window_hi - self.window_lo + 1).max(0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_lo >= self.window_hi || !(self.window_lo..=self.window_hi).contains(&self.reference) {
            return Err(Error::InvalidConfig(format!(
                "window [{}, {}] with reference {} is invalid",
                self.window_lo, self.window_hi, self.reference
            )));
        }
        let w = self.window_len();
        if self.true_alpha.len() != w || self.true_beta.len() != w {
            return Err(Error::InvalidConfig(format!(
                "true_alpha and true_beta need {w} values for the window [{}, {}], got {} and {}",
                self.window_lo,
                self.window_hi,
                self.true_alpha.len(),
                self.true_beta.len()
            )));
        }
        if self.true_alpha[(self.reference - self.window_lo) as usize] != 0.0 {
            return Err(Error::InvalidConfig(
                "true_alpha at the reference event time must be 0".into(),
            ));
        }
        if self.gamma_time.len() != self.n_days {
            return Err(Error::InvalidConfig(format!(
                "gamma_time needs {} values, got {}",
                self.n_days,
                self.gamma_time.len()
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_sd must be >= 0, got {}",
                self.noise_sd
            )));
        }
        if self.n_countries == 0 || self.n_countries > iso3_codes().len() {
            return Err(Error::InvalidConfig(format!(
                "n_countries must be in 1..={}",
                iso3_codes().len()
            )));
        }
        if self.n_days < 2 || self.first_case_spread < 0 {
            return Err(Error::InvalidConfig(
                "need n_days >= 2 and first_case_spread >= 0".into(),
            ));
        }
        let t = &self.timing;
        check_probability("interest_adoption", t.interest_adoption)?;
        check_probability("other_adoption", t.other_adoption)?;
        check_probability("change_probability", t.change_probability)?;
        check_range("interest_start", t.interest_start)?;
        check_range("other_offset", t.other_offset)?;
        check_range("change_delay", t.change_delay)?;
        let all_finite = self
            .true_alpha
            .iter()
            .chain(&self.true_beta)
            .chain(&self.gamma_time)
            .chain(&self.delta_dow)
            .chain(&self.rho_region)
            .chain(&self.theta)
            .chain([&self.intercept, &self.phi])
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidConfig("coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// Every coefficient used to generate the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTruth {
    pub policy: PolicyKind,
    pub outcome: MobilityCategory,
    pub reference: i64,
    /// `(j, alpha_j)` over the window.
    pub alpha: Vec<(i64, f64)>,
    /// `(j, beta_j)` over the window.
    pub beta: Vec<(i64, f64)>,
    pub intercept: f64,
    pub gamma_time: Vec<f64>,
    pub delta_dow: [f64; 7],
    pub rho_region: [f64; 7],
    pub phi: f64,
    pub theta: [f64; 4],
    pub noise_sd: f64,
    /// Implementation date of the policy of interest per country, if adopted.
    pub implementation_dates: BTreeMap<String, Option<NaiveDate>>,
}

impl LinearTruth {
    fn lookup(series: &[(i64, f64)], j: i64) -> Option<f64> {
        series.iter().find(|(k, _)| *k == j).map(|&(_, v)| v)
    }

    /// Coefficient that a regression with the given dropped levels should recover.
    ///
    /// Categorical effects are expressed relative to the dropped level, which is
    /// absorbed into the intercept along with the other families' dropped levels.
    pub fn expected_coefficient(&self, label: &ColumnLabel, refs: &ReferenceLevels) -> Option<f64> {
        let gamma_ref = refs.time.map_or(0.0, |t| self.gamma_time[t as usize]);
        let delta_ref = refs.day_of_week.map_or(0.0, |d| self.delta_dow[d as usize]);
        let rho_ref = refs.region.map_or(0.0, |r| self.rho_region[r.index()]);
        Some(match *label {
            ColumnLabel::Intercept => self.intercept + gamma_ref + delta_ref + rho_ref,
            ColumnLabel::Event(j) => Self::lookup(&self.alpha, j)?,
            ColumnLabel::Concurrent(j) => Self::lookup(&self.beta, j)?,
            ColumnLabel::Time(t) => *self.gamma_time.get(t as usize)? - gamma_ref,
            ColumnLabel::DayOfWeek(d) => self.delta_dow[d as usize] - delta_ref,
            ColumnLabel::Region(r) => self.rho_region[r.index()] - rho_ref,
            ColumnLabel::LogPrevalence => self.phi,
            ColumnLabel::Covariate(c) => self.theta[Covariate::ALL.iter().position(|x| *x == c)?],
        })
    }
}

struct DrawnPath {
    implementation_day: i64,
    changes: Vec<(i64, u8)>,
}

fn draw_path(rng: &mut ChaCha8Rng, day: i64, timing: &PolicyTiming) -> DrawnPath {
    let mut changes = vec![(day, rng.random_range(1..=6u8))];
    if rng.random_bool(timing.change_probability) {
        let delay = rng
            .random_range(timing.change_delay.0..=timing.change_delay.1)
            .max(1);
        changes.push((day + delay, rng.random_range(1..=6u8)));
    }
    DrawnPath {
        implementation_day: day,
        changes,
    }
}

/// Level in force on `day` (days since first case).
fn level_at(path: &DrawnPath, day: i64) -> u8 {
    path.changes
        .iter()
        .rev()
        .find(|(d, _)| *d <= day)
        .map_or(0, |&(_, l)| l)
}

/// Logistic cumulative-case curve, at least one case from day 0.
fn cumulative_curve(rng: &mut ChaCha8Rng, n_days: usize) -> Vec<u64> {
    let size = rng.random_range(7.0..12.0f64).exp();
    let growth = rng.random_range(0.05..0.2);
    let midpoint = rng.random_range(20.0..80.0);
    (0..n_days)
        .map(|t| 1 + (size / (1.0 + (-growth * (t as f64 - midpoint)).exp())).floor() as u64)
        .collect()
}

pub fn simulate_linear_panel(config: &LinearDgpConfig) -> Result<(SimulatedData, LinearTruth)> {
    config.validate()?;
    let codes = iso3_codes();
    let interest = config.policy.index();
    let noise = Normal::new(0.0, config.noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut schedules = Vec::new();
    let mut epi = Vec::new();
    let mut mobility = Vec::new();
    let mut covariates = Vec::new();
    let mut implementation_dates = BTreeMap::new();

    for (i, code) in codes.iter().take(config.n_countries).enumerate() {
        let id = CountryId::new(code)?;
        let mut rng = country_rng(config.seed, i as u64);
        let cov = draw_covariates(&mut rng, &id, i);
        let first_case = draw_first_case_spread(&mut rng, config.start_date, config.first_case_spread);

        let t = &config.timing;
        let interest_day = rng.random_range(t.interest_start.0..=t.interest_start.1);
        let adopts = rng.random_bool(t.interest_adoption);
        let mut paths: Vec<Option<DrawnPath>> = (0..N_POLICIES).map(|_| None).collect();
        for (k, slot) in paths.iter_mut().enumerate() {
            if k == interest {
                let path = draw_path(&mut rng, interest_day, t);
                if adopts {
                    *slot = Some(path);
                }
            } else {
                let offset = rng.random_range(t.other_offset.0..=t.other_offset.1);
                let path = draw_path(&mut rng, interest_day + offset, t);
                if rng.random_bool(t.other_adoption) {
                    *slot = Some(path);
                }
            }
        }

        let cumulative = cumulative_curve(&mut rng, config.n_days);
        let day = |t: i64| first_case + chrono::TimeDelta::days(t);

        let mut series = MobilitySeries::new(id.clone());
        for t in -(config.pre_period_days as i64)..0 {
            let date = day(t);
            let y = config.intercept
                + config.delta_dow[date.weekday().num_days_from_monday() as usize]
                + config.rho_region[cov.region.index()]
                + noise.sample(&mut rng);
            series.insert(config.outcome, date, y).map_err(|e| {
                Error::InvalidConfig(format!("generated outcome leaves the mobility band: {e}"))
            })?;
        }
        for t in 0..config.n_days as i64 {
            let date = day(t);
            let mut y = config.intercept
                + config.gamma_time[t as usize]
                + config.delta_dow[date.weekday().num_days_from_monday() as usize]
                + config.rho_region[cov.region.index()]
                + Covariate::ALL
                    .iter()
                    .zip(&config.theta)
                    .map(|(c, th)| th * c.value(&cov))
                    .sum::<f64>();
            if t > 0 {
                y += config.phi * (cumulative[t as usize - 1] as f64).ln();
            }
            if let Some(path) = &paths[interest] {
                let j = t - path.implementation_day;
                if (config.window_lo..=config.window_hi).contains(&j) {
                    let w = (j - config.window_lo) as usize;
                    let weight = if j >= 0 {
                        level_at(path, t)
                    } else {
                        level_at(path, path.implementation_day)
                    };
                    if j != config.reference {
                        y += config.true_alpha[w] * f64::from(weight);
                    }
                    let active: Vec<u8> = paths
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != interest)
                        .filter_map(|(_, p)| p.as_ref().map(|p| level_at(p, t)))
                        .filter(|&l| l > 0)
                        .collect();
                    if !active.is_empty() {
                        let mean = active.iter().map(|&l| f64::from(l)).sum::<f64>() / active.len() as f64;
                        y += config.true_beta[w] * mean;
                    }
                }
            }
            y += noise.sample(&mut rng);
            series.insert(config.outcome, date, y).map_err(|e| {
                Error::InvalidConfig(format!("generated outcome leaves the mobility band: {e}"))
            })?;
        }
        mobility.push(series);

        let new_cases: Vec<u64> = std::iter::once(cumulative[0])
            .chain(cumulative.windows(2).map(|w| w[1] - w[0]))
            .collect();
        epi.push(EpiSeries::from_new_cases(id.clone(), first_case, new_cases));

        for (k, path) in paths.iter().enumerate() {
            if let Some(path) = path {
                let changes = path.changes.iter().map(|&(d, l)| (day(d), l)).collect();
                schedules.push(PolicySchedule::new(id.clone(), PolicyKind::ALL[k], changes)?);
            }
        }
        implementation_dates.insert(
            id.to_string(),
            paths[interest].as_ref().map(|p| day(p.implementation_day)),
        );
        covariates.push(cov);
    }

    let panel = build_panel(&schedules, &epi, &mobility, &covariates)?;
    let window = config.window_lo..=config.window_hi;
    let truth = LinearTruth {
        policy: config.policy,
        outcome: config.outcome,
        reference: config.reference,
        alpha: window.clone().zip(config.true_alpha.iter().copied()).collect(),
        beta: window.zip(config.true_beta.iter().copied()).collect(),
        intercept: config.intercept,
        gamma_time: config.gamma_time.clone(),
        delta_dow: config.delta_dow,
        rho_region: config.rho_region,
        phi: config.phi,
        theta: config.theta,
        noise_sd: config.noise_sd,
        implementation_dates,
    };
    Ok((
        SimulatedData {
            schedules,
            epi,
            mobility,
            covariates,
            panel,
        },
        truth,
    ))
}
