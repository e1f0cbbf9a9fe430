//! Country-level data model and construction of the aligned country × date panel.
//!
//! Every country contributes one row per calendar day from its first confirmed
//! case to its last observed day. Policy schedules are kept in full so that
//! implementation dates that precede the first case still anchor event time.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iso;

/// Highest intensity level on the policy scale; 0 means inactive.
pub const MAX_INTENSITY: u8 = 6;

/// ISO 3166-1 alpha-3 country code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryId(String);

impl CountryId {
    pub fn new(code: &str) -> Result<Self> {
        if iso::is_known(code) {
            Ok(Self(code.to_owned()))
        } else {
            Err(Error::UnknownCountry(code.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CountryId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(&value)
    }
}

impl From<CountryId> for String {
    fn from(id: CountryId) -> Self {
        id.0
    }
}

impl fmt::Display for CountryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

macro_rules! named_enum {
    (
        $(#[$meta:meta])*
        $name:ident { $($variant:ident => $label:literal $(| $alias:literal)*),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "&'static str")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Canonical name used in files and on the command line.
            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }

            /// Position in the stable reporting order.
            pub fn index(self) -> usize {
                self as usize
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($label $(| $alias)* => Ok($name::$variant),)+
                    _ => Err(Error::InvalidValue(format!(
                        concat!("unknown ", stringify!($name), " {:?}"),
                        s
                    ))),
                }
            }
        }

        impl TryFrom<String> for $name {
            type Error = Error;

            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }

        impl From<$name> for &'static str {
            fn from(v: $name) -> Self {
                v.name()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

named_enum! {
    /// The eight government interventions tracked per country.
    PolicyKind {
        TravelControls => "travel_controls",
        TransportClosure => "transport_closure",
        EventsCancellation => "events_cancellation",
        GatheringsRestrictions => "gatherings_restrictions",
        SchoolClosure => "school_closure",
        WorkplaceClosure => "workplace_closure",
        StayAtHome => "stay_at_home",
        InternalMovement => "internal_movement",
    }
}

named_enum! {
    /// Place categories of the community mobility reports.
    MobilityCategory {
        RetailRecreation => "retail_recreation",
        GroceryPharmacy => "grocery_pharmacy",
        Parks => "parks",
        TransitStations => "transit_stations",
        Workplaces => "workplaces",
        Residential => "residential",
    }
}

named_enum! {
    /// Continental regions. Declared alphabetically so Africa is the reference level.
    Region {
        Africa => "Africa",
        Asia => "Asia",
        Europe => "Europe",
        MiddleEast => "MiddleEast" | "Middle East",
        NorthAmerica => "NorthAmerica" | "North America",
        Oceania => "Oceania",
        SouthAmerica => "SouthAmerica" | "South America",
    }
}

pub const N_POLICIES: usize = 8;
pub const N_MOBILITY: usize = 6;

/// Step function of intensity levels keyed by the dates on which the level changes.
///
/// The level on any date is the level of the latest change on or before it, and
/// 0 before the first change.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntensityPath {
    changes: BTreeMap<NaiveDate, u8>,
}

impl IntensityPath {
    pub fn new(changes: BTreeMap<NaiveDate, u8>) -> std::result::Result<Self, u8> {
        if let Some(&bad) = changes.values().find(|&&l| l > MAX_INTENSITY) {
            return Err(bad);
        }
        Ok(Self { changes })
    }

    pub fn level_on(&self, date: NaiveDate) -> u8 {
        self.changes
            .range(..=date)
            .next_back()
            .map_or(0, |(_, &level)| level)
    }

    /// First date with a positive level.
    pub fn implementation_date(&self) -> Option<NaiveDate> {
        self.changes
            .iter()
            .find(|(_, &level)| level > 0)
            .map(|(&date, _)| date)
    }

    pub fn changes(&self) -> &BTreeMap<NaiveDate, u8> {
        &self.changes
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySchedule {
    pub country: CountryId,
    pub policy: PolicyKind,
    pub intensity: IntensityPath,
}

impl PolicySchedule {
    pub fn new(country: CountryId, policy: PolicyKind, changes: BTreeMap<NaiveDate, u8>) -> Result<Self> {
        let intensity = IntensityPath::new(changes).map_err(|level| Error::IntensityOutOfRange {
            country: country.to_string(),
            level: level.into(),
        })?;
        Ok(Self {
            country,
            policy,
            intensity,
        })
    }

    pub fn implementation_date(&self) -> Option<NaiveDate> {
        self.intensity.implementation_date()
    }
}

/// Daily new and cumulative confirmed cases over a contiguous date range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpiSeries {
    pub country: CountryId,
    pub start: NaiveDate,
    pub new_cases: Vec<u64>,
    pub cumulative: Vec<u64>,
}

impl EpiSeries {
    /// Cumulative counts are the prefix sums of `new_cases` starting from `start`.
    pub fn from_new_cases(country: CountryId, start: NaiveDate, new_cases: Vec<u64>) -> Self {
        let cumulative = new_cases
            .iter()
            .scan(0u64, |acc, &n| {
                *acc += n;
                Some(*acc)
            })
            .collect();
        Self {
            country,
            start,
            new_cases,
            cumulative,
        }
    }

    pub fn date_at(&self, offset: usize) -> NaiveDate {
        self.start + chrono::Days::new(offset as u64)
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn first_case_offset(&self) -> Option<usize> {
        self.cumulative.iter().position(|&c| c >= 1)
    }

    pub fn first_case_date(&self) -> Option<NaiveDate> {
        self.first_case_offset().map(|i| self.date_at(i))
    }

    fn validate(&self) -> Result<()> {
        if self.new_cases.len() != self.cumulative.len() {
            return Err(Error::InvalidValue(format!(
                "{}: new and cumulative case series differ in length",
                self.country
            )));
        }
        for i in 1..self.cumulative.len() {
            let (prev, cur) = (self.cumulative[i - 1], self.cumulative[i]);
            if cur < prev {
                return Err(Error::DecreasingCumulative {
                    country: self.country.to_string(),
                    date: self.date_at(i),
                });
            }
            if cur - prev != self.new_cases[i] {
                return Err(Error::InconsistentNewCases {
                    country: self.country.to_string(),
                    date: self.date_at(i),
                });
            }
        }
        if let (Some(&c0), Some(&n0)) = (self.cumulative.first(), self.new_cases.first()) {
            if n0 > c0 {
                return Err(Error::InconsistentNewCases {
                    country: self.country.to_string(),
                    date: self.start,
                });
            }
        }
        Ok(())
    }
}

/// Percentage-point mobility deviations; absent days are simply not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilitySeries {
    pub country: CountryId,
    values: [BTreeMap<NaiveDate, f64>; N_MOBILITY],
}

impl MobilitySeries {
    pub const BAND: (f64, f64) = (-100.0, 500.0);

    pub fn new(country: CountryId) -> Self {
        Self {
            country,
            values: Default::default(),
        }
    }

    pub fn insert(&mut self, category: MobilityCategory, date: NaiveDate, value: f64) -> Result<()> {
        if !value.is_finite() || value < Self::BAND.0 || value > Self::BAND.1 {
            return Err(Error::MobilityOutOfBand {
                country: self.country.to_string(),
                date,
                value,
            });
        }
        match self.values[category.index()].entry(date) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(value);
                Ok(())
            }
            std::collections::btree_map::Entry::Occupied(_) => Err(Error::DuplicateKey {
                source_name: "mobility",
                country: self.country.to_string(),
                date,
            }),
        }
    }

    pub fn get(&self, category: MobilityCategory, date: NaiveDate) -> Option<f64> {
        self.values[category.index()].get(&date).copied()
    }

    pub fn category(&self, category: MobilityCategory) -> &BTreeMap<NaiveDate, f64> {
        &self.values[category.index()]
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(BTreeMap::is_empty)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryCovariates {
    pub country: CountryId,
    pub region: Region,
    pub gdp_per_capita: f64,
    pub population: f64,
    pub population_density: f64,
    pub urbanization_rate: f64,
}

impl CountryCovariates {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidCovariates {
            country: self.country.to_string(),
            reason,
        };
        for (name, v) in [
            ("gdp_per_capita", self.gdp_per_capita),
            ("population", self.population),
            ("population_density", self.population_density),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let u = self.urbanization_rate;
        if !(u.is_finite() && (0.0..=100.0).contains(&u)) {
            return Err(invalid(format!(
                "urbanization_rate must lie in [0, 100], got {u}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    /// Index into [`Panel::countries`].
    pub country: usize,
    pub date: NaiveDate,
    /// Days since the country's first confirmed case.
    pub t: i64,
    /// 0 = Monday.
    pub day_of_week: u8,
    pub new_cases: u64,
    pub cumulative_lag1: u64,
    pub intensity: [u8; N_POLICIES],
    pub mobility: [Option<f64>; N_MOBILITY],
}

impl PanelRow {
    pub fn intensity_of(&self, policy: PolicyKind) -> u8 {
        self.intensity[policy.index()]
    }

    /// Mean level of the other policies active on this row; 0 when none is.
    pub fn concurrent_mean_intensity(&self, policy: PolicyKind) -> f64 {
        mean_of_active_others(&self.intensity, policy)
    }
}

fn mean_of_active_others(levels: &[u8; N_POLICIES], policy: PolicyKind) -> f64 {
    let (sum, count) = levels
        .iter()
        .enumerate()
        .filter(|&(i, &l)| i != policy.index() && l > 0)
        .fold((0u32, 0u32), |(s, c), (_, &l)| (s + u32::from(l), c + 1));
    if count == 0 {
        0.0
    } else {
        f64::from(sum) / f64::from(count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryPanel {
    pub id: CountryId,
    pub covariates: CountryCovariates,
    pub first_case_date: NaiveDate,
    pub last_date: NaiveDate,
    pub rows: Range<usize>,
    pub schedules: [IntensityPath; N_POLICIES],
}

impl CountryPanel {
    pub fn schedule(&self, policy: PolicyKind) -> &IntensityPath {
        &self.schedules[policy.index()]
    }
}

/// Rectangular country × date table aligned on days since first case.
///
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    rows: Vec<PanelRow>,
    countries: Vec<CountryPanel>,
}

impl Panel {
    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn countries(&self) -> &[CountryPanel] {
        &self.countries
    }

    pub fn country_index(&self, id: &CountryId) -> Option<usize> {
        self.countries.binary_search_by(|c| c.id.cmp(id)).ok()
    }

    pub fn country(&self, id: &CountryId) -> Option<&CountryPanel> {
        self.country_index(id).map(|i| &self.countries[i])
    }

    pub fn country_rows(&self, index: usize) -> &[PanelRow] {
        &self.rows[self.countries[index].rows.clone()]
    }

    pub fn row_at(&self, id: &CountryId, date: NaiveDate) -> Option<&PanelRow> {
        let c = self.country(id)?;
        if date < c.first_case_date || date > c.last_date {
            return None;
        }
        let offset = (date - c.first_case_date).num_days() as usize;
        self.rows.get(c.rows.start + offset)
    }

    /// Days between `date` and the implementation day of `policy`, or `None`
    /// when the policy never activates in that country.
    pub fn event_time(&self, id: &CountryId, policy: PolicyKind, date: NaiveDate) -> Option<i64> {
        let implemented = self.country(id)?.schedule(policy).implementation_date()?;
        Some((date - implemented).num_days())
    }

    /// Mean intensity of the other seven policies that are active on `date`.
    pub fn concurrent_mean_intensity(&self, id: &CountryId, policy: PolicyKind, date: NaiveDate) -> f64 {
        let Some(c) = self.country(id) else {
            return 0.0;
        };
        let levels: [u8; N_POLICIES] = std::array::from_fn(|i| c.schedules[i].level_on(date));
        mean_of_active_others(&levels, policy)
    }
}

fn check_covariates_unique(
    covariates: &[CountryCovariates],
) -> Result<BTreeMap<&CountryId, &CountryCovariates>> {
    let mut by_country = BTreeMap::new();
    for cov in covariates {
        cov.validate()?;
        if by_country.insert(&cov.country, cov).is_some() {
            return Err(Error::InvalidCovariates {
                country: cov.country.to_string(),
                reason: "listed more than once".into(),
            });
        }
    }
    Ok(by_country)
}

/// Assemble the panel from per-source collections.
///
/// Countries without any confirmed case contribute no rows. Missing schedules
/// are all-zero and missing mobility is absent.
pub fn build_panel(
    schedules: &[PolicySchedule],
    epi: &[EpiSeries],
    mobility: &[MobilitySeries],
    covariates: &[CountryCovariates],
) -> Result<Panel> {
    let covariates = check_covariates_unique(covariates)?;

    let mut paths: BTreeMap<(&CountryId, PolicyKind), &IntensityPath> = BTreeMap::new();
    for s in schedules {
        if paths.insert((&s.country, s.policy), &s.intensity).is_some() {
            return Err(Error::DuplicateKey {
                source_name: "policy",
                country: s.country.to_string(),
                date: s.implementation_date().unwrap_or(NaiveDate::MIN),
            });
        }
    }

    let mut mobility_by_country: BTreeMap<&CountryId, &MobilitySeries> = BTreeMap::new();
    for m in mobility {
        if mobility_by_country.insert(&m.country, m).is_some() {
            let date = m
                .values
                .iter()
                .filter_map(|v| v.keys().next())
                .min()
                .copied()
                .unwrap_or(NaiveDate::MIN);
            return Err(Error::DuplicateKey {
                source_name: "mobility",
                country: m.country.to_string(),
                date,
            });
        }
    }

    let mut epi_by_country: BTreeMap<&CountryId, &EpiSeries> = BTreeMap::new();
    for series in epi {
        series.validate()?;
        if let Some(other) = epi_by_country.insert(&series.country, series) {
            let overlap = series.start.max(other.start);
            return Err(Error::DuplicateKey {
                source_name: "cases",
                country: series.country.to_string(),
                date: overlap,
            });
        }
        if !covariates.contains_key(&series.country) {
            return Err(Error::MissingCovariates(series.country.to_string()));
        }
    }

    let mut rows = Vec::new();
    let mut countries = Vec::new();
    for (&id, series) in &epi_by_country {
        let Some(first) = series.first_case_offset() else {
            continue;
        };
        let schedules: [IntensityPath; N_POLICIES] = std::array::from_fn(|i| {
            paths
                .get(&(id, PolicyKind::ALL[i]))
                .map(|&p| p.clone())
                .unwrap_or_default()
        });
        let mob = mobility_by_country.get(id);
        let index = countries.len();
        let start_row = rows.len();
        for offset in first..series.len() {
            let date = series.date_at(offset);
            let cumulative_lag1 = series.cumulative[offset] - series.new_cases[offset];
            rows.push(PanelRow {
                country: index,
                date,
                t: (offset - first) as i64,
                day_of_week: date.weekday().num_days_from_monday() as u8,
                new_cases: series.new_cases[offset],
                cumulative_lag1,
                intensity: std::array::from_fn(|i| schedules[i].level_on(date)),
                mobility: std::array::from_fn(|i| mob.and_then(|m| m.get(MobilityCategory::ALL[i], date))),
            });
        }
        countries.push(CountryPanel {
            id: id.clone(),
            covariates: covariates[id].clone(),
            first_case_date: series.date_at(first),
            last_date: series.date_at(series.len() - 1),
            rows: start_row..rows.len(),
            schedules,
        });
    }

    Ok(Panel { rows, countries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn id(code: &str) -> CountryId {
        CountryId::new(code).unwrap()
    }

    fn cov(code: &str) -> CountryCovariates {
        CountryCovariates {
            country: id(code),
            region: Region::Africa,
            gdp_per_capita: 1000.0,
            population: 1e6,
            population_density: 50.0,
            urbanization_rate: 40.0,
        }
    }

    fn schedule(code: &str, policy: PolicyKind, changes: &[(&str, u8)]) -> PolicySchedule {
        PolicySchedule::new(
            id(code),
            policy,
            changes.iter().map(|&(date, l)| (d(date), l)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn policy_names_round_trip_in_stable_order() {
        assert_eq!(PolicyKind::ALL.len(), 8);
        for (i, p) in PolicyKind::ALL.iter().enumerate() {
            assert_eq!(p.index(), i);
            assert_eq!(p.name().parse::<PolicyKind>().unwrap(), *p);
        }
        assert_eq!(Region::ALL.len(), 7);
        assert_eq!("Middle East".parse::<Region>().unwrap(), Region::MiddleEast);
        assert!("Antarctica".parse::<Region>().is_err());
    }

    #[test]
    fn ten_days_give_ten_rows() {
        let epi = EpiSeries::from_new_cases(id("FRA"), d("2020-03-01"), vec![1; 10]);
        let panel = build_panel(&[], &[epi], &[], &[cov("FRA")]).unwrap();
        assert_eq!(panel.rows().len(), 10);
        let ts: Vec<i64> = panel.rows().iter().map(|r| r.t).collect();
        assert_eq!(ts, (0..10).collect::<Vec<_>>());
        assert_eq!(panel.rows()[0].cumulative_lag1, 0);
        assert_eq!(panel.rows()[3].cumulative_lag1, 3);
        // 2020-03-01 was a Sunday.
        assert_eq!(panel.rows()[0].day_of_week, 6);
    }

    #[test]
    fn rows_start_at_first_case() {
        let epi = EpiSeries::from_new_cases(id("FRA"), d("2020-02-25"), vec![0, 0, 2, 0, 1]);
        let panel = build_panel(&[], &[epi], &[], &[cov("FRA")]).unwrap();
        assert_eq!(panel.rows().len(), 3);
        assert_eq!(panel.countries()[0].first_case_date, d("2020-02-27"));
    }

    #[test]
    fn country_without_school_policy_has_zero_intensity() {
        let epi = EpiSeries::from_new_cases(id("BDI"), d("2020-03-31"), vec![2, 0, 1, 0]);
        let travel = schedule("BDI", PolicyKind::TravelControls, &[("2020-03-15", 3)]);
        let panel = build_panel(&[travel], &[epi], &[], &[cov("BDI")]).unwrap();
        for row in panel.rows() {
            assert_eq!(row.intensity_of(PolicyKind::SchoolClosure), 0);
            assert_eq!(row.intensity_of(PolicyKind::TravelControls), 3);
            assert!(row.mobility.iter().all(Option::is_none));
        }
    }

    #[test]
    fn decreasing_cumulative_is_rejected() {
        let epi = EpiSeries {
            country: id("FRA"),
            start: d("2020-03-01"),
            new_cases: vec![3, 0],
            cumulative: vec![3, 2],
        };
        let err = build_panel(&[], &[epi], &[], &[cov("FRA")]).unwrap_err();
        assert!(matches!(err, Error::DecreasingCumulative { .. }), "{err}");
    }

    #[test]
    fn duplicate_sources_are_rejected() {
        let a = EpiSeries::from_new_cases(id("FRA"), d("2020-03-01"), vec![1, 1]);
        let b = EpiSeries::from_new_cases(id("FRA"), d("2020-03-02"), vec![1]);
        let err = build_panel(&[], &[a.clone(), b], &[], &[cov("FRA")]).unwrap_err();
        match err {
            Error::DuplicateKey { country, date, .. } => {
                assert_eq!(country, "FRA");
                assert_eq!(date, d("2020-03-02"));
            }
            other => panic!("unexpected {other}"),
        }

        let s = schedule("FRA", PolicyKind::StayAtHome, &[("2020-03-01", 1)]);
        let err = build_panel(&[s.clone(), s], &[a], &[], &[cov("FRA")]).unwrap_err();
        assert!(matches!(
            err,
            Error::DuplicateKey {
                source_name: "policy",
                ..
            }
        ));
    }

    #[test]
    fn missing_covariates_is_an_error() {
        let epi = EpiSeries::from_new_cases(id("FRA"), d("2020-03-01"), vec![1]);
        assert!(matches!(
            build_panel(&[], &[epi], &[], &[]),
            Err(Error::MissingCovariates(_))
        ));
    }

    #[test]
    fn event_time_arithmetic() {
        let epi = EpiSeries::from_new_cases(id("ITA"), d("2020-03-01"), vec![1; 20]);
        let s = schedule("ITA", PolicyKind::SchoolClosure, &[("2020-03-10", 4)]);
        let panel = build_panel(&[s], &[epi], &[], &[cov("ITA")]).unwrap();
        let ita = id("ITA");
        assert_eq!(
            panel.event_time(&ita, PolicyKind::SchoolClosure, d("2020-03-10")),
            Some(0)
        );
        assert_eq!(
            panel.event_time(&ita, PolicyKind::SchoolClosure, d("2020-03-05")),
            Some(-5)
        );
        assert_eq!(
            panel.event_time(&ita, PolicyKind::StayAtHome, d("2020-03-05")),
            None
        );
    }

    #[test]
    fn implementation_before_first_case_is_kept() {
        let epi = EpiSeries::from_new_cases(id("ITA"), d("2020-03-01"), vec![1; 5]);
        let s = schedule(
            "ITA",
            PolicyKind::TravelControls,
            &[("2020-02-20", 0), ("2020-02-21", 2)],
        );
        let panel = build_panel(&[s], &[epi], &[], &[cov("ITA")]).unwrap();
        assert_eq!(
            panel.event_time(&id("ITA"), PolicyKind::TravelControls, d("2020-03-01")),
            Some(9)
        );
    }

    #[test]
    fn concurrent_mean_examples() {
        let epi = EpiSeries::from_new_cases(id("ITA"), d("2020-03-01"), vec![1; 3]);
        let day = d("2020-03-02");
        let mut schedules = vec![schedule("ITA", PolicyKind::SchoolClosure, &[("2020-03-01", 3)])];
        let panel = build_panel(&schedules, std::slice::from_ref(&epi), &[], &[cov("ITA")]).unwrap();
        assert_eq!(
            panel.concurrent_mean_intensity(&id("ITA"), PolicyKind::SchoolClosure, day),
            0.0
        );

        schedules.push(schedule("ITA", PolicyKind::StayAtHome, &[("2020-03-01", 4)]));
        schedules.push(schedule(
            "ITA",
            PolicyKind::WorkplaceClosure,
            &[("2020-03-02", 6)],
        ));
        let panel = build_panel(&schedules, std::slice::from_ref(&epi), &[], &[cov("ITA")]).unwrap();
        assert_eq!(
            panel.concurrent_mean_intensity(&id("ITA"), PolicyKind::SchoolClosure, day),
            5.0
        );
        let row = panel.row_at(&id("ITA"), day).unwrap();
        assert_eq!(row.concurrent_mean_intensity(PolicyKind::SchoolClosure), 5.0);

        let all: Vec<_> = PolicyKind::ALL
            .iter()
            .map(|&p| schedule("ITA", p, &[("2020-03-01", 6)]))
            .collect();
        let panel = build_panel(&all, &[epi], &[], &[cov("ITA")]).unwrap();
        assert_eq!(
            panel.concurrent_mean_intensity(&id("ITA"), PolicyKind::SchoolClosure, day),
            6.0
        );
    }

    #[test]
    fn intensity_path_carries_levels_forward() {
        let s = schedule(
            "GBR",
            PolicyKind::SchoolClosure,
            &[("2020-03-10", 4), ("2020-03-20", 6)],
        );
        assert_eq!(s.intensity.level_on(d("2020-03-09")), 0);
        assert_eq!(s.intensity.level_on(d("2020-03-15")), 4);
        assert_eq!(s.intensity.level_on(d("2020-03-20")), 6);
        assert_eq!(s.implementation_date(), Some(d("2020-03-10")));
        assert!(PolicySchedule::new(
            id("GBR"),
            PolicyKind::SchoolClosure,
            [(d("2020-03-10"), 7)].into()
        )
        .is_err());
    }

    #[test]
    fn mobility_band_and_missing_days() {
        let mut m = MobilitySeries::new(id("DEU"));
        m.insert(MobilityCategory::TransitStations, d("2020-03-02"), -40.0)
            .unwrap();
        assert!(m.insert(MobilityCategory::Parks, d("2020-03-02"), 700.0).is_err());
        assert!(m
            .insert(MobilityCategory::TransitStations, d("2020-03-02"), 1.0)
            .is_err());
        assert_eq!(
            m.get(MobilityCategory::TransitStations, d("2020-03-02")),
            Some(-40.0)
        );
        assert_eq!(m.get(MobilityCategory::TransitStations, d("2020-03-03")), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn row_count_and_bounds(
                lens in prop::collection::vec((0usize..5, 1usize..30), 1..5),
                levels in prop::collection::vec((0i64..40, 0u8..=6), 0..12),
            ) {
                let codes = ["AUT", "BEL", "CHE", "DNK", "ESP"];
                let base = d("2020-02-01");
                let mut epi = Vec::new();
                let mut covs = Vec::new();
                let mut expected_rows = 0;
                for (i, &(lead, len)) in lens.iter().enumerate() {
                    let mut cases = vec![0; lead];
                    cases.extend(std::iter::repeat_n(2, len));
                    expected_rows += len;
                    epi.push(EpiSeries::from_new_cases(id(codes[i]), base, cases));
                    covs.push(cov(codes[i]));
                }
                let mut scheds = Vec::new();
                for (k, p) in PolicyKind::ALL.iter().enumerate() {
                    let changes: BTreeMap<_, _> = levels
                        .iter()
                        .skip(k)
                        .step_by(3)
                        .map(|&(day, l)| (base + chrono::Days::new(day as u64), l))
                        .collect();
                    scheds.push(PolicySchedule::new(id(codes[0]), *p, changes).unwrap());
                }
                let panel = build_panel(&scheds, &epi, &[], &covs).unwrap();
                prop_assert_eq!(panel.rows().len(), expected_rows);
                for row in panel.rows() {
                    prop_assert!(row.intensity.iter().all(|&l| l <= MAX_INTENSITY));
                    let c = &panel.countries()[row.country];
                    prop_assert_eq!(row.t, (row.date - c.first_case_date).num_days());
                    for &p in PolicyKind::ALL {
                        let m = panel.concurrent_mean_intensity(&c.id, p, row.date);
                        prop_assert!((0.0..=6.0).contains(&m));
                        let any_other = PolicyKind::ALL.iter().any(|&q| q != p && row.intensity_of(q) > 0);
                        prop_assert_eq!(m == 0.0, !any_other);
                        if let Some(imp) = c.schedule(p).implementation_date() {
                            prop_assert_eq!(panel.event_time(&c.id, p, imp), Some(0));
                            prop_assert!(c.schedule(p).level_on(imp) > 0);
                            prop_assert!(c.schedule(p).level_on(imp - chrono::Days::new(1)) == 0
                                || c.schedule(p).changes().range(..imp).all(|(_, &l)| l == 0));
                        }
                    }
                }
            }
        }
    }
}
