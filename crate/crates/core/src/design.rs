//! Response vector and regressor matrix for one (policy, outcome, variant) regression.
//!
//! Column families, in order: intercept, event-time terms for the policy of
//! interest, concurrent-policy terms (multi-event variants only), days-since-
//! first-case dummies, day-of-week dummies, region dummies, lagged log
//! prevalence, and country covariates. Each categorical family drops its
//! smallest level observed in the sample.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{CountryId, Panel, PolicyKind, Region};
use crate::transforms::{self, OutcomeKind};

pub const DEFAULT_WINDOW_LO: i64 = -20;
pub const DEFAULT_WINDOW_HI: i64 = 35;
pub const DEFAULT_REFERENCE: i64 = -20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "&'static str")]
pub enum Variant {
    /// Event-time dummies only.
    SingleEventDummy,
    /// Event-time dummies plus any-other-policy dummies per event time.
    MultiEventDummy,
    /// Intensity-weighted event terms, no concurrent control.
    SingleEventIntensity,
    /// Intensity-weighted event terms plus mean concurrent intensity per event time.
    MultiEventIntensity,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::SingleEventDummy,
        Variant::MultiEventDummy,
        Variant::SingleEventIntensity,
        Variant::MultiEventIntensity,
    ];

    pub fn is_multi(self) -> bool {
        matches!(self, Variant::MultiEventDummy | Variant::MultiEventIntensity)
    }

    pub fn uses_intensity(self) -> bool {
        matches!(self, Variant::SingleEventIntensity | Variant::MultiEventIntensity)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::SingleEventDummy => "eq1",
            Variant::MultiEventDummy => "eq2",
            Variant::SingleEventIntensity => "eq3-single",
            Variant::MultiEventIntensity => "eq3",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown variant {s:?} (eq1|eq2|eq3-single|eq3)")))
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Variant> for &'static str {
    fn from(v: Variant) -> Self {
        v.name()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Controls {
    pub time: bool,
    pub day_of_week: bool,
    pub region: bool,
    pub prevalence: bool,
    pub covariates: bool,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            time: true,
            day_of_week: true,
            region: true,
            prevalence: true,
            covariates: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterBy {
    #[default]
    Country,
}

impl FromStr for ClusterBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "country" => Ok(ClusterBy::Country),
            other => Err(Error::InvalidValue(format!("unknown cluster level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimationSpec {
    pub policy: PolicyKind,
    pub outcome: OutcomeKind,
    pub window_lo: i64,
    pub window_hi: i64,
    pub reference: i64,
    pub variant: Variant,
    pub controls: Controls,
    pub cluster_by: ClusterBy,
}

impl EstimationSpec {
    /// Window −20..+35 with reference −20, all controls on.
    pub fn new(policy: PolicyKind, outcome: OutcomeKind, variant: Variant) -> Self {
        Self {
            policy,
            outcome,
            window_lo: DEFAULT_WINDOW_LO,
            window_hi: DEFAULT_WINDOW_HI,
            reference: DEFAULT_REFERENCE,
            variant,
            controls: Controls::default(),
            cluster_by: ClusterBy::Country,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_lo >= self.window_hi {
            return Err(Error::InvalidSpec(format!(
                "window [{}, {}] is empty",
                self.window_lo, self.window_hi
            )));
        }
        if !self.in_window(self.reference) {
            return Err(Error::InvalidSpec(format!(
                "reference event time {} outside window [{}, {}]",
                self.reference, self.window_lo, self.window_hi
            )));
        }
        Ok(())
    }

    pub fn in_window(&self, j: i64) -> bool {
        (self.window_lo..=self.window_hi).contains(&j)
    }

    pub fn event_times(&self) -> impl Iterator<Item = i64> {
        self.window_lo..=self.window_hi
    }

    /// Stable identifier used for output file names.
    pub fn id(&self) -> String {
        format!("{}__{}__{}", self.policy, self.outcome, self.variant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Covariate {
    LnGdpPerCapita,
    LnPopulation,
    LnPopulationDensity,
    Urbanization,
}

impl Covariate {
    pub const ALL: [Covariate; 4] = [
        Covariate::LnGdpPerCapita,
        Covariate::LnPopulation,
        Covariate::LnPopulationDensity,
        Covariate::Urbanization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Covariate::LnGdpPerCapita => "ln_gdp_pc",
            Covariate::LnPopulation => "ln_population",
            Covariate::LnPopulationDensity => "ln_pop_density",
            Covariate::Urbanization => "urbanization",
        }
    }

    pub fn value(self, cov: &crate::panel::CountryCovariates) -> f64 {
        match self {
            Covariate::LnGdpPerCapita => cov.gdp_per_capita.ln(),
            Covariate::LnPopulation => cov.population.ln(),
            Covariate::LnPopulationDensity => cov.population_density.ln(),
            Covariate::Urbanization => cov.urbanization_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnLabel {
    Intercept,
    Event(i64),
    Concurrent(i64),
    Time(i64),
    DayOfWeek(u8),
    Region(Region),
    LogPrevalence,
    Covariate(Covariate),
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLabel::Intercept => write!(f, "intercept"),
            ColumnLabel::Event(j) => write!(f, "event[j={j}]"),
            ColumnLabel::Concurrent(j) => write!(f, "conc[j={j}]"),
            ColumnLabel::Time(t) => write!(f, "time[t={t}]"),
            ColumnLabel::DayOfWeek(d) => write!(f, "dow[{d}]"),
            ColumnLabel::Region(r) => write!(f, "region[{r}]"),
            ColumnLabel::LogPrevalence => write!(f, "lnprev"),
            ColumnLabel::Covariate(c) => write!(f, "cov[{}]", c.name()),
        }
    }
}

/// Levels absorbed into the intercept, one per categorical family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReferenceLevels {
    pub time: Option<i64>,
    pub day_of_week: Option<u8>,
    pub region: Option<Region>,
}

#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub column_labels: Vec<ColumnLabel>,
    /// Cluster index per row.
    pub clusters: Vec<usize>,
    pub cluster_names: Vec<String>,
    pub row_keys: Vec<(CountryId, NaiveDate)>,
    pub reference_levels: ReferenceLevels,
}

impl DesignProblem {
    /// Bare problem without panel metadata.
    pub fn from_parts(
        y: Vec<f64>,
        x: DMatrix<f64>,
        column_labels: Vec<ColumnLabel>,
        clusters: Vec<usize>,
    ) -> Self {
        assert_eq!(y.len(), x.nrows(), "response and design row counts differ");
        assert_eq!(column_labels.len(), x.ncols(), "one label per column");
        assert_eq!(clusters.len(), y.len(), "one cluster per row");
        let n_clusters = clusters.iter().max().map_or(0, |&m| m + 1);
        Self {
            y,
            x,
            column_labels,
            clusters,
            cluster_names: (0..n_clusters).map(|g| g.to_string()).collect(),
            row_keys: Vec::new(),
            reference_levels: ReferenceLevels::default(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_clusters(&self) -> usize {
        let mut seen: Vec<usize> = self.clusters.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn column_index(&self, label: &ColumnLabel) -> Option<usize> {
        self.column_labels.iter().position(|l| l == label)
    }
}

/// Value of the intensity-weighted event term for the policy of interest.
///
/// From the implementation day on it is the level in force on `date`; before
/// it, the level set on the implementation day. Zero outside the window or
/// when the policy never activates.
pub fn s_pi(
    panel: &Panel,
    country: &CountryId,
    policy: PolicyKind,
    date: NaiveDate,
    spec: &EstimationSpec,
) -> f64 {
    let Some(c) = panel.country(country) else {
        return 0.0;
    };
    let path = c.schedule(policy);
    let Some(implemented) = path.implementation_date() else {
        return 0.0;
    };
    let j = (date - implemented).num_days();
    if !spec.in_window(j) {
        return 0.0;
    }
    let level = if j >= 0 {
        path.level_on(date)
    } else {
        path.level_on(implemented)
    };
    f64::from(level)
}

struct SampleRow {
    row: usize,
    y: f64,
    lnprev: f64,
    event_time: Option<i64>,
}

pub fn build_design(panel: &Panel, spec: &EstimationSpec) -> Result<DesignProblem> {
    spec.validate()?;
    let policy = spec.policy;

    let mut sample = Vec::new();
    for (ci, country) in panel.countries().iter().enumerate() {
        let rows = panel.country_rows(ci);
        let smoothed = match spec.outcome {
            OutcomeKind::CasesIhsMa3 => transforms::smoothed_cases(rows),
            _ => Vec::new(),
        };
        let implemented = country.schedule(policy).implementation_date();
        for (k, row) in rows.iter().enumerate() {
            let (Some(y), Some(lnprev)) = (
                transforms::outcome_value(row, spec.outcome, &smoothed),
                transforms::log_prevalence_lag(row),
            ) else {
                continue;
            };
            sample.push(SampleRow {
                row: country.rows.start + k,
                y,
                lnprev,
                event_time: implemented.map(|d| (row.date - d).num_days()),
            });
        }
    }

    if sample.is_empty() {
        return Err(Error::EmptySample(format!(
            "rows need a defined {} outcome and a positive lagged cumulative case count",
            spec.outcome
        )));
    }
    if !sample
        .iter()
        .any(|s| s.event_time.is_some_and(|j| spec.in_window(j)))
    {
        return Err(Error::EmptyWindow {
            policy: policy.to_string(),
            lo: spec.window_lo,
            hi: spec.window_hi,
        });
    }

    let rows = panel.rows();
    let countries = panel.countries();
    let times: BTreeSet<i64> = sample.iter().map(|s| rows[s.row].t).collect();
    let dows: BTreeSet<u8> = sample.iter().map(|s| rows[s.row].day_of_week).collect();
    let regions: BTreeSet<Region> = sample
        .iter()
        .map(|s| countries[rows[s.row].country].covariates.region)
        .collect();
    let reference_levels = ReferenceLevels {
        time: spec.controls.time.then(|| *times.first().unwrap()),
        day_of_week: spec.controls.day_of_week.then(|| *dows.first().unwrap()),
        region: spec.controls.region.then(|| *regions.first().unwrap()),
    };

    let mut labels = vec![ColumnLabel::Intercept];
    let event_start = labels.len();
    labels.extend(
        spec.event_times()
            .filter(|&j| j != spec.reference)
            .map(ColumnLabel::Event),
    );
    let conc_start = labels.len();
    if spec.variant.is_multi() {
        labels.extend(spec.event_times().map(ColumnLabel::Concurrent));
    }
    if spec.controls.time {
        labels.extend(times.iter().skip(1).map(|&t| ColumnLabel::Time(t)));
    }
    if spec.controls.day_of_week {
        labels.extend(dows.iter().skip(1).map(|&d| ColumnLabel::DayOfWeek(d)));
    }
    if spec.controls.region {
        labels.extend(regions.iter().skip(1).map(|&r| ColumnLabel::Region(r)));
    }
    if spec.controls.prevalence {
        labels.push(ColumnLabel::LogPrevalence);
    }
    if spec.controls.covariates {
        labels.extend(Covariate::ALL.map(ColumnLabel::Covariate));
    }

    let index_of = |label: ColumnLabel| labels.iter().position(|l| *l == label);
    let time_col = |t: i64| times.range(..t).count();
    let dow_col = |d: u8| dows.range(..d).count();
    let region_col = |r: Region| regions.range(..r).count();
    let time_base = index_of(ColumnLabel::Time(*times.iter().nth(1).unwrap_or(&i64::MAX)));
    let dow_base = index_of(ColumnLabel::DayOfWeek(*dows.iter().nth(1).unwrap_or(&u8::MAX)));
    let region_base = regions
        .iter()
        .nth(1)
        .and_then(|&r| index_of(ColumnLabel::Region(r)));
    let prev_col = index_of(ColumnLabel::LogPrevalence);
    let cov_base = index_of(ColumnLabel::Covariate(Covariate::LnGdpPerCapita));

    let implementation_levels: Vec<u8> = countries
        .iter()
        .map(|c| {
            let path = c.schedule(policy);
            path.implementation_date().map_or(0, |d| path.level_on(d))
        })
        .collect();

    let n = sample.len();
    let p = labels.len();
    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut y = Vec::with_capacity(n);
    let mut clusters = Vec::with_capacity(n);
    let mut row_keys = Vec::with_capacity(n);

    for (i, s) in sample.iter().enumerate() {
        let row = &rows[s.row];
        let country = &countries[row.country];
        y.push(s.y);
        clusters.push(row.country);
        row_keys.push((country.id.clone(), row.date));

        x[(i, 0)] = 1.0;
        if let Some(j) = s.event_time.filter(|&j| spec.in_window(j)) {
            if j != spec.reference {
                let offset = (j - spec.window_lo) as usize;
                let col = event_start + offset - usize::from(j > spec.reference);
                x[(i, col)] = if !spec.variant.uses_intensity() {
                    1.0
                } else if j >= 0 {
                    f64::from(row.intensity_of(policy))
                } else {
                    f64::from(implementation_levels[row.country])
                };
            }
            if spec.variant.is_multi() {
                let col = conc_start + (j - spec.window_lo) as usize;
                x[(i, col)] = if spec.variant.uses_intensity() {
                    row.concurrent_mean_intensity(policy)
                } else {
                    let any_other = PolicyKind::ALL
                        .iter()
                        .any(|&q| q != policy && row.intensity_of(q) > 0);
                    if any_other {
                        1.0
                    } else {
                        0.0
                    }
                };
            }
        }
        if let Some(base) = time_base {
            let k = time_col(row.t);
            if k > 0 {
                x[(i, base + k - 1)] = 1.0;
            }
        }
        if let Some(base) = dow_base {
            let k = dow_col(row.day_of_week);
            if k > 0 {
                x[(i, base + k - 1)] = 1.0;
            }
        }
        if let Some(base) = region_base {
            let k = region_col(country.covariates.region);
            if k > 0 {
                x[(i, base + k - 1)] = 1.0;
            }
        }
        if let Some(col) = prev_col {
            x[(i, col)] = s.lnprev;
        }
        if let Some(base) = cov_base {
            for (k, c) in Covariate::ALL.iter().enumerate() {
                x[(i, base + k)] = c.value(&country.covariates);
            }
        }
    }

    Ok(DesignProblem {
        y,
        x,
        column_labels: labels,
        clusters,
        cluster_names: countries.iter().map(|c| c.id.to_string()).collect(),
        row_keys,
        reference_levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{
        build_panel, CountryCovariates, EpiSeries, MobilityCategory, MobilitySeries, PolicySchedule,
    };

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn id(code: &str) -> CountryId {
        CountryId::new(code).unwrap()
    }

    fn cov(code: &str, region: Region, k: f64) -> CountryCovariates {
        CountryCovariates {
            country: id(code),
            region,
            gdp_per_capita: 1000.0 * k,
            population: 1e6 * k * k,
            population_density: 50.0 + k,
            urbanization_rate: 30.0 + 3.0 * k,
        }
    }

    /// Three countries over 80 days: two adopt school closure at different
    /// dates with escalation, one never does.
    fn fixture() -> Panel {
        let codes = [
            ("AUT", Region::Europe),
            ("KEN", Region::Africa),
            ("PER", Region::SouthAmerica),
        ];
        let start = d("2020-03-01");
        let mut epi = Vec::new();
        let mut covs = Vec::new();
        let mut mob = Vec::new();
        for (k, &(code, region)) in codes.iter().enumerate() {
            let cases: Vec<u64> = (0..80).map(|t| 1 + (t * (k as u64 + 1)) % 7).collect();
            epi.push(EpiSeries::from_new_cases(
                id(code),
                start + chrono::Days::new(k as u64),
                cases,
            ));
            covs.push(cov(code, region, k as f64 + 1.0));
            let mut m = MobilitySeries::new(id(code));
            for t in 0..80 {
                m.insert(
                    MobilityCategory::Residential,
                    start + chrono::Days::new(t),
                    t as f64 / 10.0,
                )
                .unwrap();
            }
            mob.push(m);
        }
        let scheds = vec![
            PolicySchedule::new(
                id("AUT"),
                PolicyKind::SchoolClosure,
                [(d("2020-03-30"), 4), (d("2020-04-09"), 6)].into(),
            )
            .unwrap(),
            PolicySchedule::new(
                id("KEN"),
                PolicyKind::SchoolClosure,
                [(d("2020-04-10"), 2)].into(),
            )
            .unwrap(),
            PolicySchedule::new(id("AUT"), PolicyKind::StayAtHome, [(d("2020-03-25"), 3)].into()).unwrap(),
            PolicySchedule::new(
                id("AUT"),
                PolicyKind::WorkplaceClosure,
                [(d("2020-04-01"), 5)].into(),
            )
            .unwrap(),
            PolicySchedule::new(id("PER"), PolicyKind::StayAtHome, [(d("2020-03-20"), 6)].into()).unwrap(),
        ];
        build_panel(&scheds, &epi, &mob, &covs).unwrap()
    }

    fn spec(variant: Variant) -> EstimationSpec {
        EstimationSpec::new(PolicyKind::SchoolClosure, OutcomeKind::CasesIhsMa3, variant)
    }

    fn event_cols(p: &DesignProblem) -> Vec<usize> {
        (0..p.n_cols())
            .filter(|&c| matches!(p.column_labels[c], ColumnLabel::Event(_)))
            .collect()
    }

    fn conc_cols(p: &DesignProblem) -> Vec<usize> {
        (0..p.n_cols())
            .filter(|&c| matches!(p.column_labels[c], ColumnLabel::Concurrent(_)))
            .collect()
    }

    #[test]
    fn label_strings() {
        assert_eq!(ColumnLabel::Event(-19).to_string(), "event[j=-19]");
        assert_eq!(ColumnLabel::Concurrent(0).to_string(), "conc[j=0]");
        assert_eq!(ColumnLabel::Time(37).to_string(), "time[t=37]");
        assert_eq!(ColumnLabel::DayOfWeek(3).to_string(), "dow[3]");
        assert_eq!(ColumnLabel::Region(Region::Europe).to_string(), "region[Europe]");
        assert_eq!(ColumnLabel::LogPrevalence.to_string(), "lnprev");
        assert_eq!(
            ColumnLabel::Covariate(Covariate::LnGdpPerCapita).to_string(),
            "cov[ln_gdp_pc]"
        );
    }

    #[test]
    fn spec_validation() {
        let mut s = spec(Variant::MultiEventIntensity);
        s.validate().unwrap();
        s.reference = 40;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
        s.reference = 0;
        s.window_hi = -20;
        assert!(s.validate().is_err());
        assert_eq!(
            "eq3-single".parse::<Variant>().unwrap(),
            Variant::SingleEventIntensity
        );
        assert!("eq4".parse::<Variant>().is_err());
    }

    #[test]
    fn default_family_sizes() {
        let panel = fixture();
        let p = build_design(&panel, &spec(Variant::MultiEventIntensity)).unwrap();
        assert_eq!(event_cols(&p).len(), 55);
        assert_eq!(conc_cols(&p).len(), 56);
        assert!(!p.column_labels.contains(&ColumnLabel::Event(-20)));
        assert!(p.column_labels.contains(&ColumnLabel::Concurrent(-20)));
        // t = 0 rows never enter, so t = 1 is the dropped time level.
        assert_eq!(p.reference_levels.time, Some(1));
        assert_eq!(p.reference_levels.region, Some(Region::Africa));
        assert_eq!(p.reference_levels.day_of_week, Some(0));
        assert!(!p.column_labels.contains(&ColumnLabel::Time(1)));
        assert!(p.column_labels.contains(&ColumnLabel::Time(2)));
        assert_eq!(p.n_rows(), 3 * 79);
        assert_eq!(p.n_clusters(), 3);
    }

    #[test]
    fn entries_follow_definitions() {
        let panel = fixture();
        let s = spec(Variant::MultiEventIntensity);
        let p = build_design(&panel, &s).unwrap();
        let ev = event_cols(&p);
        let cc = conc_cols(&p);
        for (i, (country, date)) in p.row_keys.iter().enumerate() {
            let nonzero_ev: Vec<_> = ev.iter().filter(|&&c| p.x[(i, c)] != 0.0).collect();
            let nonzero_cc: Vec<_> = cc.iter().filter(|&&c| p.x[(i, c)] != 0.0).collect();
            assert!(nonzero_ev.len() <= 1 && nonzero_cc.len() <= 1);
            let j = panel.event_time(country, s.policy, *date);
            match j {
                None => {
                    assert!(nonzero_ev.is_empty() && nonzero_cc.is_empty(), "{country}");
                }
                Some(j) => {
                    let expect = s_pi(&panel, country, s.policy, *date, &s);
                    let got = p
                        .column_index(&ColumnLabel::Event(j))
                        .map_or(0.0, |c| p.x[(i, c)]);
                    if j != s.reference {
                        assert_eq!(got, expect, "{country} {date} j={j}");
                    } else {
                        assert!(nonzero_ev.is_empty());
                    }
                    let conc = p
                        .column_index(&ColumnLabel::Concurrent(j))
                        .map_or(0.0, |c| p.x[(i, c)]);
                    let mean = if s.in_window(j) {
                        panel.concurrent_mean_intensity(country, s.policy, *date)
                    } else {
                        0.0
                    };
                    assert_eq!(conc, mean);
                }
            }
            for &c in &ev {
                assert!((0.0..=6.0).contains(&p.x[(i, c)]) && p.x[(i, c)].fract() == 0.0);
            }
        }
    }

    #[test]
    fn s_pi_examples() {
        let panel = fixture();
        let s = spec(Variant::MultiEventIntensity);
        let aut = id("AUT");
        // implementation 2020-03-30 at level 4, escalated to 6 on 2020-04-09
        assert_eq!(s_pi(&panel, &aut, s.policy, d("2020-03-30"), &s), 4.0);
        assert_eq!(s_pi(&panel, &aut, s.policy, d("2020-04-09"), &s), 6.0);
        assert_eq!(s_pi(&panel, &aut, s.policy, d("2020-03-25"), &s), 4.0);
        assert_eq!(s_pi(&panel, &aut, s.policy, d("2020-03-09"), &s), 0.0);
        assert_eq!(s_pi(&panel, &id("PER"), s.policy, d("2020-03-30"), &s), 0.0);

        let p = build_design(&panel, &s).unwrap();
        let i = p
            .row_keys
            .iter()
            .position(|(c, dt)| *c == aut && *dt == d("2020-04-09"))
            .unwrap();
        let col = p.column_index(&ColumnLabel::Event(10)).unwrap();
        assert_eq!(p.x[(i, col)], 6.0);
        let i0 = p
            .row_keys
            .iter()
            .position(|(c, dt)| *c == aut && *dt == d("2020-03-30"))
            .unwrap();
        let nonzero: Vec<_> = event_cols(&p)
            .into_iter()
            .filter(|&c| p.x[(i0, c)] != 0.0)
            .collect();
        assert_eq!(nonzero, vec![p.column_index(&ColumnLabel::Event(0)).unwrap()]);
        // reference row: 2020-03-10 is j = -20
        let iref = p
            .row_keys
            .iter()
            .position(|(c, dt)| *c == aut && *dt == d("2020-03-10"))
            .unwrap();
        assert!(event_cols(&p).iter().all(|&c| p.x[(iref, c)] == 0.0));
    }

    #[test]
    fn dummy_variants_are_binary() {
        let panel = fixture();
        for v in [Variant::SingleEventDummy, Variant::MultiEventDummy] {
            let p = build_design(&panel, &spec(v)).unwrap();
            for c in event_cols(&p).into_iter().chain(conc_cols(&p)) {
                assert!(p.x.column(c).iter().all(|&v| v == 0.0 || v == 1.0));
            }
        }
    }

    #[test]
    fn single_variant_is_multi_minus_concurrent() {
        let panel = fixture();
        let multi = build_design(&panel, &spec(Variant::MultiEventIntensity)).unwrap();
        let single = build_design(&panel, &spec(Variant::SingleEventIntensity)).unwrap();
        let keep: Vec<usize> = (0..multi.n_cols())
            .filter(|&c| !matches!(multi.column_labels[c], ColumnLabel::Concurrent(_)))
            .collect();
        assert_eq!(keep.len(), single.n_cols());
        for (k, &c) in keep.iter().enumerate() {
            assert_eq!(multi.column_labels[c], single.column_labels[k]);
            for i in 0..multi.n_rows() {
                assert_eq!(multi.x[(i, c)].to_bits(), single.x[(i, k)].to_bits());
            }
        }
        assert_eq!(multi.y, single.y);
    }

    #[test]
    fn deterministic() {
        let panel = fixture();
        let a = build_design(&panel, &spec(Variant::MultiEventDummy)).unwrap();
        let b = build_design(&panel, &spec(Variant::MultiEventDummy)).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.column_labels, b.column_labels);
        assert_eq!(a.row_keys, b.row_keys);
    }

    #[test]
    fn mobility_outcome_and_errors() {
        let panel = fixture();
        let mut s = spec(Variant::MultiEventIntensity);
        s.outcome = OutcomeKind::MobilityDeviation(MobilityCategory::Residential);
        let p = build_design(&panel, &s).unwrap();
        assert_eq!(p.n_rows(), 3 * 79 - 3);

        s.outcome = OutcomeKind::MobilityDeviation(MobilityCategory::Parks);
        assert!(matches!(build_design(&panel, &s), Err(Error::EmptySample(_))));

        let mut s = spec(Variant::MultiEventIntensity);
        s.policy = PolicyKind::TravelControls;
        assert!(matches!(build_design(&panel, &s), Err(Error::EmptyWindow { .. })));
    }
}
