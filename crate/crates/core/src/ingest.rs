//! Canonical comma-separated input files and their validation.
//!
//! | file            | header                                                                          |
//! |-----------------|---------------------------------------------------------------------------------|
//! | policies.csv    | `country_iso3,policy,date,intensity`                                            |
//! | cases.csv       | `country_iso3,date,new_cases`                                                   |
//! | mobility.csv    | `country_iso3,date,category,deviation_pp`                                       |
//! | covariates.csv  | `country_iso3,region,gdp_per_capita,population,population_density,urbanization_rate` |
//!
//! Policy rows record level changes; the level carries forward until the next
//! listed date. Case rows missing between the first and last listed date count
//! as zero new cases. Missing mobility rows stay missing.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::panel::{
    build_panel, CountryCovariates, CountryId, EpiSeries, MobilityCategory, MobilitySeries, Panel,
    PolicyKind, PolicySchedule, Region,
};

pub const POLICIES_HEADER: &[&str] = &["country_iso3", "policy", "date", "intensity"];
pub const CASES_HEADER: &[&str] = &["country_iso3", "date", "new_cases"];
pub const MOBILITY_HEADER: &[&str] = &["country_iso3", "date", "category", "deviation_pp"];
pub const COVARIATES_HEADER: &[&str] = &[
    "country_iso3",
    "region",
    "gdp_per_capita",
    "population",
    "population_density",
    "urbanization_rate",
];

pub const POLICIES_FILE: &str = "policies.csv";
pub const CASES_FILE: &str = "cases.csv";
pub const MOBILITY_FILE: &str = "mobility.csv";
pub const COVARIATES_FILE: &str = "covariates.csv";

struct Records<R> {
    path: PathBuf,
    reader: csv::Reader<R>,
}

impl<R: Read> Records<R> {
    fn new(reader: R, path: &Path, header: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let found = reader.headers().map_err(|source| Error::Csv {
            path: path.to_owned(),
            source,
        })?;
        if found.iter().ne(header.iter().copied()) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: 1,
                message: format!(
                    "expected header `{}`, found `{}`",
                    header.join(","),
                    found.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        Ok(Self {
            path: path.to_owned(),
            reader,
        })
    }

    fn for_each(mut self, mut f: impl FnMut(&Line<'_>) -> Result<()>) -> Result<usize> {
        let mut count = 0;
        for record in self.reader.records() {
            let record = record.map_err(|source| Error::Csv {
                path: self.path.clone(),
                source,
            })?;
            let line = record.position().map_or(0, |p| p.line());
            f(&Line {
                path: &self.path,
                line,
                record: &record,
            })?;
            count += 1;
        }
        Ok(count)
    }
}

struct Line<'a> {
    path: &'a Path,
    line: u64,
    record: &'a csv::StringRecord,
}

impl Line<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_owned(),
            line: self.line,
            message: message.into(),
        }
    }

    fn field(&self, i: usize) -> &str {
        self.record.get(i).unwrap_or("")
    }

    fn country(&self) -> Result<CountryId> {
        CountryId::new(self.field(0)).map_err(|e| self.error(e.to_string()))
    }

    fn date(&self, i: usize) -> Result<NaiveDate> {
        let s = self.field(i);
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| self.error(format!("unparseable date {s:?}")))
    }

    fn parse<T: std::str::FromStr>(&self, i: usize, what: &str) -> Result<T> {
        let s = self.field(i);
        s.parse().map_err(|_| self.error(format!("invalid {what} {s:?}")))
    }

    fn real(&self, i: usize, what: &str) -> Result<f64> {
        let v: f64 = self.parse(i, what)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.error(format!("non-finite {what}")))
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn parse_policies(path: &Path) -> Result<Vec<PolicySchedule>> {
    parse_policies_from(open(path)?, path)
}

pub fn parse_policies_from(reader: impl Read, path: &Path) -> Result<Vec<PolicySchedule>> {
    let mut grouped: BTreeMap<(CountryId, PolicyKind), BTreeMap<NaiveDate, u8>> = BTreeMap::new();
    Records::new(reader, path, POLICIES_HEADER)?.for_each(|line| {
        let country = line.country()?;
        let policy: PolicyKind = line
            .field(1)
            .parse()
            .map_err(|e: Error| line.error(e.to_string()))?;
        let date = line.date(2)?;
        let level: i64 = line.parse(3, "intensity")?;
        if !(0..=6).contains(&level) {
            return Err(line.error(format!("intensity {level} outside 0..=6")));
        }
        let changes = grouped.entry((country.clone(), policy)).or_default();
        if changes.insert(date, level as u8).is_some() {
            return Err(line.error(format!("duplicate entry for ({country}, {policy}, {date})")));
        }
        Ok(())
    })?;
    grouped
        .into_iter()
        .map(|((country, policy), changes)| PolicySchedule::new(country, policy, changes))
        .collect()
}

pub fn parse_cases(path: &Path) -> Result<Vec<EpiSeries>> {
    parse_cases_from(open(path)?, path)
}

pub fn parse_cases_from(reader: impl Read, path: &Path) -> Result<Vec<EpiSeries>> {
    let mut grouped: BTreeMap<CountryId, BTreeMap<NaiveDate, u64>> = BTreeMap::new();
    Records::new(reader, path, CASES_HEADER)?.for_each(|line| {
        let country = line.country()?;
        let date = line.date(1)?;
        let count: i64 = line.parse(2, "new_cases")?;
        if count < 0 {
            return Err(line.error(format!("negative new_cases {count}")));
        }
        if grouped
            .entry(country.clone())
            .or_default()
            .insert(date, count as u64)
            .is_some()
        {
            return Err(line.error(format!("duplicate entry for ({country}, {date})")));
        }
        Ok(())
    })?;
    Ok(grouped
        .into_iter()
        .filter_map(|(country, by_date)| {
            let (&start, _) = by_date.first_key_value()?;
            let (&end, _) = by_date.last_key_value()?;
            let len = (end - start).num_days() as usize + 1;
            let mut cases = vec![0u64; len];
            for (date, n) in by_date {
                cases[(date - start).num_days() as usize] = n;
            }
            Some(EpiSeries::from_new_cases(country, start, cases))
        })
        .collect())
}

pub fn parse_mobility(path: &Path) -> Result<Vec<MobilitySeries>> {
    parse_mobility_from(open(path)?, path)
}

pub fn parse_mobility_from(reader: impl Read, path: &Path) -> Result<Vec<MobilitySeries>> {
    let mut grouped: BTreeMap<CountryId, MobilitySeries> = BTreeMap::new();
    Records::new(reader, path, MOBILITY_HEADER)?.for_each(|line| {
        let country = line.country()?;
        let date = line.date(1)?;
        let category: MobilityCategory = line
            .field(2)
            .parse()
            .map_err(|e: Error| line.error(e.to_string()))?;
        let value = line.real(3, "deviation_pp")?;
        grouped
            .entry(country.clone())
            .or_insert_with(|| MobilitySeries::new(country))
            .insert(category, date, value)
            .map_err(|e| line.error(e.to_string()))
    })?;
    Ok(grouped.into_values().collect())
}

pub fn parse_covariates(path: &Path) -> Result<Vec<CountryCovariates>> {
    parse_covariates_from(open(path)?, path)
}

pub fn parse_covariates_from(reader: impl Read, path: &Path) -> Result<Vec<CountryCovariates>> {
    let mut grouped: BTreeMap<CountryId, CountryCovariates> = BTreeMap::new();
    Records::new(reader, path, COVARIATES_HEADER)?.for_each(|line| {
        let country = line.country()?;
        let region: Region = line
            .field(1)
            .parse()
            .map_err(|e: Error| line.error(e.to_string()))?;
        let cov = CountryCovariates {
            country: country.clone(),
            region,
            gdp_per_capita: line.real(2, "gdp_per_capita")?,
            population: line.real(3, "population")?,
            population_density: line.real(4, "population_density")?,
            urbanization_rate: line.real(5, "urbanization_rate")?,
        };
        cov.validate().map_err(|e| line.error(e.to_string()))?;
        if grouped.insert(country.clone(), cov).is_some() {
            return Err(line.error(format!("duplicate entry for {country}")));
        }
        Ok(())
    })?;
    Ok(grouped.into_values().collect())
}

/// The four canonical inputs, parsed.
#[derive(Debug, Clone)]
pub struct CanonicalFileSet {
    pub policies_path: PathBuf,
    pub cases_path: PathBuf,
    pub mobility_path: PathBuf,
    pub covariates_path: PathBuf,
    pub schedules: Vec<PolicySchedule>,
    pub epi: Vec<EpiSeries>,
    pub mobility: Vec<MobilitySeries>,
    pub covariates: Vec<CountryCovariates>,
}

impl CanonicalFileSet {
    /// Load `policies.csv`, `cases.csv`, `mobility.csv` and `covariates.csv` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        Self::load(
            &dir.join(POLICIES_FILE),
            &dir.join(CASES_FILE),
            &dir.join(MOBILITY_FILE),
            &dir.join(COVARIATES_FILE),
        )
    }

    pub fn load(policies: &Path, cases: &Path, mobility: &Path, covariates: &Path) -> Result<Self> {
        Ok(Self {
            schedules: parse_policies(policies)?,
            epi: parse_cases(cases)?,
            mobility: parse_mobility(mobility)?,
            covariates: parse_covariates(covariates)?,
            policies_path: policies.to_owned(),
            cases_path: cases.to_owned(),
            mobility_path: mobility.to_owned(),
            covariates_path: covariates.to_owned(),
        })
    }

    pub fn build_panel(&self) -> Result<Panel> {
        build_panel(&self.schedules, &self.epi, &self.mobility, &self.covariates)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Write the four canonical files into `dir` in a deterministic order.
pub fn write_canonical(
    dir: &Path,
    schedules: &[PolicySchedule],
    epi: &[EpiSeries],
    mobility: &[MobilitySeries],
    covariates: &[CountryCovariates],
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })?;

    let mut scheds: Vec<&PolicySchedule> = schedules.iter().collect();
    scheds.sort_by(|a, b| (&a.country, a.policy).cmp(&(&b.country, b.policy)));
    write_rows(
        &dir.join(POLICIES_FILE),
        POLICIES_HEADER,
        scheds.iter().flat_map(|s| {
            s.intensity.changes().iter().map(move |(date, level)| {
                vec![
                    s.country.to_string(),
                    s.policy.to_string(),
                    date.to_string(),
                    level.to_string(),
                ]
            })
        }),
    )?;

    let mut series: Vec<&EpiSeries> = epi.iter().collect();
    series.sort_by(|a, b| a.country.cmp(&b.country));
    write_rows(
        &dir.join(CASES_FILE),
        CASES_HEADER,
        series.iter().flat_map(|e| {
            e.new_cases
                .iter()
                .enumerate()
                .map(move |(i, n)| vec![e.country.to_string(), e.date_at(i).to_string(), n.to_string()])
        }),
    )?;

    let mut mob: Vec<&MobilitySeries> = mobility.iter().collect();
    mob.sort_by(|a, b| a.country.cmp(&b.country));
    write_rows(
        &dir.join(MOBILITY_FILE),
        MOBILITY_HEADER,
        mob.iter().flat_map(|m| {
            let mut entries: Vec<(NaiveDate, MobilityCategory, f64)> = MobilityCategory::ALL
                .iter()
                .flat_map(|&c| m.category(c).iter().map(move |(&d, &v)| (d, c, v)))
                .collect();
            entries.sort_by_key(|e| (e.0, e.1));
            entries.into_iter().map(move |(d, c, v)| {
                vec![
                    m.country.to_string(),
                    d.to_string(),
                    c.to_string(),
                    format_real(v),
                ]
            })
        }),
    )?;

    let mut covs: Vec<&CountryCovariates> = covariates.iter().collect();
    covs.sort_by(|a, b| a.country.cmp(&b.country));
    write_rows(
        &dir.join(COVARIATES_FILE),
        COVARIATES_HEADER,
        covs.iter().map(|c| {
            vec![
                c.country.to_string(),
                c.region.to_string(),
                format_real(c.gdp_per_capita),
                format_real(c.population),
                format_real(c.population_density),
                format_real(c.urbanization_rate),
            ]
        }),
    )
}

/// Write a built panel back out as canonical files.
///
/// Only in-panel days are exported, so re-ingesting reproduces the same panel.
pub fn export_panel(panel: &Panel, dir: &Path) -> Result<()> {
    let mut schedules = Vec::new();
    let mut epi = Vec::new();
    let mut mobility = Vec::new();
    let mut covariates = Vec::new();
    for (ci, c) in panel.countries().iter().enumerate() {
        for &p in PolicyKind::ALL {
            let path = c.schedule(p);
            if !path.is_empty() {
                schedules.push(PolicySchedule::new(c.id.clone(), p, path.changes().clone())?);
            }
        }
        let rows = panel.country_rows(ci);
        epi.push(EpiSeries::from_new_cases(
            c.id.clone(),
            c.first_case_date,
            rows.iter().map(|r| r.new_cases).collect(),
        ));
        let mut m = MobilitySeries::new(c.id.clone());
        for r in rows {
            for &cat in MobilityCategory::ALL {
                if let Some(v) = r.mobility[cat.index()] {
                    m.insert(cat, r.date, v)?;
                }
            }
        }
        if !m.is_empty() {
            mobility.push(m);
        }
        covariates.push(c.covariates.clone());
    }
    write_canonical(dir, &schedules, &epi, &mobility, &covariates)
}

/// Write `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_owned(),
            source,
        })?;
    }
    let mut f = File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    f.write_all(contents).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}
