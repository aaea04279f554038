//! Parsers for the raw data streams and assembly of per-region datasets.
//!
//! Three streams feed the models: protest event listings, daily policy
//! indicator exports (which also carry daily case and death counts), and
//! weekly search-interest volumes. Two further files configure the build:
//! a term-to-group mapping for the search data and a region roster mapping
//! member subregions (countries, or US states grouped into census regions)
//! to modelling regions with their populations.
//!
//! Assembly follows a fixed recipe per region: protest/case/death counts
//! are weekly sums across member subregions, policy columns are weekly
//! means aggregated by population weight, and search groups are term means
//! aggregated by population weight. Every missing policy day counts as 0,
//! the conservative choice for ordinal indicators. The resulting frame is
//! trimmed to start at the region's first protest week.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{
    align, is_week_start, pop_weighted_aggregate, weekly_mean_over, weekly_sum_over, FeatureFrame,
    WeekIndex, WeeklySeries,
};

pub const TARGET_COLUMN: &str = "protests";
pub const CASES_COLUMN: &str = "cases";
pub const DEATHS_COLUMN: &str = "deaths";

/// Ordinal policy indicators and the top of each one's coding range.
pub const INDICATORS: [(&str, f64); 16] = [
    ("C1", 3.0),
    ("C2", 3.0),
    ("C3", 2.0),
    ("C4", 4.0),
    ("C5", 2.0),
    ("C6", 3.0),
    ("C7", 2.0),
    ("C8", 4.0),
    ("E1", 2.0),
    ("E2", 2.0),
    ("H1", 2.0),
    ("H2", 3.0),
    ("H3", 2.0),
    ("H6", 4.0),
    ("H7", 5.0),
    ("H8", 3.0),
];

/// Composite policy indices, each on a 0..100 scale.
pub const INDICES: [&str; 4] = [
    "stringency",
    "gov_response",
    "containment_health",
    "econ_support",
];

/// Spending indicators and vaccine-module columns are accepted in policy
/// files but never modelled, as are geographic-scope flag columns.
const DROPPED_POLICY_COLUMNS: [&str; 8] = ["E3", "E4", "H4", "H5", "M1", "V1", "V2", "V3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendsGroup {
    General,
    Covid,
    Lockdown,
    School,
    Mask,
    Vaccine,
    Economic,
}

impl TrendsGroup {
    pub const ALL: [TrendsGroup; 7] = [
        TrendsGroup::General,
        TrendsGroup::Covid,
        TrendsGroup::Lockdown,
        TrendsGroup::School,
        TrendsGroup::Mask,
        TrendsGroup::Vaccine,
        TrendsGroup::Economic,
    ];

    pub fn parse(text: &str) -> Option<TrendsGroup> {
        match text {
            "general" => Some(TrendsGroup::General),
            "covid" => Some(TrendsGroup::Covid),
            "lockdown" => Some(TrendsGroup::Lockdown),
            "school" => Some(TrendsGroup::School),
            "mask" => Some(TrendsGroup::Mask),
            "vaccine" => Some(TrendsGroup::Vaccine),
            "economic" => Some(TrendsGroup::Economic),
            _ => None,
        }
    }

    pub fn column_name(self) -> &'static str {
        match self {
            TrendsGroup::General => "trends_general",
            TrendsGroup::Covid => "trends_covid",
            TrendsGroup::Lockdown => "trends_lockdown",
            TrendsGroup::School => "trends_school",
            TrendsGroup::Mask => "trends_mask",
            TrendsGroup::Vaccine => "trends_vaccine",
            TrendsGroup::Economic => "trends_economic",
        }
    }
}

/// The 29 predictor columns every assembled dataset must carry, sorted.
pub fn predictor_roster() -> Vec<String> {
    let mut names: Vec<String> = Vec::with_capacity(29);
    names.push(CASES_COLUMN.to_string());
    names.push(DEATHS_COLUMN.to_string());
    for (name, _) in INDICATORS {
        names.push(name.to_string());
    }
    for name in INDICES {
        names.push(name.to_string());
    }
    for group in TrendsGroup::ALL {
        names.push(group.column_name().to_string());
    }
    names.sort();
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub date: NaiveDate,
    pub region: String,
    pub event_type: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRecord {
    pub date: NaiveDate,
    pub region: String,
    /// Indicator values in the order of [`INDICATORS`].
    pub indicators: Vec<f64>,
    /// Index values in the order of [`INDICES`].
    pub indices: Vec<f64>,
    pub cases: f64,
    pub deaths: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendsRecord {
    pub week: WeekIndex,
    pub region: String,
    pub term: String,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub subregion: String,
    pub region: String,
    pub population: f64,
}

/// Region roster: which subregions make up each modelling region.
#[derive(Debug, Clone)]
pub struct RegionsConfig {
    specs: Vec<RegionSpec>,
}

impl RegionsConfig {
    pub fn new(specs: Vec<RegionSpec>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for spec in &specs {
            if !seen.insert(spec.subregion.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "subregion {} listed twice in region roster",
                    spec.subregion
                )));
            }
            if !(spec.population.is_finite() && spec.population > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "subregion {} needs a positive population, got {}",
                    spec.subregion, spec.population
                )));
            }
        }
        Ok(RegionsConfig { specs })
    }

    /// All modelling regions, sorted and deduplicated.
    pub fn regions(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.specs.iter().map(|s| s.region.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn members(&self, region: &str) -> Vec<(&str, f64)> {
        self.specs
            .iter()
            .filter(|s| s.region == region)
            .map(|s| (s.subregion.as_str(), s.population))
            .collect()
    }
}

/// Grouping of search terms into conceptual groups.
pub type GroupingMap = BTreeMap<String, TrendsGroup>;

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::bad_input(&path.display().to_string(), format!("cannot open: {e}"))
            }
            _ => Error::bad_input(&path.display().to_string(), e.to_string()),
        })
}

fn header_index(
    headers: &csv::StringRecord,
    file: &str,
    required: &[&str],
) -> Result<BTreeMap<String, usize>> {
    let mut index = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        if index.insert(name.to_string(), i).is_some() {
            return Err(Error::bad_input(file, format!("duplicate column {name}")));
        }
    }
    for want in required {
        if !index.contains_key(*want) {
            return Err(Error::bad_input(file, format!("missing column {want}")));
        }
    }
    Ok(index)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_date(text: &str, file: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|_| Error::parse(file, line, format!("bad date {text:?}, want YYYY-MM-DD")))
}

fn parse_number(text: &str, column: &str, file: &str, line: u64) -> Result<f64> {
    text.parse::<f64>()
        .map_err(|_| Error::parse(file, line, format!("bad number {text:?} in column {column}")))
}

/// Parse the protest event stream. Rows dated outside the study window are
/// dropped; the count of dropped rows is returned alongside the records.
pub fn parse_events(
    path: &Path,
    window: (NaiveDate, NaiveDate),
) -> Result<(Vec<EventRecord>, usize)> {
    let file = path.display().to_string();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::bad_input(&file, e.to_string()))?
        .clone();
    let idx = header_index(&headers, &file, &["date", "region", "event_type", "description"])?;
    let (di, ri, ti, si) = (
        idx["date"],
        idx["region"],
        idx["event_type"],
        idx["description"],
    );
    let mut records = Vec::new();
    let mut dropped = 0usize;
    for row in reader.records() {
        let row = row.map_err(|e| Error::bad_input(&file, e.to_string()))?;
        let line = record_line(&row);
        let date = parse_date(&row[di], &file, line)?;
        if date < window.0 || date > window.1 {
            dropped += 1;
            continue;
        }
        records.push(EventRecord {
            date,
            region: row[ri].to_string(),
            event_type: row[ti].to_string(),
            description: row[si].to_string(),
        });
    }
    Ok((records, dropped))
}

/// Keep events whose description mentions the pandemic, matching the
/// substrings "covid" or "coronavirus" case-insensitively.
pub fn filter_covid(events: &[EventRecord]) -> Vec<EventRecord> {
    events
        .iter()
        .filter(|e| {
            let text = e.description.to_lowercase();
            text.contains("covid") || text.contains("coronavirus")
        })
        .cloned()
        .collect()
}

/// Parse the daily policy export. Blank indicator/index/count cells are
/// treated as 0. Spending columns, vaccine-module columns, and `*_flag`
/// geographic-scope columns are accepted and ignored; any other unknown
/// column is an error. Rows dated outside `window` are dropped before
/// their values are validated, so a narrowed window tolerates a full
/// dump's out-of-range tail.
pub fn parse_policy(path: &Path, window: (NaiveDate, NaiveDate)) -> Result<Vec<PolicyRecord>> {
    let file = path.display().to_string();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::bad_input(&file, e.to_string()))?
        .clone();
    let mut required: Vec<&str> = vec!["date", "region", CASES_COLUMN, DEATHS_COLUMN];
    required.extend(INDICATORS.iter().map(|(n, _)| *n));
    required.extend(INDICES);
    let idx = header_index(&headers, &file, &required)?;
    for name in idx.keys() {
        let known = required.contains(&name.as_str())
            || DROPPED_POLICY_COLUMNS.contains(&name.as_str())
            || name.to_lowercase().ends_with("_flag");
        if !known {
            return Err(Error::bad_input(&file, format!("unknown column {name}")));
        }
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::bad_input(&file, e.to_string()))?;
        let line = record_line(&row);
        let date = parse_date(&row[idx["date"]], &file, line)?;
        if date < window.0 || date > window.1 {
            continue;
        }
        let region = row[idx["region"]].to_string();

        let mut indicators = Vec::with_capacity(INDICATORS.len());
        for (name, max) in INDICATORS {
            let text = &row[idx[name]];
            let value = if text.is_empty() {
                0.0
            } else {
                parse_number(text, name, &file, line)?
            };
            if value.fract() != 0.0 || value < 0.0 || value > max {
                return Err(Error::parse(
                    &file,
                    line,
                    format!("indicator {name} must be an integer in 0..={max}, got {value}"),
                ));
            }
            indicators.push(value);
        }

        let mut indices = Vec::with_capacity(INDICES.len());
        for name in INDICES {
            let text = &row[idx[name]];
            let value = if text.is_empty() {
                0.0
            } else {
                parse_number(text, name, &file, line)?
            };
            if !(0.0..=100.0).contains(&value) {
                return Err(Error::parse(
                    &file,
                    line,
                    format!("index {name} must lie in 0..=100, got {value}"),
                ));
            }
            indices.push(value);
        }

        let mut counts = [0.0; 2];
        for (slot, name) in counts.iter_mut().zip([CASES_COLUMN, DEATHS_COLUMN]) {
            let text = &row[idx[name]];
            let value = if text.is_empty() {
                0.0
            } else {
                parse_number(text, name, &file, line)?
            };
            if value < 0.0 || value.fract() != 0.0 {
                return Err(Error::parse(
                    &file,
                    line,
                    format!("{name} must be a non-negative integer count, got {value}"),
                ));
            }
            *slot = value;
        }

        records.push(PolicyRecord {
            date,
            region,
            indicators,
            indices,
            cases: counts[0],
            deaths: counts[1],
        });
    }
    Ok(records)
}

/// Parse weekly search-interest volumes. Each row names the week it
/// starts. Rows whose week falls outside `window` are dropped before
/// validation, mirroring the daily parsers.
pub fn parse_trends(path: &Path, window: (NaiveDate, NaiveDate)) -> Result<Vec<TrendsRecord>> {
    let file = path.display().to_string();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::bad_input(&file, e.to_string()))?
        .clone();
    let idx = header_index(&headers, &file, &["week_start", "region", "term", "volume"])?;
    let week_window = (
        WeekIndex::containing(window.0),
        WeekIndex::containing(window.1),
    );
    let mut records = Vec::new();
    let mut seen: BTreeSet<(String, String, i64)> = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::bad_input(&file, e.to_string()))?;
        let line = record_line(&row);
        let date = parse_date(&row[idx["week_start"]], &file, line)?;
        let week = WeekIndex::containing(date);
        if week < week_window.0 || week > week_window.1 {
            continue;
        }
        let region = row[idx["region"]].to_string();
        let term = row[idx["term"]].to_string();
        let volume = parse_number(&row[idx["volume"]], "volume", &file, line)?;
        if !(0.0..=100.0).contains(&volume) {
            return Err(Error::parse(
                &file,
                line,
                format!("volume must lie in 0..=100, got {volume}"),
            ));
        }
        if !seen.insert((region.clone(), term.clone(), week.ordinal())) {
            return Err(Error::parse(
                &file,
                line,
                format!("duplicate row for region {region}, term {term:?}, week {week}"),
            ));
        }
        records.push(TrendsRecord {
            week,
            region,
            term,
            volume,
        });
    }
    Ok(records)
}

/// Parse the term-to-group mapping.
pub fn parse_groupings(path: &Path) -> Result<GroupingMap> {
    let file = path.display().to_string();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::bad_input(&file, e.to_string()))?
        .clone();
    let idx = header_index(&headers, &file, &["term", "group"])?;
    let mut map = GroupingMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::bad_input(&file, e.to_string()))?;
        let line = record_line(&row);
        let term = row[idx["term"]].to_string();
        let group_text = &row[idx["group"]];
        let group = TrendsGroup::parse(group_text).ok_or_else(|| {
            Error::parse(&file, line, format!("unknown trends group {group_text:?}"))
        })?;
        if map.insert(term.clone(), group).is_some() {
            return Err(Error::parse(
                &file,
                line,
                format!("term {term:?} assigned to more than one group"),
            ));
        }
    }
    Ok(map)
}

/// Parse the region roster.
pub fn parse_regions(path: &Path) -> Result<RegionsConfig> {
    let file = path.display().to_string();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::bad_input(&file, e.to_string()))?
        .clone();
    let idx = header_index(&headers, &file, &["subregion", "region", "population"])?;
    let mut specs = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::bad_input(&file, e.to_string()))?;
        let line = record_line(&row);
        let population = parse_number(&row[idx["population"]], "population", &file, line)?;
        specs.push(RegionSpec {
            subregion: row[idx["subregion"]].to_string(),
            region: row[idx["region"]].to_string(),
            population,
        });
    }
    RegionsConfig::new(specs)
}

/// Weekly series per subregion and group: each week's value is the mean
/// over the group's terms that have data that week. A term with no rows at
/// all for a subregion simply does not contribute there. Weeks inside a
/// group's covered span where no term reported take the value 0.
pub fn build_trends_groups(
    records: &[TrendsRecord],
    groupings: &GroupingMap,
) -> Result<BTreeMap<String, BTreeMap<TrendsGroup, WeeklySeries>>> {
    let mut by_key: BTreeMap<(String, TrendsGroup, String), BTreeMap<i64, f64>> = BTreeMap::new();
    for rec in records {
        let group = *groupings.get(&rec.term).ok_or_else(|| {
            Error::InvalidArgument(format!("term {:?} is not in the grouping map", rec.term))
        })?;
        by_key
            .entry((rec.region.clone(), group, rec.term.clone()))
            .or_default()
            .insert(rec.week.ordinal(), rec.volume);
    }

    let mut grouped: BTreeMap<(String, TrendsGroup), Vec<BTreeMap<i64, f64>>> = BTreeMap::new();
    for ((region, group, _term), weeks) in by_key {
        grouped.entry((region, group)).or_default().push(weeks);
    }

    let mut out: BTreeMap<String, BTreeMap<TrendsGroup, WeeklySeries>> = BTreeMap::new();
    for ((region, group), term_maps) in grouped {
        let lo = term_maps
            .iter()
            .filter_map(|m| m.keys().next())
            .min()
            .copied();
        let hi = term_maps
            .iter()
            .filter_map(|m| m.keys().next_back())
            .max()
            .copied();
        let (Some(lo), Some(hi)) = (lo, hi) else {
            continue;
        };
        let mut values = Vec::with_capacity((hi - lo + 1) as usize);
        for week in lo..=hi {
            let mut sum = 0.0;
            let mut count = 0usize;
            for term in &term_maps {
                if let Some(v) = term.get(&week) {
                    sum += v;
                    count += 1;
                }
            }
            values.push(if count == 0 { 0.0 } else { sum / count as f64 });
        }
        let series = WeeklySeries::new(
            region.clone(),
            group.column_name(),
            WeekIndex::from_ordinal(lo),
            values,
        )?;
        out.entry(region).or_default().insert(group, series);
    }
    Ok(out)
}

/// One region's aligned modelling data: protest counts plus the full
/// 29-column predictor roster on a shared weekly range that starts at the
/// region's first protest week.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionDataset {
    pub region: String,
    pub frame: FeatureFrame,
}

impl RegionDataset {
    pub fn target_series(&self) -> WeeklySeries {
        self.frame.target_series()
    }
}

/// Assemble the dataset for one modelling region. `events` must already be
/// filtered to COVID-related records.
pub fn build_region_dataset(
    region: &str,
    events: &[EventRecord],
    policy: &[PolicyRecord],
    trends_groups: &BTreeMap<String, BTreeMap<TrendsGroup, WeeklySeries>>,
    regions_config: &RegionsConfig,
    window: (NaiveDate, NaiveDate),
) -> Result<RegionDataset> {
    let members = regions_config.members(region);
    if members.is_empty() {
        return Err(Error::region(region, "not present in the region roster"));
    }
    let member_set: BTreeSet<&str> = members.iter().map(|(s, _)| *s).collect();

    // Protest counts: one count per event row, summed over member
    // subregions week by week across the whole study window.
    let event_days: Vec<(NaiveDate, f64)> = events
        .iter()
        .filter(|e| member_set.contains(e.region.as_str()))
        .map(|e| (e.date, 1.0))
        .collect();
    if event_days.is_empty() {
        return Err(Error::region(
            region,
            "no COVID-related protest events in the study window",
        ));
    }
    let target = weekly_sum_over(region, TARGET_COLUMN, &event_days, window.0, window.1)?;

    // Case and death counts: weekly sums over all member rows.
    let mut member_policy: BTreeMap<&str, Vec<&PolicyRecord>> = BTreeMap::new();
    for rec in policy {
        if member_set.contains(rec.region.as_str()) {
            member_policy.entry(rec.region.as_str()).or_default().push(rec);
        }
    }
    for (sub, _) in &members {
        if !member_policy.contains_key(sub) {
            return Err(Error::region(
                region,
                format!("subregion {sub} has no policy rows"),
            ));
        }
    }
    let mut predictors: Vec<WeeklySeries> = Vec::with_capacity(29);
    for (column, field) in [
        (CASES_COLUMN, 0usize),
        (DEATHS_COLUMN, 1usize),
    ] {
        let days: Vec<(NaiveDate, f64)> = member_policy
            .values()
            .flatten()
            .map(|r| (r.date, if field == 0 { r.cases } else { r.deaths }))
            .collect();
        predictors.push(weekly_sum_over(region, column, &days, window.0, window.1)?);
    }

    // Policy indicators and indices: weekly means per subregion, then a
    // population-weighted mean across subregions. The shared explicit span
    // keeps every member series aligned.
    type PolicyGetter = fn(&PolicyRecord, usize) -> f64;
    let mut policy_columns: Vec<(&str, PolicyGetter, usize)> = Vec::new();
    for (i, (name, _)) in INDICATORS.iter().enumerate() {
        policy_columns.push((name, |r, i| r.indicators[i], i));
    }
    for (i, name) in INDICES.iter().enumerate() {
        policy_columns.push((name, |r, i| r.indices[i], i));
    }
    for (column, getter, slot) in policy_columns {
        let mut weighted: Vec<(WeeklySeries, f64)> = Vec::with_capacity(members.len());
        for (sub, pop) in &members {
            let rows = &member_policy[sub];
            let days: Vec<(NaiveDate, f64)> =
                rows.iter().map(|r| (r.date, getter(r, slot))).collect();
            let series = weekly_mean_over(sub, column, &days, window.0, window.1)?;
            weighted.push((series, *pop));
        }
        predictors.push(pop_weighted_aggregate(region, &weighted)?);
    }

    // Search groups: population-weighted means over the members that have
    // the group, trimmed to their common week range first.
    for group in TrendsGroup::ALL {
        let mut available: Vec<(&WeeklySeries, f64)> = Vec::new();
        for (sub, pop) in &members {
            if let Some(series) = trends_groups.get(*sub).and_then(|g| g.get(&group)) {
                available.push((series, *pop));
            }
        }
        if available.is_empty() {
            return Err(Error::region(
                region,
                format!(
                    "predictor roster incomplete: no data for {}",
                    group.column_name()
                ),
            ));
        }
        let first = available
            .iter()
            .map(|(s, _)| s.first_week())
            .max()
            .expect("non-empty");
        let last = available
            .iter()
            .map(|(s, _)| s.last_week())
            .min()
            .expect("non-empty");
        if first > last {
            return Err(Error::region(
                region,
                format!(
                    "subregion week ranges for {} do not overlap",
                    group.column_name()
                ),
            ));
        }
        let weighted: Vec<(WeeklySeries, f64)> = available
            .iter()
            .map(|(s, pop)| s.slice_range(first, last).map(|cut| (cut, *pop)))
            .collect::<Result<_>>()?;
        predictors.push(pop_weighted_aggregate(region, &weighted)?);
    }

    let frame = align(&target, &predictors)?;

    // Trim to the first week with protest activity.
    let first_active = frame
        .target()
        .iter()
        .position(|&v| v > 0.0)
        .ok_or_else(|| Error::region(region, "no protest weeks in the aligned range"))?;
    let frame = frame.slice(
        frame.first_week().offset(first_active as i64),
        frame.last_week(),
    )?;

    let roster = predictor_roster();
    let have: Vec<&str> = frame.predictor_names();
    if have != roster.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::region(
            region,
            format!("predictor roster incomplete: have {} columns", have.len()),
        ));
    }
    Ok(RegionDataset {
        region: region.to_string(),
        frame,
    })
}

/// Assemble datasets for every region in the roster (or `subset` when
/// given), sorted by region name.
pub fn build_region_datasets(
    events: &[EventRecord],
    policy: &[PolicyRecord],
    trends: &[TrendsRecord],
    groupings: &GroupingMap,
    regions_config: &RegionsConfig,
    window: (NaiveDate, NaiveDate),
    subset: Option<&[String]>,
) -> Result<Vec<RegionDataset>> {
    let all = regions_config.regions();
    let chosen: Vec<String> = match subset {
        None => all,
        Some(wanted) => {
            for w in wanted {
                if !all.contains(w) {
                    return Err(Error::region(w, "not present in the region roster"));
                }
            }
            let mut list: Vec<String> = wanted.to_vec();
            list.sort();
            list.dedup();
            list
        }
    };
    let trends_groups = build_trends_groups(trends, groupings)?;
    chosen
        .iter()
        .map(|region| {
            build_region_dataset(region, events, policy, &trends_groups, regions_config, window)
        })
        .collect()
}

/// Write one region's dataset as CSV: week_start, region, target, then the
/// 29 predictors in sorted order. Floats are written in shortest
/// round-trip form, so equal inputs produce byte-identical files.
pub fn write_dataset_csv(dataset: &RegionDataset, path: &Path) -> Result<()> {
    let frame = &dataset.frame;
    let mut out = String::new();
    out.push_str("week_start,region,");
    out.push_str(TARGET_COLUMN);
    for name in frame.predictor_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..frame.len() {
        out.push_str(&frame.week_at(i).start_date().to_string());
        out.push(',');
        out.push_str(&dataset.region);
        out.push(',');
        out.push_str(&format_float(frame.target()[i]));
        for (_, col) in frame.predictors() {
            out.push(',');
            out.push_str(&format_float(col[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// CSV cell formatting shared by all writers: integers without a trailing
/// .0, everything else in shortest round-trip form.
pub fn format_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Read a dataset written by [`write_dataset_csv`].
pub fn read_dataset_csv(path: &Path) -> Result<RegionDataset> {
    let file = path.display().to_string();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::bad_input(&file, e.to_string()))?
        .clone();
    let names: Vec<String> = headers.iter().map(str::to_string).collect();
    if names.len() < 4 || names[0] != "week_start" || names[1] != "region" || names[2] != TARGET_COLUMN
    {
        return Err(Error::bad_input(
            &file,
            "expected header week_start,region,protests,<predictors>",
        ));
    }
    let predictor_names = &names[3..];
    let mut region: Option<String> = None;
    let mut first_week: Option<WeekIndex> = None;
    let mut target = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); predictor_names.len()];
    let mut expected_week: Option<WeekIndex> = None;
    for row in reader.records() {
        let row = row.map_err(|e| Error::bad_input(&file, e.to_string()))?;
        let line = record_line(&row);
        if row.len() != names.len() {
            return Err(Error::parse(&file, line, "wrong number of fields"));
        }
        let date = parse_date(&row[0], &file, line)?;
        if !is_week_start(date) {
            return Err(Error::parse(&file, line, format!("{date} is not a Sunday")));
        }
        let week = WeekIndex::containing(date);
        if let Some(expect) = expected_week {
            if week != expect {
                return Err(Error::parse(
                    &file,
                    line,
                    format!("expected contiguous week {expect}, got {week}"),
                ));
            }
        } else {
            first_week = Some(week);
        }
        expected_week = Some(week.next());
        match &region {
            None => region = Some(row[1].to_string()),
            Some(r) if r != &row[1] => {
                return Err(Error::parse(&file, line, "multiple regions in one dataset"));
            }
            _ => {}
        }
        target.push(parse_number(&row[2], TARGET_COLUMN, &file, line)?);
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(parse_number(&row[j + 3], &predictor_names[j], &file, line)?);
        }
    }
    let region = region.ok_or_else(|| Error::bad_input(&file, "no data rows"))?;
    let frame = FeatureFrame::new(
        region.clone(),
        first_week.expect("rows imply a first week"),
        TARGET_COLUMN,
        target,
        predictor_names
            .iter()
            .cloned()
            .zip(columns)
            .collect(),
    )?;
    Ok(RegionDataset { region, frame })
}
