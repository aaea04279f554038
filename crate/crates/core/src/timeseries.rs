//! Sunday-anchored weekly grid and the series operations built on it.
//!
//! Every data stream is reduced to the same grid before modelling: weeks run
//! Sunday through Saturday and are numbered from the epoch Sunday
//! 2020-01-05 (week 0). Quantiles use the Hyndman-Fan type 7 definition so
//! thresholds match the common statistical-software default.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First day of week 0. A Sunday.
pub fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 5).expect("static date")
}

/// One week on the Sunday-anchored grid, identified by its ordinal offset
/// from the epoch week. Negative ordinals address weeks before the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WeekIndex(i64);

impl WeekIndex {
    pub fn from_ordinal(ordinal: i64) -> Self {
        WeekIndex(ordinal)
    }

    /// The week containing `date`.
    pub fn containing(date: NaiveDate) -> Self {
        let days = (date - epoch()).num_days();
        WeekIndex(days.div_euclid(7))
    }

    pub fn ordinal(self) -> i64 {
        self.0
    }

    /// The Sunday this week starts on.
    pub fn start_date(self) -> NaiveDate {
        epoch() + Duration::weeks(self.0)
    }

    pub fn next(self) -> Self {
        WeekIndex(self.0 + 1)
    }

    pub fn offset(self, weeks: i64) -> Self {
        WeekIndex(self.0 + weeks)
    }

    /// Number of weeks from `earlier` to `self`.
    pub fn weeks_since(self, earlier: WeekIndex) -> i64 {
        self.0 - earlier.0
    }
}

impl fmt::Display for WeekIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start_date())
    }
}

/// A contiguous run of weekly values for one region and variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklySeries {
    region: String,
    variable: String,
    first_week: WeekIndex,
    values: Vec<f64>,
}

impl WeeklySeries {
    pub fn new(
        region: impl Into<String>,
        variable: impl Into<String>,
        first_week: WeekIndex,
        values: Vec<f64>,
    ) -> Result<Self> {
        let variable = variable.into();
        if values.is_empty() {
            return Err(Error::EmptySeries(variable));
        }
        Ok(WeeklySeries {
            region: region.into(),
            variable,
            first_week,
            values,
        })
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn first_week(&self) -> WeekIndex {
        self.first_week
    }

    pub fn last_week(&self) -> WeekIndex {
        self.first_week.offset(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn week_at(&self, idx: usize) -> WeekIndex {
        self.first_week.offset(idx as i64)
    }

    /// Value for `week`, if the series covers it.
    pub fn value_at(&self, week: WeekIndex) -> Option<f64> {
        let off = week.weeks_since(self.first_week);
        if off < 0 {
            return None;
        }
        self.values.get(off as usize).copied()
    }

    /// Restrict to the inclusive week range `[from, to]`.
    pub fn slice_range(&self, from: WeekIndex, to: WeekIndex) -> Result<WeeklySeries> {
        if from > to {
            return Err(Error::InvalidArgument(format!(
                "slice range {from}..{to} is reversed"
            )));
        }
        if from < self.first_week || to > self.last_week() {
            return Err(Error::Misaligned(format!(
                "slice {from}..{to} outside series range {}..{}",
                self.first_week,
                self.last_week()
            )));
        }
        let a = from.weeks_since(self.first_week) as usize;
        let b = to.weeks_since(self.first_week) as usize;
        WeeklySeries::new(
            self.region.clone(),
            self.variable.clone(),
            from,
            self.values[a..=b].to_vec(),
        )
    }
}

/// Sum daily observations into weeks over an explicit date span. Weeks
/// covered by the span but absent from the input contribute 0.
pub fn weekly_sum_over(
    region: &str,
    variable: &str,
    daily: &[(NaiveDate, f64)],
    span_start: NaiveDate,
    span_end: NaiveDate,
) -> Result<WeeklySeries> {
    if span_end < span_start {
        return Err(Error::InvalidArgument(format!(
            "span {span_start}..{span_end} is reversed"
        )));
    }
    let first = WeekIndex::containing(span_start);
    let last = WeekIndex::containing(span_end);
    let n = (last.weeks_since(first) + 1) as usize;
    let mut values = vec![0.0; n];
    for &(date, v) in daily {
        let w = WeekIndex::containing(date);
        let off = w.weeks_since(first);
        if off < 0 || off as usize >= n {
            return Err(Error::InvalidArgument(format!(
                "date {date} outside span {span_start}..{span_end}"
            )));
        }
        values[off as usize] += v;
    }
    WeeklySeries::new(region, variable, first, values)
}

/// Sum daily observations into weeks. The covered span is inferred from the
/// earliest and latest dates present; interior weeks with no records are 0.
pub fn weekly_sum(region: &str, variable: &str, daily: &[(NaiveDate, f64)]) -> Result<WeeklySeries> {
    let (lo, hi) = date_extent(variable, daily)?;
    weekly_sum_over(region, variable, daily, lo, hi)
}

/// Average daily observations per week over an explicit span. Weeks with no
/// records at all take the value 0 rather than being dropped, matching the
/// conservative missing-data rule used for policy indicators.
pub fn weekly_mean_over(
    region: &str,
    variable: &str,
    daily: &[(NaiveDate, f64)],
    span_start: NaiveDate,
    span_end: NaiveDate,
) -> Result<WeeklySeries> {
    if span_end < span_start {
        return Err(Error::InvalidArgument(format!(
            "span {span_start}..{span_end} is reversed"
        )));
    }
    let first = WeekIndex::containing(span_start);
    let last = WeekIndex::containing(span_end);
    let n = (last.weeks_since(first) + 1) as usize;
    let mut sums = vec![0.0; n];
    let mut counts = vec![0u32; n];
    for &(date, v) in daily {
        let w = WeekIndex::containing(date);
        let off = w.weeks_since(first);
        if off < 0 || off as usize >= n {
            return Err(Error::InvalidArgument(format!(
                "date {date} outside span {span_start}..{span_end}"
            )));
        }
        sums[off as usize] += v;
        counts[off as usize] += 1;
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    WeeklySeries::new(region, variable, first, values)
}

/// As [`weekly_mean_over`] with the span inferred from the data.
pub fn weekly_mean(
    region: &str,
    variable: &str,
    daily: &[(NaiveDate, f64)],
) -> Result<WeeklySeries> {
    let (lo, hi) = date_extent(variable, daily)?;
    weekly_mean_over(region, variable, daily, lo, hi)
}

fn date_extent(variable: &str, daily: &[(NaiveDate, f64)]) -> Result<(NaiveDate, NaiveDate)> {
    let lo = daily.iter().map(|&(d, _)| d).min();
    let hi = daily.iter().map(|&(d, _)| d).max();
    match (lo, hi) {
        (Some(lo), Some(hi)) => Ok((lo, hi)),
        _ => Err(Error::EmptySeries(variable.to_string())),
    }
}

/// Population-weighted mean of identically aligned series.
///
/// Output value at week t is `sum(pop_s * x_st) / sum(pop_s)`. All input
/// series must share the same week range; every weight must be positive.
pub fn pop_weighted_aggregate(
    region: &str,
    members: &[(WeeklySeries, f64)],
) -> Result<WeeklySeries> {
    let (first, _) = members
        .first()
        .ok_or_else(|| Error::EmptySeries("pop_weighted_aggregate input".to_string()))?;
    let first_week = first.first_week();
    let len = first.len();
    let variable = first.variable().to_string();
    let mut total_pop = 0.0;
    let mut acc = vec![0.0; len];
    for (series, pop) in members {
        if !(pop.is_finite() && *pop > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "population for {} must be positive, got {pop}",
                series.region()
            )));
        }
        if series.first_week() != first_week || series.len() != len {
            return Err(Error::Misaligned(format!(
                "series {}/{} covers {}..{} but {}/{} covers {}..{}",
                first.region(),
                variable,
                first_week,
                first.last_week(),
                series.region(),
                series.variable(),
                series.first_week(),
                series.last_week()
            )));
        }
        total_pop += pop;
        for (a, v) in acc.iter_mut().zip(series.values()) {
            *a += pop * v;
        }
    }
    for a in acc.iter_mut() {
        *a /= total_pop;
    }
    WeeklySeries::new(region, variable, first_week, acc)
}

/// Shift a series forward by `k` weeks: the output value at week t is the
/// input value at week t-k, truncated to the input's covered range.
pub fn lag(series: &WeeklySeries, k: usize) -> Result<WeeklySeries> {
    if k == 0 {
        return Err(Error::InvalidArgument("lag must be at least 1".to_string()));
    }
    if k >= series.len() {
        return Err(Error::InvalidArgument(format!(
            "lag {k} leaves no overlap for a series of length {}",
            series.len()
        )));
    }
    let values = series.values()[..series.len() - k].to_vec();
    WeeklySeries::new(
        series.region().to_string(),
        series.variable().to_string(),
        series.first_week().offset(k as i64),
        values,
    )
}

/// Hyndman-Fan type 7 sample quantile (the linear-interpolation default in
/// R and NumPy): with sorted values x_0..x_{n-1} and h = (n-1)p, returns
/// x_floor(h) + (h - floor(h)) * (x_{floor(h)+1} - x_floor(h)).
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySeries("quantile input".to_string()));
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "quantile level must lie in [0, 1], got {p}"
        )));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN values"));
    let n = sorted.len();
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let frac = h - h.floor();
    if lo + 1 >= n || frac == 0.0 {
        return Ok(sorted[lo.min(n - 1)]);
    }
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

/// A target column and named predictor columns sharing one contiguous week
/// range for a single region. Predictors are kept sorted by name so column
/// order is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFrame {
    region: String,
    first_week: WeekIndex,
    target_name: String,
    target: Vec<f64>,
    predictors: Vec<(String, Vec<f64>)>,
}

impl FeatureFrame {
    pub fn new(
        region: impl Into<String>,
        first_week: WeekIndex,
        target_name: impl Into<String>,
        target: Vec<f64>,
        mut predictors: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::EmptySeries("feature frame target".to_string()));
        }
        predictors.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in predictors.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate predictor column {}",
                    pair[0].0
                )));
            }
        }
        for (name, col) in &predictors {
            if col.len() != target.len() {
                return Err(Error::Misaligned(format!(
                    "column {name} has {} rows, target has {}",
                    col.len(),
                    target.len()
                )));
            }
        }
        Ok(FeatureFrame {
            region: region.into(),
            first_week,
            target_name: target_name.into(),
            target,
            predictors,
        })
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn first_week(&self) -> WeekIndex {
        self.first_week
    }

    pub fn last_week(&self) -> WeekIndex {
        self.first_week.offset(self.target.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn week_at(&self, idx: usize) -> WeekIndex {
        self.first_week.offset(idx as i64)
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn target_series(&self) -> WeeklySeries {
        WeeklySeries::new(
            self.region.clone(),
            self.target_name.clone(),
            self.first_week,
            self.target.clone(),
        )
        .expect("frame target is non-empty")
    }

    pub fn predictor_names(&self) -> Vec<&str> {
        self.predictors.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn n_predictors(&self) -> usize {
        self.predictors.len()
    }

    pub fn predictor(&self, name: &str) -> Option<&[f64]> {
        self.predictors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn predictor_series(&self, name: &str) -> Option<WeeklySeries> {
        self.predictor(name).map(|v| {
            WeeklySeries::new(self.region.clone(), name, self.first_week, v.to_vec())
                .expect("frame columns are non-empty")
        })
    }

    pub fn predictors(&self) -> &[(String, Vec<f64>)] {
        &self.predictors
    }

    /// Restrict the frame to the inclusive week range `[from, to]`.
    pub fn slice(&self, from: WeekIndex, to: WeekIndex) -> Result<FeatureFrame> {
        if from > to {
            return Err(Error::InvalidArgument(format!(
                "slice range {from}..{to} is reversed"
            )));
        }
        if from < self.first_week || to > self.last_week() {
            return Err(Error::Misaligned(format!(
                "slice {from}..{to} outside frame range {}..{}",
                self.first_week,
                self.last_week()
            )));
        }
        let a = from.weeks_since(self.first_week) as usize;
        let b = to.weeks_since(self.first_week) as usize;
        FeatureFrame::new(
            self.region.clone(),
            from,
            self.target_name.clone(),
            self.target[a..=b].to_vec(),
            self.predictors
                .iter()
                .map(|(n, v)| (n.clone(), v[a..=b].to_vec()))
                .collect(),
        )
    }
}

/// Intersect a target series with predictor series on their common week
/// range and stack them into a [`FeatureFrame`]. Errors if any pair of
/// ranges fails to overlap.
pub fn align(target: &WeeklySeries, predictors: &[WeeklySeries]) -> Result<FeatureFrame> {
    let mut first = target.first_week();
    let mut last = target.last_week();
    for s in predictors {
        first = first.max(s.first_week());
        last = last.min(s.last_week());
    }
    if first > last {
        return Err(Error::Misaligned(
            "aligned series have an empty common week range".to_string(),
        ));
    }
    let target_cut = target.slice_range(first, last)?;
    let mut columns = Vec::with_capacity(predictors.len());
    let mut seen = BTreeSet::new();
    for s in predictors {
        if !seen.insert(s.variable().to_string()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate predictor column {}",
                s.variable()
            )));
        }
        let cut = s.slice_range(first, last)?;
        columns.push((s.variable().to_string(), cut.values().to_vec()));
    }
    FeatureFrame::new(
        target.region().to_string(),
        first,
        target.variable().to_string(),
        target_cut.values().to_vec(),
        columns,
    )
}

/// True if `date` falls on the grid's week boundary (a Sunday).
pub fn is_week_start(date: NaiveDate) -> bool {
    date.weekday() == Weekday::Sun
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn epoch_is_sunday_week_zero() {
        assert!(is_week_start(epoch()));
        assert_eq!(WeekIndex::containing(epoch()).ordinal(), 0);
        assert_eq!(WeekIndex::containing(d(2020, 1, 11)).ordinal(), 0);
        assert_eq!(WeekIndex::containing(d(2020, 1, 12)).ordinal(), 1);
        assert_eq!(WeekIndex::containing(d(2020, 1, 4)).ordinal(), -1);
    }

    #[test]
    fn week_index_round_trips_through_start_date() {
        for ord in [-10i64, -1, 0, 1, 42, 81] {
            let w = WeekIndex::from_ordinal(ord);
            assert!(is_week_start(w.start_date()));
            assert_eq!(WeekIndex::containing(w.start_date()), w);
            assert_eq!(
                WeekIndex::containing(w.start_date() + Duration::days(6)),
                w
            );
        }
    }

    #[test]
    fn weekly_sum_bins_a_full_week_of_ones() {
        let daily: Vec<(NaiveDate, f64)> = (5..=11).map(|day| (d(2020, 1, day), 1.0)).collect();
        let s = weekly_sum("BEL", "protests", &daily).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.values(), &[7.0]);
        assert_eq!(s.first_week().ordinal(), 0);
    }

    #[test]
    fn weekly_sum_counts_events_per_week() {
        let daily = vec![
            (d(2020, 1, 6), 1.0),
            (d(2020, 1, 6), 1.0),
            (d(2020, 1, 13), 1.0),
        ];
        let s = weekly_sum("BEL", "protests", &daily).unwrap();
        assert_eq!(s.values(), &[2.0, 1.0]);
    }

    #[test]
    fn weekly_sum_zero_fills_gap_weeks() {
        let daily = vec![(d(2020, 1, 6), 3.0), (d(2020, 1, 26), 2.0)];
        let s = weekly_sum("BEL", "protests", &daily).unwrap();
        assert_eq!(s.values(), &[3.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn weekly_sum_rejects_empty_input() {
        assert!(matches!(
            weekly_sum("BEL", "protests", &[]),
            Err(Error::EmptySeries(_))
        ));
    }

    #[test]
    fn weekly_mean_averages_within_week_and_zeroes_missing_weeks() {
        let daily = vec![
            (d(2020, 1, 5), 2.0),
            (d(2020, 1, 6), 4.0),
            // week of 2020-01-12 has no observations
            (d(2020, 1, 19), 5.0),
        ];
        let s = weekly_mean("BEL", "C1", &daily).unwrap();
        assert_eq!(s.values(), &[3.0, 0.0, 5.0]);
    }

    #[test]
    fn pop_weighted_aggregate_weights_by_population() {
        let w0 = WeekIndex::from_ordinal(0);
        let a = WeeklySeries::new("S1", "C1", w0, vec![4.0]).unwrap();
        let b = WeeklySeries::new("S2", "C1", w0, vec![8.0]).unwrap();
        let out = pop_weighted_aggregate("US-MW", &[(a, 1.0), (b, 3.0)]).unwrap();
        assert_eq!(out.values(), &[7.0]);
        assert_eq!(out.region(), "US-MW");
        assert_eq!(out.variable(), "C1");
    }

    #[test]
    fn pop_weighted_aggregate_rejects_bad_weights_and_misalignment() {
        let w0 = WeekIndex::from_ordinal(0);
        let a = WeeklySeries::new("S1", "C1", w0, vec![4.0]).unwrap();
        let b = WeeklySeries::new("S2", "C1", w0, vec![8.0]).unwrap();
        assert!(pop_weighted_aggregate("R", &[(a.clone(), 0.0), (b.clone(), 3.0)]).is_err());
        let shifted = WeeklySeries::new("S2", "C1", w0.offset(1), vec![8.0]).unwrap();
        assert!(matches!(
            pop_weighted_aggregate("R", &[(a, 1.0), (shifted, 3.0)]),
            Err(Error::Misaligned(_))
        ));
    }

    #[test]
    fn lag_shifts_values_forward() {
        let w1 = WeekIndex::from_ordinal(1);
        let s = WeeklySeries::new("BEL", "x", w1, vec![1.0, 2.0, 3.0]).unwrap();
        let l = lag(&s, 1).unwrap();
        assert_eq!(l.values(), &[1.0, 2.0]);
        assert_eq!(l.first_week().ordinal(), 2);
        assert_eq!(l.last_week().ordinal(), 3);
        assert_eq!(l.value_at(WeekIndex::from_ordinal(2)), Some(1.0));
    }

    #[test]
    fn lag_rejects_degenerate_shifts() {
        let w0 = WeekIndex::from_ordinal(0);
        let s = WeeklySeries::new("BEL", "x", w0, vec![1.0, 2.0]).unwrap();
        assert!(lag(&s, 0).is_err());
        assert!(lag(&s, 2).is_err());
    }

    #[test]
    fn quantile_type7_matches_reference_value() {
        let vals: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(quantile(&vals, 0.75).unwrap(), 5.25);
        assert_eq!(quantile(&vals, 0.0).unwrap(), 0.0);
        assert_eq!(quantile(&vals, 1.0).unwrap(), 7.0);
        assert_eq!(quantile(&[3.0], 0.4).unwrap(), 3.0);
    }

    #[test]
    fn quantile_rejects_bad_input() {
        assert!(quantile(&[], 0.5).is_err());
        assert!(quantile(&[1.0], -0.1).is_err());
        assert!(quantile(&[1.0], 1.1).is_err());
    }

    #[test]
    fn align_intersects_ranges_and_sorts_columns() {
        let target =
            WeeklySeries::new("BEL", "protests", WeekIndex::from_ordinal(0), vec![1.0; 10])
                .unwrap();
        let b = WeeklySeries::new("BEL", "b", WeekIndex::from_ordinal(2), vec![2.0; 10]).unwrap();
        let a = WeeklySeries::new("BEL", "a", WeekIndex::from_ordinal(0), vec![3.0; 6]).unwrap();
        let frame = align(&target, &[b, a]).unwrap();
        assert_eq!(frame.first_week().ordinal(), 2);
        assert_eq!(frame.last_week().ordinal(), 5);
        assert_eq!(frame.len(), 4);
        assert_eq!(frame.predictor_names(), vec!["a", "b"]);
    }

    #[test]
    fn align_rejects_disjoint_ranges() {
        let target =
            WeeklySeries::new("BEL", "protests", WeekIndex::from_ordinal(0), vec![1.0; 3])
                .unwrap();
        let far = WeeklySeries::new("BEL", "x", WeekIndex::from_ordinal(10), vec![1.0; 3]).unwrap();
        assert!(matches!(
            align(&target, &[far]),
            Err(Error::Misaligned(_))
        ));
    }

    #[test]
    fn frame_slice_preserves_columns() {
        let target =
            WeeklySeries::new("BEL", "protests", WeekIndex::from_ordinal(0), vec![1.0, 2.0, 3.0])
                .unwrap();
        let x = WeeklySeries::new("BEL", "x", WeekIndex::from_ordinal(0), vec![4.0, 5.0, 6.0])
            .unwrap();
        let frame = align(&target, &[x]).unwrap();
        let cut = frame
            .slice(WeekIndex::from_ordinal(1), WeekIndex::from_ordinal(2))
            .unwrap();
        assert_eq!(cut.target(), &[2.0, 3.0]);
        assert_eq!(cut.predictor("x").unwrap(), &[5.0, 6.0]);
        assert!(frame
            .slice(WeekIndex::from_ordinal(2), WeekIndex::from_ordinal(5))
            .is_err());
    }

    proptest! {
        #[test]
        fn quantile_stays_within_observed_range(
            vals in proptest::collection::vec(-1e6f64..1e6, 1..40),
            p in 0.0f64..=1.0,
        ) {
            let q = quantile(&vals, p).unwrap();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(q >= lo - 1e-9 && q <= hi + 1e-9);
        }

        #[test]
        fn quantile_is_monotone_in_p(
            vals in proptest::collection::vec(-1e6f64..1e6, 1..40),
            p1 in 0.0f64..=1.0,
            p2 in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(quantile(&vals, lo).unwrap() <= quantile(&vals, hi).unwrap() + 1e-9);
        }

        #[test]
        fn weekly_sum_preserves_totals(
            days in proptest::collection::vec((0i64..400, 0.0f64..100.0), 1..60),
        ) {
            let daily: Vec<(NaiveDate, f64)> = days
                .iter()
                .map(|&(off, v)| (epoch() + Duration::days(off), v))
                .collect();
            let total: f64 = daily.iter().map(|&(_, v)| v).sum();
            let s = weekly_sum("R", "x", &daily).unwrap();
            let weekly_total: f64 = s.values().iter().sum();
            prop_assert!((total - weekly_total).abs() < 1e-6);
        }

        #[test]
        fn lag_then_lookup_matches_source(
            vals in proptest::collection::vec(-100.0f64..100.0, 3..30),
            k in 1usize..3,
        ) {
            let s = WeeklySeries::new("R", "x", WeekIndex::from_ordinal(5), vals.clone()).unwrap();
            let lagged = lag(&s, k).unwrap();
            for idx in 0..lagged.len() {
                let wk = lagged.week_at(idx);
                prop_assert_eq!(lagged.value_at(wk).unwrap(), s.value_at(wk.offset(-(k as i64))).unwrap());
            }
        }
    }
}
