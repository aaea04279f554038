//! Forecast scoring against the persistence baseline.
//!
//! Binary tracks are scored with confusion-matrix rates; a rate whose
//! class never occurs in the truth is undefined and stays `None` rather
//! than silently becoming 0. Count tracks are scored with shifted squared
//! correlations (shift 0 is plain r^2; shifts 1 and 2 measure whether the
//! forecast tracks the outcome at a delay) and with the mean absolute
//! error scaled by the persistence baseline's, so values below 1 beat
//! persistence and the baseline itself scores exactly 1.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::harness::{ForecastTrack, ModelKind, Outcome};

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub bac: Option<f64>,
}

/// Confusion-matrix rates for a binary track. Truth and predictions must
/// be coded 0/1.
pub fn confusion_rates(track: &ForecastTrack) -> Result<BinaryMetrics> {
    if track.entries.is_empty() {
        return Err(Error::EmptySeries("forecast track".to_string()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for entry in &track.entries {
        for v in [entry.y_true, entry.y_pred] {
            if v != 0.0 && v != 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "binary metrics need 0/1 values, got {v} in week {}",
                    entry.week
                )));
            }
        }
        match (entry.y_true == 1.0, entry.y_pred == 1.0) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let rate = |hit: usize, total: usize| {
        if total == 0 {
            None
        } else {
            Some(hit as f64 / total as f64)
        }
    };
    let tpr = rate(tp, tp + fn_);
    let tnr = rate(tn, tn + fp);
    let bac = match (tpr, tnr) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        _ => None,
    };
    Ok(BinaryMetrics {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        tpr,
        tnr,
        bac,
    })
}

/// Squared Pearson correlation between forecasts and the truth `shift`
/// weeks earlier: pairs (F_t, Y_{t-shift}) for every forecast week t whose
/// shifted partner is also a forecast week. Needs at least 3 pairs and
/// variation on both sides; otherwise the statistic is undefined.
pub fn pearson_r2(track: &ForecastTrack, shift: usize) -> Option<f64> {
    let truth: BTreeMap<i64, f64> = track
        .entries
        .iter()
        .map(|e| (e.week.ordinal(), e.y_true))
        .collect();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for entry in &track.entries {
        if let Some(&y) = truth.get(&(entry.week.ordinal() - shift as i64)) {
            pairs.push((entry.y_pred, y));
        }
    }
    if pairs.len() < 3 {
        return None;
    }
    let n = pairs.len() as f64;
    let mean_f = pairs.iter().map(|(f, _)| f).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_f = 0.0;
    let mut var_y = 0.0;
    for (f, y) in &pairs {
        cov += (f - mean_f) * (y - mean_y);
        var_f += (f - mean_f).powi(2);
        var_y += (y - mean_y).powi(2);
    }
    if var_f <= 0.0 || var_y <= 0.0 {
        return None;
    }
    Some((cov * cov) / (var_f * var_y))
}

/// Mean absolute error of `track` divided by the persistence baseline's
/// over the same weeks. The two tracks must cover the same (region,
/// horizon, outcome) experiment and identical test weeks.
pub fn mase(track: &ForecastTrack, naive: &ForecastTrack) -> Result<Option<f64>> {
    if naive.model != ModelKind::Naive {
        return Err(Error::InvalidArgument(format!(
            "scaling track must be the persistence baseline, got {}",
            naive.model.as_str()
        )));
    }
    if track.region != naive.region
        || track.horizon != naive.horizon
        || track.outcome != naive.outcome
    {
        return Err(Error::Misaligned(
            "scaled error needs tracks from the same experiment".to_string(),
        ));
    }
    if track.entries.is_empty() {
        return Err(Error::EmptySeries("forecast track".to_string()));
    }
    let weeks = |t: &ForecastTrack| -> Vec<i64> {
        t.entries.iter().map(|e| e.week.ordinal()).collect()
    };
    if weeks(track) != weeks(naive) {
        return Err(Error::Misaligned(
            "scaled error needs identical test weeks".to_string(),
        ));
    }
    let mae = |t: &ForecastTrack| {
        t.entries
            .iter()
            .map(|e| (e.y_true - e.y_pred).abs())
            .sum::<f64>()
            / t.entries.len() as f64
    };
    let baseline = mae(naive);
    if baseline == 0.0 {
        return Ok(None);
    }
    Ok(Some(mae(track) / baseline))
}

/// One scored metric row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub region: String,
    pub horizon: usize,
    pub outcome: Outcome,
    pub model: ModelKind,
    pub metric: String,
    /// None encodes an undefined statistic.
    pub value: Option<f64>,
}

/// Score every track against its experiment's persistence baseline.
/// Binary tracks produce tpr/tnr/bac rows; count tracks produce
/// r2_s0/r2_s1/r2_s2/mase rows. Rows come out sorted by (region, horizon,
/// outcome, model, metric).
pub fn build_report(tracks: &[ForecastTrack]) -> Result<Vec<MetricRow>> {
    type Key = (String, usize, Outcome);
    let mut groups: BTreeMap<Key, Vec<&ForecastTrack>> = BTreeMap::new();
    for track in tracks {
        groups
            .entry((track.region.clone(), track.horizon, track.outcome))
            .or_default()
            .push(track);
    }

    let mut rows = Vec::new();
    for ((region, horizon, outcome), members) in groups {
        let naive = members
            .iter()
            .find(|t| t.model == ModelKind::Naive)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no persistence baseline for {region} horizon {horizon} {}",
                    outcome.as_str()
                ))
            })?;
        let mut members: Vec<&&ForecastTrack> = members.iter().collect();
        members.sort_by_key(|t| t.model);
        for track in members {
            match outcome {
                Outcome::Binary => {
                    let m = confusion_rates(track)?;
                    for (metric, value) in [("tpr", m.tpr), ("tnr", m.tnr), ("bac", m.bac)] {
                        rows.push(MetricRow {
                            region: region.clone(),
                            horizon,
                            outcome,
                            model: track.model,
                            metric: metric.to_string(),
                            value,
                        });
                    }
                }
                Outcome::Count => {
                    for shift in 0..=2usize {
                        rows.push(MetricRow {
                            region: region.clone(),
                            horizon,
                            outcome,
                            model: track.model,
                            metric: format!("r2_s{shift}"),
                            value: pearson_r2(track, shift),
                        });
                    }
                    rows.push(MetricRow {
                        region: region.clone(),
                        horizon,
                        outcome,
                        model: track.model,
                        metric: "mase".to_string(),
                        value: mase(track, naive)?,
                    });
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        (&a.region, a.horizon, a.outcome, a.model, &a.metric).cmp(&(
            &b.region,
            b.horizon,
            b.outcome,
            b.model,
            &b.metric,
        ))
    });
    Ok(rows)
}
