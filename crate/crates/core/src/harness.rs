//! Rolling-origin retraining and forecasting.
//!
//! A forecast run walks a fixed-length training window across the weekly
//! frame: window j trains on weeks `[start + j*h, train_end + j*h]` for
//! horizon h, forecasts the next h weeks, then slides forward by h and
//! retrains. Predictor screening, model selection, and fitting all happen
//! inside the current window; forecasts only read predictor values from
//! weeks at or before the window's end. Each window's span and selected
//! features are logged so tests can assert that structure directly.
//!
//! Binary tracks model exceedance of the upper-quartile protest level.
//! The threshold is computed once over the whole frame, mirroring the
//! original study design; windowed thresholds would make the class
//! definition drift between retrains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestConfig, ForestTask};
use crate::inference::{glm_predict, granger_test, stepwise_aic, Family};
use crate::timeseries::{quantile, FeatureFrame, WeekIndex};

/// Binary outcomes flag weeks strictly above this target quantile.
pub const BINARY_QUANTILE: f64 = 0.75;
/// The first training window must cover at least this many weeks.
pub const MIN_INITIAL_TRAIN_WEEKS: i64 = 20;
/// Regression models keep at most this many screened predictors.
pub const GLM_MAX_FEATURES: usize = 8;
/// Forests fall back to this many lowest-p predictors when none pass the
/// significance screen.
pub const RF_FALLBACK_FEATURES: usize = 9;
/// Screening significance level.
pub const SELECTION_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Count,
    Binary,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Count => "count",
            Outcome::Binary => "binary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Glm,
    Forest,
    Naive,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Glm => "glm",
            ModelKind::Forest => "forest",
            ModelKind::Naive => "naive",
        }
    }
}

/// How forests handle binary outcomes: vote over classes, or regress on
/// the 0/1 coding and threshold the mean at 0.5.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RfBinaryMode {
    #[default]
    Classification,
    RegressionThreshold,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub horizon: usize,
    pub outcome: Outcome,
    pub model: ModelKind,
    /// Last week of the first training window.
    pub initial_train_end: WeekIndex,
    /// Last week forecasts are produced for.
    pub test_end: WeekIndex,
    pub seed: u64,
    pub rf_binary_mode: RfBinaryMode,
    pub n_trees: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackEntry {
    pub week: WeekIndex,
    pub y_true: f64,
    pub y_pred: f64,
    pub window_index: usize,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowLog {
    pub window_index: usize,
    pub train_start: WeekIndex,
    pub train_end: WeekIndex,
    pub selected: Vec<String>,
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct ForecastTrack {
    pub region: String,
    pub horizon: usize,
    pub outcome: Outcome,
    pub model: ModelKind,
    pub entries: Vec<TrackEntry>,
    pub windows: Vec<WindowLog>,
}

impl ForecastTrack {
    /// First and last forecast week.
    pub fn span(&self) -> Option<(WeekIndex, WeekIndex)> {
        match (self.entries.first(), self.entries.last()) {
            (Some(a), Some(b)) => Some((a.week, b.week)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySeries {
    pub threshold: f64,
    pub values: Vec<f64>,
}

/// Flag values strictly above the upper quartile of `values` as 1.
pub fn binarize(values: &[f64]) -> Result<BinarySeries> {
    let threshold = quantile(values, BINARY_QUANTILE)?;
    Ok(BinarySeries {
        threshold,
        values: values
            .iter()
            .map(|&v| if v > threshold { 1.0 } else { 0.0 })
            .collect(),
    })
}

/// The modelled series for `outcome` over the whole frame, with the
/// binarization threshold when one applies.
pub fn outcome_values(frame: &FeatureFrame, outcome: Outcome) -> Result<(Vec<f64>, Option<f64>)> {
    match outcome {
        Outcome::Count => Ok((frame.target().to_vec(), None)),
        Outcome::Binary => {
            let b = binarize(frame.target())?;
            Ok((b.values, Some(b.threshold)))
        }
    }
}

/// Screen every predictor in `slice` for lag-`horizon` predictive content
/// on `outcome_slice`, returning (name, p) sorted by p then name.
/// Predictors whose test cannot run (constant columns, short windows) are
/// skipped; degenerate perfect fits arrive with p = 0 and sort first.
fn granger_screen(
    slice: &FeatureFrame,
    outcome_slice: &[f64],
    horizon: usize,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = Vec::new();
    for (name, column) in slice.predictors() {
        match granger_test(outcome_slice, column, horizon) {
            Ok(res) => scored.push((name.clone(), res.p_value)),
            Err(_) => continue,
        }
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

/// Regression-model selection: up to [`GLM_MAX_FEATURES`] predictors with
/// the smallest screening p-values.
pub fn select_features_glm(
    slice: &FeatureFrame,
    outcome_slice: &[f64],
    horizon: usize,
) -> Vec<String> {
    granger_screen(slice, outcome_slice, horizon)
        .into_iter()
        .take(GLM_MAX_FEATURES)
        .map(|(name, _)| name)
        .collect()
}

/// Forest selection: every predictor significant at [`SELECTION_ALPHA`];
/// when fewer than [`RF_FALLBACK_FEATURES`] are, the lowest-p predictors
/// top up to that count. The screen's (p, name) order makes the
/// significant set a prefix, so a single take covers both cases.
pub fn select_features_rf(
    slice: &FeatureFrame,
    outcome_slice: &[f64],
    horizon: usize,
) -> Vec<String> {
    let scored = granger_screen(slice, outcome_slice, horizon);
    let significant = scored.iter().filter(|(_, p)| *p < SELECTION_ALPHA).count();
    scored
        .into_iter()
        .take(significant.max(RF_FALLBACK_FEATURES))
        .map(|(name, _)| name)
        .collect()
}

/// Mixes a window index into the master seed (SplitMix64 finalizer) so
/// per-window forests are decorrelated but fully reproducible.
fn window_seed(master: u64, window: usize) -> u64 {
    let mut z = master ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(window as u64 + 1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct PlanLayout {
    start: WeekIndex,
    train_end: WeekIndex,
    test_end: WeekIndex,
    horizon: i64,
    n_windows: usize,
}

fn check_plan(frame: &FeatureFrame, plan: &ExperimentPlan) -> Result<PlanLayout> {
    if !(1..=3).contains(&plan.horizon) {
        return Err(Error::InvalidArgument(format!(
            "horizon must lie in 1..=3, got {}",
            plan.horizon
        )));
    }
    let start = frame.first_week();
    let train_end = plan.initial_train_end;
    let test_end = plan.test_end;
    let train_len = train_end.weeks_since(start) + 1;
    if train_len < MIN_INITIAL_TRAIN_WEEKS {
        return Err(Error::InvalidArgument(format!(
            "initial training window covers {train_len} weeks, need at least {MIN_INITIAL_TRAIN_WEEKS}"
        )));
    }
    if test_end <= train_end {
        return Err(Error::InvalidArgument(format!(
            "test end {test_end} must come after the initial training end {train_end}"
        )));
    }
    if test_end > frame.last_week() {
        return Err(Error::InvalidArgument(format!(
            "test end {test_end} lies beyond the data, which stops at {}",
            frame.last_week()
        )));
    }
    let horizon = plan.horizon as i64;
    let test_weeks = test_end.weeks_since(train_end);
    let n_windows = ((test_weeks + horizon - 1) / horizon) as usize;
    Ok(PlanLayout {
        start,
        train_end,
        test_end,
        horizon,
        n_windows,
    })
}

/// Run one (outcome, model, horizon) forecasting experiment over the frame.
pub fn run_plan(frame: &FeatureFrame, plan: &ExperimentPlan) -> Result<ForecastTrack> {
    match plan.model {
        ModelKind::Naive => naive_forecast(frame, plan),
        ModelKind::Glm | ModelKind::Forest => rolling_forecast(frame, plan),
    }
}

/// The persistence baseline: predict for week t whatever the outcome was
/// at week t - h. No training is involved; window indices are assigned to
/// match the retraining schedule of the modelled tracks.
pub fn naive_forecast(frame: &FeatureFrame, plan: &ExperimentPlan) -> Result<ForecastTrack> {
    let layout = check_plan(frame, plan)?;
    let (outcome, _) = outcome_values(frame, plan.outcome)?;
    let week_pos = |w: WeekIndex| w.weeks_since(layout.start) as usize;
    let mut entries = Vec::new();
    let mut week = layout.train_end.next();
    while week <= layout.test_end {
        let k = week.weeks_since(layout.train_end) - 1;
        entries.push(TrackEntry {
            week,
            y_true: outcome[week_pos(week)],
            y_pred: outcome[week_pos(week.offset(-layout.horizon))],
            window_index: (k / layout.horizon) as usize,
            fallback: false,
        });
        week = week.next();
    }
    Ok(ForecastTrack {
        region: frame.region().to_string(),
        horizon: plan.horizon,
        outcome: plan.outcome,
        model: ModelKind::Naive,
        entries,
        windows: Vec::new(),
    })
}

/// Rolling retrain-and-forecast for the GLM and forest models.
pub fn rolling_forecast(frame: &FeatureFrame, plan: &ExperimentPlan) -> Result<ForecastTrack> {
    let layout = check_plan(frame, plan)?;
    let (outcome, _) = outcome_values(frame, plan.outcome)?;
    let h = layout.horizon;
    let week_pos = |w: WeekIndex| w.weeks_since(layout.start) as usize;

    let mut entries = Vec::new();
    let mut windows = Vec::new();
    for j in 0..layout.n_windows {
        let shift = j as i64 * h;
        let train_start = layout.start.offset(shift);
        let train_end = layout.train_end.offset(shift);
        let slice = frame.slice(train_start, train_end)?;
        let outcome_slice = &outcome[week_pos(train_start)..=week_pos(train_end)];

        let selected = match plan.model {
            ModelKind::Glm => select_features_glm(&slice, outcome_slice, plan.horizon),
            ModelKind::Forest => select_features_rf(&slice, outcome_slice, plan.horizon),
            ModelKind::Naive => unreachable!("naive tracks never retrain"),
        };

        // Training rows pair the outcome at week t with predictor values
        // at week t - h, both inside the window: t runs from train_start+h
        // to train_end, so every lagged lookup stays inside the slice.
        let rows = slice.len() - plan.horizon;
        let train_y = &outcome_slice[plan.horizon..];
        let lagged: Vec<(String, Vec<f64>)> = selected
            .iter()
            .map(|name| {
                let col = slice.predictor(name).expect("selected from this slice");
                (name.clone(), col[..rows].to_vec())
            })
            .collect();

        let fitted = fit_window(plan, j, &lagged, train_y);
        let fallback = fitted.is_none();

        let first_forecast = train_end.next();
        let last_forecast = train_end.offset(h).min(layout.test_end);
        let mut week = first_forecast;
        while week <= last_forecast {
            let y_pred = match &fitted {
                Some(model) => {
                    // Forecast rows read predictor values from week t - h,
                    // which is at or before this window's training end.
                    let basis = week.offset(-h);
                    debug_assert!(basis <= train_end);
                    let row: Vec<(String, Vec<f64>)> = selected
                        .iter()
                        .map(|name| {
                            let col = frame.predictor(name).expect("roster column");
                            (name.clone(), vec![col[week_pos(basis)]])
                        })
                        .collect();
                    model.predict_one(plan, &row)?
                }
                // Unfittable window: fall back to persistence.
                None => outcome[week_pos(week.offset(-h))],
            };
            entries.push(TrackEntry {
                week,
                y_true: outcome[week_pos(week)],
                y_pred,
                window_index: j,
                fallback,
            });
            week = week.next();
        }
        windows.push(WindowLog {
            window_index: j,
            train_start,
            train_end,
            selected,
            fallback,
        });
    }
    Ok(ForecastTrack {
        region: frame.region().to_string(),
        horizon: plan.horizon,
        outcome: plan.outcome,
        model: plan.model,
        entries,
        windows,
    })
}

enum WindowModel {
    Glm(crate::inference::GlmFit),
    Forest(crate::forest::Forest),
}

impl WindowModel {
    fn predict_one(&self, plan: &ExperimentPlan, row: &[(String, Vec<f64>)]) -> Result<f64> {
        match self {
            WindowModel::Glm(fit) => {
                let mu = if fit.terms.is_empty() {
                    glm_predict(fit, &[])?[0]
                } else {
                    glm_predict(fit, row)?[0]
                };
                Ok(match plan.outcome {
                    Outcome::Count => mu,
                    Outcome::Binary => {
                        if mu > 0.5 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                })
            }
            WindowModel::Forest(forest) => {
                let raw = forest.predict(row)?[0];
                Ok(match (plan.outcome, plan.rf_binary_mode) {
                    (Outcome::Count, _) => raw,
                    (Outcome::Binary, RfBinaryMode::Classification) => raw,
                    (Outcome::Binary, RfBinaryMode::RegressionThreshold) => {
                        if raw > 0.5 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                })
            }
        }
    }
}

/// Fit the window's model, or None when the window is unfittable and the
/// track must fall back to persistence. GLMs with an empty selection still
/// fit (as intercept-only models); forests cannot, since they need at
/// least one feature to split on.
fn fit_window(
    plan: &ExperimentPlan,
    window_index: usize,
    lagged: &[(String, Vec<f64>)],
    train_y: &[f64],
) -> Option<WindowModel> {
    match plan.model {
        ModelKind::Glm => {
            let family = match plan.outcome {
                Outcome::Count => Family::Poisson,
                Outcome::Binary => Family::Logistic,
            };
            stepwise_aic(lagged, train_y, family)
                .ok()
                .map(WindowModel::Glm)
        }
        ModelKind::Forest => {
            let task = match (plan.outcome, plan.rf_binary_mode) {
                (Outcome::Count, _) => ForestTask::Regression,
                (Outcome::Binary, RfBinaryMode::Classification) => ForestTask::Classification,
                (Outcome::Binary, RfBinaryMode::RegressionThreshold) => ForestTask::Regression,
            };
            let mut config = ForestConfig::new(task, window_seed(plan.seed, window_index));
            config.n_trees = plan.n_trees;
            fit_forest(lagged, train_y, &config)
                .ok()
                .map(WindowModel::Forest)
        }
        ModelKind::Naive => unreachable!("naive tracks never fit"),
    }
}
