//! The four pipeline commands: ingest, explore, forecast, report.
//!
//! Every output file is written with sorted iteration orders and
//! shortest-round-trip float formatting, so a rerun with the same inputs
//! and seed produces byte-identical files. Forecast plans run in parallel
//! but results are collected and written in a fixed order.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use unrestcast_core::evaluation::build_report;
use unrestcast_core::harness::{
    run_plan, ExperimentPlan, ForecastTrack, ModelKind, Outcome, TrackEntry,
    BINARY_QUANTILE, GLM_MAX_FEATURES, MIN_INITIAL_TRAIN_WEEKS, RF_FALLBACK_FEATURES,
    SELECTION_ALPHA,
};
use unrestcast_core::inference::granger_test;
use unrestcast_core::ingest::{
    build_region_datasets, filter_covid, format_float, parse_events, parse_groupings,
    parse_policy, parse_regions, parse_trends, write_dataset_csv, RegionDataset,
};
use unrestcast_core::timeseries::WeekIndex;

use crate::config::Settings;
use crate::plot::{line_chart, Series};
use crate::CliError;

const MAX_SCREEN_LAG: usize = 4;

/// Colors for report plots, keyed by what the line shows.
const ACTUAL_COLOR: &str = "#000000";
const MODEL_COLORS: [(ModelKind, &str); 3] = [
    (ModelKind::Glm, "#1f77b4"),
    (ModelKind::Forest, "#2ca02c"),
    (ModelKind::Naive, "#999999"),
];

fn ensure_out_dir(settings: &Settings) -> Result<(), CliError> {
    std::fs::create_dir_all(&settings.output_dir)
        .map_err(|e| CliError::io(&settings.output_dir, e))
}

fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::io(path, e))
}

/// Region names become file-name fragments: anything outside
/// [A-Za-z0-9._-] turns into an underscore.
fn region_slug(region: &str) -> String {
    region
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

struct IngestStats {
    events_in_window: usize,
    events_outside_window: usize,
    events_covid_related: usize,
}

fn build_datasets(settings: &Settings) -> Result<(Vec<RegionDataset>, IngestStats), CliError> {
    let (events, dropped) = parse_events(&settings.paths.events, settings.window)?;
    let covid = filter_covid(&events);
    let policy = parse_policy(&settings.paths.policy, settings.window)?;
    let trends = parse_trends(&settings.paths.trends, settings.window)?;
    let groupings = parse_groupings(&settings.paths.groupings)?;
    let regions = parse_regions(&settings.paths.regions)?;
    let datasets = build_region_datasets(
        &covid,
        &policy,
        &trends,
        &groupings,
        &regions,
        settings.window,
        settings.regions.as_deref(),
    )?;
    Ok((
        datasets,
        IngestStats {
            events_in_window: events.len(),
            events_outside_window: dropped,
            events_covid_related: covid.len(),
        },
    ))
}

#[derive(Serialize)]
struct ManifestRegion {
    region: String,
    file: String,
    first_week: String,
    last_week: String,
    weeks: usize,
}

#[derive(Serialize)]
struct Manifest {
    window_start: String,
    window_end: String,
    events_in_window: usize,
    events_outside_window: usize,
    events_covid_related: usize,
    regions: Vec<ManifestRegion>,
}

pub fn cmd_ingest(settings: &Settings) -> Result<(), CliError> {
    let (datasets, stats) = build_datasets(settings)?;
    ensure_out_dir(settings)?;
    let mut entries = Vec::new();
    for ds in &datasets {
        let file = format!("dataset_{}.csv", region_slug(&ds.region));
        write_dataset_csv(ds, &settings.output_dir.join(&file))?;
        entries.push(ManifestRegion {
            region: ds.region.clone(),
            file,
            first_week: ds.frame.first_week().start_date().to_string(),
            last_week: ds.frame.last_week().start_date().to_string(),
            weeks: ds.frame.len(),
        });
    }
    let manifest = Manifest {
        window_start: settings.window.0.to_string(),
        window_end: settings.window.1.to_string(),
        events_in_window: stats.events_in_window,
        events_outside_window: stats.events_outside_window,
        events_covid_related: stats.events_covid_related,
        regions: entries,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&settings.output_dir.join("manifest.json"), &(json + "\n"))?;
    println!(
        "wrote {} dataset(s) and manifest.json to {}",
        datasets.len(),
        settings.output_dir.display()
    );
    Ok(())
}

pub fn cmd_explore(settings: &Settings) -> Result<(), CliError> {
    let (datasets, _) = build_datasets(settings)?;
    ensure_out_dir(settings)?;

    let mut full = String::from("region,predictor,lag,f_stat,p_value,status\n");
    let mut best_rows: Vec<(String, String, usize, Option<f64>, f64)> = Vec::new();
    let mut n_rows = 0usize;
    for ds in &datasets {
        let target = ds.frame.target();
        for (name, column) in ds.frame.predictors() {
            // Best usable lag for this predictor: smallest p, ties to the
            // shorter lag.
            let mut best: Option<(f64, usize, Option<f64>)> = None;
            for lag in 1..=MAX_SCREEN_LAG {
                let cells = match granger_test(target, column, lag) {
                    Ok(res) if res.degenerate => {
                        let cand = (0.0, lag, None);
                        if best.is_none_or(|(bp, bl, _)| (0.0, lag) < (bp, bl)) {
                            best = Some(cand);
                        }
                        ("NA".to_string(), "0".to_string(), "degenerate")
                    }
                    Ok(res) => {
                        let cand = (res.p_value, lag, Some(res.f_stat));
                        if best.is_none_or(|(bp, bl, _)| (res.p_value, lag) < (bp, bl)) {
                            best = Some(cand);
                        }
                        (
                            format_float(res.f_stat),
                            format_float(res.p_value),
                            "ok",
                        )
                    }
                    Err(_) => ("NA".to_string(), "NA".to_string(), "skipped"),
                };
                full.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    ds.region, name, lag, cells.0, cells.1, cells.2
                ));
                n_rows += 1;
            }
            if let Some((p, lag, f)) = best {
                if p < SELECTION_ALPHA {
                    best_rows.push((ds.region.clone(), name.clone(), lag, f, p));
                }
            }
        }
    }

    let mut significant = String::from("region,predictor,lag,f_stat,p_value\n");
    for (region, name, lag, f, p) in &best_rows {
        significant.push_str(&format!(
            "{},{},{},{},{}\n",
            region,
            name,
            lag,
            f.map_or("NA".to_string(), format_float),
            format_float(*p)
        ));
    }

    write_text(&settings.output_dir.join("granger.csv"), &full)?;
    write_text(
        &settings.output_dir.join("granger_significant.csv"),
        &significant,
    )?;
    println!(
        "wrote granger.csv ({n_rows} rows) and granger_significant.csv ({} rows) to {}",
        best_rows.len(),
        settings.output_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RunMetadata {
    seed: u64,
    n_trees: usize,
    horizons: Vec<usize>,
    outcomes: Vec<String>,
    models: Vec<String>,
    regions: Vec<String>,
    window_start: String,
    window_end: String,
    initial_train_end: String,
    initial_train_end_week: String,
    test_end: String,
    test_end_week: String,
    rf_binary_mode: String,
    round_counts: bool,
    binary_quantile: f64,
    selection_alpha: f64,
    glm_max_features: usize,
    rf_fallback_features: usize,
    min_initial_train_weeks: i64,
    failed_plans: Vec<String>,
}

pub fn cmd_forecast(settings: &Settings) -> Result<(), CliError> {
    let (datasets, _) = build_datasets(settings)?;
    ensure_out_dir(settings)?;

    let initial_train_end = WeekIndex::containing(settings.initial_train_end);
    let test_end = WeekIndex::containing(settings.test_end);

    // The persistence baseline runs for every experiment; it both reports
    // on its own and scales the count metrics.
    let mut kinds = vec![ModelKind::Naive];
    kinds.extend(settings.models.iter().copied());

    let mut jobs: Vec<(String, &RegionDataset, ExperimentPlan)> = Vec::new();
    for ds in &datasets {
        for &horizon in &settings.horizons {
            for &outcome in &settings.outcomes {
                for &model in &kinds {
                    let desc = format!(
                        "{} horizon {} {} {}",
                        ds.region,
                        horizon,
                        outcome.as_str(),
                        model.as_str()
                    );
                    jobs.push((
                        desc,
                        ds,
                        ExperimentPlan {
                            horizon,
                            outcome,
                            model,
                            initial_train_end,
                            test_end,
                            seed: settings.seed,
                            rf_binary_mode: settings.rf_binary_mode,
                            n_trees: settings.n_trees,
                        },
                    ));
                }
            }
        }
    }

    let results: Vec<Result<ForecastTrack, (String, String)>> = jobs
        .par_iter()
        .map(|(desc, ds, plan)| {
            run_plan(&ds.frame, plan).map_err(|e| (desc.clone(), e.to_string()))
        })
        .collect();

    let mut tracks = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(track) => tracks.push(track),
            Err(pair) => failures.push(pair),
        }
    }
    tracks.sort_by(|a, b| {
        (&a.region, a.horizon, a.outcome, a.model).cmp(&(&b.region, b.horizon, b.outcome, b.model))
    });
    failures.sort();

    let mut forecasts =
        String::from("region,horizon,outcome,model,week_start,y_true,y_pred,window_index,fallback_flag\n");
    for track in &tracks {
        for entry in &track.entries {
            let y_pred = if settings.round_counts && track.outcome == Outcome::Count {
                entry.y_pred.round()
            } else {
                entry.y_pred
            };
            forecasts.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                track.region,
                track.horizon,
                track.outcome.as_str(),
                track.model.as_str(),
                entry.week.start_date(),
                format_float(entry.y_true),
                format_float(y_pred),
                entry.window_index,
                u8::from(entry.fallback)
            ));
        }
    }
    write_text(&settings.output_dir.join("forecasts.csv"), &forecasts)?;

    let mut selection =
        String::from("region,horizon,outcome,model,window_index,selected_features\n");
    for track in &tracks {
        for window in &track.windows {
            selection.push_str(&format!(
                "{},{},{},{},{},{}\n",
                track.region,
                track.horizon,
                track.outcome.as_str(),
                track.model.as_str(),
                window.window_index,
                window.selected.join(";")
            ));
        }
    }
    write_text(&settings.output_dir.join("selection_log.csv"), &selection)?;

    let metadata = RunMetadata {
        seed: settings.seed,
        n_trees: settings.n_trees,
        horizons: settings.horizons.clone(),
        outcomes: settings.outcomes.iter().map(|o| o.as_str().to_string()).collect(),
        models: kinds.iter().map(|m| m.as_str().to_string()).collect(),
        regions: datasets.iter().map(|d| d.region.clone()).collect(),
        window_start: settings.window.0.to_string(),
        window_end: settings.window.1.to_string(),
        initial_train_end: settings.initial_train_end.to_string(),
        initial_train_end_week: initial_train_end.start_date().to_string(),
        test_end: settings.test_end.to_string(),
        test_end_week: test_end.start_date().to_string(),
        rf_binary_mode: match settings.rf_binary_mode {
            unrestcast_core::harness::RfBinaryMode::Classification => "classification",
            unrestcast_core::harness::RfBinaryMode::RegressionThreshold => "regression_threshold",
        }
        .to_string(),
        round_counts: settings.round_counts,
        binary_quantile: BINARY_QUANTILE,
        selection_alpha: SELECTION_ALPHA,
        glm_max_features: GLM_MAX_FEATURES,
        rf_fallback_features: RF_FALLBACK_FEATURES,
        min_initial_train_weeks: MIN_INITIAL_TRAIN_WEEKS,
        failed_plans: failures.iter().map(|(d, e)| format!("{d}: {e}")).collect(),
    };
    let json = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    write_text(&settings.output_dir.join("run_metadata.json"), &(json + "\n"))?;

    for (desc, err) in &failures {
        eprintln!("plan failed: {desc}: {err}");
    }
    println!(
        "ran {} plan(s), {} failed; wrote forecasts.csv, selection_log.csv, run_metadata.json to {}",
        jobs.len(),
        failures.len(),
        settings.output_dir.display()
    );
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Partial {
            failed: failures.len(),
            total: jobs.len(),
        })
    }
}

fn parse_outcome_name(text: &str) -> Option<Outcome> {
    match text {
        "count" => Some(Outcome::Count),
        "binary" => Some(Outcome::Binary),
        _ => None,
    }
}

fn parse_model_name(text: &str) -> Option<ModelKind> {
    match text {
        "glm" => Some(ModelKind::Glm),
        "forest" => Some(ModelKind::Forest),
        "naive" => Some(ModelKind::Naive),
        _ => None,
    }
}

/// Read forecasts.csv back into tracks for scoring.
fn read_forecasts(path: &Path) -> Result<Vec<ForecastTrack>, CliError> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| {
            CliError::Input(unrestcast_core::Error::bad_input(
                &file,
                format!("cannot open: {e}"),
            ))
        })?;
    let expect = "region,horizon,outcome,model,week_start,y_true,y_pred,window_index,fallback_flag";
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(unrestcast_core::Error::bad_input(&file, e.to_string())))?;
    if headers.iter().collect::<Vec<_>>().join(",") != expect {
        return Err(CliError::Input(unrestcast_core::Error::bad_input(
            &file,
            format!("unexpected header, want {expect}"),
        )));
    }
    type Key = (String, usize, Outcome, ModelKind);
    let mut grouped: BTreeMap<Key, Vec<TrackEntry>> = BTreeMap::new();
    for row in reader.records() {
        let row =
            row.map_err(|e| CliError::Input(unrestcast_core::Error::bad_input(&file, e.to_string())))?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |msg: String| {
            CliError::Input(unrestcast_core::Error::parse(&file, line, msg))
        };
        let horizon: usize = row[1].parse().map_err(|_| bad(format!("bad horizon {:?}", &row[1])))?;
        let outcome =
            parse_outcome_name(&row[2]).ok_or_else(|| bad(format!("bad outcome {:?}", &row[2])))?;
        let model =
            parse_model_name(&row[3]).ok_or_else(|| bad(format!("bad model {:?}", &row[3])))?;
        let date = chrono::NaiveDate::parse_from_str(&row[4], "%Y-%m-%d")
            .map_err(|_| bad(format!("bad date {:?}", &row[4])))?;
        let y_true: f64 = row[5].parse().map_err(|_| bad(format!("bad y_true {:?}", &row[5])))?;
        let y_pred: f64 = row[6].parse().map_err(|_| bad(format!("bad y_pred {:?}", &row[6])))?;
        let window_index: usize =
            row[7].parse().map_err(|_| bad(format!("bad window_index {:?}", &row[7])))?;
        let fallback = match &row[8] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("bad fallback_flag {other:?}"))),
        };
        grouped
            .entry((row[0].to_string(), horizon, outcome, model))
            .or_default()
            .push(TrackEntry {
                week: WeekIndex::containing(date),
                y_true,
                y_pred,
                window_index,
                fallback,
            });
    }
    Ok(grouped
        .into_iter()
        .map(|((region, horizon, outcome, model), mut entries)| {
            entries.sort_by_key(|e| e.week);
            ForecastTrack {
                region,
                horizon,
                outcome,
                model,
                entries,
                windows: Vec::new(),
            }
        })
        .collect())
}

pub fn cmd_report(settings: &Settings) -> Result<(), CliError> {
    let tracks = read_forecasts(&settings.output_dir.join("forecasts.csv"))?;
    let rows = build_report(&tracks)?;

    let mut metrics = String::from("region,horizon,outcome,model,metric,value\n");
    for row in &rows {
        metrics.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.region,
            row.horizon,
            row.outcome.as_str(),
            row.model.as_str(),
            row.metric,
            row.value.map_or("NA".to_string(), format_float)
        ));
    }
    write_text(&settings.output_dir.join("metrics.csv"), &metrics)?;

    let mut n_plots = 0usize;
    if settings.svg {
        type PlotKey = (String, usize);
        let mut plots: BTreeMap<PlotKey, Vec<&ForecastTrack>> = BTreeMap::new();
        for track in &tracks {
            if track.outcome == Outcome::Count {
                plots
                    .entry((track.region.clone(), track.horizon))
                    .or_default()
                    .push(track);
            }
        }
        for ((region, horizon), members) in plots {
            let Some(first) = members.first() else { continue };
            let actual: Vec<(f64, f64)> = first
                .entries
                .iter()
                .map(|e| (e.week.ordinal() as f64, e.y_true))
                .collect();
            type PlotLine = (String, &'static str, Vec<(f64, f64)>);
            let mut lines: Vec<PlotLine> = vec![("actual".to_string(), ACTUAL_COLOR, actual)];
            for track in &members {
                let color = MODEL_COLORS
                    .iter()
                    .find(|(m, _)| *m == track.model)
                    .map(|(_, c)| *c)
                    .unwrap_or("#888888");
                lines.push((
                    track.model.as_str().to_string(),
                    color,
                    track
                        .entries
                        .iter()
                        .map(|e| (e.week.ordinal() as f64, e.y_pred))
                        .collect(),
                ));
            }
            let series: Vec<Series> = lines
                .iter()
                .map(|(label, color, points)| Series {
                    label,
                    color,
                    points,
                })
                .collect();
            let span = first.span().expect("non-empty track");
            let svg = line_chart(
                &format!("{region}, horizon {horizon}"),
                (
                    &span.0.start_date().to_string(),
                    &span.1.start_date().to_string(),
                ),
                &series,
            );
            let name = format!("plot_{}_h{}.svg", region_slug(&region), horizon);
            write_text(&settings.output_dir.join(name), &svg)?;
            n_plots += 1;
        }
    }

    println!(
        "wrote metrics.csv ({} rows){} to {}",
        rows.len(),
        if settings.svg {
            format!(" and {n_plots} plot(s)")
        } else {
            String::new()
        },
        settings.output_dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_slug_keeps_safe_characters() {
        assert_eq!(region_slug("North America"), "North_America");
        assert_eq!(region_slug("EU-27"), "EU-27");
        assert_eq!(region_slug("a/b\\c"), "a_b_c");
    }

    #[test]
    fn outcome_and_model_names_round_trip() {
        for outcome in [Outcome::Count, Outcome::Binary] {
            assert_eq!(parse_outcome_name(outcome.as_str()), Some(outcome));
        }
        for model in [ModelKind::Glm, ModelKind::Forest, ModelKind::Naive] {
            assert_eq!(parse_model_name(model.as_str()), Some(model));
        }
        assert_eq!(parse_outcome_name("weekly"), None);
        assert_eq!(parse_model_name("svm"), None);
    }
}
