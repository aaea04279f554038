//! Run configuration: a TOML file plus command-line and environment
//! overrides.
//!
//! Relative paths in the file resolve against the file's own directory,
//! so a config can travel with its data. Precedence for the output
//! directory is UNRESTCAST_OUT, then the config value, then `out/` next
//! to the config. Command-line flags beat config values everywhere else.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use unrestcast_core::harness::{ModelKind, Outcome, RfBinaryMode};

use crate::CliError;

pub const OUT_ENV_VAR: &str = "UNRESTCAST_OUT";
const DEFAULT_INITIAL_TRAIN_END: &str = "2020-10-31";
const DEFAULT_WINDOW_START: &str = "2020-01-05";
const DEFAULT_SEED: u64 = 42;
const DEFAULT_TREES: usize = 500;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data: DataSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    flags: FlagsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    events: String,
    policy: String,
    trends: String,
    groupings: String,
    regions: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunSection {
    regions: Option<Vec<String>>,
    horizons: Option<Vec<usize>>,
    outcomes: Option<Vec<String>>,
    models: Option<Vec<String>>,
    initial_train_end: Option<String>,
    test_end: Option<String>,
    window_start: Option<String>,
    window_end: Option<String>,
    seed: Option<u64>,
    n_trees: Option<usize>,
    output_dir: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FlagsSection {
    round_counts: Option<bool>,
    rf_binary_mode: Option<String>,
    svg: Option<bool>,
}

/// Command-line overrides, already parsed.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub regions: Option<Vec<String>>,
    pub horizons: Option<Vec<usize>>,
    pub svg: bool,
    pub round_counts: bool,
}

#[derive(Debug, Clone)]
pub struct DataPaths {
    pub events: PathBuf,
    pub policy: PathBuf,
    pub trends: PathBuf,
    pub groupings: PathBuf,
    pub regions: PathBuf,
}

/// Fully resolved settings every command runs from.
#[derive(Debug, Clone)]
pub struct Settings {
    pub paths: DataPaths,
    /// None runs every region in the roster.
    pub regions: Option<Vec<String>>,
    pub horizons: Vec<usize>,
    pub outcomes: Vec<Outcome>,
    /// Trained models to run; the persistence baseline always runs too.
    pub models: Vec<ModelKind>,
    pub initial_train_end: NaiveDate,
    pub test_end: NaiveDate,
    pub window: (NaiveDate, NaiveDate),
    pub seed: u64,
    pub n_trees: usize,
    pub output_dir: PathBuf,
    pub round_counts: bool,
    pub rf_binary_mode: RfBinaryMode,
    pub svg: bool,
}

fn config_err(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn parse_config_date(field: &str, text: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|_| config_err(format!("{field}: bad date {text:?}, want YYYY-MM-DD")))
}

fn parse_outcome(text: &str) -> Result<Outcome, CliError> {
    match text {
        "count" => Ok(Outcome::Count),
        "binary" => Ok(Outcome::Binary),
        other => Err(config_err(format!(
            "unknown outcome {other:?}, want count or binary"
        ))),
    }
}

fn parse_model(text: &str) -> Result<ModelKind, CliError> {
    match text {
        "glm" => Ok(ModelKind::Glm),
        "forest" => Ok(ModelKind::Forest),
        "naive" => Ok(ModelKind::Naive),
        other => Err(config_err(format!(
            "unknown model {other:?}, want glm, forest, or naive"
        ))),
    }
}

fn dedup_ordered<T: PartialEq + Copy>(items: &[T], canon: &[T]) -> Vec<T> {
    canon.iter().copied().filter(|c| items.contains(c)).collect()
}

/// Load the config file and fold in overrides.
pub fn load_settings(config_path: &Path, overrides: &Overrides) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        config_err(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let file: FileConfig = toml::from_str(&text)
        .map_err(|e| config_err(format!("{}: {e}", config_path.display())))?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |rel: &str| -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };

    let paths = DataPaths {
        events: resolve(&file.data.events),
        policy: resolve(&file.data.policy),
        trends: resolve(&file.data.trends),
        groupings: resolve(&file.data.groupings),
        regions: resolve(&file.data.regions),
    };

    let horizons = overrides
        .horizons
        .clone()
        .or(file.run.horizons)
        .unwrap_or_else(|| vec![1, 2, 3]);
    if horizons.is_empty() || horizons.iter().any(|h| !(1..=3).contains(h)) {
        return Err(config_err(format!(
            "horizons must be a non-empty subset of 1..=3, got {horizons:?}"
        )));
    }
    let horizons = {
        let set: BTreeSet<usize> = horizons.into_iter().collect();
        set.into_iter().collect::<Vec<_>>()
    };

    let outcomes = match &file.run.outcomes {
        None => vec![Outcome::Count, Outcome::Binary],
        Some(list) => {
            let parsed: Vec<Outcome> = list
                .iter()
                .map(|s| parse_outcome(s))
                .collect::<Result<_, _>>()?;
            let parsed = dedup_ordered(&parsed, &[Outcome::Count, Outcome::Binary]);
            if parsed.is_empty() {
                return Err(config_err("outcomes must not be empty"));
            }
            parsed
        }
    };

    let models = match &file.run.models {
        None => vec![ModelKind::Glm, ModelKind::Forest],
        Some(list) => {
            let parsed: Vec<ModelKind> = list
                .iter()
                .map(|s| parse_model(s))
                .collect::<Result<_, _>>()?;
            // The baseline always runs; listing it is allowed but carries
            // no extra meaning.
            dedup_ordered(&parsed, &[ModelKind::Glm, ModelKind::Forest])
        }
    };

    let initial_train_end = parse_config_date(
        "run.initial_train_end",
        file.run
            .initial_train_end
            .as_deref()
            .unwrap_or(DEFAULT_INITIAL_TRAIN_END),
    )?;
    let test_end_text = file
        .run
        .test_end
        .as_ref()
        .ok_or_else(|| config_err("run.test_end is required"))?;
    let test_end = parse_config_date("run.test_end", test_end_text)?;
    let window_start = parse_config_date(
        "run.window_start",
        file.run
            .window_start
            .as_deref()
            .unwrap_or(DEFAULT_WINDOW_START),
    )?;
    let window_end = match &file.run.window_end {
        Some(text) => parse_config_date("run.window_end", text)?,
        None => test_end,
    };
    if window_end < window_start {
        return Err(config_err(format!(
            "study window ends ({window_end}) before it starts ({window_start})"
        )));
    }
    if test_end > window_end {
        return Err(config_err(format!(
            "run.test_end {test_end} lies outside the study window ending {window_end}"
        )));
    }
    if initial_train_end >= test_end {
        return Err(config_err(format!(
            "run.initial_train_end {initial_train_end} must come before run.test_end {test_end}"
        )));
    }

    let regions = overrides.regions.clone().or(file.run.regions);
    if let Some(list) = &regions {
        if list.is_empty() {
            return Err(config_err("regions list must not be empty when given"));
        }
    }

    let n_trees = file.run.n_trees.unwrap_or(DEFAULT_TREES);
    if n_trees == 0 {
        return Err(config_err("run.n_trees must be at least 1"));
    }

    let rf_binary_mode = match file.flags.rf_binary_mode.as_deref() {
        None | Some("classification") => RfBinaryMode::Classification,
        Some("regression_threshold") => RfBinaryMode::RegressionThreshold,
        Some(other) => {
            return Err(config_err(format!(
                "unknown rf_binary_mode {other:?}, want classification or regression_threshold"
            )))
        }
    };

    let output_dir = match std::env::var(OUT_ENV_VAR) {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => resolve(file.run.output_dir.as_deref().unwrap_or("out")),
    };

    Ok(Settings {
        paths,
        regions,
        horizons,
        outcomes,
        models,
        initial_train_end,
        test_end,
        window: (window_start, window_end),
        seed: overrides.seed.or(file.run.seed).unwrap_or(DEFAULT_SEED),
        n_trees,
        output_dir,
        round_counts: overrides.round_counts
            || file.flags.round_counts.unwrap_or(false),
        rf_binary_mode,
        svg: overrides.svg || file.flags.svg.unwrap_or(false),
    })
}
