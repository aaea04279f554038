//! Shared synthetic-corpus builder for the integration and acceptance
//! tests.
#![allow(dead_code)] // not every test target uses every helper
//!
//! The corpus has one region ("Alpha" = single subregion A1) observed for
//! `n_weeks` weeks. One search-interest series (term "pandemic", group
//! general) is a white jagged driver: protest counts follow
//! round(exp(0.25 * driver)) two weeks later, so the only real signal in
//! the corpus sits at lag 2 on the trends_general column. Every other
//! predictor is independent deterministic noise. Events outside the study
//! window and non-pandemic events are sprinkled in to exercise the
//! filters.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Output;

use chrono::{Duration, NaiveDate};
use unrestcast_core::ingest::{INDICATORS, INDICES};

/// Small deterministic xorshift generator so fixtures never depend on the
/// crate's own RNG choices.
pub struct Rng64(u64);

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Rng64(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

pub fn week_start(ordinal: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 5).unwrap() + Duration::weeks(ordinal)
}

pub struct FixtureSpec {
    pub n_weeks: usize,
    pub n_trees: usize,
    pub initial_train_weeks: usize,
    /// TOML list literal, e.g. "[1, 2, 3]".
    pub horizons: &'static str,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            n_weeks: 60,
            n_trees: 40,
            initial_train_weeks: 30,
            horizons: "[1, 2, 3]",
            seed: 42,
        }
    }
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    /// Weekly protest counts the corpus encodes.
    pub protests: Vec<u64>,
    /// The planted driver (trends_general volumes).
    pub driver: Vec<u64>,
}

pub fn planted_fixture(spec: &FixtureSpec) -> Fixture {
    let dir = tempfile::tempdir().expect("tempdir");
    let n = spec.n_weeks;
    assert!(n >= spec.initial_train_weeks + 5);

    let mut rng = Rng64::new(spec.seed.wrapping_mul(77).wrapping_add(3));
    let driver: Vec<u64> = (0..n).map(|_| rng.below(10)).collect();
    let protests: Vec<u64> = (0..n)
        .map(|t| {
            if t < 2 {
                1
            } else {
                (0.25 * driver[t - 2] as f64).exp().round() as u64
            }
        })
        .collect();

    let window_start = week_start(0);
    let window_end = week_start(n as i64 - 1) + Duration::days(6);

    // Events: `protests[t]` pandemic-related rows in week t, plus noise
    // rows that the description filter must drop and two rows before the
    // window that the date filter must drop.
    let mut events = String::from("date,region,event_type,description\n");
    let descriptions = [
        "COVID-19 lockdown march",
        "anti covid curfew rally",
        "coronavirus restrictions protest",
    ];
    let mut k = 0usize;
    for (t, &count) in protests.iter().enumerate() {
        for _ in 0..count {
            let date = week_start(t as i64) + Duration::days((k % 7) as i64);
            let _ = writeln!(events, "{date},A1,Protests,{}", descriptions[k % 3]);
            k += 1;
        }
    }
    for t in (0..n).step_by(5) {
        let date = week_start(t as i64) + Duration::days(2);
        let _ = writeln!(events, "{date},A1,Protests,wage strike over pay");
    }
    events.push_str("2019-12-01,A1,Protests,covid early rally\n");
    events.push_str("2019-11-03,A1,Protests,coronavirus very early rally\n");

    // Policy: daily white noise in every column, independent of protests.
    let mut policy = String::from("date,region");
    for (name, _) in INDICATORS {
        let _ = write!(policy, ",{name}");
    }
    for name in INDICES {
        let _ = write!(policy, ",{name}");
    }
    policy.push_str(",cases,deaths\n");
    let mut prng = Rng64::new(spec.seed.wrapping_mul(131).wrapping_add(7));
    let mut day = window_start;
    while day <= window_end {
        let _ = write!(policy, "{day},A1");
        for (_, max) in INDICATORS {
            let _ = write!(policy, ",{}", prng.below(max as u64 + 1));
        }
        for _ in INDICES {
            let _ = write!(policy, ",{}", prng.below(101));
        }
        let _ = writeln!(policy, ",{},{}", prng.below(50), prng.below(10));
        day += Duration::days(1);
    }

    // Trends: the planted term carries the driver; six more terms fill the
    // remaining groups with noise.
    let mut trends = String::from("week_start,region,term,volume\n");
    let mut trng = Rng64::new(spec.seed.wrapping_mul(257).wrapping_add(11));
    let noise_terms = [
        ("corona", "covid"),
        ("lockdown", "lockdown"),
        ("school", "school"),
        ("mask", "mask"),
        ("vaccine", "vaccine"),
        ("jobs", "economic"),
    ];
    for (t, d) in driver.iter().enumerate().take(n) {
        let date = week_start(t as i64);
        let _ = writeln!(trends, "{date},A1,pandemic,{d}");
        for (term, _) in noise_terms {
            let _ = writeln!(trends, "{date},A1,{term},{}", trng.below(40));
        }
    }

    let mut groupings = String::from("term,group\npandemic,general\n");
    for (term, group) in noise_terms {
        let _ = writeln!(groupings, "{term},{group}");
    }

    let regions = "subregion,region,population\nA1,Alpha,1000\n";

    let initial_train_end = week_start(spec.initial_train_weeks as i64 - 1);
    let config_text = format!(
        r#"[data]
events = "events.csv"
policy = "policy.csv"
trends = "trends.csv"
groupings = "groupings.csv"
regions = "regions.csv"

[run]
window_start = "{window_start}"
initial_train_end = "{initial_train_end}"
test_end = "{window_end}"
horizons = {horizons}
seed = {seed}
n_trees = {n_trees}
output_dir = "out"
"#,
        horizons = spec.horizons,
        seed = spec.seed,
        n_trees = spec.n_trees,
    );

    for (name, content) in [
        ("events.csv", events.as_str()),
        ("policy.csv", policy.as_str()),
        ("trends.csv", trends.as_str()),
        ("groupings.csv", groupings.as_str()),
        ("regions.csv", regions),
        ("run.toml", config_text.as_str()),
    ] {
        std::fs::write(dir.path().join(name), content).expect("write fixture file");
    }

    Fixture {
        config: dir.path().join("run.toml"),
        out_dir: dir.path().join("out"),
        dir,
        protests,
        driver,
    }
}

/// Run the CLI binary with `--config` plus extra args, inheriting no
/// special environment.
pub fn run_cli(config: &Path, args: &[&str]) -> Output {
    run_cli_env(config, args, &[])
}

pub fn run_cli_env(config: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_unrestcast"));
    cmd.arg("--config").arg(config).args(args);
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("binary runs")
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

pub fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

/// Parse a CSV written by the pipeline into header + rows of fields.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).expect("read csv");
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .expect("non-empty csv")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}
