//! Acceptance suite: ten end-to-end checks, one test per criterion, each
//! printing a PASS line when it holds. Every numeric expectation is either
//! a closed form derived by hand or the output of an independent oracle
//! implemented inside this file (likelihood coordinate search, normal
//! equations via Gaussian elimination, exact F-tail formulas), never the
//! code under test.

mod common;

use std::time::Instant;

use common::{planted_fixture, read_csv, run_cli_env, stderr_of, FixtureSpec, Rng64};
use unrestcast_core::evaluation::{confusion_rates, mase};
use unrestcast_core::forest::{fit_forest, ForestConfig, ForestTask};
use unrestcast_core::harness::{
    binarize, naive_forecast, rolling_forecast, ExperimentPlan, ForecastTrack, ModelKind, Outcome,
    RfBinaryMode, TrackEntry,
};
use unrestcast_core::inference::{f_cdf, glm_fit, granger_test, Family};
use unrestcast_core::timeseries::{FeatureFrame, WeekIndex};

// ---------------------------------------------------------------------
// Criterion 1: the IRLS fitter agrees with a brute-force likelihood
// maximizer on twenty small instances, and its score vanishes at the
// reported optimum.
// ---------------------------------------------------------------------

#[derive(Clone, Copy)]
enum OracleFamily {
    Logistic,
    Poisson,
}

/// Log-likelihood written from the textbook definitions, sharing nothing
/// with the crate's implementation.
fn oracle_ll(family: OracleFamily, columns: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..y.len() {
        let mut eta = beta[0];
        for (j, col) in columns.iter().enumerate() {
            eta += beta[j + 1] * col[i];
        }
        total += match family {
            OracleFamily::Logistic => {
                let log1pe = if eta > 0.0 {
                    eta + (1.0 + (-eta).exp()).ln()
                } else {
                    (1.0 + eta.exp()).ln()
                };
                y[i] * eta - log1pe
            }
            OracleFamily::Poisson => {
                let ln_fact: f64 = (2..=(y[i] as usize)).map(|k| (k as f64).ln()).sum();
                y[i] * eta - eta.exp() - ln_fact
            }
        };
    }
    total
}

/// Maximize the likelihood by shrinking coordinate steps. Slow and dumb on
/// purpose: no gradients, no linear algebra.
fn coordinate_search(family: OracleFamily, columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut beta = vec![0.0; columns.len() + 1];
    let mut best = oracle_ll(family, columns, y, &beta);
    let mut step = 0.5;
    while step > 1e-9 {
        let mut improved = true;
        while improved {
            improved = false;
            for j in 0..beta.len() {
                for dir in [1.0_f64, -1.0] {
                    let mut cand = beta.clone();
                    cand[j] += dir * step;
                    let ll = oracle_ll(family, columns, y, &cand);
                    if ll > best {
                        beta = cand;
                        best = ll;
                        improved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }
    beta
}

#[test]
fn acceptance_01_glm_matches_likelihood_search_oracle() {
    let started = Instant::now();
    let mut rng = Rng64::new(2024);
    let mut checked = 0usize;
    let mut attempt = 0usize;
    while checked < 20 {
        attempt += 1;
        assert!(attempt < 200, "instance generation stalled");
        let n = 12 + (rng.below(19) as usize);
        let p = attempt % 3;
        let family = if attempt.is_multiple_of(2) {
            OracleFamily::Logistic
        } else {
            OracleFamily::Poisson
        };
        let columns: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.below(5) as f64 * 0.5 - 1.0).collect())
            .collect();
        let true_beta: Vec<f64> = (0..=p).map(|_| rng.below(9) as f64 * 0.2 - 0.8).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let mut eta = true_beta[0];
                for (j, col) in columns.iter().enumerate() {
                    eta += true_beta[j + 1] * col[i];
                }
                let u = rng.next_u64() as f64 / u64::MAX as f64;
                match family {
                    OracleFamily::Logistic => f64::from(u < 1.0 / (1.0 + (-eta).exp())),
                    OracleFamily::Poisson => (eta.exp() * (0.4 + 1.2 * u)).round(),
                }
            })
            .collect();
        // Reject unfittable draws: one-class logistic responses, constant
        // Poisson responses, or (near-)separated instances.
        if y.iter().all(|&v| v == y[0]) {
            continue;
        }
        let oracle = coordinate_search(family, &columns, &y);
        if oracle.iter().any(|b| b.abs() > 8.0) {
            continue;
        }

        let terms: Vec<(String, Vec<f64>)> = columns
            .iter()
            .enumerate()
            .map(|(j, col)| (format!("x{j}"), col.clone()))
            .collect();
        let crate_family = match family {
            OracleFamily::Logistic => Family::Logistic,
            OracleFamily::Poisson => Family::Poisson,
        };
        let fit = glm_fit(&terms, &y, crate_family).expect("fit");
        assert!(fit.converged, "instance {attempt} did not converge");
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            assert!(
                (a - b).abs() <= 1e-4,
                "instance {attempt}: coefficient {a} vs oracle {b}"
            );
        }
        let score =
            unrestcast_core::inference::score(&fit.coefficients, &terms, &y, crate_family)
                .expect("score");
        for s in score {
            assert!(s.abs() <= 1e-6, "score component {s} not at optimum");
        }
        // The fitter's likelihood can only beat the finite-step search.
        let crate_ll = fit.log_likelihood;
        let oracle_best = oracle_ll(family, &columns, &y, &oracle);
        assert!(crate_ll >= oracle_best - 1e-9);
        checked += 1;
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("ACCEPTANCE 01 glm-vs-search-oracle: PASS ({checked} instances, {elapsed:?})");
}

// ---------------------------------------------------------------------
// Criterion 2: intercept-only closed forms.
// ---------------------------------------------------------------------

#[test]
fn acceptance_02_intercept_only_closed_forms() {
    // Logistic intercept = logit of the observed mean: 3 successes in 4
    // trials puts the odds at 3.
    let fit = glm_fit(&[], &[1.0, 1.0, 1.0, 0.0], Family::Logistic).unwrap();
    assert!((fit.coefficients[0] - 3.0_f64.ln()).abs() <= 1e-8);

    // Poisson intercept = log of the sample mean.
    let fit = glm_fit(&[], &[2.0, 6.0, 4.0], Family::Poisson).unwrap();
    assert!((fit.coefficients[0] - 4.0_f64.ln()).abs() <= 1e-8);

    // Poisson y = [1,2,3]: mu = 2, ll = sum(y ln 2 - 2 - ln y!), one
    // parameter. Frozen closed-form AIC value.
    let fit = glm_fit(&[], &[1.0, 2.0, 3.0], Family::Poisson).unwrap();
    let ln2 = 2.0_f64.ln();
    let closed_ll = (ln2 - 2.0) + (2.0 * ln2 - 2.0 - ln2) + (3.0 * ln2 - 2.0 - 6.0_f64.ln());
    let closed_aic = -2.0 * closed_ll + 2.0;
    assert!((closed_aic - 10.652047132856658).abs() < 1e-12, "hand value check");
    assert!((fit.aic - closed_aic).abs() <= 1e-5);
    assert!((fit.coefficients[0] - ln2).abs() <= 1e-8);
    println!("ACCEPTANCE 02 intercept-only-closed-forms: PASS");
}

// ---------------------------------------------------------------------
// Criterion 3: F distribution reference points.
// ---------------------------------------------------------------------

#[test]
fn acceptance_03_f_distribution_reference_points() {
    // Equal numerator and denominator df put the median at 1.
    for d in [1usize, 2, 5, 10] {
        let cdf = f_cdf(1.0, d, d).unwrap();
        assert!((cdf - 0.5).abs() <= 1e-10, "d={d}: {cdf}");
    }
    // F(2,4) has the exact tail (1 + x/2)^-2: cdf(3) = 1 - (2/5)^2 = 0.84.
    let cdf = f_cdf(3.0, 2, 4).unwrap();
    assert!((cdf - 0.84).abs() <= 1e-10, "{cdf}");
    println!("ACCEPTANCE 03 f-distribution-reference-points: PASS");
}

// ---------------------------------------------------------------------
// Criterion 4: the lagged-regression F test agrees with a normal-equations
// oracle on a 12-point fixture, and is invariant under predictor scaling.
// ---------------------------------------------------------------------

/// Solve X'X b = X'y by Gaussian elimination with partial pivoting.
fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = columns.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = columns[r].iter().zip(&columns[c]).map(|(u, v)| u * v).sum();
        }
        a[r][k] = columns[r].iter().zip(y).map(|(u, v)| u * v).sum();
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-12, "oracle design is singular");
        let pivot_row = a[col].clone();
        for (row, current) in a.iter_mut().enumerate() {
            if row != col {
                let factor = current[col] / pivot_row[col];
                for (w, p) in current[col..].iter_mut().zip(&pivot_row[col..]) {
                    *w -= factor * p;
                }
            }
        }
    }
    (0..k).map(|r| a[r][k] / a[r][r]).collect()
}

fn oracle_rss(columns: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    (0..y.len())
        .map(|i| {
            let fit: f64 = columns.iter().zip(beta).map(|(c, b)| c[i] * b).sum();
            (y[i] - fit).powi(2)
        })
        .sum()
}

#[test]
fn acceptance_04_granger_matches_normal_equations_oracle() {
    // Twelve hand-written points. y mixes x two steps back with a
    // repeating bump, so the order-2 unrestricted model explains much but
    // not all of the variance.
    let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0, 8.0];
    let mut y = [2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    for t in 2..12 {
        y[t] = x[t - 2] + ((t - 2) % 3) as f64;
    }

    // Oracle: rows t = 2..11, restricted [1, y_{t-1}, y_{t-2}],
    // unrestricted adds [x_{t-1}, x_{t-2}].
    let rows: Vec<usize> = (2..12).collect();
    let ones = vec![1.0; rows.len()];
    let col = |src: &[f64], lag: usize| -> Vec<f64> {
        rows.iter().map(|&t| src[t - lag]).collect()
    };
    let yy: Vec<f64> = rows.iter().map(|&t| y[t]).collect();
    let restricted = vec![ones.clone(), col(&y, 1), col(&y, 2)];
    let mut unrestricted = restricted.clone();
    unrestricted.push(col(&x, 1));
    unrestricted.push(col(&x, 2));

    let beta_r = normal_equations(&restricted, &yy);
    let beta_u = normal_equations(&unrestricted, &yy);
    let rss_r = oracle_rss(&restricted, &yy, &beta_r);
    let rss_u = oracle_rss(&unrestricted, &yy, &beta_u);
    // df2 = 10 rows - 5 unrestricted parameters = 5.
    let f_oracle = ((rss_r - rss_u) / 2.0) / (rss_u / 5.0);
    // Exact F(2,5) upper tail: the density is proportional to
    // (1 + 2x/5)^(-7/2), which integrates to sf(x) = (1 + 2x/5)^(-5/2).
    let p_oracle = (1.0 + 0.4 * f_oracle).powf(-2.5);

    let result = granger_test(&y, &x, 2).unwrap();
    assert!(!result.degenerate);
    assert_eq!((result.df1, result.df2), (2, 5));
    assert!(
        (result.f_stat - f_oracle).abs() <= 1e-8,
        "F {} vs oracle {f_oracle}",
        result.f_stat
    );
    assert!(
        (result.p_value - p_oracle).abs() <= 1e-10,
        "p {} vs oracle {p_oracle}",
        result.p_value
    );

    // Rescaling the predictor must not move the test.
    let x_scaled: Vec<f64> = x.iter().map(|v| v * 1000.0).collect();
    let scaled = granger_test(&y, &x_scaled, 2).unwrap();
    assert!((scaled.f_stat - result.f_stat).abs() <= 1e-8 * result.f_stat.max(1.0));
    assert!((scaled.p_value - result.p_value).abs() <= 1e-8);
    println!(
        "ACCEPTANCE 04 granger-vs-normal-equations: PASS (F={:.6}, p={:.6})",
        result.f_stat, result.p_value
    );
}

// ---------------------------------------------------------------------
// Criterion 5: metric reference values.
// ---------------------------------------------------------------------

fn metric_track(model: ModelKind, outcome: Outcome, truth: &[f64], preds: &[f64]) -> ForecastTrack {
    ForecastTrack {
        region: "R".to_string(),
        horizon: 1,
        outcome,
        model,
        entries: truth
            .iter()
            .zip(preds)
            .enumerate()
            .map(|(i, (&y_true, &y_pred))| TrackEntry {
                week: WeekIndex::from_ordinal(30 + i as i64),
                y_true,
                y_pred,
                window_index: i,
                fallback: false,
            })
            .collect(),
        windows: Vec::new(),
    }
}

#[test]
fn acceptance_05_metric_reference_values() {
    // The persistence baseline scores exactly 1 against itself.
    let naive = metric_track(
        ModelKind::Naive,
        Outcome::Count,
        &[3.0, 2.0, 5.0, 4.0],
        &[1.0, 3.0, 2.0, 5.0],
    );
    assert_eq!(mase(&naive, &naive).unwrap(), Some(1.0));

    // Hand example: truth 3,2,5 forecast 2,2,2 against naive 1,3,2 gives
    // (1+0+3)/(2+1+3) = 2/3.
    let model = metric_track(ModelKind::Glm, Outcome::Count, &[3.0, 2.0, 5.0], &[2.0, 2.0, 2.0]);
    let scale = metric_track(ModelKind::Naive, Outcome::Count, &[3.0, 2.0, 5.0], &[1.0, 3.0, 2.0]);
    let value = mase(&model, &scale).unwrap().unwrap();
    assert!((value - 2.0 / 3.0).abs() <= 1e-12);

    // All-negative predictions on mixed truth: TPR 0, TNR 1, BAC exactly
    // one half.
    let all_neg = metric_track(
        ModelKind::Glm,
        Outcome::Binary,
        &[1.0, 0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 0.0, 0.0],
    );
    let rates = confusion_rates(&all_neg).unwrap();
    assert_eq!(rates.tpr, Some(0.0));
    assert_eq!(rates.tnr, Some(1.0));
    assert_eq!(rates.bac, Some(0.5));

    // A truth without positives leaves TPR and BAC undefined, never zero.
    let no_pos = metric_track(
        ModelKind::Glm,
        Outcome::Binary,
        &[0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0],
    );
    let rates = confusion_rates(&no_pos).unwrap();
    assert_eq!(rates.tpr, None);
    assert_eq!(rates.bac, None);
    println!("ACCEPTANCE 05 metric-reference-values: PASS");
}

// ---------------------------------------------------------------------
// Criterion 6: binarization reference.
// ---------------------------------------------------------------------

#[test]
fn acceptance_06_binarization_reference() {
    let values: Vec<f64> = (0..8).map(f64::from).collect();
    let binary = binarize(&values).unwrap();
    assert!((binary.threshold - 5.25).abs() <= 1e-12);
    let positives: usize = binary.values.iter().map(|&v| v as usize).sum();
    assert_eq!(positives, 2, "exactly the weeks above 5.25: 6 and 7");
    assert_eq!(&binary.values[..6], &[0.0; 6]);
    println!("ACCEPTANCE 06 binarization-reference: PASS (threshold {})", binary.threshold);
}

// ---------------------------------------------------------------------
// Criterion 7: rolling protocol shape and structural leak-freedom.
// ---------------------------------------------------------------------

#[test]
fn acceptance_07_rolling_protocol_shape_and_no_leakage() {
    let n = 32;
    let mut rng = Rng64::new(7);
    let target: Vec<f64> = (0..n).map(|_| rng.below(9) as f64).collect();
    let x: Vec<f64> = (0..n).map(|_| rng.below(9) as f64).collect();
    let frame = FeatureFrame::new(
        "R",
        WeekIndex::from_ordinal(0),
        "protests",
        target,
        vec![("x".to_string(), x)],
    )
    .unwrap();
    let plan = |horizon: usize, t_end: i64| ExperimentPlan {
        horizon,
        outcome: Outcome::Count,
        model: ModelKind::Glm,
        initial_train_end: WeekIndex::from_ordinal(21),
        test_end: WeekIndex::from_ordinal(t_end),
        seed: 42,
        rf_binary_mode: RfBinaryMode::Classification,
        n_trees: 10,
    };

    // Eight test weeks at horizon 1: eight retrains, one forecast each.
    let track = rolling_forecast(&frame, &plan(1, 29)).unwrap();
    assert_eq!(track.windows.len(), 8);
    assert_eq!(track.entries.len(), 8);
    for j in 0..track.windows.len() {
        let count = track
            .entries
            .iter()
            .filter(|e| e.window_index == j)
            .count();
        assert_eq!(count, 1);
    }

    // Nine test weeks at horizon 3: three retrains, three forecasts each.
    let track3 = rolling_forecast(&frame, &plan(3, 30)).unwrap();
    assert_eq!(track3.windows.len(), 3);
    assert_eq!(track3.entries.len(), 9);
    for j in 0..track3.windows.len() {
        let count = track3
            .entries
            .iter()
            .filter(|e| e.window_index == j)
            .count();
        assert_eq!(count, 3);
    }

    // Every window in a track covers the same number of weeks, training
    // windows advance by exactly the horizon, and the first window is
    // pinned to [frame start, initial_train_end] so no training slice can
    // reach a test week.
    for (track, h) in [(&track, 1i64), (&track3, 3i64)] {
        let first = &track.windows[0];
        assert_eq!(first.train_start, WeekIndex::from_ordinal(0));
        assert_eq!(first.train_end, WeekIndex::from_ordinal(21));
        let lengths: Vec<i64> = track
            .windows
            .iter()
            .map(|w| w.train_end.weeks_since(w.train_start) + 1)
            .collect();
        assert!(lengths.windows(2).all(|p| p[0] == p[1]), "{lengths:?}");
        for pair in track.windows.windows(2) {
            assert_eq!(pair[1].train_start.weeks_since(pair[0].train_start), h);
        }
        // Structural no-leakage: forecasts sit strictly after their
        // window, and their predictor basis week within it.
        for entry in &track.entries {
            let window = &track.windows[entry.window_index];
            assert!(entry.week > window.train_end);
            assert!(entry.week.offset(-h) <= window.train_end);
        }
    }
    println!("ACCEPTANCE 07 rolling-protocol-shape: PASS");
}

// ---------------------------------------------------------------------
// Criterion 8: the full pipeline recovers a planted lag-2 signal and
// beats persistence on it.
// ---------------------------------------------------------------------

#[test]
fn acceptance_08_planted_signal_recovered_end_to_end() {
    let started = Instant::now();
    let fixture = planted_fixture(&FixtureSpec {
        n_weeks: 110,
        n_trees: 500,
        initial_train_weeks: 60,
        horizons: "[2]",
        seed: 42,
    });
    let out_dir = fixture.out_dir.to_str().unwrap().to_string();
    for command in ["ingest", "explore", "forecast", "report"] {
        let out = run_cli_env(&fixture.config, &[command], &[("UNRESTCAST_OUT", &out_dir)]);
        assert!(out.status.success(), "{command}: {}", stderr_of(&out));
    }

    // The planted predictor's best full-period lag is 2 and significant.
    let (_, significant) = read_csv(&fixture.out_dir.join("granger_significant.csv"));
    let planted: Vec<_> = significant
        .iter()
        .filter(|r| r[1] == "trends_general")
        .collect();
    assert_eq!(planted.len(), 1, "planted predictor missing from screen");
    assert_eq!(planted[0][2], "2", "best lag should be the planted one");

    // Scores: the count GLM halves the persistence error and the binary
    // forest balances above 0.8.
    let (_, metrics) = read_csv(&fixture.out_dir.join("metrics.csv"));
    let value = |outcome: &str, model: &str, metric: &str| -> f64 {
        metrics
            .iter()
            .find(|r| r[1] == "2" && r[2] == outcome && r[3] == model && r[4] == metric)
            .unwrap_or_else(|| panic!("missing {outcome}/{model}/{metric}"))[5]
            .parse()
            .expect("numeric metric")
    };
    let glm_mase = value("count", "glm", "mase");
    assert!(glm_mase < 0.5, "glm mase {glm_mase}");
    let naive_mase = value("count", "naive", "mase");
    assert_eq!(naive_mase, 1.0, "baseline scored against itself");
    let forest_bac = value("binary", "forest", "bac");
    assert!(forest_bac >= 0.8, "forest bac {forest_bac}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 08 planted-signal-end-to-end: PASS (glm mase {glm_mase:.3}, forest bac {forest_bac:.3}, {elapsed:?})"
    );
}

// ---------------------------------------------------------------------
// Criterion 9: reruns with the same seed produce byte-identical outputs.
// ---------------------------------------------------------------------

#[test]
fn acceptance_09_same_seed_byte_identical_outputs() {
    let fixture = planted_fixture(&FixtureSpec {
        n_weeks: 48,
        n_trees: 60,
        initial_train_weeks: 26,
        horizons: "[1, 2]",
        seed: 42,
    });
    let dir_a = fixture.dir.path().join("run_a");
    let dir_b = fixture.dir.path().join("run_b");
    for dir in [&dir_a, &dir_b] {
        for command in ["forecast", "report"] {
            let out = run_cli_env(
                &fixture.config,
                &[command],
                &[("UNRESTCAST_OUT", dir.to_str().unwrap())],
            );
            assert!(out.status.success(), "{command}: {}", stderr_of(&out));
        }
    }
    for file in ["forecasts.csv", "metrics.csv"] {
        let a = std::fs::read(dir_a.join(file)).unwrap();
        let b = std::fs::read(dir_b.join(file)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    println!("ACCEPTANCE 09 same-seed-byte-identical: PASS");
}

// ---------------------------------------------------------------------
// Criterion 10: forest sanity — regression predictions bounded by the
// training range, same-seed determinism, low out-of-bag error on clean
// step data.
// ---------------------------------------------------------------------

#[test]
fn acceptance_10_forest_bounds_determinism_oob() {
    // Regression on a clean line over x in [0, 10].
    let n = 200;
    let x: Vec<f64> = (0..n).map(|i| i as f64 * 10.0 / (n - 1) as f64).collect();
    let y: Vec<f64> = x.iter().enumerate().map(|(i, &v)| 3.0 * v + 2.0 + (i % 5) as f64 * 0.1).collect();
    let (y_min, y_max) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let features = vec![("x".to_string(), x)];
    let config = ForestConfig::new(ForestTask::Regression, 42);
    let forest_a = fit_forest(&features, &y, &config).unwrap();
    let forest_b = fit_forest(&features, &y, &config).unwrap();

    // 100 queries spanning far outside the training range.
    let queries: Vec<f64> = (0..100).map(|i| -5.0 + i as f64 * 0.2).collect();
    let query_cols = vec![("x".to_string(), queries)];
    let preds_a = forest_a.predict(&query_cols).unwrap();
    let preds_b = forest_b.predict(&query_cols).unwrap();
    assert_eq!(preds_a.len(), 100);
    for p in &preds_a {
        assert!(
            *p >= y_min - 1e-12 && *p <= y_max + 1e-12,
            "prediction {p} escapes the training range [{y_min}, {y_max}]"
        );
    }
    assert_eq!(preds_a, preds_b, "same seed must give identical forests");

    // Classification of a clean step function: out-of-bag error under 5%.
    let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let labels: Vec<f64> = xs.iter().map(|&v| f64::from(v > 0.5)).collect();
    let noise: Vec<f64> = (0..n).map(|i| ((i * 7) % 13) as f64).collect();
    let cls_features = vec![("x".to_string(), xs), ("noise".to_string(), noise)];
    let cls_config = ForestConfig::new(ForestTask::Classification, 42);
    let cls = fit_forest(&cls_features, &labels, &cls_config).unwrap();
    let oob = cls.oob_error().expect("oob estimate");
    assert!(oob < 0.05, "out-of-bag error {oob}");
    println!("ACCEPTANCE 10 forest-bounds-determinism-oob: PASS (oob {oob:.4})");
}

// ---------------------------------------------------------------------
// Shared guard: the naive baseline in the harness matches the metric
// convention used above (prediction = outcome h weeks earlier), tying
// criteria 5 and 7 together.
// ---------------------------------------------------------------------

#[test]
fn naive_track_and_mase_conventions_agree() {
    let n = 30;
    let mut rng = Rng64::new(99);
    let target: Vec<f64> = (0..n).map(|_| rng.below(7) as f64).collect();
    let frame = FeatureFrame::new(
        "R",
        WeekIndex::from_ordinal(0),
        "protests",
        target.clone(),
        vec![(
            "x".to_string(),
            (0..n).map(|_| rng.below(7) as f64).collect(),
        )],
    )
    .unwrap();
    let plan = ExperimentPlan {
        horizon: 2,
        outcome: Outcome::Count,
        model: ModelKind::Naive,
        initial_train_end: WeekIndex::from_ordinal(21),
        test_end: WeekIndex::from_ordinal(29),
        seed: 1,
        rf_binary_mode: RfBinaryMode::Classification,
        n_trees: 1,
    };
    let track = naive_forecast(&frame, &plan).unwrap();
    for entry in &track.entries {
        assert_eq!(entry.y_pred, target[entry.week.ordinal() as usize - 2]);
    }
    assert_eq!(mase(&track, &track).unwrap(), Some(1.0));
}
