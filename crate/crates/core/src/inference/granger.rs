//! Granger causality via the nested-regression F test.
//!
//! The restricted model regresses y_t on an intercept and its own lags
//! 1..order; the unrestricted model adds the candidate predictor's lags
//! 1..order. The improvement in residual sum of squares is referred to an
//! F(order, n_rows - 2*order - 1) distribution.

use super::fdist::f_sf;
use super::ols::ols_fit;
use crate::error::{Error, Result};

/// Largest lag order the weekly screening uses.
pub const MAX_LAG_ORDER: usize = 4;

/// Residual sums of squares this far below the response's variation are
/// treated as exact fits; the F ratio is then reported as degenerate.
const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GrangerResult {
    pub lag_order: usize,
    pub f_stat: f64,
    pub p_value: f64,
    pub df1: usize,
    pub df2: usize,
    /// True when the unrestricted model fits exactly, which makes the F
    /// ratio unbounded; the p-value is reported as 0 in that case.
    pub degenerate: bool,
}

/// Test whether lags of `x` improve the autoregression of `y`. Both
/// slices must be aligned samples of the same weeks.
pub fn granger_test(y: &[f64], x: &[f64], order: usize) -> Result<GrangerResult> {
    if order == 0 || order > MAX_LAG_ORDER {
        return Err(Error::InvalidArgument(format!(
            "lag order must lie in 1..={MAX_LAG_ORDER}, got {order}"
        )));
    }
    if y.len() != x.len() {
        return Err(Error::Misaligned(format!(
            "series lengths differ: y has {}, x has {}",
            y.len(),
            x.len()
        )));
    }
    let n = y.len();
    // After consuming `order` leading rows for lags, the unrestricted
    // model spends 2*order + 1 parameters; at least one residual degree
    // of freedom must remain.
    if n < 3 * order + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} observations for lag order {order}, got {n}",
            3 * order + 2
        )));
    }

    let rows = n - order;
    let mut response = Vec::with_capacity(rows);
    let mut restricted: Vec<Vec<f64>> = vec![Vec::with_capacity(rows); order + 1];
    let mut extra: Vec<Vec<f64>> = vec![Vec::with_capacity(rows); order];
    for t in order..n {
        response.push(y[t]);
        restricted[0].push(1.0);
        for k in 1..=order {
            restricted[k].push(y[t - k]);
            extra[k - 1].push(x[t - k]);
        }
    }
    let mut unrestricted = restricted.clone();
    unrestricted.extend(extra);

    let fit_r = ols_fit(&restricted, &response)?;
    let fit_u = ols_fit(&unrestricted, &response)?;

    let mean = response.iter().sum::<f64>() / rows as f64;
    let tss: f64 = response.iter().map(|v| (v - mean) * (v - mean)).sum();

    let df1 = order;
    let df2 = rows - (2 * order + 1);
    if fit_u.rss <= DEGENERATE_TOL * tss.max(1e-12) {
        return Ok(GrangerResult {
            lag_order: order,
            f_stat: f64::INFINITY,
            p_value: 0.0,
            df1,
            df2,
            degenerate: true,
        });
    }
    let num = (fit_r.rss - fit_u.rss).max(0.0) / df1 as f64;
    let den = fit_u.rss / df2 as f64;
    let f_stat = num / den;
    let p_value = f_sf(f_stat, df1, df2)?;
    Ok(GrangerResult {
        lag_order: order,
        f_stat,
        p_value,
        df1,
        df2,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted_pair(n: usize) -> (Vec<f64>, Vec<f64>) {
        // y_t tracks x_{t-1} with a small deterministic wobble; x itself
        // is a jagged sequence with no autoregressive structure.
        let x: Vec<f64> = (0..n)
            .map(|t| ((t * 7919 + 13) % 23) as f64 - 11.0)
            .collect();
        let mut y = vec![0.0; n];
        for t in 1..n {
            y[t] = 2.0 * x[t - 1] + 0.3 * (((t * 31) % 7) as f64 - 3.0);
        }
        y[0] = 0.5;
        (y, x)
    }

    #[test]
    fn detects_planted_lag_relationship() {
        let (y, x) = planted_pair(40);
        let hit = granger_test(&y, &x, 1).unwrap();
        assert!(!hit.degenerate);
        assert!(hit.p_value < 1e-6, "p = {}", hit.p_value);

        // An unrelated jagged series should not look predictive.
        let noise: Vec<f64> = (0..40).map(|t| ((t * 104_729 + 7) % 19) as f64).collect();
        let miss = granger_test(&y, &noise, 1).unwrap();
        assert!(miss.p_value > 1e-4, "p = {}", miss.p_value);
    }

    #[test]
    fn exact_lag_copy_is_degenerate_with_zero_p() {
        let x: Vec<f64> = (0..14).map(|t| ((t * 7919 + 5) % 17) as f64).collect();
        let mut y = vec![0.0; 14];
        y[1..].copy_from_slice(&x[..13]);
        y[0] = 3.0;
        let res = granger_test(&y, &x, 1).unwrap();
        assert!(res.degenerate);
        assert_eq!(res.p_value, 0.0);
        assert!(res.f_stat.is_infinite());
    }

    #[test]
    fn constant_predictor_is_singular() {
        let (y, _) = planted_pair(20);
        let constant = vec![4.2; 20];
        assert!(matches!(
            granger_test(&y, &constant, 1),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn p_value_invariant_under_predictor_rescaling() {
        let (y, x) = planted_pair(30);
        let scaled: Vec<f64> = x.iter().map(|v| v * 1000.0).collect();
        for order in 1..=3 {
            let a = granger_test(&y, &x, order).unwrap();
            let b = granger_test(&y, &scaled, order).unwrap();
            assert!((a.p_value - b.p_value).abs() < 1e-10);
            assert!((a.f_stat - b.f_stat).abs() <= 1e-8 * a.f_stat.max(1.0));
        }
    }

    #[test]
    fn validates_arguments() {
        let (y, x) = planted_pair(20);
        assert!(granger_test(&y, &x, 0).is_err());
        assert!(granger_test(&y, &x, 5).is_err());
        assert!(granger_test(&y[..10], &x, 1).is_err());
        // order 4 needs 14 points
        assert!(granger_test(&y[..13], &x[..13], 4).is_err());
    }

    #[test]
    fn degrees_of_freedom_follow_the_nested_layout() {
        let (y, x) = planted_pair(30);
        let res = granger_test(&y, &x, 2).unwrap();
        assert_eq!(res.df1, 2);
        // 28 usable rows minus 5 unrestricted parameters.
        assert_eq!(res.df2, 23);
    }
}
