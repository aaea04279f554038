//! Cumulative distribution of the F statistic, in terms of the
//! regularized incomplete beta function.

use super::special::betainc;
use crate::error::{Error, Result};

fn check_df(d1: usize, d2: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "degrees of freedom must be positive, got ({d1}, {d2})"
        )));
    }
    Ok(())
}

/// P(F <= x) for an F(d1, d2) variate:
/// I_{d1 x / (d1 x + d2)}(d1/2, d2/2).
pub fn f_cdf(x: f64, d1: usize, d2: usize) -> Result<f64> {
    check_df(d1, d2)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "F statistic must be non-negative, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let (a, b) = (d1 as f64 / 2.0, d2 as f64 / 2.0);
    let arg = d1 as f64 * x / (d1 as f64 * x + d2 as f64);
    betainc(a, b, arg)
}

/// Upper tail P(F > x), evaluated directly through the mirrored beta
/// argument so tiny tail probabilities keep full relative precision
/// instead of cancelling against 1.
pub fn f_sf(x: f64, d1: usize, d2: usize) -> Result<f64> {
    check_df(d1, d2)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "F statistic must be non-negative, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let (a, b) = (d2 as f64 / 2.0, d1 as f64 / 2.0);
    let arg = d2 as f64 / (d1 as f64 * x + d2 as f64);
    betainc(a, b, arg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_is_one_for_equal_df() {
        for d in [1, 2, 5, 10, 25] {
            assert!((f_cdf(1.0, d, d).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_for_two_and_four_df() {
        // F(2, 4) at x = 3: the beta argument is 0.6 and
        // I_0.6(1, 2) = 1 - 0.4^2 = 0.84 exactly.
        assert!((f_cdf(3.0, 2, 4).unwrap() - 0.84).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(f_cdf(-1.0, 2, 2).is_err());
        assert!(f_cdf(1.0, 0, 2).is_err());
        assert!(f_cdf(1.0, 2, 0).is_err());
        assert!(f_sf(f64::NAN, 2, 2).is_err());
    }

    #[test]
    fn endpoints() {
        assert_eq!(f_cdf(0.0, 3, 7).unwrap(), 0.0);
        assert_eq!(f_sf(0.0, 3, 7).unwrap(), 1.0);
        assert_eq!(f_cdf(f64::INFINITY, 3, 7).unwrap(), 1.0);
        assert_eq!(f_sf(f64::INFINITY, 3, 7).unwrap(), 0.0);
    }

    #[test]
    fn survival_keeps_precision_in_deep_tail() {
        let p = f_sf(1e6, 2, 10).unwrap();
        assert!(p > 0.0 && p < 1e-12);
    }

    proptest! {
        #[test]
        fn cdf_plus_sf_is_one(
            x in 0.0f64..50.0,
            d1 in 1usize..30,
            d2 in 1usize..30,
        ) {
            let c = f_cdf(x, d1, d2).unwrap();
            let s = f_sf(x, d1, d2).unwrap();
            prop_assert!((c + s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn cdf_monotone_in_x(
            x1 in 0.0f64..50.0,
            x2 in 0.0f64..50.0,
            d1 in 1usize..20,
            d2 in 1usize..20,
        ) {
            let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
            prop_assert!(f_cdf(lo, d1, d2).unwrap() <= f_cdf(hi, d1, d2).unwrap() + 1e-12);
        }
    }
}
