//! Log-gamma and the regularized incomplete beta function.
//!
//! `betainc` follows the classical continued-fraction evaluation (modified
//! Lentz iteration) with the symmetry switch at x = (a+1)/(a+b+2), which
//! keeps the fraction convergent on both flanks. Accuracy is well inside
//! 1e-12 for the degree-of-freedom ranges used by the F tests here.

use crate::error::{Error, Result};

/// Lanczos approximation with g = 7 and 9 terms. Good to roughly 1e-14
/// relative error over the positive reals.
const LANCZOS: [f64; 8] = [
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LANCZOS_BASE: f64 = 0.999_999_999_999_809_9;
const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(z: f64) -> f64 {
    if z < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut acc = LANCZOS_BASE;
    for (i, &c) in LANCZOS.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    HALF_LOG_TWO_PI + (z + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function I_x(a, b).
pub fn betainc(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta parameters must be positive, got a={a}, b={b}"
        )));
    }
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "betainc argument must lie in [0, 1], got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    // The continued fraction converges fastest for x below the switch
    // point; above it, evaluate the mirrored fraction instead.
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - beta_cf(b, a, 1.0 - x)?)
    } else {
        Ok(beta_cf(a, b, x)?)
    }
}

/// Continued-fraction core: I_x(a, b) for x on the convergent side.
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-30;

    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let front = ln_front.exp() / a;

    let mut c = 1.0_f64;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;

        // Even step.
        let num = mf * (b - mf) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = 1.0 + num / c;
        if c.abs() < TINY {
            c = TINY;
        }
        h *= d * c;

        // Odd step.
        let num = -(a + mf) * (a + b + mf) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = 1.0 + num / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = d * c;
        h *= delta;

        if (delta - 1.0).abs() < EPS {
            return Ok(front * h);
        }
    }
    Err(Error::InvalidArgument(format!(
        "incomplete beta failed to converge for a={a}, b={b}, x={x}"
    )))
}
