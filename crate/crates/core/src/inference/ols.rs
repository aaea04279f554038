//! Ordinary least squares via Householder QR.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on the R diagonal below which a column is treated
/// as linearly dependent on the others.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// One coefficient per design column, in the order the columns were given.
    pub coefficients: Vec<f64>,
    /// Residual sum of squares.
    pub rss: f64,
    pub n: usize,
    pub df_residual: usize,
}

/// Fit y on the given design columns. The caller supplies the intercept
/// column explicitly when one is wanted. Rank deficiency is reported as
/// [`Error::SingularDesign`] rather than silently pseudo-inverted.
pub fn ols_fit(columns: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    if columns.is_empty() {
        return Err(Error::InvalidArgument(
            "design matrix needs at least one column".to_string(),
        ));
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptySeries("ols response".to_string()));
    }
    for (j, col) in columns.iter().enumerate() {
        if col.len() != n {
            return Err(Error::Misaligned(format!(
                "design column {j} has {} rows, response has {n}",
                col.len()
            )));
        }
    }
    let p = columns.len();
    if n < p {
        return Err(Error::SingularDesign(format!(
            "{p} columns but only {n} rows"
        )));
    }
    let x = DMatrix::from_fn(n, p, |i, j| columns[j][i]);
    let yv = DVector::from_column_slice(y);
    let beta = qr_least_squares(&x, &yv)?;
    let resid = &yv - &x * &beta;
    let rss = resid.dot(&resid);
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        rss,
        n,
        df_residual: n - p,
    })
}

/// Solve min ||y - X b|| for full-column-rank X.
pub(crate) fn qr_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let p = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let mut max_diag = 0.0_f64;
    for j in 0..p {
        max_diag = max_diag.max(r[(j, j)].abs());
    }
    if max_diag == 0.0 {
        return Err(Error::SingularDesign("all-zero design".to_string()));
    }
    for j in 0..p {
        if r[(j, j)].abs() < RANK_TOL * max_diag {
            return Err(Error::SingularDesign(format!(
                "column {j} is linearly dependent on earlier columns"
            )));
        }
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign("upper-triangular solve failed".to_string()))
}
