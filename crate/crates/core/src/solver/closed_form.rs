//! Linear model, equal-mean criterion, unit feature cost.
//!
//! The inner problem is a quadratic in `x` with minimizer
//! `x* = x^ - gamma lambda rho / 2`, which leaves
//! `g(gamma) = sum_i gamma lambda_i R(x^_i) - gamma^2 lambda_i^2 |rho|^2 / 4`.

use crate::dataset::{lambda_weight, Dataset};
use crate::error::{Error, Result};
use crate::model::{LinearModel, Regressor};

/// `(sum_i lambda_i R(x^_i), sum_i lambda_i^2)`.
fn sums(dataset: &Dataset, model: &LinearModel) -> Result<(f64, f64)> {
    if model.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: model.dim(),
        });
    }
    let m = dataset.marginals();
    let mut s = 0.0;
    let mut l2 = 0.0;
    for (i, &a) in dataset.sensitive().iter().enumerate() {
        let lam = lambda_weight(a, &m);
        let r = model.predict(dataset.row_slice(i));
        s += lam * r;
        l2 += lam * lam;
    }
    if !s.is_finite() {
        return Err(Error::NonFinite("model prediction".into()));
    }
    Ok((s, l2))
}

/// `T = (sum lambda_i R_i)^2 / (N |rho|^2 sum lambda_i^2)`.
pub fn closed_form_statistic(dataset: &Dataset, model: &LinearModel) -> Result<f64> {
    let n2 = model.require_nonzero()?;
    let (s, l2) = sums(dataset, model)?;
    Ok(s * s / (dataset.len() as f64 * n2 * l2))
}

/// Optimal multiplier `gamma* = 2 sum lambda_i R_i / (|rho|^2 sum lambda_i^2)`.
pub fn closed_form_gamma(dataset: &Dataset, model: &LinearModel) -> Result<f64> {
    let n2 = model.require_nonzero()?;
    let (s, l2) = sums(dataset, model)?;
    Ok(2.0 * s / (n2 * l2))
}
