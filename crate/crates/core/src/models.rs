//! Linear regressors fitted for the case studies, and accuracy metrics.
//!
//! Penalized objectives are scaled per sample:
//! ridge `(1/2N)|r|^2 + (lambda/2)|b|^2`, lasso `(1/2N)|r|^2 + lambda |b|_1`,
//! both on the (optionally standardized) centred design, intercept unpenalized.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinearModel, Regressor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method", content = "lambda")]
pub enum FitMethod {
    Ols,
    Ridge(f64),
    Lasso(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub method: FitMethod,
    pub standardize: bool,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            method: FitMethod::Ols,
            standardize: true,
            max_iters: 10_000,
            tol: 1e-8,
        }
    }
}

impl FitConfig {
    pub fn new(method: FitMethod) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }
}

/// Column means and scales; scale is 1 when not standardizing or for
/// constant columns.
struct Design {
    z: DMatrix<f64>,
    yc: DVector<f64>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    y_mean: f64,
}

fn design(features: &Array2<f64>, labels: &[f64], standardize: bool) -> Result<Design> {
    let (n, d) = features.dim();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if n == 0 {
        return Err(Error::TooFewRows(0));
    }
    if features.iter().chain(labels).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit input".into()));
    }
    let nf = n as f64;
    let mut mean = vec![0.0; d];
    let mut scale = vec![1.0; d];
    for j in 0..d {
        let col = features.column(j);
        mean[j] = col.sum() / nf;
        if standardize {
            let sd = (col.iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / nf).sqrt();
            if sd > 0.0 {
                scale[j] = sd;
            }
        }
    }
    let z = DMatrix::from_fn(n, d, |i, j| (features[[i, j]] - mean[j]) / scale[j]);
    let y_mean = labels.iter().sum::<f64>() / nf;
    let yc = DVector::from_iterator(n, labels.iter().map(|y| y - y_mean));
    Ok(Design {
        z,
        yc,
        mean,
        scale,
        y_mean,
    })
}

impl Design {
    fn to_original(&self, beta: &DVector<f64>) -> LinearModel {
        let rho: Vec<f64> = beta.iter().zip(&self.scale).map(|(b, s)| b / s).collect();
        let sigma = self.y_mean - rho.iter().zip(&self.mean).map(|(r, m)| r * m).sum::<f64>();
        LinearModel::new(rho, sigma)
    }
}

pub fn fit(features: &Array2<f64>, labels: &[f64], cfg: &FitConfig) -> Result<LinearModel> {
    let des = design(features, labels, cfg.standardize)?;
    let beta = match cfg.method {
        FitMethod::Ols => ols(&des)?,
        FitMethod::Ridge(lambda) => {
            check_lambda(lambda)?;
            if lambda == 0.0 {
                ols(&des)?
            } else {
                ridge(&des, lambda)?
            }
        }
        FitMethod::Lasso(lambda) => {
            check_lambda(lambda)?;
            lasso(&des, lambda, cfg.max_iters, cfg.tol)?.0
        }
    };
    Ok(des.to_original(&beta))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("penalty must be >= 0, got {lambda}")))
    }
}

fn ols(des: &Design) -> Result<DVector<f64>> {
    let (n, d) = des.z.shape();
    if d == 0 {
        return Ok(DVector::zeros(0));
    }
    if n <= d {
        return Err(Error::SingularDesign);
    }
    let qr = des.z.clone().qr();
    let r = qr.r();
    let rmax = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if rmax == 0.0 || r.diagonal().iter().any(|v| v.abs() <= 1e-10 * rmax) {
        return Err(Error::SingularDesign);
    }
    let qty = qr.q().transpose() * &des.yc;
    r.solve_upper_triangular(&qty).ok_or(Error::SingularDesign)
}

fn ridge(des: &Design, lambda: f64) -> Result<DVector<f64>> {
    let n = des.z.nrows() as f64;
    let d = des.z.ncols();
    let gram = des.z.transpose() * &des.z / n + DMatrix::identity(d, d) * lambda;
    let rhs = des.z.transpose() * &des.yc / n;
    gram.cholesky().map(|c| c.solve(&rhs)).ok_or(Error::SingularDesign)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn lasso_objective(des: &Design, beta: &DVector<f64>, lambda: f64) -> f64 {
    let r = &des.yc - &des.z * beta;
    r.norm_squared() / (2.0 * des.z.nrows() as f64) + lambda * beta.lp_norm(1)
}

/// Cyclic coordinate descent; returns the coefficients and the objective
/// after each sweep.
fn lasso(des: &Design, lambda: f64, max_iters: usize, tol: f64) -> Result<(DVector<f64>, Vec<f64>)> {
    let n = des.z.nrows() as f64;
    let d = des.z.ncols();
    let col_sq: Vec<f64> = (0..d).map(|j| des.z.column(j).norm_squared() / n).collect();
    let mut beta: DVector<f64> = DVector::zeros(d);
    let mut resid = des.yc.clone();
    let mut history = Vec::new();
    for _ in 0..max_iters {
        let mut max_change = 0.0f64;
        for j in 0..d {
            if col_sq[j] == 0.0 {
                continue;
            }
            let zj = des.z.column(j);
            let rho_j = zj.dot(&resid) / n + col_sq[j] * beta[j];
            let new = soft_threshold(rho_j, lambda) / col_sq[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                resid.axpy(-delta, &zj, 1.0);
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        history.push(lasso_objective(des, &beta, lambda));
        if max_change < tol {
            return Ok((beta, history));
        }
    }
    Err(Error::MaxIters {
        iters: max_iters,
        grad_norm: f64::NAN,
    })
}

/// `mean |y - R(x)| / mean |y|`.
pub fn relative_mae<R: Regressor + ?Sized>(model: &R, features: &Array2<f64>, labels: &[f64]) -> Result<f64> {
    if features.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            got: labels.len(),
        });
    }
    let n = labels.len() as f64;
    let scale = labels.iter().map(|y| y.abs()).sum::<f64>() / n;
    if !(scale > 0.0) {
        return Err(Error::ZeroLabelScale);
    }
    let mae = features
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(x, y)| (y - model.predict(&x.to_vec())).abs())
        .sum::<f64>()
        / n;
    Ok(mae / scale)
}
