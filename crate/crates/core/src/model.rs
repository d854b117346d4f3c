//! Regression models seen through predictions and feature gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A prediction function `R: X -> R` with access to `dR/dx`.
///
/// Implementors that cannot provide an analytic gradient may rely on the
/// default, which uses central finite differences.
pub trait Regressor: Sync {
    fn dim(&self) -> usize;

    fn predict(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        finite_difference_gradient(self, x)
    }

    /// The linear specialization, when the model is affine.
    fn as_linear(&self) -> Option<&LinearModel> {
        None
    }
}

/// Central-difference gradient with step `1e-6 * max(1, |x_j|)`.
pub fn finite_difference_gradient<R: Regressor + ?Sized>(model: &R, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            let h = 1e-6 * x[j].abs().max(1.0);
            probe[j] = x[j] + h;
            let up = model.predict(&probe);
            probe[j] = x[j] - h;
            let down = model.predict(&probe);
            probe[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `R(x) = rho . x + sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub rho: Vec<f64>,
    pub sigma: f64,
}

impl LinearModel {
    pub fn new(rho: Vec<f64>, sigma: f64) -> Self {
        Self { rho, sigma }
    }

    pub fn norm_sq(&self) -> f64 {
        self.rho.iter().map(|r| r * r).sum()
    }

    /// Errors with `ZeroCoefficient` when `rho = 0`, which every closed
    /// form divides by.
    pub fn require_nonzero(&self) -> Result<f64> {
        let n2 = self.norm_sq();
        if n2 > 0.0 && n2.is_finite() {
            Ok(n2)
        } else {
            Err(Error::ZeroCoefficient)
        }
    }
}

impl Regressor for LinearModel {
    fn dim(&self) -> usize {
        self.rho.len()
    }

    fn predict(&self, x: &[f64]) -> f64 {
        self.rho.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() + self.sigma
    }

    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.rho.clone()
    }

    fn as_linear(&self) -> Option<&LinearModel> {
        Some(self)
    }
}

/// Wraps any closure as a regressor; gradients fall back to finite differences.
pub struct FnRegressor<F> {
    dim: usize,
    f: F,
}

impl<F> FnRegressor<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Regressor for FnRegressor<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}
