//! Transport cost `(alpha |x - x'| + beta |y - y'|)^2` within a group.
//!
//! Moving mass across sensitive groups costs infinity, which is realized by
//! never changing `a`; only the within-group weights live here.

use serde::{Deserialize, Serialize};

use crate::criterion::FairnessCriterion;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
        }
    }
}

impl CostParams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    /// Checks the weights against the criterion they will be used with.
    ///
    /// A label-dependent discrepancy with `beta = 0` makes the inner
    /// infimum unbounded below, so it is rejected up front.
    pub fn validate(&self, crit: &FairnessCriterion) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidCost(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidCost(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !crit.discrepancy.is_label_free() && self.beta == 0.0 {
            return Err(Error::InvalidCost(
                "beta must be > 0 when the discrepancy depends on the label".into(),
            ));
        }
        Ok(())
    }

    /// Unsmoothed cost of moving `(dx, dy)`.
    pub fn transport(&self, dx_norm: f64, dy: f64) -> f64 {
        let c = self.alpha * dx_norm + self.beta * dy.abs();
        c * c
    }
}
