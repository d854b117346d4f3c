//! The projection statistic `T`: a generic nested dual solver and the
//! linear/equal-mean closed form that serves as its oracle.

mod bfgs;
mod closed_form;
mod dual;
mod inner;
mod outer;

pub use closed_form::{closed_form_gamma, closed_form_statistic};
pub use dual::{dual_maximize, dual_statistic, DualSolution};
pub use inner::{inner_minimize, InnerProblem, InnerSolution, Point};
pub use outer::{outer_maximize, GammaDomain, OuterResult};

use serde::{Deserialize, Serialize};

use crate::cost::CostParams;
use crate::criterion::{Discrepancy, FairnessCriterion};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::Regressor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub inner_max_iters: usize,
    pub inner_grad_tol: f64,
    pub outer_bracket_init: f64,
    pub outer_tol: f64,
    /// Only used when both transport weights are positive.
    pub smoothing_eps: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            inner_max_iters: 200,
            inner_grad_tol: 1e-8,
            outer_bracket_init: 1.0,
            outer_tol: 1e-10,
            smoothing_eps: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.inner_max_iters == 0
            || !positive(self.inner_grad_tol)
            || !positive(self.outer_bracket_init)
            || !positive(self.outer_tol)
            || !(self.smoothing_eps >= 0.0 && self.smoothing_eps.is_finite())
        {
            return Err(Error::InvalidConfig(format!("bad solver options: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualDiagnostics {
    pub gamma_star: f64,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub concavity_violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub t: f64,
    pub method: Method,
    pub diagnostics: Option<DualDiagnostics>,
}

/// Whether the closed form applies: affine model, exact equal-mean criterion.
pub fn closed_form_eligible<R: Regressor + ?Sized>(model: &R, crit: &FairnessCriterion) -> bool {
    crit.discrepancy == Discrepancy::EqualMean
        && crit.mode.is_exact()
        && model.as_linear().is_some_and(|m| m.norm_sq() > 0.0)
}

/// Computes `T`, using the closed form when eligible unless `force_dual`.
///
/// The closed form assumes unit feature weight; transport cost is
/// homogeneous in `alpha` so the statistic scales by `alpha^2`.
pub fn test_statistic<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
    cost: CostParams,
    opts: &SolverOptions,
    force_dual: bool,
) -> Result<Statistic> {
    crit.validate()?;
    cost.validate(crit)?;
    if !force_dual && closed_form_eligible(model, crit) {
        let linear = model.as_linear().expect("checked eligible");
        let t = closed_form_statistic(dataset, linear)? * cost.alpha * cost.alpha;
        return Ok(Statistic {
            t,
            method: Method::ClosedForm,
            diagnostics: None,
        });
    }
    let (t, diag) = dual_statistic(dataset, model, crit, cost, opts)?;
    Ok(Statistic {
        t,
        method: Method::Dual,
        diagnostics: Some(diag),
    })
}
