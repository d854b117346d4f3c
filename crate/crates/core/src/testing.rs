//! The full fairness test: statistic, scale estimate and p-value.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{p_value, theta_hat_general, ThetaEstimate, ThetaForm};
use crate::cost::CostParams;
use crate::criterion::{empirical_violation, FairnessCriterion};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::model::Regressor;
use crate::solver::{test_statistic, DualDiagnostics, Method, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub criterion: FairnessCriterion,
    pub cost: CostParams,
    pub solver: SolverOptions,
    pub theta_form: ThetaForm,
    pub force_dual: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            criterion: FairnessCriterion::equal_mean(),
            cost: CostParams::default(),
            solver: SolverOptions::default(),
            theta_form: ThetaForm::default(),
            force_dual: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub n: usize,
    pub statistic: f64,
    pub scaled_statistic: f64,
    pub theta: ThetaEstimate,
    pub p_value: f64,
    /// Tolerance criteria only have an asymptotic upper bound, so their
    /// p-values over-cover.
    pub conservative: bool,
    pub violation: f64,
    pub method: Method,
    pub diagnostics: Option<DualDiagnostics>,
}

/// Runs the test. The chi-square limit is stated for unit feature weight,
/// so the statistic is rescaled by `1 / alpha^2` before the p-value.
pub fn run_test<R: Regressor + ?Sized>(dataset: &Dataset, model: &R, cfg: &TestConfig) -> Result<TestResult> {
    let stat = test_statistic(dataset, model, &cfg.criterion, cfg.cost, &cfg.solver, cfg.force_dual)?;
    let theta = theta_hat_general(dataset, model, &cfg.criterion, cfg.theta_form)?;
    let alpha2 = cfg.cost.alpha * cfg.cost.alpha;
    let n = dataset.len();
    Ok(TestResult {
        n,
        statistic: stat.t,
        scaled_statistic: n as f64 * stat.t,
        theta,
        p_value: p_value(stat.t / alpha2, n, &theta)?,
        conservative: !cfg.criterion.mode.is_exact(),
        violation: empirical_violation(dataset, model, &cfg.criterion)?,
        method: stat.method,
        diagnostics: stat.diagnostics,
    })
}
