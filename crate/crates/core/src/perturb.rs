//! Optimal repair: move the data the least (in transport cost) so that the
//! fairness violation shrinks to `(1 - eta)` of its observed value.

use ndarray::Array2;
use serde::Serialize;

use crate::cost::CostParams;
use crate::criterion::{binding_constraint, constraint_violation, phi_constraint, FairnessCriterion};
use crate::dataset::{lambda_weight, Dataset};
use crate::error::{Error, Result};
use crate::model::{LinearModel, Regressor};
use crate::models::relative_mae;
use crate::par::map_indexed;
use crate::solver::{
    closed_form_eligible, closed_form_gamma, dual_maximize, GammaDomain, InnerProblem, SolverOptions,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationResult {
    pub features_eta: Array2<f64>,
    pub labels_eta: Vec<f64>,
    pub eta: f64,
    pub gamma_star: f64,
    pub violation_before: f64,
    pub violation_after: f64,
    /// Per-point transport cost `(alpha |dx| + beta |dy|)^2`.
    pub displacement: Vec<f64>,
}

impl PerturbationResult {
    pub fn total_displacement(&self) -> f64 {
        self.displacement.iter().sum()
    }

    /// The perturbed sample, with the original group memberships.
    pub fn dataset(&self, original: &Dataset) -> Result<Dataset> {
        original.with_points(self.features_eta.clone(), self.labels_eta.clone())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::EtaOutOfRange(eta))
    }
}

fn displacements(original: &Dataset, x: &Array2<f64>, y: &[f64], cost: CostParams) -> Vec<f64> {
    map_indexed(original.len(), |i| {
        let dx = original
            .row(i)
            .iter()
            .zip(x.row(i))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        cost.transport(dx, y[i] - original.labels()[i])
    })
}

/// Linear model, equal mean: `x_i <- x_i - eta gamma* lambda(a_i) rho / 2`,
/// labels untouched. The projection does not depend on the feature weight,
/// which only enters the reported displacement.
pub fn perturb_closed_form(dataset: &Dataset, model: &LinearModel, eta: f64) -> Result<PerturbationResult> {
    perturb_closed_form_with_cost(dataset, model, eta, CostParams::default())
}

fn perturb_closed_form_with_cost(
    dataset: &Dataset,
    model: &LinearModel,
    eta: f64,
    cost: CostParams,
) -> Result<PerturbationResult> {
    check_eta(eta)?;
    let gamma = closed_form_gamma(dataset, model)?;
    let m = dataset.marginals();
    let mut x = dataset.features().clone();
    if eta > 0.0 {
        for (i, mut row) in x.rows_mut().into_iter().enumerate() {
            let step = 0.5 * eta * gamma * lambda_weight(dataset.sensitive()[i], &m);
            row.iter_mut().zip(&model.rho).for_each(|(v, r)| *v -= step * r);
        }
    }
    let labels = dataset.labels().to_vec();
    let crit = FairnessCriterion::equal_mean();
    let after = dataset.with_points(x.clone(), labels.clone())?;
    Ok(PerturbationResult {
        displacement: displacements(dataset, &x, &labels, cost),
        violation_before: constraint_violation(dataset, model, &crit, crate::Constraint::Exact)?,
        violation_after: constraint_violation(&after, model, &crit, crate::Constraint::Exact)?,
        features_eta: x,
        labels_eta: labels,
        eta,
        gamma_star: gamma,
    })
}

/// Partial projection for any criterion and differentiable model.
///
/// Solves `sup_gamma sum_i inf_{x,y} gamma (phi(x, a_i, y) - (1 - eta) phi_i) + cost`
/// and returns the inner minimizers at the optimal multiplier. Tolerance
/// criteria are repaired along their binding group constraint.
pub fn perturb_generic<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
    cost: CostParams,
    eta: f64,
    opts: &SolverOptions,
) -> Result<PerturbationResult> {
    check_eta(eta)?;
    let problem = InnerProblem::for_dataset(dataset, model, crit, cost, opts)?;
    let constraint = problem.constraint;
    let m = dataset.marginals();
    let shifts = (0..dataset.len())
        .map(|i| {
            let phi = phi_constraint(
                dataset.row_slice(i),
                dataset.sensitive()[i],
                dataset.labels()[i],
                model,
                crit,
                constraint,
                &m,
            )?;
            Ok((1.0 - eta) * phi)
        })
        .collect::<Result<Vec<_>>>()?;
    let sol = dual_maximize(dataset, &problem, &shifts, GammaDomain::Real)?;

    let mut x = dataset.features().clone();
    let mut labels = dataset.labels().to_vec();
    for (i, p) in sol.points.iter().enumerate() {
        x.row_mut(i).iter_mut().zip(&p.x).for_each(|(v, s)| *v = *s);
        labels[i] = p.y;
    }
    let after = dataset.with_points(x.clone(), labels.clone())?;
    Ok(PerturbationResult {
        displacement: displacements(dataset, &x, &labels, cost),
        violation_before: constraint_violation(dataset, model, crit, constraint)?,
        violation_after: constraint_violation(&after, model, crit, constraint)?,
        features_eta: x,
        labels_eta: labels,
        eta,
        gamma_star: sol.diagnostics.gamma_star,
    })
}

/// Closed form when eligible (unless `force_generic`), generic otherwise.
pub fn perturb<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
    cost: CostParams,
    eta: f64,
    opts: &SolverOptions,
    force_generic: bool,
) -> Result<PerturbationResult> {
    cost.validate(crit)?;
    match model.as_linear() {
        Some(linear) if !force_generic && closed_form_eligible(model, crit) => {
            perturb_closed_form_with_cost(dataset, linear, eta, cost)
        }
        _ => perturb_generic(dataset, model, crit, cost, eta, opts),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub eta: f64,
    pub violation_after: f64,
    /// Model error on the perturbed features against the original labels.
    pub relative_mae: f64,
}

pub fn tradeoff_sweep<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
    cost: CostParams,
    etas: &[f64],
    opts: &SolverOptions,
    force_generic: bool,
) -> Result<Vec<TradeoffRow>> {
    etas.iter().try_for_each(|&e| check_eta(e))?;
    // the constraint is fixed by the original data, so every eta repairs
    // along the same direction
    binding_constraint(dataset, model, crit)?;
    etas.iter()
        .map(|&eta| {
            let r = perturb(dataset, model, crit, cost, eta, opts, force_generic)?;
            Ok(TradeoffRow {
                eta,
                violation_after: r.violation_after,
                relative_mae: relative_mae(model, &r.features_eta, dataset.labels())?,
            })
        })
        .collect()
}
