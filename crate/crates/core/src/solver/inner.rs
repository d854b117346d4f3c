//! Per-sample inner problem
//! `inf_{x, y} gamma * (phi(x, a, y) - shift) + (alpha |x - x^| + beta |y - y^|)^2`.

use crate::cost::CostParams;
use crate::criterion::{binding_constraint, check_dim, phi_form, Constraint, FairnessCriterion};
use crate::dataset::{Dataset, GroupMarginals};
use crate::error::{Error, Result};
use crate::model::Regressor;

use super::bfgs::{minimize, BfgsConfig};
use super::SolverOptions;

/// Smoothing applied under both norms when the cross term is active.
const MIN_CROSS_SMOOTHING: f64 = 1e-12;

/// One empirical sample.
#[derive(Debug, Clone, Copy)]
pub struct Point<'a> {
    pub x: &'a [f64],
    pub a: bool,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub x: Vec<f64>,
    pub y: f64,
    /// Unsmoothed objective at `(x, y)`.
    pub value: f64,
    pub iters: usize,
}

/// Everything the inner problems of one dataset share.
pub struct InnerProblem<'a, R: Regressor + ?Sized> {
    pub model: &'a R,
    pub crit: FairnessCriterion,
    pub cost: CostParams,
    pub constraint: Constraint,
    pub marginals: GroupMarginals,
    pub opts: SolverOptions,
}

impl<'a, R: Regressor + ?Sized> InnerProblem<'a, R> {
    /// Targets the binding constraint of `dataset`.
    pub fn for_dataset(
        dataset: &Dataset,
        model: &'a R,
        crit: &FairnessCriterion,
        cost: CostParams,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let constraint = binding_constraint(dataset, model, crit)?;
        Self::with_constraint(dataset, model, crit, cost, opts, constraint)
    }

    pub fn with_constraint(
        dataset: &Dataset,
        model: &'a R,
        crit: &FairnessCriterion,
        cost: CostParams,
        opts: &SolverOptions,
        constraint: Constraint,
    ) -> Result<Self> {
        crit.validate()?;
        cost.validate(crit)?;
        opts.validate()?;
        check_dim(dataset, model)?;
        Ok(Self {
            model,
            crit: *crit,
            cost,
            constraint,
            marginals: dataset.marginals(),
            opts: *opts,
        })
    }

    fn joint(&self) -> bool {
        !self.crit.discrepancy.is_label_free()
    }

    fn smoothing(&self) -> f64 {
        self.opts.smoothing_eps.max(MIN_CROSS_SMOOTHING)
    }

    /// Exact objective, no smoothing.
    pub fn objective(&self, gamma: f64, point: Point<'_>, shift: f64, x: &[f64], y: f64) -> f64 {
        let form = phi_form(&self.crit, self.constraint, point.a, &self.marginals);
        let d = self.crit.discrepancy.value(y, self.model.predict(x));
        let dx = x
            .iter()
            .zip(point.x)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        let dy = if self.joint() { y - point.y } else { 0.0 };
        gamma * (form.weight * d + form.offset - shift) + self.cost.transport(dx, dy)
    }

    /// Solves the inner problem at `gamma` with the constraint shifted by
    /// `shift` (zero for the test statistic).
    pub fn minimize(&self, gamma: f64, point: Point<'_>, shift: f64) -> Result<InnerSolution> {
        let form = phi_form(&self.crit, self.constraint, point.a, &self.marginals);
        let anchor_value = self.objective(gamma, point, shift, point.x, point.y);
        if !anchor_value.is_finite() {
            return Err(Error::NonFinite("inner objective".into()));
        }
        if gamma == 0.0 || form.weight == 0.0 {
            return Ok(InnerSolution {
                x: point.x.to_vec(),
                y: point.y,
                value: anchor_value,
                iters: 0,
            });
        }

        let d = point.x.len();
        let joint = self.joint();
        let eps = self.smoothing();
        let CostParams { alpha, beta } = self.cost;
        let coef = gamma * form.weight;
        let model = self.model;
        let disc = self.crit.discrepancy;

        let f = |z: &[f64]| -> (f64, Vec<f64>) {
            let x = &z[..d];
            let y = if joint { z[d] } else { point.y };
            let pred = model.predict(x);
            let (dd_dpred, dd_dy) = disc.partials(y, pred, eps);
            let grad_r = model.gradient(x);
            let dxs: Vec<f64> = x.iter().zip(point.x).map(|(u, v)| u - v).collect();
            let dx2: f64 = dxs.iter().map(|v| v * v).sum();

            let mut grad = vec![0.0; z.len()];
            let value;
            if joint {
                let dy = y - point.y;
                let sx = (dx2 + eps).sqrt();
                let sy = (dy * dy + eps).sqrt();
                let c = alpha * sx + beta * sy;
                value = coef * disc.smoothed_value(y, pred, eps) + c * c;
                for j in 0..d {
                    grad[j] = coef * dd_dpred * grad_r[j] + 2.0 * c * alpha * dxs[j] / sx;
                }
                grad[d] = coef * dd_dy + 2.0 * c * beta * dy / sy;
            } else {
                value = coef * disc.smoothed_value(y, pred, eps) + alpha * alpha * dx2;
                for j in 0..d {
                    grad[j] = coef * dd_dpred * grad_r[j] + 2.0 * alpha * alpha * dxs[j];
                }
            }
            (value, grad)
        };

        let mut z0 = point.x.to_vec();
        if joint {
            z0.push(point.y);
        }
        let cfg = BfgsConfig::new(self.opts.inner_max_iters, self.opts.inner_grad_tol);
        let m = minimize(f, &z0, &cfg)?;
        let x_star = m.x[..d].to_vec();
        let y_star = if joint { m.x[d] } else { point.y };
        let value = self.objective(gamma, point, shift, &x_star, y_star);
        if value < -1e12 {
            return Err(Error::Unbounded { value });
        }
        if value <= anchor_value {
            Ok(InnerSolution {
                x: x_star,
                y: y_star,
                value,
                iters: m.iters,
            })
        } else {
            Ok(InnerSolution {
                x: point.x.to_vec(),
                y: point.y,
                value: anchor_value,
                iters: m.iters,
            })
        }
    }
}

/// Inner minimization for a single sample at multiplier `gamma`.
pub fn inner_minimize<R: Regressor + ?Sized>(
    gamma: f64,
    point: Point<'_>,
    problem: &InnerProblem<'_, R>,
) -> Result<InnerSolution> {
    problem.minimize(gamma, point, 0.0)
}
