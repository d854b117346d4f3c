//! Expectation-based fairness criteria and the pointwise discrepancy `phi`.
//!
//! A criterion pairs a discrepancy `d(y, R(x))` with a mode. In exact mode
//! the constraint is `E[lambda(A) d] = 0`; in tolerance mode each group `a`
//! must satisfy `E[d 1{A=a}] / p_a - eps_a <= 0`. Exact mode is the
//! tolerance form with the two-group `phi` and `eps = 0`.

use serde::{Deserialize, Serialize};

use crate::dataset::{lambda_weight, Dataset, GroupMarginals};
use crate::error::{Error, Result};
use crate::model::Regressor;

/// Per-sample error between label and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorFn {
    Absolute,
    Squared,
}

impl ErrorFn {
    fn value(self, residual: f64) -> f64 {
        match self {
            ErrorFn::Absolute => residual.abs(),
            ErrorFn::Squared => residual * residual,
        }
    }

    /// Derivative in the residual; `smoothing > 0` rounds the kink of `|r|`.
    fn derivative(self, residual: f64, smoothing: f64) -> f64 {
        match self {
            ErrorFn::Absolute => {
                if smoothing > 0.0 {
                    residual / (residual * residual + smoothing).sqrt()
                } else {
                    residual.signum() * (residual != 0.0) as u8 as f64
                }
            }
            ErrorFn::Squared => 2.0 * residual,
        }
    }

    /// Smoothed value used inside the optimizer.
    fn smoothed(self, residual: f64, smoothing: f64) -> f64 {
        match self {
            ErrorFn::Absolute if smoothing > 0.0 => (residual * residual + smoothing).sqrt(),
            _ => self.value(residual),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "error")]
pub enum Discrepancy {
    /// `d = R(x)`.
    EqualMean,
    /// `d = E(y, R(x))`.
    AccuracyParity(ErrorFn),
    /// `d = l(y, R(x))`, usually paired with a tolerance.
    BoundedGroupLoss(ErrorFn),
}

impl Discrepancy {
    pub fn value(&self, y: f64, prediction: f64) -> f64 {
        match *self {
            Discrepancy::EqualMean => prediction,
            Discrepancy::AccuracyParity(e) | Discrepancy::BoundedGroupLoss(e) => {
                e.value(y - prediction)
            }
        }
    }

    pub(crate) fn smoothed_value(&self, y: f64, prediction: f64, smoothing: f64) -> f64 {
        match *self {
            Discrepancy::EqualMean => prediction,
            Discrepancy::AccuracyParity(e) | Discrepancy::BoundedGroupLoss(e) => {
                e.smoothed(y - prediction, smoothing)
            }
        }
    }

    /// `(dd/dR, dd/dy)`.
    pub fn partials(&self, y: f64, prediction: f64, smoothing: f64) -> (f64, f64) {
        match *self {
            Discrepancy::EqualMean => (1.0, 0.0),
            Discrepancy::AccuracyParity(e) | Discrepancy::BoundedGroupLoss(e) => {
                let g = e.derivative(y - prediction, smoothing);
                (-g, g)
            }
        }
    }

    pub fn is_label_free(&self) -> bool {
        matches!(self, Discrepancy::EqualMean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Tolerance { eps0: f64, eps1: f64 },
}

impl Mode {
    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessCriterion {
    pub discrepancy: Discrepancy,
    pub mode: Mode,
}

impl FairnessCriterion {
    pub fn equal_mean() -> Self {
        Self {
            discrepancy: Discrepancy::EqualMean,
            mode: Mode::Exact,
        }
    }

    pub fn accuracy_parity(error: ErrorFn) -> Self {
        Self {
            discrepancy: Discrepancy::AccuracyParity(error),
            mode: Mode::Exact,
        }
    }

    pub fn bounded_group_loss(loss: ErrorFn, eps0: f64, eps1: f64) -> Self {
        Self {
            discrepancy: Discrepancy::BoundedGroupLoss(loss),
            mode: Mode::Tolerance { eps0, eps1 },
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Mode::Tolerance { eps0, eps1 } = self.mode {
            if !(eps0 >= 0.0 && eps1 >= 0.0 && eps0.is_finite() && eps1.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "tolerances must be finite and non-negative, got ({eps0}, {eps1})"
                )));
            }
        }
        Ok(())
    }

    fn eps(&self, group: bool) -> f64 {
        match self.mode {
            Mode::Exact => 0.0,
            Mode::Tolerance { eps0, eps1 } => {
                if group {
                    eps1
                } else {
                    eps0
                }
            }
        }
    }
}

/// The single moment constraint a projection targets.
///
/// Exact mode has one two-sided constraint. Tolerance mode has one
/// one-sided constraint per group; tests project onto the binding one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    Exact,
    Group(bool),
}

impl Constraint {
    /// Whether the dual multiplier is restricted to `gamma >= 0`.
    pub fn one_sided(&self) -> bool {
        matches!(self, Constraint::Group(_))
    }
}

/// `phi = weight * d + offset` for a point of group `a` under `constraint`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PhiForm {
    pub weight: f64,
    pub offset: f64,
}

pub(crate) fn phi_form(
    crit: &FairnessCriterion,
    constraint: Constraint,
    a: bool,
    m: &GroupMarginals,
) -> PhiForm {
    match constraint {
        Constraint::Exact => PhiForm {
            weight: lambda_weight(a, m),
            offset: 0.0,
        },
        Constraint::Group(g) => PhiForm {
            weight: if a == g { 1.0 / m.of(g) } else { 0.0 },
            offset: -crit.eps(g),
        },
    }
}

fn checked_prediction<R: Regressor + ?Sized>(model: &R, x: &[f64]) -> Result<f64> {
    let p = model.predict(x);
    if p.is_finite() {
        Ok(p)
    } else {
        Err(Error::NonFinite("model prediction".into()))
    }
}

/// Pointwise fairness discrepancy.
///
/// Exact mode: `lambda(a) d(y, R(x))`. Tolerance mode: `d / p_a - eps_a`
/// for the point's own group `a`.
pub fn phi<R: Regressor + ?Sized>(
    x: &[f64],
    a: bool,
    y: f64,
    model: &R,
    crit: &FairnessCriterion,
    m: &GroupMarginals,
) -> Result<f64> {
    let d = crit.discrepancy.value(y, checked_prediction(model, x)?);
    Ok(match crit.mode {
        Mode::Exact => lambda_weight(a, m) * d,
        Mode::Tolerance { .. } => d / m.of(a) - crit.eps(a),
    })
}

/// `phi` for an explicit constraint; used by projections.
pub fn phi_constraint<R: Regressor + ?Sized>(
    x: &[f64],
    a: bool,
    y: f64,
    model: &R,
    crit: &FairnessCriterion,
    constraint: Constraint,
    m: &GroupMarginals,
) -> Result<f64> {
    let d = crit.discrepancy.value(y, checked_prediction(model, x)?);
    let f = phi_form(crit, constraint, a, m);
    Ok(f.weight * d + f.offset)
}

/// `d(y_i, R(x_i))` for every row.
pub fn discrepancies<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
) -> Result<Vec<f64>> {
    check_dim(dataset, model)?;
    (0..dataset.len())
        .map(|i| {
            let x = dataset.row(i).to_vec();
            let p = checked_prediction(model, &x)?;
            Ok(crit.discrepancy.value(dataset.labels()[i], p))
        })
        .collect()
}

pub(crate) fn check_dim<R: Regressor + ?Sized>(dataset: &Dataset, model: &R) -> Result<()> {
    if model.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: model.dim(),
        });
    }
    Ok(())
}

/// Sample mean of `phi` under a given constraint.
pub fn constraint_violation<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
    constraint: Constraint,
) -> Result<f64> {
    let d = discrepancies(dataset, model, crit)?;
    let m = dataset.marginals();
    let total: f64 = d
        .iter()
        .zip(dataset.sensitive())
        .map(|(&di, &a)| {
            let f = phi_form(crit, constraint, a, &m);
            f.weight * di + f.offset
        })
        .sum();
    Ok(total / dataset.len() as f64)
}

/// The constraint a test or repair should target.
///
/// Exact mode has only one. In tolerance mode it is the group whose
/// constraint is most violated (ties go to group 1).
pub fn binding_constraint<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
) -> Result<Constraint> {
    match crit.mode {
        Mode::Exact => Ok(Constraint::Exact),
        Mode::Tolerance { .. } => {
            let v0 = constraint_violation(dataset, model, crit, Constraint::Group(false))?;
            let v1 = constraint_violation(dataset, model, crit, Constraint::Group(true))?;
            Ok(Constraint::Group(v1 >= v0))
        }
    }
}

/// Empirical violation `H^N`.
///
/// Exact mode: `(1/N) sum_i phi_i`, which for equal mean is the difference
/// of group mean predictions. Tolerance mode: the larger of the two group
/// constraint values `mean_a(d) - eps_a`.
pub fn empirical_violation<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
) -> Result<f64> {
    let c = binding_constraint(dataset, model, crit)?;
    constraint_violation(dataset, model, crit, c)
}
