//! `T = (1/N) sup_gamma sum_i inf_{x, y} [gamma phi + cost]`.

use crate::cost::CostParams;
use crate::criterion::FairnessCriterion;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::Regressor;
use crate::par::try_map_indexed;

use super::inner::{InnerProblem, InnerSolution, Point};
use super::outer::{outer_maximize, GammaDomain};
use super::{DualDiagnostics, SolverOptions};

/// Relative slack allowed when checking sampled concavity of the dual.
const CONCAVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DualSolution {
    /// `sup_gamma sum_i inner_i(gamma)` (not divided by `N`).
    pub value: f64,
    pub diagnostics: DualDiagnostics,
    /// Inner minimizers at `gamma*`, in row order.
    pub points: Vec<InnerSolution>,
}

/// Maximizes the summed inner values over `gamma`.
///
/// `shifts[i]` is subtracted from `phi` at point `i`; all zeros gives the
/// test statistic, non-zero shifts give the partial projections used for
/// perturbation.
pub fn dual_maximize<R: Regressor + ?Sized>(
    dataset: &Dataset,
    problem: &InnerProblem<'_, R>,
    shifts: &[f64],
    domain: GammaDomain,
) -> Result<DualSolution> {
    if shifts.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            got: shifts.len(),
        });
    }
    // an unbounded inner problem means g(gamma) = -inf, a legitimate value
    // for a concave function the outer search can step back from
    let solve_all = |gamma: f64| -> Result<Vec<Option<InnerSolution>>> {
        try_map_indexed(dataset.len(), |i| {
            let point = Point {
                x: dataset.row_slice(i),
                a: dataset.sensitive()[i],
                y: dataset.labels()[i],
            };
            match problem.minimize(gamma, point, shifts[i]) {
                Ok(s) => Ok(Some(s)),
                Err(Error::Unbounded { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
    };

    let mut inner_iters_total = 0usize;
    let outer = outer_maximize(
        |gamma| {
            let sols = solve_all(gamma)?;
            let mut total = 0.0;
            // fixed summation order keeps the result schedule independent
            for s in &sols {
                match s {
                    Some(s) => {
                        inner_iters_total += s.iters;
                        total += s.value;
                    }
                    None => total = f64::NEG_INFINITY,
                }
            }
            Ok(total)
        },
        &problem.opts,
        domain,
    )?;

    let violations = outer.concavity_violations(CONCAVITY_TOL);
    if violations > 0 {
        return Err(Error::NotConcave { violations });
    }
    let points = solve_all(outer.gamma_star)?
        .into_iter()
        .map(|s| {
            s.ok_or(Error::Unbounded {
                value: f64::NEG_INFINITY,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    inner_iters_total += points.iter().map(|s| s.iters).sum::<usize>();

    Ok(DualSolution {
        value: outer.value,
        diagnostics: DualDiagnostics {
            gamma_star: outer.gamma_star,
            outer_iters: outer.iters,
            inner_iters_total,
            concavity_violations: violations,
        },
        points,
    })
}

/// Generic nested solver for the projection statistic.
///
/// Tolerance-mode criteria project onto the binding one-sided group
/// constraint, with the multiplier restricted to `gamma >= 0`.
pub fn dual_statistic<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
    cost: CostParams,
    opts: &SolverOptions,
) -> Result<(f64, DualDiagnostics)> {
    let problem = InnerProblem::for_dataset(dataset, model, crit, cost, opts)?;
    let domain = if problem.constraint.one_sided() {
        GammaDomain::NonNegative
    } else {
        GammaDomain::Real
    };
    let sol = dual_maximize(dataset, &problem, &vec![0.0; dataset.len()], domain)?;
    // g(0) = 0, so the supremum is non-negative up to rounding
    let t = (sol.value / dataset.len() as f64).max(0.0);
    Ok((t, sol.diagnostics))
}
