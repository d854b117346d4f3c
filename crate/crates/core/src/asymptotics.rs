//! Scale of the chi-square limit of `N T` and the resulting p-values.
//!
//! Under the null `N T -> theta chi2_1` (exact criteria) or is bounded by it
//! in distribution (tolerance criteria, so p-values there are conservative).

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::criterion::{check_dim, discrepancies, FairnessCriterion};
use crate::dataset::{lambda_weight, Dataset};
use crate::error::{Error, Result};
use crate::model::{LinearModel, Regressor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub theta_hat: f64,
    pub numerator: f64,
    pub denominator: f64,
}

impl ThetaEstimate {
    fn from_parts(numerator: f64, denominator: f64) -> Result<Self> {
        if !(denominator > 0.0) || !denominator.is_finite() {
            return Err(Error::ZeroGradient);
        }
        if !numerator.is_finite() {
            return Err(Error::NonFinite("theta numerator".into()));
        }
        Ok(Self {
            theta_hat: numerator / denominator,
            numerator,
            denominator,
        })
    }
}

/// How the covariance of the limiting Gaussian is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaForm {
    /// `(1/N) sum_i phi_i^2` with `phi = lambda(a) d`; reduces to the
    /// closed-form linear/equal-mean estimator.
    #[default]
    SecondMoment,
    /// `(1/N) sum_i Z'_i^2` with each group's contribution centred on the
    /// other group's sample mean.
    Centered,
}

/// Plug-in `theta` for any differentiable regressor.
///
/// The denominator is `(1/N) sum_i |grad_x d_i|^2 lambda(a_i)^2`, with the
/// gradient taken through the model by the chain rule.
pub fn theta_hat_general<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
    form: ThetaForm,
) -> Result<ThetaEstimate> {
    check_dim(dataset, model)?;
    let m = dataset.marginals();
    let n = dataset.len() as f64;
    let d = discrepancies(dataset, model, crit)?;
    let a = dataset.sensitive();

    let numerator = match form {
        ThetaForm::SecondMoment => {
            d.iter()
                .zip(a)
                .map(|(&di, &ai)| (lambda_weight(ai, &m) * di).powi(2))
                .sum::<f64>()
                / n
        }
        ThetaForm::Centered => {
            let (mut s0, mut s1) = (0.0, 0.0);
            for (&di, &ai) in d.iter().zip(a) {
                if ai {
                    s1 += di;
                } else {
                    s0 += di;
                }
            }
            let (n0, n1) = dataset.group_counts();
            let (mean0, mean1) = (s0 / n0 as f64, s1 / n1 as f64);
            d.iter()
                .zip(a)
                .map(|(&di, &ai)| {
                    let z = if ai {
                        (di - mean0) / m.p1
                    } else {
                        (mean1 - di) / m.p0
                    };
                    z * z
                })
                .sum::<f64>()
                / n
        }
    };

    let mut denominator = 0.0;
    for i in 0..dataset.len() {
        let x = dataset.row_slice(i);
        let pred = model.predict(x);
        let (dd_dpred, _) = crit.discrepancy.partials(dataset.labels()[i], pred, 0.0);
        let g2: f64 = model.gradient(x).iter().map(|g| g * g).sum();
        denominator += dd_dpred * dd_dpred * g2 * lambda_weight(a[i], &m).powi(2);
    }
    denominator /= n;
    ThetaEstimate::from_parts(numerator, denominator)
}

/// `theta = sum_i R_i^2 w_i / (|rho|^2 sum_i w_i)` with
/// `w_i = 1{a=1}/p1^2 + 1{a=0}/p0^2`.
pub fn theta_hat_linear_equal_mean(dataset: &Dataset, model: &LinearModel) -> Result<ThetaEstimate> {
    let n2 = model.require_nonzero()?;
    check_dim(dataset, model)?;
    let m = dataset.marginals();
    let n = dataset.len() as f64;
    let (mut num, mut wsum) = (0.0, 0.0);
    for (i, &a) in dataset.sensitive().iter().enumerate() {
        let w = lambda_weight(a, &m).powi(2);
        num += model.predict(dataset.row_slice(i)).powi(2) * w;
        wsum += w;
    }
    ThetaEstimate::from_parts(num / n, n2 * wsum / n)
}

/// `P(chi2_1 > t) = erfc(sqrt(t / 2))`.
pub fn chi2_survival_1df(t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeStatistic(t));
    }
    Ok(erfc((0.5 * t).sqrt()))
}

pub fn chi2_cdf_1df(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        erf((0.5 * t).sqrt())
    }
}

/// Asymptotic p-value of `T` from `N` samples.
pub fn p_value(t: f64, n: usize, theta: &ThetaEstimate) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeStatistic(t));
    }
    chi2_survival_1df(n as f64 * t / theta.theta_hat)
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// the chi-square distribution with one degree of freedom.
pub fn ks_distance_chi2(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = chi2_cdf_1df(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
