//! Seeded synthetic experiments: power and specificity against the
//! permutation baseline, and the chi-square limit of `N T / theta`.
//!
//! Features are standard normal with the `A = 1` group shifted by `effect`;
//! the model is the fixed line `3x + 1`, so the equal-mean violation grows
//! linearly in `effect`. Labels are `3x + 1` plus unit Gaussian noise.

use ndarray::Array2;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{ks_distance_chi2, theta_hat_general, ThetaForm};
use crate::baseline::{permutation_test, PermutationConfig};
use crate::criterion::FairnessCriterion;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::LinearModel;
use crate::par::try_map_indexed;
use crate::rng::{purpose, stream};
use crate::solver::closed_form_statistic;
use crate::testing::{run_test, TestConfig};

pub const SIM_RHO: f64 = 3.0;
pub const SIM_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_total: usize,
    pub effect: f64,
    /// Significance level.
    pub alpha: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub p0: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_total: 160,
            effect: 0.0,
            alpha: 0.05,
            n_trials: 100,
            seed: 0,
            p0: 0.5,
        }
    }
}

impl SimConfig {
    /// `(n0, n1)` with `n1 = round(n (1 - p0))`.
    pub fn group_sizes(&self) -> Result<(usize, usize)> {
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return Err(Error::InvalidConfig(format!("p0 must lie in (0, 1), got {}", self.p0)));
        }
        let n1 = (self.n_total as f64 * (1.0 - self.p0)).round() as usize;
        let n0 = self.n_total.saturating_sub(n1);
        if n0 < 2 || n1 < 2 {
            return Err(Error::DegenerateSplit(format!(
                "n = {} with p0 = {} gives groups ({n0}, {n1})",
                self.n_total, self.p0
            )));
        }
        Ok((n0, n1))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !self.effect.is_finite() {
            return Err(Error::NonFinite("effect".into()));
        }
        self.group_sizes().map(|_| ())
    }
}

pub fn sim_model() -> LinearModel {
    LinearModel::new(vec![SIM_RHO], SIM_SIGMA)
}

fn generate(cfg: &SimConfig, effect: f64, stream_purpose: u64, trial: u64) -> Result<Dataset> {
    let (n0, n1) = cfg.group_sizes()?;
    let n = n0 + n1;
    let mut rng = stream(cfg.seed, stream_purpose, trial);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    for i in 0..n {
        let group = i < n1;
        let z: f64 = StandardNormal.sample(&mut rng);
        let xi = z + if group { effect } else { 0.0 };
        let e: f64 = StandardNormal.sample(&mut rng);
        x.push(xi);
        y.push(SIM_RHO * xi + SIM_SIGMA + e);
        a.push(group);
    }
    let features = Array2::from_shape_vec((n, 1), x).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Dataset::new(features, a, y)
}

/// One synthetic dataset with the configured effect, plus the true model.
pub fn gen_synthetic(cfg: &SimConfig, trial: u64) -> Result<(Dataset, LinearModel)> {
    Ok((generate(cfg, cfg.effect, purpose::SIM_UNFAIR, trial)?, sim_model()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub n_permutations: usize,
    pub theta_form: ThetaForm,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            n_permutations: 1000,
            theta_form: ThetaForm::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub n: usize,
    pub effect: f64,
    pub alpha: f64,
    pub power_wproj: f64,
    pub power_perm: f64,
    pub specificity_wproj: f64,
    pub specificity_perm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub rows: Vec<PowerRow>,
}

/// p-values of both tests on one dataset.
fn paired_p_values(ds: &Dataset, perm_seed: u64, opts: &ExperimentOptions) -> Result<(f64, f64)> {
    let model = sim_model();
    let cfg = TestConfig {
        theta_form: opts.theta_form,
        ..TestConfig::default()
    };
    let w = run_test(ds, &model, &cfg)?.p_value;
    let perm = PermutationConfig {
        n_permutations: opts.n_permutations,
        seed: perm_seed,
        ..Default::default()
    };
    let p = permutation_test(ds, &model, &FairnessCriterion::equal_mean(), &perm)?;
    Ok((w, p))
}

/// Rejection counts `(wproj, perm)` over `n_trials` datasets.
fn rejections(cfg: &SimConfig, effect: f64, stream_purpose: u64, opts: &ExperimentOptions) -> Result<(usize, usize)> {
    let per_trial = try_map_indexed(cfg.n_trials, |t| {
        let ds = generate(cfg, effect, stream_purpose, t as u64)?;
        let perm_seed = stream(cfg.seed, stream_purpose, t as u64 | 1 << 63).next_u64();
        let (w, p) = paired_p_values(&ds, perm_seed, opts)?;
        Ok::<_, Error>(((w <= cfg.alpha) as usize, (p <= cfg.alpha) as usize))
    })?;
    Ok(per_trial
        .iter()
        .fold((0, 0), |(a, b), (w, p)| (a + w, b + p)))
}

/// Power on data with the configured effect, specificity on fair data.
/// Both tests see the same dataset in every trial.
pub fn power_specificity_experiment(grid: &[SimConfig], opts: &ExperimentOptions) -> Result<PowerResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty simulation grid".into()));
    }
    if opts.n_permutations == 0 {
        return Err(Error::InvalidConfig("at least one permutation is required".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for cfg in grid {
        cfg.validate()?;
        if cfg.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be positive".into()));
        }
        let trials = cfg.n_trials as f64;
        let (w_unfair, p_unfair) = rejections(cfg, cfg.effect, purpose::SIM_UNFAIR, opts)?;
        let (w_fair, p_fair) = rejections(cfg, 0.0, purpose::SIM_FAIR, opts)?;
        rows.push(PowerRow {
            n: cfg.n_total,
            effect: cfg.effect,
            alpha: cfg.alpha,
            power_wproj: w_unfair as f64 / trials,
            power_perm: p_unfair as f64 / trials,
            specificity_wproj: 1.0 - w_fair as f64 / trials,
            specificity_perm: 1.0 - p_fair as f64 / trials,
        });
    }
    Ok(PowerResult { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitingResult {
    pub ks_distance: f64,
    pub samples: Vec<f64>,
}

/// Draws `reps` fair datasets (`p0 = 0.6`, `X ~ N(0, 1)`, model `3x + 1`)
/// and compares `N T / theta` with the chi-square distribution.
pub fn validate_limiting(n: usize, reps: usize, seed: u64, form: ThetaForm) -> Result<LimitingResult> {
    if n < 100 || reps < 100 {
        return Err(Error::InvalidConfig(format!("need n >= 100 and reps >= 100, got {n}, {reps}")));
    }
    let cfg = SimConfig {
        n_total: n,
        p0: 0.6,
        seed,
        ..SimConfig::default()
    };
    let model = sim_model();
    let crit = FairnessCriterion::equal_mean();
    let samples = try_map_indexed(reps, |r| {
        let ds = generate(&cfg, 0.0, purpose::LIMITING, r as u64)?;
        let t = closed_form_statistic(&ds, &model)?;
        let theta = theta_hat_general(&ds, &model, &crit, form)?;
        Ok::<_, Error>(n as f64 * t / theta.theta_hat)
    })?;
    Ok(LimitingResult {
        ks_distance: ks_distance_chi2(&samples),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criterion::empirical_violation;

    #[test]
    fn deterministic_per_trial() {
        let cfg = SimConfig {
            effect: 0.3,
            seed: 5,
            ..Default::default()
        };
        let (a, _) = gen_synthetic(&cfg, 2).unwrap();
        let (b, _) = gen_synthetic(&cfg, 2).unwrap();
        let (c, _) = gen_synthetic(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn group_sizes_follow_p0() {
        let cfg = SimConfig {
            n_total: 100,
            p0: 0.6,
            ..Default::default()
        };
        assert_eq!(cfg.group_sizes().unwrap(), (60, 40));
        let tiny = SimConfig {
            n_total: 3,
            ..Default::default()
        };
        assert!(matches!(tiny.group_sizes(), Err(Error::DegenerateSplit(_))));
    }

    #[test]
    fn null_feature_means_are_close() {
        // the difference of two group means of 80 has sd 2/sqrt(160), so
        // 4/sqrt(n) is a two-sigma band holding ~95% of the time
        let mut inside = 0;
        for seed in 0..100 {
            let cfg = SimConfig {
                seed,
                ..Default::default()
            };
            let (ds, _) = gen_synthetic(&cfg, 0).unwrap();
            let (mut s0, mut s1) = (0.0, 0.0);
            for i in 0..ds.len() {
                if ds.sensitive()[i] {
                    s1 += ds.row_slice(i)[0];
                } else {
                    s0 += ds.row_slice(i)[0];
                }
            }
            let diff = s1 / 80.0 - s0 / 80.0;
            assert!(diff.abs() <= 8.0 / (160f64).sqrt(), "seed {seed}: {diff}");
            inside += (diff.abs() <= 4.0 / (160f64).sqrt()) as usize;
        }
        assert!(inside >= 90, "{inside}");
    }

    #[test]
    fn strong_effect_always_violates() {
        for t in 0..100 {
            let cfg = SimConfig {
                effect: 1.0,
                seed: 1,
                ..Default::default()
            };
            let (ds, m) = gen_synthetic(&cfg, t).unwrap();
            let h = empirical_violation(&ds, &m, &FairnessCriterion::equal_mean()).unwrap();
            assert!(h.abs() > 0.0);
        }
    }

    #[test]
    fn limiting_samples_non_negative() {
        let r = validate_limiting(200, 100, 3, ThetaForm::SecondMoment).unwrap();
        assert_eq!(r.samples.len(), 100);
        assert!(r.samples.iter().all(|&s| s >= 0.0));
        assert!(r.ks_distance > 0.0 && r.ks_distance < 1.0);
        assert!(validate_limiting(50, 100, 3, ThetaForm::SecondMoment).is_err());
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(power_specificity_experiment(&[], &ExperimentOptions::default()).is_err());
    }
}
