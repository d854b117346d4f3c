//! Permutation test on the group difference of mean discrepancies.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::criterion::{discrepancies, FairnessCriterion};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::Regressor;
use crate::par::map_indexed;
use crate::rng::{purpose, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PermutationStatistic {
    #[default]
    GroupMeanDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationConfig {
    pub n_permutations: usize,
    pub seed: u64,
    pub statistic: PermutationStatistic,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self {
            n_permutations: 1000,
            seed: 0,
            statistic: PermutationStatistic::GroupMeanDiff,
        }
    }
}

fn mean_diff(d: &[f64], a: &[bool]) -> f64 {
    let (mut s0, mut s1, mut n1) = (0.0, 0.0, 0usize);
    for (&di, &ai) in d.iter().zip(a) {
        if ai {
            s1 += di;
            n1 += 1;
        } else {
            s0 += di;
        }
    }
    s1 / n1 as f64 - s0 / (d.len() - n1) as f64
}

/// Two-sided add-one p-value: `(1 + #{|stat_b| >= |stat_obs|}) / (1 + B)`.
///
/// Resample `b` shuffles the sensitive labels with its own random stream,
/// so the result is identical under any thread schedule.
pub fn permutation_test<R: Regressor + ?Sized>(
    dataset: &Dataset,
    model: &R,
    crit: &FairnessCriterion,
    cfg: &PermutationConfig,
) -> Result<f64> {
    if cfg.n_permutations == 0 {
        return Err(Error::InvalidConfig("at least one permutation is required".into()));
    }
    let (n0, n1) = dataset.group_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::EmptyGroup { group: (n1 == 0) as u8 });
    }
    let d = discrepancies(dataset, model, crit)?;
    let observed = mean_diff(&d, dataset.sensitive()).abs();
    // ties up to rounding count as extreme
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = observed - 1e-12 * scale;
    let extreme = map_indexed(cfg.n_permutations, |b| {
        let mut a = dataset.sensitive().to_vec();
        a.shuffle(&mut stream(cfg.seed, purpose::PERMUTATION, b as u64));
        (mean_diff(&d, &a).abs() >= threshold) as usize
    });
    let count: usize = extreme.iter().sum();
    Ok((1 + count) as f64 / (1 + cfg.n_permutations) as f64)
}
