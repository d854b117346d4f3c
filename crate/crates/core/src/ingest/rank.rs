//! Which features a repair moved the most, per sensitive group.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::LinearModel;
use crate::perturb::PerturbationResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    /// `|rho_j|` times the mean shift of feature `j` over `A = 1`.
    pub contribution_high: f64,
    /// Same over `A = 0`.
    pub contribution_low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub rows: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn top(&self) -> Option<&RankedFeature> {
        self.rows.first()
    }
}

/// Orders features by `max(|high|, |low|)`, largest first; ties keep the
/// column order.
pub fn rank_features(
    model: &LinearModel,
    original: &Dataset,
    perturbed: &PerturbationResult,
) -> Result<FeatureRanking> {
    let d = original.dim();
    if model.rho.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: model.rho.len(),
        });
    }
    if perturbed.features_eta.dim() != (original.len(), d) {
        return Err(Error::DimensionMismatch {
            expected: original.len() * d,
            got: perturbed.features_eta.len(),
        });
    }
    let (n0, n1) = original.group_counts();
    let mut rows: Vec<RankedFeature> = (0..d)
        .map(|j| {
            let (mut s0, mut s1) = (0.0, 0.0);
            for i in 0..original.len() {
                let delta = perturbed.features_eta[[i, j]] - original.row_slice(i)[j];
                if original.sensitive()[i] {
                    s1 += delta;
                } else {
                    s0 += delta;
                }
            }
            let w = model.rho[j].abs();
            RankedFeature {
                feature: original.feature_names()[j].clone(),
                contribution_high: w * s1 / n1 as f64,
                contribution_low: w * s0 / n0 as f64,
            }
        })
        .collect();
    let key = |r: &RankedFeature| r.contribution_high.abs().max(r.contribution_low.abs());
    rows.sort_by(|a, b| key(b).total_cmp(&key(a)));
    Ok(FeatureRanking { rows })
}
