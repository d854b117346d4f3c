//! Empirical samples `(x, a, y)` and their sensitive-group marginals.
//!
//! The sensitive attribute is fixed at construction and only ever read
//! afterwards. Transport between groups has infinite cost, so every
//! projection and perturbation in this crate keeps `a` exactly as loaded.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Features, binary sensitive attribute and labels for `N` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    sensitive: Vec<bool>,
    labels: Vec<f64>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset; `sensitive[i] == true` means `A = 1`.
    pub fn new(features: Array2<f64>, sensitive: Vec<bool>, labels: Vec<f64>) -> Result<Self> {
        let names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(features, sensitive, labels, names)
    }

    pub fn with_names(
        features: Array2<f64>,
        sensitive: Vec<bool>,
        labels: Vec<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        // rows are handed out as contiguous slices
        let features = features.as_standard_layout().into_owned();
        let n = features.nrows();
        if n < 2 {
            return Err(Error::TooFewRows(n));
        }
        if sensitive.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: sensitive.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::DimensionMismatch {
                expected: features.ncols(),
                got: feature_names.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features".into()));
        }
        if labels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("labels".into()));
        }
        let ones = sensitive.iter().filter(|&&a| a).count();
        if ones == 0 {
            return Err(Error::EmptyGroup { group: 1 });
        }
        if ones == n {
            return Err(Error::EmptyGroup { group: 0 });
        }
        Ok(Self {
            features,
            sensitive,
            labels,
            feature_names,
        })
    }

    /// Convenience constructor for one-dimensional features.
    pub fn from_column(x: &[f64], sensitive: &[bool], labels: &[f64]) -> Result<Self> {
        let features = Array2::from_shape_vec((x.len(), 1), x.to_vec())
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Self::new(features, sensitive.to_vec(), labels.to_vec())
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn row_slice(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.features.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    pub fn sensitive(&self) -> &[bool] {
        &self.sensitive
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Group count `(#A=0, #A=1)`.
    pub fn group_counts(&self) -> (usize, usize) {
        let ones = self.sensitive.iter().filter(|&&a| a).count();
        (self.len() - ones, ones)
    }

    /// Same sensitive attributes and names, new features and labels.
    ///
    /// This is the only way to derive a dataset from another one, so the
    /// group membership of every row survives any transformation.
    pub fn with_points(&self, features: Array2<f64>, labels: Vec<f64>) -> Result<Self> {
        if features.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: features.ncols(),
            });
        }
        Self::with_names(
            features,
            self.sensitive.clone(),
            labels,
            self.feature_names.clone(),
        )
    }
}

/// Empirical frequencies of the two sensitive groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupMarginals {
    pub p0: f64,
    pub p1: f64,
}

impl GroupMarginals {
    pub fn from_counts(n0: usize, n1: usize) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::EmptyGroup { group: 0 });
        }
        if n1 == 0 {
            return Err(Error::EmptyGroup { group: 1 });
        }
        let p1 = n1 as f64 / (n0 + n1) as f64;
        Ok(Self { p0: 1.0 - p1, p1 })
    }

    pub fn of(&self, a: bool) -> f64 {
        if a {
            self.p1
        } else {
            self.p0
        }
    }
}

/// Marginals of a raw sensitive vector.
pub fn group_marginals(sensitive: &[bool]) -> Result<GroupMarginals> {
    let n1 = sensitive.iter().filter(|&&a| a).count();
    GroupMarginals::from_counts(sensitive.len() - n1, n1)
}

impl Dataset {
    pub fn marginals(&self) -> GroupMarginals {
        let (n0, n1) = self.group_counts();
        // both groups are non-empty by construction
        GroupMarginals::from_counts(n0, n1).expect("dataset groups are non-empty")
    }
}

/// `1/p1` for group 1, `-1/p0` for group 0.
pub fn lambda_weight(a: bool, m: &GroupMarginals) -> f64 {
    if a {
        1.0 / m.p1
    } else {
        -1.0 / m.p0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bools(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&a| a == 1).collect()
    }

    #[test]
    fn marginals_balanced() {
        let m = group_marginals(&bools(&[1, 1, 0, 0])).unwrap();
        assert_eq!(m.p0, 0.5);
        assert_eq!(m.p1, 0.5);
    }

    #[test]
    fn marginals_unbalanced() {
        let m = group_marginals(&bools(&[1, 0, 0, 0, 0])).unwrap();
        assert!((m.p0 - 0.8).abs() < 1e-15);
        assert!((m.p1 - 0.2).abs() < 1e-15);
        assert_eq!(m.p0 + m.p1, 1.0);
    }

    #[test]
    fn marginals_empty_group() {
        assert!(matches!(
            group_marginals(&bools(&[0, 0, 0])),
            Err(Error::EmptyGroup { group: 1 })
        ));
    }

    #[test]
    fn lambda_values() {
        let m = GroupMarginals { p0: 0.5, p1: 0.5 };
        assert_eq!(lambda_weight(true, &m), 2.0);
        let m = GroupMarginals { p0: 0.8, p1: 0.2 };
        assert_eq!(lambda_weight(false, &m), -1.25);
    }

    #[test]
    fn lambda_sums_to_zero_with_own_marginals() {
        let a = bools(&[1, 0, 0, 1, 0, 0, 0]);
        let m = group_marginals(&a).unwrap();
        let s: f64 = a.iter().map(|&ai| lambda_weight(ai, &m)).sum();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_datasets() {
        assert!(matches!(
            Dataset::from_column(&[1.0], &[true], &[0.0]),
            Err(Error::TooFewRows(1))
        ));
        assert!(matches!(
            Dataset::from_column(&[1.0, f64::NAN], &[true, false], &[0.0, 0.0]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            Dataset::from_column(&[1.0, 2.0], &[true, true], &[0.0, 0.0]),
            Err(Error::EmptyGroup { group: 0 })
        ));
    }
}
