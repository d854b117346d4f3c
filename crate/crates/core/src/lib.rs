//! Wasserstein projection tests for expectation-based fairness of
//! regression models, with optimal data repair.
//!
//! The statistic `T` is the smallest squared transport cost that moves the
//! empirical distribution onto one satisfying the fairness constraint.
//! Under the null `N T / theta` is asymptotically chi-square with one
//! degree of freedom.

pub mod asymptotics;
pub mod baseline;
pub mod cost;
pub mod criterion;
pub mod dataset;
pub mod error;
pub mod ingest;
pub mod model;
pub mod models;
pub mod par;
pub mod perturb;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod testing;

pub use asymptotics::{p_value, ThetaEstimate, ThetaForm};
pub use baseline::{permutation_test, PermutationConfig};
pub use cost::CostParams;
pub use criterion::{empirical_violation, phi, Constraint, Discrepancy, ErrorFn, FairnessCriterion, Mode};
pub use dataset::{group_marginals, lambda_weight, Dataset, GroupMarginals};
pub use error::{Error, Result};
pub use model::{FnRegressor, LinearModel, Regressor};
pub use models::{fit, relative_mae, FitConfig, FitMethod};
pub use perturb::{perturb, PerturbationResult};
pub use solver::{test_statistic, Method, SolverOptions};
pub use testing::{run_test, TestConfig, TestResult};
