//! Likelihood-projection testing for multivariate normality.
//!
//! The test residualizes data with the symmetric inverse square root of the
//! sample covariance, maps squared residual norms through the chi-square CDF,
//! and combines a data-driven smooth uniformity statistic on those projected
//! values with data-driven rank independence statistics over residual
//! component pairs. Critical values come from Monte Carlo tabulation.
//!
//! Modules:
//! - [`linalg`]: small symmetric linear algebra and residualization
//! - [`special`]: chi-square CDF, normal CDF/quantile, Legendre polynomials
//! - [`samplers`]: seedable null and alternative-design generators
//! - [`neyman`]: data-driven smooth uniformity statistic
//! - [`rankdep`]: data-driven rank independence statistic
//! - [`projtest`]: the combined test, decisions, Monte Carlo p-values
//! - [`baselines`]: Mardia and Henze-Zirkler comparison tests
//! - [`harness`]: critical-value tabulation and simulation studies
//! - [`goftest`]: Kolmogorov-Smirnov helpers for the studies and tests

pub mod baselines;
pub mod error;
pub mod goftest;
pub mod harness;
pub mod linalg;
pub mod neyman;
pub mod projtest;
pub mod rankdep;
pub mod samplers;
pub mod special;

pub use error::{Error, Result};
pub use harness::{CriticalTable, HzCalibration, StudyResult, TestId};
pub use linalg::{Dataset, SquareSymMatrix};
pub use neyman::{PenaltyMode, SelectionRule, SmoothResult};
pub use projtest::{Decision, TestReport};
pub use samplers::{DesignId, RngStream};
