//! MAP model selection for Gaussian linear regression.
//!
//! A model is a subset of the `p` candidate predictors. Placing a prior
//! `pi(k)` on the model size, equal weight on the models of each size and a
//! g-prior on the coefficients, the posterior mode is the minimizer of
//!
//! ```text
//! ||y - X b_M||^2 + Pen(|M|),
//! Pen(k) = 2 s2 (1 + 1/g) ln{ C(p,k) / pi(k) * (1+g)^(k/2) }
//! ```
//!
//! where the binomial coefficient is dropped for the saturated size
//! `k = rank(X)`. The crate is organized as:
//!
//! * [`linalg`]: design matrices, subset least squares, projections.
//! * [`prior`]: model-size priors and the induced penalty schedule.
//! * [`select`]: exact MAP selection by enumeration.
//! * [`ssvs`]: the componentwise Gibbs sampler over inclusion indicators.
//! * [`designs`]: orthonormal, equicorrelated and Gaussian test designs.
//! * [`diagnostics`]: sparse eigenvalues and the multicollinearity functionals.
//! * [`risk`]: Monte Carlo risk estimation against the oracle benchmark.
//!
//! Column indices are zero-based throughout.

pub mod designs;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod prior;
pub mod risk;
pub mod seed;
pub mod select;
pub mod ssvs;

pub use error::{Error, Result};
pub use linalg::{DesignMatrix, FitResult, ModelIndicator, ResponseVector};
pub use prior::{HyperParams, PenaltySchedule, PriorSpec};
pub use select::SelectionResult;
