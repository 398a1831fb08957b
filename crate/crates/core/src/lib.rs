//! Feature selection for an algorithm that assists a human predictor who
//! learns from the features they are shown.
//!
//! The human predicts a linear outcome `y = c + Σ a_i x_i` using their own
//! coefficients `h_i` for the features the algorithm reveals, and nothing for
//! the rest. The crate covers:
//!
//! - [`model`]: the problem instance, per-subset MSE and static feature values.
//! - [`dynamics`]: φ-convergent learning dynamics and their discounted sums.
//! - [`planner`]: optimal static subsets and optimal stationary sequences.
//! - [`tradeoff`]: switching points, δ sweeps, subset enumeration and
//!   efficiency comparisons.
//! - [`oracle`]: brute-force sequence evaluation used to check the planners.
//! - [`misspec`]: error margins and value-gap bounds under misspecification.
//!
//! Feature indices are 0-based everywhere in the library.

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod misspec;
pub mod model;
pub mod oracle;
pub mod planner;
pub mod tradeoff;

mod numeric;

pub use dynamics::{Efficiency, LearningDynamic, MarginalProfile};
pub use error::{Error, Result};
pub use exec::Parallelism;
pub use model::{FeatureSubset, ProblemInstance, StandardizationSpec};
pub use planner::{FeatureValueReport, Plan};
