//! Online learning with pairwise loss functions.
//!
//! The crate implements online AUC maximization, projected-gradient bipartite
//! ranking and online Mahalanobis metric learning, together with the sample
//! statistics, online-to-batch model selection rule and closed-form bound
//! calculators that make their guarantees checkable on concrete streams.
//!
//! Layout:
//! - [`types`]: examples, hypotheses and run traces
//! - [`losses`]: pairwise loss functions with range and Lipschitz guarantees
//! - [`buffer`]: unbounded / FIFO / reservoir history buffers
//! - [`learners`]: the online update rules and projection operators
//! - [`selection`]: sample statistics, penalized suffix risk and hypothesis selection
//! - [`bounds`]: mistake / regret / risk-tail bound calculators
//! - [`eval`]: AUC, Monte Carlo risk and the batch comparator oracle
//! - [`datagen`]: seeded synthetic stream generators and CSV I/O

pub mod bounds;
pub mod buffer;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod learners;
pub mod losses;
pub mod selection;
pub mod types;

mod util;

pub use error::{Error, Result};
pub use types::{Example, Hypothesis, LinearScorer, MetricMatrix, RunTrace};
