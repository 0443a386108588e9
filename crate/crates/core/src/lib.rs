//! Distributed binary hypothesis testing by sequential, biased
//! decision-makers.
//!
//! Each agent accumulates a weighted sum of log-likelihood ratios over a
//! random number of observations and thresholds it; a fusion center
//! combines the binary decisions with Chair-Varshney weights, either
//! marginal or conditioned on each agent's realized stopping time. Closed
//! forms live in [`analytics`]; [`harness`] runs the seeded Monte Carlo
//! experiments that check them.

pub mod analytics;
pub mod belief;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod observation;
pub mod stopping;

pub use belief::{decide, run_trial, update, Decision, HumanAgent, TrialRecord};
pub use error::{Error, Result};
pub use observation::{GaussianShiftModel, Hypothesis, LlrMoments, ObservationModel};
pub use stopping::{StoppingKind, StoppingTime, ZeroHandling};
