//! Differentially private online false discovery rate control.
//!
//! Streams of p-values are tested one at a time. [`procedures::Paprika`]
//! answers each test under `(epsilon, delta)`-differential privacy with
//! respect to the database behind the p-values; the non-private SAFFRON,
//! LORD and alpha-investing rules and a naive Laplace-perturbed SAFFRON are
//! included as baselines. The [`harness`] module replicates experiments over
//! synthetic streams and writes CSV summaries and SVG plots.

pub mod error;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod noise;
pub mod procedures;

pub use error::{Error, Result};
pub use models::{HypothesisStream, Model};
pub use noise::{PrivacyBudget, UniformSource};
pub use procedures::{run_procedure, ProcedureConfig, ProcedureId, StepRecord};
