//! Quality-diversity search whose behavioural descriptors are learned online.
//!
//! An unstructured archive is filled by curiosity-driven mutation while a
//! dimensionality-reduction model (PCA or a small convolutional
//! auto-encoder), periodically refitted on the archive's own sensory data,
//! supplies the low-dimensional descriptors. The crate also ships the two
//! simulated tasks, hand-coded/genotype/CVT baselines, evaluation metrics
//! and the experiment harness used by the `aurora` CLI.

pub mod config;
pub mod cvt;
pub mod descriptor;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod par;
pub mod qd;
pub mod tasks;

pub use error::{Error, Result};
