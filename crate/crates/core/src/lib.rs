//! Model-free fault-tolerance auditing for multi-sensor time series.
//!
//! The pipeline runs in two stages over labeled multi-channel recordings:
//!
//! 1. **Task complexity** ([`separability`]): how separable each pair of
//!    classes is in feature space, before any model is trained.
//! 2. **Sensor criticality** ([`ablation`]): how far each class's feature
//!    distribution moves when a sensor is nullified.
//!
//! [`oracle`] trains small pairwise classifiers to check that the stage-one
//! predictions hold for an actual learner.

pub mod ablation;
pub mod error;
pub mod features;
pub mod ingest;
pub mod oracle;
pub mod seed;
pub mod separability;

pub use error::{AuditError, ErrorFamily, Result};
