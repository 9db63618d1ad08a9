//! Segment-based global localization.
//!
//! Landmark maps are built from per-frame object detections
//! ([`mask_pipeline`], [`mapping`]), aligned across sessions by finding the
//! densest clique of mutually distance-consistent associations
//! ([`association`]), and registered with a closed-form rigid transform
//! ([`geometry`], [`localization`]). [`dataset`] reads and writes traverse
//! and map tables and generates seeded synthetic scenes.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod dataset;
pub mod geometry;
pub mod localization;
pub mod mapping;
pub mod mask_pipeline;

pub use association::{AssociationConfig, CandidateAssociation, CliqueSolution, ConsistencyGraph};
pub use geometry::{CorrespondenceSet, Point3, RigidTransform};
pub use localization::{localize, EvaluationConfig, EvaluationRow, LocalizationError, LocalizationResult};
pub use mapping::{Landmark, MergeConfig, ObjectMap};
