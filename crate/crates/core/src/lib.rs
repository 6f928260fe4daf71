//! Coarse minor toolkit: fat minor models, theta detectors, layered graph
//! partitions with bounded bags, exact small-pattern minor checking, and an
//! additive-distortion estimator for embedding graphs into K_{2,t}-minor-free
//! targets.
//!
//! Everything here is certificate-driven: constructions emit witnesses
//! (models, partitions, quasi-isometry maps) that independent verifiers in
//! this same crate re-check from first principles.

pub mod distortion;
pub mod error;
pub mod generate;
pub mod graph;
pub mod merging;
pub mod minor;
pub mod model;
pub mod partition;
pub mod pattern;
pub mod theta;

pub use distortion::{
    approximate_distortion, star_augment, Attempt, AttemptOutcome, DistortionOptions,
    DistortionReport, ProfilePolicy,
};
pub use error::{Error, Result};
pub use graph::{Graph, INF};
pub use merging::{merge_partition, verify_merge, MergeProblem, MergeResult};
pub use minor::{has_minor, minor_oracle, MinorAnswer, MinorOutcome, MinorQuery};
pub use model::{subdivide_model, verify_fat_model, FatModel, FatnessReport};
pub use partition::{
    build_partition, compute_constants, custom_constants, extract_fat_model, quasi_isometry,
    scaled_constants, verify_partition, Bag, BuildOutcome, BuildResult, ConstantsMode,
    ConstantsProfile, LayeredPartition, PartitionReport, QIReport,
};
pub use pattern::PatternGraph;
pub use theta::{
    audit_attachments, audit_boundary, find_dispersed_tuple, theta_from_dispersion, AuditOutcome,
    DispersionQuery,
};
