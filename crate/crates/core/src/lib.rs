//! Numerical laboratory for dilatation structures on metric spaces.
//!
//! A dilatation structure is a metric space with scale-indexed contractions
//! around every point. This crate ships concrete instances (Euclidean,
//! rotating, Heisenberg), estimates the `ε → 0` limits that define their
//! tangent spaces, and builds curve calculus, differentiation and the
//! "looking down" relation between two structures on top of that.

pub mod calculus;
pub mod config;
pub mod curves;
pub mod dilatation;
pub mod error;
pub mod limits;
pub mod lookdown;
pub mod point;
pub mod report;
pub mod sampling;
pub mod structures;
pub mod suite;
pub mod tangent;

pub use dilatation::{audit_axioms, dilate, AuditConfig, AxiomReport, DilatationStructure, Scale, SharedStructure};
pub use error::{Error, Result};
pub use limits::{estimate_limit, EpsSchedule, LimitEstimate, LimitOptions, LimitStatus};
pub use point::Point;
pub use report::{CheckRecord, CheckStatus, Report, Witness};
pub use structures::make_structure;
