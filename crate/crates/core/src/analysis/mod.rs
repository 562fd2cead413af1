//! Derivative calculus on sampled volume functions, critical-point
//! classification of level sets, and a flat-metric proxy for weak
//! convergence of surface measures.

mod critical;
mod derivatives;
mod kneser;
mod nondiff;
mod weak;

use thiserror::Error;

use crate::engine::EngineError;
use crate::geometry::GeometryError;

pub use critical::{
    characterize_differentiability, hull_distance, is_critical, is_critical_record,
    scan_critical_values, CriticalValues, CriticalityReport, ScanScope, ValueCluster, Verdict,
};
pub use derivatives::{
    jump_profile, one_sided_derivatives, DerivativeEstimate, JumpEntry, WindowSpec,
};
pub use kneser::{
    derivative_continuity_check, kneser_check, stacho_check, ContinuityReport, ContinuityRow,
    KneserReport, StachoReport,
};
pub use nondiff::{
    default_threshold, detect_nondiff, detect_nondiff_exact_1d, noise_floor, volume_noise,
    DetectedJump, NondiffReport,
};
pub use weak::{flat_distance, weak_convergence_report, ConvergenceReport, ConvergenceRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("empty surface cloud")]
    EmptyCloud,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
