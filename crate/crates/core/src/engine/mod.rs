//! Grid engine: distance fields, volume functions, level sets, metric
//! projections and localized measures of parallel sets.
//!
//! Cell centers sit at integer multiples of the spacing `h`, so sets whose
//! features lie on the lattice (axis-aligned segments at multiples of `h`)
//! are sampled exactly. Distances come from the exact oracle whenever the
//! geometry supports one, and from a Euclidean distance transform of the
//! rasterized set otherwise. Level comparisons are strict (`d < r`),
//! mirroring open parallel sets.

mod contour;
mod edt;
mod exact;
mod field;
mod io;
mod local;
mod projection;
mod volume;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use contour::{extract_level_set, SurfaceCloud, SurfacePoint};
pub use edt::{distance_transform, rasterize_membership, Bitmap};
pub use exact::{exact_volume_oracle, ExactVolume};
pub use field::{max_cells, DistanceField, FieldSource, Grid};
pub use io::{fmt17, read_grid_dump, write_contour_csv, write_grid_dump, write_volume_csv};
pub use local::{local_surface, local_volume, HalfPlane, Predicate};
pub use projection::{project, ProjectionRecord, Projector, ANALYTIC_TOL_MULTI};
pub use volume::{
    volume_discrepancy, volume_from_exact, volume_function, RadiiGrid, VolumeMode, VolumeSamples,
    VolumeSource,
};

/// Environment variable overriding the cell budget of a single grid.
pub const MAX_CELLS_ENV: &str = "PARVOL_MAX_CELLS";
/// Default cell budget (about 1.3 GB for values and normals).
pub const DEFAULT_MAX_CELLS: usize = 80_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("grid of {cells} cells exceeds the budget of {budget}")]
    GridTooLarge { cells: usize, budget: usize },
    #[error("the sampled set is empty")]
    EmptySet,
    #[error("radius {r} outside the trusted band [{lo}, {hi}]")]
    RadiusOutOfBand { r: f64, lo: f64, hi: f64 },
    #[error("unknown exact oracle kind: {0}")]
    UnknownKind(String),
    #[error("empty level set at r = {0}")]
    EmptyLevelSet(f64),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
