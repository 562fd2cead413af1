//! Explicit compact sets whose parallel volume fails to be differentiable
//! exactly at a prescribed set of radii.

mod boxes;
mod dim1;
mod dim2;
mod full;
mod packing;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fractal::FractalError;
use crate::geometry::GeometryError;

pub use boxes::{construct_boxes_dimd, BoxConstruction, BoxEntry};
pub use dim1::{construct_dim1, predicted_nondiff_1d};
pub use dim2::{construct_dim2_eps, ConstructionMetadata2D, RadiusEntry};
pub use full::{
    construct_dim2_full, decompose_tail, FullConstruction, PieceConstruction, TailDecomposition,
    TailPiece,
};
pub use packing::{pack_rectangles, Packing};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error("target radii set is empty")]
    EmptyTarget,
    #[error("summability violated: {0}")]
    SummabilityViolated(String),
    #[error("condition violated: {0}")]
    ConditionViolated(String),
    #[error("separation check failed: {0}")]
    SeparationCheckFailed(String),
    #[error("decomposition bound violated: {0}")]
    BoundViolated(String),
    #[error("packing overflow: {0}")]
    PackingOverflow(String),
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// How the segment lengths `γ_s` are assigned to the radii, enumerated in
/// decreasing order `s_0 > s_1 > …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaPolicy {
    /// `γ_{s_k} = γ₀ 2^{-k}`; `γ₀` defaults to `0.05 · min N`.
    Geometric { gamma0: Option<f64> },
    /// One value per listed radius, largest radius first.
    Explicit { gammas: Vec<f64> },
}

impl Default for GammaPolicy {
    fn default() -> Self {
        GammaPolicy::Geometric { gamma0: None }
    }
}

impl GammaPolicy {
    pub fn geometric(gamma0: f64) -> Self {
        GammaPolicy::Geometric {
            gamma0: Some(gamma0),
        }
    }

    /// `γ₀` for a list whose smallest radius is `min_s`.
    pub fn gamma0(&self, min_s: f64) -> f64 {
        match self {
            GammaPolicy::Geometric { gamma0 } => gamma0.unwrap_or(0.05 * min_s),
            GammaPolicy::Explicit { gammas } => gammas.first().copied().unwrap_or(0.0),
        }
    }

    /// Segment lengths for `count` radii sorted in decreasing order.
    pub fn gammas(&self, count: usize, min_s: f64) -> Result<Vec<f64>, ConstructionError> {
        let g = match self {
            GammaPolicy::Geometric { .. } => {
                let g0 = self.gamma0(min_s);
                (0..count)
                    .map(|k| g0 * 0.5f64.powi(k as i32))
                    .collect::<Vec<_>>()
            }
            GammaPolicy::Explicit { gammas } => {
                if gammas.len() != count {
                    return Err(ConstructionError::ConditionViolated(format!(
                        "{} gammas given for {count} radii",
                        gammas.len()
                    )));
                }
                gammas.clone()
            }
        };
        if g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ConstructionError::ConditionViolated(
                "segment lengths must be positive".into(),
            ));
        }
        Ok(g)
    }
}
