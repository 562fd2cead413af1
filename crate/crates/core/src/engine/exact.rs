use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::geometry::{Geometry2D, GeometryError, Point2, Primitive2D, Set1D};

/// Families with a closed-form parallel volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactVolume {
    /// Finite union of points and intervals on the line.
    IntervalUnion1d { set: Set1D },
    /// Boundary of `[0, 3s] × [0, 2s]`.
    RectBoundary { s: f64 },
    /// `{(-D/2, 0), (D/2, 0)}`.
    TwoPoints { distance: f64 },
    /// Closed disk centered at the origin.
    Disk { radius: f64 },
}

impl ExactVolume {
    /// Parses `kind` with positional parameters (`interval_union_1d` takes
    /// the sorted points of a finite set).
    pub fn from_kind(kind: &str, params: &[f64]) -> Result<Self, EngineError> {
        let one = || {
            params
                .first()
                .copied()
                .filter(|v| *v > 0.0 && v.is_finite())
                .ok_or_else(|| {
                    EngineError::InvalidInput(format!("{kind} needs one positive parameter"))
                })
        };
        Ok(match kind {
            "interval_union_1d" => ExactVolume::IntervalUnion1d {
                set: Set1D::from_points(params.to_vec())?,
            },
            "rect_boundary" => ExactVolume::RectBoundary { s: one()? },
            "two_points" => ExactVolume::TwoPoints { distance: one()? },
            "disk" => ExactVolume::Disk { radius: one()? },
            other => return Err(EngineError::UnknownKind(other.to_string())),
        })
    }

    pub fn dimension(&self) -> u32 {
        match self {
            ExactVolume::IntervalUnion1d { .. } => 1,
            _ => 2,
        }
    }

    /// `V(r)` for `r > 0`.
    pub fn value(&self, r: f64) -> f64 {
        match self {
            ExactVolume::IntervalUnion1d { set } => set.parallel_volume(r),
            ExactVolume::RectBoundary { s } => {
                let s = *s;
                let inner = (3.0 * s - 2.0 * r).max(0.0) * (2.0 * s - 2.0 * r).max(0.0);
                6.0 * s * s - inner + 10.0 * s * r + PI * r * r
            }
            ExactVolume::TwoPoints { distance } => {
                let half = 0.5 * distance;
                let lens = if r > half {
                    2.0 * r * r * (half / r).acos()
                        - half * (4.0 * r * r - distance * distance).sqrt()
                } else {
                    0.0
                };
                2.0 * PI * r * r - lens
            }
            ExactVolume::Disk { radius } => PI * (radius + r).powi(2),
        }
    }

    /// The planar set itself, for comparisons with the grid pipeline.
    pub fn geometry(&self) -> Result<Geometry2D, EngineError> {
        match self {
            ExactVolume::IntervalUnion1d { .. } => Err(EngineError::UnsupportedDimension(
                "interval unions live on the line".into(),
            )),
            ExactVolume::RectBoundary { s } => {
                Ok(Geometry2D::rect_boundary(0.0, 3.0 * s, 0.0, 2.0 * s)?)
            }
            ExactVolume::TwoPoints { distance } => {
                let h = 0.5 * distance;
                Ok(Primitive2D::points(vec![Point2::new(-h, 0.0), Point2::new(h, 0.0)]).into())
            }
            ExactVolume::Disk { radius } => {
                if !(*radius > 0.0) {
                    return Err(
                        GeometryError::Invalid("disk radius must be positive".into()).into(),
                    );
                }
                Ok(Primitive2D::disk(Point2::ORIGIN, *radius).into())
            }
        }
    }
}

/// Closed-form `V(r)` for a named family.
pub fn exact_volume_oracle(kind: &str, params: &[f64], r: f64) -> Result<f64, EngineError> {
    Ok(ExactVolume::from_kind(kind, params)?.value(r))
}
