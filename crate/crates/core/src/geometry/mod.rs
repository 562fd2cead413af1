//! Exact representations of compact sets on the line and in the plane.
//!
//! Membership is decided on the defining inequalities of each primitive.
//! Distances are exact (up to floating point) for the shapes the
//! constructions produce; anything else reports
//! [`GeometryError::UnsupportedShape`] and callers fall back to the grid
//! pipeline in [`crate::engine`].

mod csg;
mod oracle;
mod point;
mod primitive;
mod set1d;

use thiserror::Error;

pub use csg::Geometry2D;
pub use oracle::{DistanceOracle, MEMBERSHIP_TOL};
pub use point::{Point2, Rect};
pub use primitive::{closest_on_segment, Piece, Primitive2D};
pub use set1d::Set1D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    Invalid(String),
    #[error("unsupported shape for exact evaluation: {0}")]
    UnsupportedShape(String),
}

/// Operations shared by the line and plane representations.
pub trait CompactSet {
    type Point: Copy;

    fn contains(&self, x: Self::Point) -> bool;

    /// `d(x, A)`.
    fn exact_distance(&self, x: Self::Point) -> Result<f64, GeometryError>;

    fn bounding_box(&self) -> Rect;

    /// Upper bound on `diam(A)`: the diagonal of the bounding box.
    fn diameter_bound(&self) -> f64 {
        self.bounding_box().diagonal()
    }
}

impl CompactSet for Set1D {
    type Point = f64;

    fn contains(&self, x: f64) -> bool {
        Set1D::contains(self, x)
    }

    fn exact_distance(&self, x: f64) -> Result<f64, GeometryError> {
        Ok(self.distance(x))
    }

    fn bounding_box(&self) -> Rect {
        Rect::new(self.min(), self.max(), 0.0, 0.0)
    }
}

impl CompactSet for Geometry2D {
    type Point = Point2;

    fn contains(&self, x: Point2) -> bool {
        Geometry2D::contains(self, x)
    }

    fn exact_distance(&self, x: Point2) -> Result<f64, GeometryError> {
        if Geometry2D::contains(self, x) {
            return Ok(0.0);
        }
        Ok(DistanceOracle::compile(self)?.distance(x))
    }

    fn bounding_box(&self) -> Rect {
        Geometry2D::bounding_box(self)
    }
}
