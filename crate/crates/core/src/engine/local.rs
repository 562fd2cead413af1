use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::SurfaceCloud;
use super::field::DistanceField;
use super::EngineError;
use crate::geometry::Point2;

/// `{p : normal · p ≥ offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: Point2,
    pub offset: f64,
}

impl HalfPlane {
    pub fn contains(&self, p: Point2) -> bool {
        self.normal.dot(p) >= self.offset
    }
}

/// Condition on the pair (nearest point, direction) of a point of `A_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    All,
    /// Nearest point in the half-plane.
    BaseIn {
        half_plane: HalfPlane,
    },
    /// Nearest point outside the half-plane.
    BaseNotIn {
        half_plane: HalfPlane,
    },
    /// Nearest point within `tol` of one of `points`.
    BaseNear {
        points: Vec<Point2>,
        tol: f64,
    },
    /// Direction with positive second coordinate.
    DirectionUp,
    /// Direction with nonpositive second coordinate.
    DirectionNotUp,
}

impl Predicate {
    pub fn accepts(&self, foot: Point2, direction: Point2) -> bool {
        match self {
            Predicate::All => true,
            Predicate::BaseIn { half_plane } => half_plane.contains(foot),
            Predicate::BaseNotIn { half_plane } => !half_plane.contains(foot),
            Predicate::BaseNear { points, tol } => points.iter().any(|p| p.dist(foot) <= *tol),
            Predicate::DirectionUp => direction.y > 0.0,
            Predicate::DirectionNotUp => direction.y <= 0.0,
        }
    }

    /// The complementary predicate, where one is expressible.
    pub fn complement(&self) -> Option<Predicate> {
        match self {
            Predicate::BaseIn { half_plane } => Some(Predicate::BaseNotIn {
                half_plane: *half_plane,
            }),
            Predicate::BaseNotIn { half_plane } => Some(Predicate::BaseIn {
                half_plane: *half_plane,
            }),
            Predicate::DirectionUp => Some(Predicate::DirectionNotUp),
            Predicate::DirectionNotUp => Some(Predicate::DirectionUp),
            _ => None,
        }
    }
}

/// `h² · #{cells : d < r and the cell's nearest point passes}` with the
/// same straddle error bound as the volume function. Cells of `A` itself
/// are their own nearest point with a zero direction.
pub fn local_volume(
    field: &DistanceField,
    r: f64,
    predicate: &Predicate,
) -> Result<(f64, f64), EngineError> {
    field.check_band(r)?;
    let g = field.grid;
    let h = g.h;
    let (count, straddle) = (0..g.ny)
        .into_par_iter()
        .map(|j| {
            let (mut c, mut s) = (0u64, 0u64);
            for i in 0..g.nx {
                let v = field.value(i, j);
                let n = field.normal(i, j);
                let half = 0.5 * (n.x.abs() + n.y.abs()) * h;
                if (v - r).abs() < half {
                    s += 1;
                }
                if v < r && predicate.accepts(field.foot(i, j), n) {
                    c += 1;
                }
            }
            (c, s)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((h * h * count as f64, h * h * straddle as f64))
}

/// Points of a projected cloud whose (first) nearest point and direction
/// pass the predicate.
pub fn local_surface(
    cloud: &SurfaceCloud,
    predicate: &Predicate,
) -> Result<SurfaceCloud, EngineError> {
    if cloud.points.iter().any(|p| p.projection.is_none()) {
        return Err(EngineError::InvalidInput(
            "surface cloud carries no projections".into(),
        ));
    }
    Ok(cloud.filtered(|p| {
        let pr = p.projection.as_ref().expect("checked above");
        let dir = pr.directions.first().copied().unwrap_or(Point2::ORIGIN);
        predicate.accepts(pr.nearest[0], dir)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{extract_level_set, volume_function, Projector, RadiiGrid, VolumeMode};
    use crate::geometry::{Geometry2D, Primitive2D};
    use std::f64::consts::PI;

    fn pair() -> Geometry2D {
        Primitive2D::points(vec![Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)]).into()
    }

    #[test]
    fn whole_plane_is_the_volume() {
        let g = pair();
        let f = DistanceField::from_geometry(&g, 1.0, 0.01, "pair").unwrap();
        let (v, err) = local_volume(&f, 0.5, &Predicate::All).unwrap();
        let vs = volume_function(
            &f,
            &RadiiGrid::uniform(0.5, 0.5, 0.005).unwrap(),
            VolumeMode::Coverage,
        )
        .unwrap();
        assert!((v - vs.volume[0]).abs() <= err);
        assert!((v - 2.0 * PI * 0.25).abs() <= err);
    }

    #[test]
    fn one_point_gets_half() {
        let g = pair();
        let f = DistanceField::from_geometry(&g, 1.0, 0.01, "pair").unwrap();
        let b = Predicate::BaseNear {
            points: vec![Point2::new(-1.0, 0.0)],
            tol: 1e-9,
        };
        let (v, err) = local_volume(&f, 0.5, &b).unwrap();
        assert!((v - PI * 0.25).abs() <= err, "{v}");
    }

    #[test]
    fn segment_collar_splits_by_direction() {
        let g: Geometry2D = Primitive2D::rectangle(-1.0, 1.0, 0.0, 1e-9).into();
        let f = DistanceField::from_geometry(&g, 0.6, 0.01, "seg").unwrap();
        let (up, err) = local_volume(&f, 0.3, &Predicate::DirectionUp).unwrap();
        // upper half collar: 2·0.3 plus a quarter disk at each end
        let want = 2.0 * 0.3 + 0.5 * PI * 0.09;
        assert!((up - want).abs() <= err + 1e-6, "{up} vs {want}");

        let c = extract_level_set(&f, 0.3)
            .unwrap()
            .with_projections(&Projector::for_geometry(&g, &f))
            .unwrap();
        let a = local_surface(&c, &Predicate::DirectionUp)
            .unwrap()
            .total_weight();
        let b = local_surface(&c, &Predicate::DirectionNotUp)
            .unwrap()
            .total_weight();
        assert!((a + b - c.total_weight()).abs() < 1e-9);
        assert!((a - b).abs() < 0.02 * c.total_weight());
    }
}
