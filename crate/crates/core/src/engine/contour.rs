use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::DistanceField;
use super::projection::{ProjectionRecord, Projector};
use super::EngineError;
use crate::geometry::Point2;

/// One polyline segment of the level set, represented by its midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: Point2,
    /// Segment length.
    pub weight: f64,
    pub ends: (Point2, Point2),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionRecord>,
}

/// Weighted sample of `H¹` restricted to `∂A_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCloud {
    pub r: f64,
    pub h: f64,
    pub points: Vec<SurfacePoint>,
}

impl SurfaceCloud {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Projects every point; the cloud is rebuilt, not mutated in place.
    pub fn with_projections(&self, projector: &Projector) -> Result<SurfaceCloud, EngineError> {
        let points = self
            .points
            .par_iter()
            .map(|p| {
                Ok(SurfacePoint {
                    projection: Some(projector.project(p.x)?),
                    ..p.clone()
                })
            })
            .collect::<Result<Vec<_>, EngineError>>()?;
        Ok(SurfaceCloud {
            r: self.r,
            h: self.h,
            points,
        })
    }

    /// Sub-cloud of points accepted by `keep`.
    pub fn filtered(&self, keep: impl Fn(&SurfacePoint) -> bool) -> SurfaceCloud {
        SurfaceCloud {
            r: self.r,
            h: self.h,
            points: self.points.iter().filter(|p| keep(p)).cloned().collect(),
        }
    }
}

/// Marching squares on the cell-center lattice for the level `d = r`, with
/// corners classified by `d < r` and crossings placed by linear
/// interpolation. Segments emitted twice (a ridge of the field sitting
/// exactly on a lattice edge at value `r`) are kept once, so the weight of
/// such a ridge counts its length, not both of its sides.
pub fn extract_level_set(field: &DistanceField, r: f64) -> Result<SurfaceCloud, EngineError> {
    field.check_band(r)?;
    let g = field.grid;
    let rows: Vec<Vec<(Point2, Point2)>> = (0..g.ny - 1)
        .into_par_iter()
        .map(|j| {
            let mut segs = Vec::new();
            for i in 0..g.nx - 1 {
                square_segments(field, i, j, r, &mut segs);
            }
            segs
        })
        .collect();
    let quantum = 1e-7 * g.h;
    let key = |p: Point2| {
        (
            (p.x / quantum).round() as i64,
            (p.y / quantum).round() as i64,
        )
    };
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for (a, b) in rows.into_iter().flatten() {
        let w = a.dist(b);
        if w <= 0.0 {
            continue;
        }
        let (ka, kb) = (key(a), key(b));
        if !seen.insert(if ka <= kb { (ka, kb) } else { (kb, ka) }) {
            continue;
        }
        points.push(SurfacePoint {
            x: (a + b) * 0.5,
            weight: w,
            ends: (a, b),
            projection: None,
        });
    }
    if points.is_empty() {
        return Err(EngineError::EmptyLevelSet(r));
    }
    Ok(SurfaceCloud { r, h: g.h, points })
}

fn square_segments(
    field: &DistanceField,
    i: usize,
    j: usize,
    r: f64,
    out: &mut Vec<(Point2, Point2)>,
) {
    let g = &field.grid;
    // corners counter-clockwise from lower left
    let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
    let v = c.map(|(a, b)| field.value(a, b));
    let inside = v.map(|x| x < r);
    let case = inside
        .iter()
        .enumerate()
        .fold(0usize, |acc, (k, &b)| acc | ((b as usize) << k));
    if case == 0 || case == 15 {
        return;
    }
    let p = c.map(|(a, b)| g.center(a, b));
    // crossing on edge k, between corner k and corner k+1
    let cross = |k: usize| {
        let (a, b) = (k, (k + 1) % 4);
        let t = (r - v[a]) / (v[b] - v[a]);
        p[a] + (p[b] - p[a]) * t
    };
    let mut emit = |e1: usize, e2: usize| out.push((cross(e1), cross(e2)));
    match case {
        1 | 14 => emit(3, 0),
        2 | 13 => emit(0, 1),
        3 | 12 => emit(3, 1),
        4 | 11 => emit(1, 2),
        6 | 9 => emit(0, 2),
        7 | 8 => emit(2, 3),
        5 | 10 => {
            // saddle: decide the center by the mean value
            let center_inside = (v.iter().sum::<f64>() * 0.25) < r;
            let corner0_inside = case == 5;
            if center_inside == corner0_inside {
                emit(0, 1);
                emit(2, 3);
            } else {
                emit(3, 0);
                emit(1, 2);
            }
        }
        _ => unreachable!("cases 0 and 15 return early"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DistanceOracle, Geometry2D, Primitive2D};
    use std::f64::consts::PI;

    #[test]
    fn circle_length() {
        let g: Geometry2D = Primitive2D::disk(Point2::ORIGIN, 1.0).into();
        let f = DistanceField::from_geometry(&g, 1.0, 0.01, "disk").unwrap();
        let c = extract_level_set(&f, 0.5).unwrap();
        assert!((c.total_weight() - 3.0 * PI).abs() < 0.02 * 3.0 * PI);
        let oracle = DistanceOracle::compile(&g).unwrap();
        for p in &c.points {
            assert!(p.weight > 0.0);
            assert!((oracle.distance(p.x) - 0.5).abs() <= 0.01);
        }
        assert!(matches!(
            extract_level_set(&f, 1.5),
            Err(EngineError::RadiusOutOfBand { .. })
        ));
    }

    #[test]
    fn rect_boundary_inner_and_outer() {
        let g = Geometry2D::rect_boundary(0.0, 3.0, 0.0, 2.0).unwrap();
        let f = DistanceField::from_geometry(&g, 0.6, 0.005, "rb").unwrap();
        let c = extract_level_set(&f, 0.25).unwrap();
        let want = (10.0 + 2.0 * PI * 0.25) + (10.0 - 8.0 * 0.25);
        assert!(
            (c.total_weight() - want).abs() < 0.02 * want,
            "{}",
            c.total_weight()
        );
    }

    #[test]
    fn ridge_on_lattice_counts_once() {
        let g = Geometry2D::rect_boundary(0.0, 3.0, 0.0, 2.0).unwrap();
        let f = DistanceField::from_geometry(&g, 1.2, 0.01, "rb").unwrap();
        let c = extract_level_set(&f, 1.0).unwrap();
        let ridge: f64 = c
            .points
            .iter()
            .filter(|p| (p.x.y - 1.0).abs() < 1e-9)
            .map(|p| p.weight)
            .sum();
        assert!((ridge - 1.0).abs() < 0.03, "{ridge}");
        let outer = 10.0 + 2.0 * PI;
        assert!((c.total_weight() - outer - 1.0).abs() < 0.02 * outer);
    }

    #[test]
    fn empty_when_level_misses() {
        let g: Geometry2D = Primitive2D::rectangle(0.0, 1.0, 0.0, 1.0).into();
        let mut f = DistanceField::from_geometry(&g, 0.5, 0.05, "sq").unwrap();
        f.values.iter_mut().for_each(|v| *v = 0.0);
        assert!(matches!(
            extract_level_set(&f, 0.2),
            Err(EngineError::EmptyLevelSet(_))
        ));
    }
}
