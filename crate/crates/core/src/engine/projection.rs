use serde::{Deserialize, Serialize};

use super::field::DistanceField;
use super::EngineError;
use crate::geometry::{DistanceOracle, Geometry2D, Point2};

/// Default multiplicity tolerance for analytic projections.
pub const ANALYTIC_TOL_MULTI: f64 = 1e-9;

/// Nearest points `Σ_A(x)` of `x`, resolved to a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub x: Point2,
    pub distance: f64,
    /// Closest first; the first entry is the metric projection when unique.
    pub nearest: Vec<Point2>,
    pub multiplicity: usize,
    /// Unit vectors `(x - a) / |x - a|`, empty when `x ∈ A`.
    pub directions: Vec<Point2>,
}

impl ProjectionRecord {
    fn new(x: Point2, nearest: Vec<Point2>, distance: f64) -> Self {
        let directions = if distance > 0.0 {
            nearest
                .iter()
                .filter_map(|a| (x - *a).normalized())
                .collect()
        } else {
            Vec::new()
        };
        ProjectionRecord {
            x,
            distance,
            multiplicity: nearest.len(),
            nearest,
            directions,
        }
    }

    pub fn is_unique(&self) -> bool {
        self.multiplicity == 1
    }
}

/// Source of nearest points: the exact oracle or, for shapes it does not
/// support, the feet stored in a distance field.
#[derive(Debug, Clone)]
pub enum Projector<'a> {
    Oracle { oracle: DistanceOracle, tol: f64 },
    Field { field: &'a DistanceField, tol: f64 },
}

impl<'a> Projector<'a> {
    /// Oracle when available (tolerance `1e-9`), otherwise the field with
    /// tolerance `3h`.
    pub fn for_geometry(g: &Geometry2D, field: &'a DistanceField) -> Self {
        match DistanceOracle::compile(g) {
            Ok(oracle) => Projector::Oracle {
                oracle,
                tol: ANALYTIC_TOL_MULTI,
            },
            Err(_) => Projector::Field {
                field,
                tol: 3.0 * field.h(),
            },
        }
    }

    pub fn tol(&self) -> f64 {
        match self {
            Projector::Oracle { tol, .. } | Projector::Field { tol, .. } => *tol,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Projector::Oracle { .. })
    }

    pub fn project(&self, x: Point2) -> Result<ProjectionRecord, EngineError> {
        match self {
            Projector::Oracle { oracle, tol } => {
                let (nearest, d) = oracle.nearest_within(x, *tol);
                Ok(ProjectionRecord::new(x, nearest, d))
            }
            Projector::Field { field, tol } => project_on_field(field, x, *tol),
        }
    }
}

/// All minimizers of `|x - ·|` over `A` within `tol_multi` of the minimum.
pub fn project(g: &Geometry2D, x: Point2, tol_multi: f64) -> Result<ProjectionRecord, EngineError> {
    let oracle = DistanceOracle::compile(g)?;
    Projector::Oracle {
        oracle,
        tol: tol_multi,
    }
    .project(x)
}

/// Feet of the 3×3 block of cells around `x`, kept when they are within
/// `tol` of the closest one and merged when closer than `tol` to each other.
fn project_on_field(
    field: &DistanceField,
    x: Point2,
    tol: f64,
) -> Result<ProjectionRecord, EngineError> {
    let g = &field.grid;
    let (ci, cj) = g.locate(x).ok_or_else(|| {
        EngineError::InvalidInput(format!("point ({}, {}) outside the field", x.x, x.y))
    })?;
    if field.value(ci, cj) == 0.0 && g.center(ci, cj).dist(x) <= 0.5 * g.h {
        return Ok(ProjectionRecord::new(x, vec![x], 0.0));
    }
    let mut feet: Vec<(Point2, f64)> = Vec::with_capacity(9);
    for dj in -1i64..=1 {
        for di in -1i64..=1 {
            let (i, j) = (ci as i64 + di, cj as i64 + dj);
            if i < 0 || j < 0 || i as usize >= g.nx || j as usize >= g.ny {
                continue;
            }
            let a = field.foot(i as usize, j as usize);
            feet.push((a, a.dist(x)));
        }
    }
    feet.sort_by(|a, b| a.1.total_cmp(&b.1));
    let dmin = feet[0].1;
    let mut kept: Vec<Point2> = Vec::new();
    for (a, d) in feet {
        if d <= dmin + tol && kept.iter().all(|k| k.dist(a) > tol) {
            kept.push(a);
        }
    }
    Ok(ProjectionRecord::new(x, kept, dmin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{construct_dim2_eps, GammaPolicy};
    use crate::fractal::TargetRadii;
    use crate::geometry::{CompactSet, Primitive2D};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_pair() {
        let g: Geometry2D =
            Primitive2D::points(vec![Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)]).into();
        let p = project(&g, Point2::ORIGIN, ANALYTIC_TOL_MULTI).unwrap();
        assert_eq!(p.multiplicity, 2);
        let mut dx: Vec<f64> = p.directions.iter().map(|d| d.x).collect();
        dx.sort_by(f64::total_cmp);
        assert_eq!(dx, vec![-1.0, 1.0]);
        let disk: Geometry2D = Primitive2D::disk(Point2::ORIGIN, 1.0).into();
        let p = project(&disk, Point2::new(2.0, 0.0), ANALYTIC_TOL_MULTI).unwrap();
        assert_eq!((p.multiplicity, p.nearest[0]), (1, Point2::new(1.0, 0.0)));
    }

    #[test]
    fn construction_midpoint_sees_both_sides() {
        let m = construct_dim2_eps(
            &TargetRadii::finite(vec![1.0]).unwrap(),
            1.0,
            &GammaPolicy::default(),
        )
        .unwrap();
        let e = &m.radii[0];
        let x = Point2::new(0.5 * (e.j.0 + e.j.1), 0.0);
        let p = project(&m.geometry, x, ANALYTIC_TOL_MULTI).unwrap();
        assert_eq!(p.multiplicity, 2);
        for a in &p.nearest {
            assert!((a.x - x.x).abs() < 1e-12 && (a.y.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nearest_points_realize_the_distance() {
        let m = construct_dim2_eps(
            &TargetRadii::finite(vec![1.0, 0.5]).unwrap(),
            0.5,
            &GammaPolicy::geometric(0.1),
        )
        .unwrap();
        let bb = m.geometry.bounding_box().inflate(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let x = Point2::new(
                rng.gen_range(bb.xmin..bb.xmax),
                rng.gen_range(bb.ymin..bb.ymax),
            );
            let p = project(&m.geometry, x, ANALYTIC_TOL_MULTI).unwrap();
            let d = m.geometry.exact_distance(x).unwrap();
            for a in &p.nearest {
                assert!((a.dist(x) - d).abs() <= 1e-12 + ANALYTIC_TOL_MULTI);
            }
        }
    }

    #[test]
    fn field_fallback_detects_two_feet() {
        let g: Geometry2D =
            Primitive2D::points(vec![Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)]).into();
        let f = DistanceField::from_geometry(&g, 1.0, 0.01, "pair").unwrap();
        let pr = Projector::Field {
            field: &f,
            tol: 0.03,
        };
        assert_eq!(pr.project(Point2::ORIGIN).unwrap().multiplicity, 2);
        assert_eq!(pr.project(Point2::new(0.3, 0.4)).unwrap().multiplicity, 1);
    }
}
