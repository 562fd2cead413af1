use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nondiff::NondiffReport;
use super::AnalysisError;
use crate::engine::{
    extract_level_set, project, DistanceField, EngineError, ProjectionRecord, Projector,
};
use crate::geometry::{Geometry2D, Point2};

/// Distance from `x` to the convex hull of `pts` (zero inside).
pub fn hull_distance(x: Point2, pts: &[Point2]) -> f64 {
    match pts {
        [] => f64::INFINITY,
        [a] => x.dist(*a),
        _ => {
            let hull = convex_hull(pts);
            if hull.len() >= 3 && inside_convex(x, &hull) {
                return 0.0;
            }
            let n = hull.len();
            (0..n)
                .map(|i| segment_distance(x, hull[i], hull[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Monotone chain, counter-clockwise, collinear points dropped.
fn convex_hull(pts: &[Point2]) -> Vec<Point2> {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() <= 2 {
        return p;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn inside_convex(x: Point2, hull: &[Point2]) -> bool {
    let n = hull.len();
    (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], x) >= 0.0)
}

fn segment_distance(x: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return x.dist(a);
    }
    let t = (((x - a).x * ab.x + (x - a).y * ab.y) / len2).clamp(0.0, 1.0);
    x.dist(a + ab * t)
}

/// `x ∈ conv Σ_A(x)` up to `hull_tol`, for `x ∉ A` with at least two
/// nearest points.
pub fn is_critical_record(rec: &ProjectionRecord, hull_tol: f64) -> bool {
    rec.distance > 0.0 && rec.multiplicity >= 2 && hull_distance(rec.x, &rec.nearest) <= hull_tol
}

/// Analytic criticality test; `tol` resolves both the nearest-point set and
/// the hull membership.
pub fn is_critical(g: &Geometry2D, x: Point2, tol: f64) -> Result<bool, EngineError> {
    let rec = project(g, x, tol)?;
    if rec.distance == 0.0 {
        return Err(EngineError::InvalidInput(format!(
            "({}, {}) lies in the set",
            x.x, x.y
        )));
    }
    Ok(is_critical_record(&rec, tol))
}

/// Hull tolerance matching a projector: its own tolerance when exact, `2h`
/// on grid feet.
fn hull_tol(projector: &Projector, field: &DistanceField) -> f64 {
    if projector.is_exact() {
        projector.tol()
    } else {
        2.0 * field.h()
    }
}

/// Which cells a critical-value scan visits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScanScope {
    Full,
    /// The lattice rows nearest to each `y`, plus `audit` cells drawn
    /// uniformly from the whole grid with the given seed.
    Rows {
        ys: Vec<f64>,
        audit: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueCluster {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl ValueCluster {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub clusters: Vec<ValueCluster>,
    pub scanned: usize,
    pub critical_cells: usize,
    pub band: (f64, f64),
}

impl CriticalValues {
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.clusters
            .iter()
            .any(|c| v >= c.lo - tol && v <= c.hi + tol)
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Distances of critical cell centers whose field value lies in the trusted
/// band, grouped into clusters whose consecutive members differ by at most
/// `cluster_tol`.
pub fn scan_critical_values(
    projector: &Projector,
    field: &DistanceField,
    scope: &ScanScope,
    cluster_tol: f64,
) -> Result<CriticalValues, EngineError> {
    let g = field.grid;
    let cells: Vec<(usize, usize)> = match scope {
        ScanScope::Full => (0..g.ny)
            .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
            .collect(),
        ScanScope::Rows { ys, audit, seed } => {
            let mut cells = Vec::new();
            for &y in ys {
                let j = ((y / g.h).round() as i64 - g.j0).clamp(0, g.ny as i64 - 1) as usize;
                cells.extend((0..g.nx).map(|i| (i, j)));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            cells.extend((0..*audit).map(|_| (rng.gen_range(0..g.nx), rng.gen_range(0..g.ny))));
            cells
        }
    };
    let band = field.trusted_band();
    let tol = hull_tol(projector, field);
    let hits = cells
        .par_iter()
        .map(|&(i, j)| {
            let v = field.value(i, j);
            if v < band.0 || v > band.1 {
                return Ok(None);
            }
            let rec = projector.project(g.center(i, j))?;
            Ok(is_critical_record(&rec, tol).then_some(rec.distance))
        })
        .collect::<Result<Vec<Option<f64>>, EngineError>>()?;
    let mut values: Vec<f64> = hits.into_iter().flatten().collect();
    values.sort_by(f64::total_cmp);
    let critical_cells = values.len();
    let mut clusters: Vec<ValueCluster> = Vec::new();
    for v in values {
        match clusters.last_mut() {
            Some(c) if v - c.hi <= cluster_tol => {
                c.hi = v;
                c.count += 1;
            }
            _ => clusters.push(ValueCluster {
                lo: v,
                hi: v,
                count: 1,
            }),
        }
    }
    Ok(CriticalValues {
        clusters,
        scanned: cells.len(),
        critical_cells,
        band,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Differentiable,
    NonDifferentiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub r: f64,
    pub h: f64,
    pub unique: usize,
    pub multi: usize,
    pub critical: usize,
    /// Length of `∂A_r` made of critical points.
    pub critical_weight: f64,
    /// Length of `∂A_r` with more than one nearest point.
    pub non_unp_weight: f64,
    pub total_weight: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

impl CriticalityReport {
    /// Whether the jump detector reached the same verdict at `r`, counting
    /// detections within `tol`.
    pub fn agrees_with(&self, nondiff: &NondiffReport, tol: f64) -> bool {
        let detected = nondiff.near(self.r, tol).is_some();
        detected == (self.verdict == Verdict::NonDifferentiable)
    }
}

/// Classifies the level set `{d = r}` by nearest-point multiplicity and
/// criticality. Differentiable iff both the critical and the non-unique
/// lengths stay below `c · h · total length`.
pub fn characterize_differentiability(
    projector: &Projector,
    field: &DistanceField,
    r: f64,
    c: f64,
) -> Result<CriticalityReport, AnalysisError> {
    let cloud = extract_level_set(field, r)?.with_projections(projector)?;
    let tol = hull_tol(projector, field);
    let (mut unique, mut multi, mut critical) = (0, 0, 0);
    let (mut critical_weight, mut non_unp_weight) = (0.0, 0.0);
    for p in &cloud.points {
        let rec = p.projection.as_ref().expect("projected cloud");
        if rec.multiplicity >= 2 {
            multi += 1;
            non_unp_weight += p.weight;
            if is_critical_record(rec, tol) {
                critical += 1;
                critical_weight += p.weight;
            }
        } else {
            unique += 1;
        }
    }
    let total_weight = cloud.total_weight();
    let h = field.h();
    let threshold = c * h * total_weight;
    let verdict = if critical_weight < threshold && non_unp_weight < threshold {
        Verdict::Differentiable
    } else {
        Verdict::NonDifferentiable
    };
    Ok(CriticalityReport {
        r,
        h,
        unique,
        multi,
        critical,
        critical_weight,
        non_unp_weight,
        total_weight,
        threshold,
        verdict,
    })
}
