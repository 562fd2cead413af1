use serde::{Deserialize, Serialize};

use super::packing::pack_rectangles;
use super::ConstructionError;
use crate::fractal::TargetRadii;
use crate::geometry::{Geometry2D, Point2, Primitive2D, Rect, Set1D};

/// Box `D_s = [0,3s]^{d-1} × [0,2s]` placed at `shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxEntry {
    pub s: f64,
    /// Side lengths, last axis `2s`.
    pub extents: Vec<f64>,
    pub shift: Vec<f64>,
    /// Critical cube `[s,2s]^{d-1} × {s}` (unshifted), as `(lo, hi)` corners.
    pub critical_cube: (Vec<f64>, Vec<f64>),
}

impl BoxEntry {
    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    fn shifted_bounds(&self) -> Vec<(f64, f64)> {
        self.shift
            .iter()
            .zip(&self.extents)
            .map(|(a, e)| (*a, a + e))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxConstruction {
    pub d: u32,
    pub boxes: Vec<BoxEntry>,
    pub center: Vec<f64>,
    pub enclosing_radius: f64,
    /// `B(0,R)` minus the open boxes, for `d = 2`.
    pub geometry: Option<Geometry2D>,
    /// The same set on the line, for `d = 1`.
    pub set1d: Option<Set1D>,
}

impl BoxConstruction {
    /// Pairwise disjointness of the closed shifted boxes.
    pub fn boxes_disjoint(&self) -> bool {
        let bounds: Vec<Vec<(f64, f64)>> =
            self.boxes.iter().map(BoxEntry::shifted_bounds).collect();
        for (i, a) in bounds.iter().enumerate() {
            for b in &bounds[i + 1..] {
                if a.iter().zip(b).all(|(u, v)| u.0 <= v.1 && v.0 <= u.1) {
                    return false;
                }
            }
        }
        true
    }

    /// Every box corner lies in the closed enclosing ball.
    pub fn boxes_inside(&self) -> bool {
        self.boxes.iter().all(|b| {
            let far: f64 = b
                .shifted_bounds()
                .iter()
                .zip(&self.center)
                .map(|((lo, hi), c)| (lo - c).abs().max((hi - c).abs()).powi(2))
                .sum();
            far.sqrt() <= self.enclosing_radius * (1.0 + 1e-12)
        })
    }
}

/// Boxes packed disjointly into a ball. The first two axes are shelf
/// packed; further axes all start at 0, so footprints decide disjointness.
pub fn construct_boxes_dimd(n: &TargetRadii, d: u32) -> Result<BoxConstruction, ConstructionError> {
    if n.is_empty() {
        return Err(ConstructionError::EmptyTarget);
    }
    if d == 0 {
        return Err(ConstructionError::ConditionViolated(
            "dimension must be at least 1".into(),
        ));
    }
    if !n.power_sum(d as f64).is_finite() {
        return Err(ConstructionError::SummabilityViolated(format!(
            "Σ s^{d} diverges"
        )));
    }
    let du = d as usize;
    let mut boxes: Vec<BoxEntry> = n
        .values()
        .iter()
        .map(|&s| {
            let mut extents = vec![3.0 * s; du];
            extents[du - 1] = 2.0 * s;
            let mut lo = vec![s; du];
            let mut hi = vec![2.0 * s; du];
            lo[du - 1] = s;
            hi[du - 1] = s;
            BoxEntry {
                s,
                extents,
                shift: vec![0.0; du],
                critical_cube: (lo, hi),
            }
        })
        .collect();

    if d == 1 {
        // Intervals [0, 2s] side by side with padding 0.05·2s between them.
        let mut x = 0.0;
        for b in &mut boxes {
            b.shift[0] = x;
            x += b.extents[0] * 1.05;
        }
        let end = boxes.last().map_or(0.0, |b| b.shift[0] + b.extents[0]);
        let center = 0.5 * end;
        let radius = 0.5 * end;
        // [c-R, c+R] minus the open intervals: the box endpoints.
        let mut pts: Vec<f64> = boxes
            .iter()
            .flat_map(|b| [b.shift[0], b.shift[0] + b.extents[0]])
            .collect();
        pts.dedup();
        let set = Set1D::new(Vec::new(), merge_closed(&pts))?;
        return Ok(BoxConstruction {
            d,
            boxes,
            center: vec![center],
            enclosing_radius: radius,
            geometry: None,
            set1d: Some(set),
        });
    }

    let rects: Vec<Rect> = boxes
        .iter()
        .map(|b| Rect::new(0.0, b.extents[0], 0.0, b.extents[1]))
        .collect();
    let packing = pack_rectangles(&rects);
    for (b, s) in boxes.iter_mut().zip(&packing.shifts) {
        b.shift[0] = s.x;
        b.shift[1] = s.y;
    }
    let mut center = vec![packing.center.x, packing.center.y];
    let mut radius_sq = packing.radius * packing.radius;
    if du > 2 {
        // Remaining axes span [0, max extent]; centre them and add the half span.
        let span = boxes
            .iter()
            .map(|b| b.extents[du - 1].max(b.extents[2.min(du - 1)]))
            .fold(0.0, f64::max);
        for _ in 2..du {
            center.push(0.5 * span);
            radius_sq += 0.25 * span * span;
        }
    }
    let enclosing_radius = radius_sq.sqrt() * (1.0 + 1e-9);
    let geometry = if d == 2 {
        let holes = boxes
            .iter()
            .map(|b| {
                Primitive2D::rectangle(
                    b.shift[0],
                    b.shift[0] + b.extents[0],
                    b.shift[1],
                    b.shift[1] + b.extents[1],
                )
            })
            .collect();
        Some(Geometry2D::difference(
            Primitive2D::disk(Point2::new(center[0], center[1]), enclosing_radius),
            holes,
        )?)
    } else {
        None
    };
    Ok(BoxConstruction {
        d,
        boxes,
        center,
        enclosing_radius,
        geometry,
        set1d: None,
    })
}

/// Sorted endpoints `x_0 < x_1 < …` of consecutive closed intervals
/// `[x_0,x_1], [x_2,x_3], …` laid out with padding: the complement of the
/// open boxes is the endpoints plus the padding intervals between boxes.
fn merge_closed(pts: &[f64]) -> Vec<(f64, f64)> {
    // pts = [a0, b0, a1, b1, ...] with b_i < a_{i+1}; the set keeps
    // {a0} ∪ [b0, a1] ∪ [b1, a2] ∪ … ∪ {b_last}.
    let mut out = vec![(pts[0], pts[0])];
    let mut i = 1;
    while i + 1 < pts.len() {
        out.push((pts[i], pts[i + 1]));
        i += 2;
    }
    out.push((pts[pts.len() - 1], pts[pts.len() - 1]));
    out
}
