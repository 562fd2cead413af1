//! Exact point-to-set distances and nearest-point candidates for the
//! geometries produced by the constructions.
//!
//! Supported family: leaves, (nested) unions, and differences whose removed
//! primitives lie inside the base. For `x` inside a removed interior the
//! nearest points of the set lie on the boundary of the removed union, so
//! every global minimizer is one of
//!
//! * the closest point of some boundary piece (segment, arc, point),
//! * an endpoint of a boundary piece,
//! * an intersection of two boundary pieces of different primitives,
//!
//! filtered to those points that actually belong to the set. Candidates are
//! tested against open interiors with an absolute tolerance of
//! [`MEMBERSHIP_TOL`].

use super::csg::Geometry2D;
use super::point::{Point2, Rect};
use super::primitive::{Piece, Primitive2D};
use super::GeometryError;

/// Absolute tolerance on interior depth when deciding whether a boundary
/// candidate belongs to the set.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
struct DiffPart {
    base: Primitive2D,
    removed: Vec<Primitive2D>,
    pieces: Vec<Piece>,
    /// Piece endpoints and pairwise intersections that belong to the set.
    corners: Vec<Point2>,
    /// Removed interiors are pairwise disjoint, so only the piece set of the
    /// primitive containing `x` matters.
    disjoint: bool,
    piece_ranges: Vec<std::ops::Range<usize>>,
}

#[derive(Debug, Clone)]
enum Part {
    Leaf(Primitive2D),
    Diff(Box<DiffPart>),
}

/// Compiled exact distance oracle for a [`Geometry2D`].
#[derive(Debug, Clone)]
pub struct DistanceOracle {
    parts: Vec<Part>,
    bbox: Rect,
}

fn flatten(g: &Geometry2D, out: &mut Vec<Part>) -> Result<(), GeometryError> {
    match g {
        Geometry2D::Leaf(p) => out.push(Part::Leaf(p.clone())),
        Geometry2D::Union(children) => {
            for c in children {
                flatten(c, out)?;
            }
        }
        Geometry2D::Difference { base, removed } => {
            let removed: Vec<Primitive2D> = removed
                .iter()
                .filter(|r| !matches!(r, Primitive2D::Points { .. }))
                .cloned()
                .collect();
            for r in &removed {
                if !r.is_inside(base, 1e-12) {
                    return Err(GeometryError::UnsupportedShape(
                        "removed primitive is not contained in the difference base".into(),
                    ));
                }
            }
            out.push(Part::Diff(Box::new(DiffPart::new(base.clone(), removed))));
        }
    }
    Ok(())
}

fn piece_endpoints(p: &Piece, out: &mut Vec<Point2>) {
    match *p {
        Piece::Segment { a, b } => {
            out.push(a);
            out.push(b);
        }
        Piece::Arc {
            center,
            radius,
            start,
            sweep,
        } if sweep < std::f64::consts::TAU => {
            out.push(center + Point2::new(start.cos(), start.sin()) * radius);
            let e = start + sweep;
            out.push(center + Point2::new(e.cos(), e.sin()) * radius);
        }
        _ => {}
    }
}

impl DiffPart {
    fn new(base: Primitive2D, removed: Vec<Primitive2D>) -> Self {
        let mut pieces = Vec::new();
        let mut piece_ranges = Vec::new();
        for prim in std::iter::once(&base).chain(removed.iter()) {
            let start = pieces.len();
            pieces.extend(prim.pieces());
            piece_ranges.push(start..pieces.len());
        }
        let mut disjoint = true;
        'outer: for (i, a) in removed.iter().enumerate() {
            for b in &removed[i + 1..] {
                if !interiors_disjoint(a, b) {
                    disjoint = false;
                    break 'outer;
                }
            }
        }
        let mut raw = Vec::new();
        for p in &pieces {
            piece_endpoints(p, &mut raw);
        }
        if !disjoint {
            for (i, ri) in piece_ranges.iter().enumerate() {
                for rj in &piece_ranges[i + 1..] {
                    for pa in &pieces[ri.clone()] {
                        for pb in &pieces[rj.clone()] {
                            pa.intersections(pb, &mut raw);
                        }
                    }
                }
            }
        }
        let mut part = DiffPart {
            base,
            removed,
            pieces,
            corners: Vec::new(),
            disjoint,
            piece_ranges,
        };
        part.corners = raw.into_iter().filter(|c| part.holds(*c)).collect();
        part
    }

    /// Membership with tolerance on the open interiors.
    fn holds(&self, p: Point2) -> bool {
        self.base.depth(p) >= -MEMBERSHIP_TOL
            && self.removed.iter().all(|r| r.depth(p) <= MEMBERSHIP_TOL)
    }

    fn candidates(&self, x: Point2, out: &mut Vec<Point2>) {
        if !self.base.contains(x) {
            out.push(self.base.nearest_convex(x));
            return;
        }
        let inside: Vec<usize> = (0..self.removed.len())
            .filter(|&i| self.removed[i].interior_contains(x))
            .collect();
        if inside.is_empty() {
            out.push(x);
            return;
        }
        let start = out.len();
        if self.disjoint {
            // x lies in exactly one removed interior; its boundary is in the set.
            for p in &self.pieces[self.piece_ranges[inside[0] + 1].clone()] {
                p.closest_points(x, out);
            }
            return;
        }
        for p in &self.pieces {
            p.closest_points(x, out);
        }
        let mut i = start;
        while i < out.len() {
            if self.holds(out[i]) {
                i += 1;
            } else {
                out.swap_remove(i);
            }
        }
        out.extend(self.corners.iter().copied());
    }
}

fn interiors_disjoint(a: &Primitive2D, b: &Primitive2D) -> bool {
    let (ra, rb) = (a.bounding_box(), b.bounding_box());
    !(ra.xmin < rb.xmax && rb.xmin < ra.xmax && ra.ymin < rb.ymax && rb.ymin < ra.ymax)
}

impl DistanceOracle {
    pub fn compile(g: &Geometry2D) -> Result<Self, GeometryError> {
        g.validate()?;
        let mut parts = Vec::new();
        flatten(g, &mut parts)?;
        Ok(Self {
            parts,
            bbox: g.bounding_box(),
        })
    }

    pub fn bounding_box(&self) -> Rect {
        self.bbox
    }

    /// Candidate nearest points (a superset of all minimizers).
    pub fn candidates(&self, x: Point2, out: &mut Vec<Point2>) {
        for part in &self.parts {
            match part {
                Part::Leaf(Primitive2D::Points { points }) => out.extend(points.iter().copied()),
                Part::Leaf(p) => out.push(p.nearest_convex(x)),
                Part::Diff(d) => d.candidates(x, out),
            }
        }
    }

    pub fn distance(&self, x: Point2) -> f64 {
        self.nearest(x).1
    }

    /// One nearest point and the distance `d(x, A)`.
    pub fn nearest(&self, x: Point2) -> (Point2, f64) {
        let mut buf = Vec::with_capacity(16);
        self.candidates(x, &mut buf);
        buf.iter()
            .map(|c| (*c, c.dist(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("oracle always yields a candidate")
    }

    /// All nearest points within `tol` of the minimum distance, with nearby
    /// candidates merged so that each reported point stands for one distinct
    /// minimizer. Returns the points (closest first) and `d(x, A)`.
    pub fn nearest_within(&self, x: Point2, tol: f64) -> (Vec<Point2>, f64) {
        let mut buf = Vec::with_capacity(16);
        self.candidates(x, &mut buf);
        let mut cands: Vec<(Point2, f64)> = buf.iter().map(|c| (*c, c.dist(x))).collect();
        cands.sort_by(|a, b| a.1.total_cmp(&b.1));
        let dmin = cands[0].1;
        if dmin == 0.0 {
            return (vec![x], 0.0);
        }
        // Points on the sphere of radius d within `tol` of the minimum lie in
        // caps of chord length about sqrt(2 d tol); merge inside that radius.
        let merge = (2.0 * dmin * tol).sqrt() + tol;
        let mut kept: Vec<Point2> = Vec::new();
        for (c, d) in cands {
            if d > dmin + tol {
                break;
            }
            if kept.iter().all(|k| k.dist(c) > merge) {
                kept.push(c);
            }
        }
        (kept, dmin)
    }
}
