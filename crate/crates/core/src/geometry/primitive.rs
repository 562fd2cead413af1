//! Exact planar primitives and their boundary pieces.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::point::{Point2, Rect};
use super::GeometryError;

/// A closed planar primitive. Membership predicates are evaluated directly on
/// the defining inequalities; no tolerance is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive2D {
    Rectangle {
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },
    Disk {
        center: Point2,
        radius: f64,
    },
    /// Minkowski sum of the segment `[a, b]` and the closed disk of `radius`.
    Stadium {
        a: Point2,
        b: Point2,
        radius: f64,
    },
    /// Finite point set (zero area, empty interior).
    Points {
        points: Vec<Point2>,
    },
}

/// One smooth piece of a primitive's boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Segment {
        a: Point2,
        b: Point2,
    },
    /// Counter-clockwise arc from `start` (radians) sweeping `sweep` in `(0, 2π]`.
    Arc {
        center: Point2,
        radius: f64,
        start: f64,
        sweep: f64,
    },
    Point(Point2),
}

impl Primitive2D {
    pub fn rectangle(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Primitive2D::Rectangle {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    pub fn disk(center: Point2, radius: f64) -> Self {
        Primitive2D::Disk { center, radius }
    }

    /// Stadium around `[a, b]`; a degenerate segment collapses to a disk.
    pub fn stadium(a: Point2, b: Point2, radius: f64) -> Self {
        if a == b {
            Primitive2D::Disk { center: a, radius }
        } else {
            Primitive2D::Stadium { a, b, radius }
        }
    }

    pub fn points(points: Vec<Point2>) -> Self {
        Primitive2D::Points { points }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Primitive2D::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                if !finite(&[*xmin, *xmax, *ymin, *ymax]) || !(xmin < xmax) || !(ymin < ymax) {
                    return Err(GeometryError::Invalid(format!(
                        "rectangle needs xmin<xmax and ymin<ymax, got [{xmin},{xmax}]x[{ymin},{ymax}]"
                    )));
                }
            }
            Primitive2D::Disk { center, radius } => {
                if !center.is_finite() || !(radius.is_finite() && *radius > 0.0) {
                    return Err(GeometryError::Invalid(format!(
                        "disk radius must be > 0, got {radius}"
                    )));
                }
            }
            Primitive2D::Stadium { a, b, radius } => {
                if !a.is_finite() || !b.is_finite() || !(radius.is_finite() && *radius > 0.0) {
                    return Err(GeometryError::Invalid(format!(
                        "stadium radius must be > 0, got {radius}"
                    )));
                }
            }
            Primitive2D::Points { points } => {
                if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
                    return Err(GeometryError::Invalid(
                        "point set must be nonempty and finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Primitive2D::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => p.x >= *xmin && p.x <= *xmax && p.y >= *ymin && p.y <= *ymax,
            Primitive2D::Disk { center, radius } => (p - *center).norm_sq() <= radius * radius,
            Primitive2D::Stadium { a, b, radius } => {
                (p - closest_on_segment(*a, *b, p)).norm_sq() <= radius * radius
            }
            Primitive2D::Points { points } => points.contains(&p),
        }
    }

    /// Membership in the open interior.
    pub fn interior_contains(&self, p: Point2) -> bool {
        match self {
            Primitive2D::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => p.x > *xmin && p.x < *xmax && p.y > *ymin && p.y < *ymax,
            Primitive2D::Disk { center, radius } => (p - *center).norm_sq() < radius * radius,
            Primitive2D::Stadium { a, b, radius } => {
                (p - closest_on_segment(*a, *b, p)).norm_sq() < radius * radius
            }
            Primitive2D::Points { .. } => false,
        }
    }

    /// Distance from `p` to the complement of the interior; positive exactly
    /// inside the open interior.
    pub fn depth(&self, p: Point2) -> f64 {
        match self {
            Primitive2D::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => (p.x - xmin).min(xmax - p.x).min(p.y - ymin).min(ymax - p.y),
            Primitive2D::Disk { center, radius } => radius - p.dist(*center),
            Primitive2D::Stadium { a, b, radius } => radius - p.dist(closest_on_segment(*a, *b, p)),
            Primitive2D::Points { points } => -points
                .iter()
                .map(|q| q.dist(p))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Distance from `p` to the closed primitive (zero inside).
    pub fn distance(&self, p: Point2) -> f64 {
        match self {
            Primitive2D::Points { points } => points
                .iter()
                .map(|q| q.dist(p))
                .fold(f64::INFINITY, f64::min),
            _ => self.nearest_convex(p).dist(p),
        }
    }

    /// Nearest point of a convex primitive (the point itself if inside).
    /// For point sets returns the first minimizer.
    pub fn nearest_convex(&self, p: Point2) -> Point2 {
        match self {
            Primitive2D::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => Point2::new(p.x.clamp(*xmin, *xmax), p.y.clamp(*ymin, *ymax)),
            Primitive2D::Disk { center, radius } => {
                let v = p - *center;
                let n = v.norm();
                if n <= *radius {
                    p
                } else {
                    *center + v * (radius / n)
                }
            }
            Primitive2D::Stadium { a, b, radius } => {
                let c = closest_on_segment(*a, *b, p);
                let v = p - c;
                let n = v.norm();
                if n <= *radius {
                    p
                } else {
                    c + v * (radius / n)
                }
            }
            Primitive2D::Points { points } => *points
                .iter()
                .min_by(|u, v| u.dist(p).total_cmp(&v.dist(p)))
                .expect("validated nonempty"),
        }
    }

    pub fn bounding_box(&self) -> Rect {
        match self {
            Primitive2D::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => Rect::new(*xmin, *xmax, *ymin, *ymax),
            Primitive2D::Disk { center, radius } => Rect::new(
                center.x - radius,
                center.x + radius,
                center.y - radius,
                center.y + radius,
            ),
            Primitive2D::Stadium { a, b, radius } => Rect::new(
                a.x.min(b.x) - radius,
                a.x.max(b.x) + radius,
                a.y.min(b.y) - radius,
                a.y.max(b.y) + radius,
            ),
            Primitive2D::Points { points } => points.iter().fold(
                Rect::new(
                    f64::INFINITY,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    f64::NEG_INFINITY,
                ),
                |r, p| {
                    Rect::new(
                        r.xmin.min(p.x),
                        r.xmax.max(p.x),
                        r.ymin.min(p.y),
                        r.ymax.max(p.y),
                    )
                },
            ),
        }
    }

    pub fn translate(&self, v: Point2) -> Primitive2D {
        match self {
            Primitive2D::Rectangle {
                xmin,
                xmax,
                ymin,
                ymax,
            } => Primitive2D::rectangle(xmin + v.x, xmax + v.x, ymin + v.y, ymax + v.y),
            Primitive2D::Disk { center, radius } => Primitive2D::disk(*center + v, *radius),
            Primitive2D::Stadium { a, b, radius } => Primitive2D::Stadium {
                a: *a + v,
                b: *b + v,
                radius: *radius,
            },
            Primitive2D::Points { points } => {
                Primitive2D::points(points.iter().map(|p| *p + v).collect())
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Primitive2D::Rectangle { .. } => self.bounding_box().area(),
            Primitive2D::Disk { radius, .. } => PI * radius * radius,
            Primitive2D::Stadium { a, b, radius } => {
                PI * radius * radius + 2.0 * radius * a.dist(*b)
            }
            Primitive2D::Points { .. } => 0.0,
        }
    }

    /// Whether the closed primitive `self` lies inside the closed primitive
    /// `outer` (up to `tol`). Point sets are never valid outers.
    pub fn is_inside(&self, outer: &Primitive2D, tol: f64) -> bool {
        // Convex sets: it suffices to check the generating points inflated by
        // the radius against the outer's depth.
        let (gens, r): (Vec<Point2>, f64) = match self {
            Primitive2D::Rectangle { .. } => (self.bounding_box().corners().to_vec(), 0.0),
            Primitive2D::Disk { center, radius } => (vec![*center], *radius),
            Primitive2D::Stadium { a, b, radius } => (vec![*a, *b], *radius),
            Primitive2D::Points { points } => (points.clone(), 0.0),
        };
        match outer {
            Primitive2D::Points { .. } => false,
            Primitive2D::Rectangle { .. } => {
                let bb = self.bounding_box();
                outer.bounding_box().inflate(tol).contains_rect(&bb)
            }
            _ => gens.iter().all(|g| outer.depth(*g) >= r - tol),
        }
    }

    /// Boundary decomposed into segments, arcs and isolated points.
    pub fn pieces(&self) -> Vec<Piece> {
        match self {
            Primitive2D::Rectangle { .. } => {
                let c = self.bounding_box().corners();
                (0..4)
                    .map(|i| Piece::Segment {
                        a: c[i],
                        b: c[(i + 1) % 4],
                    })
                    .collect()
            }
            Primitive2D::Disk { center, radius } => {
                vec![Piece::Arc {
                    center: *center,
                    radius: *radius,
                    start: 0.0,
                    sweep: TAU,
                }]
            }
            Primitive2D::Stadium { a, b, radius } => {
                let u = (*b - *a).normalized().expect("nondegenerate stadium");
                let n = Point2::new(-u.y, u.x);
                let ang_n = n.y.atan2(n.x);
                vec![
                    Piece::Segment {
                        a: *a + n * *radius,
                        b: *b + n * *radius,
                    },
                    Piece::Segment {
                        a: *a - n * *radius,
                        b: *b - n * *radius,
                    },
                    // cap at b: from -n through u to n
                    Piece::Arc {
                        center: *b,
                        radius: *radius,
                        start: ang_n - PI,
                        sweep: PI,
                    },
                    // cap at a: from n through -u to -n
                    Piece::Arc {
                        center: *a,
                        radius: *radius,
                        start: ang_n,
                        sweep: PI,
                    },
                ]
            }
            Primitive2D::Points { points } => points.iter().map(|p| Piece::Point(*p)).collect(),
        }
    }
}

pub fn closest_on_segment(a: Point2, b: Point2, p: Point2) -> Point2 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl Piece {
    /// Whether the angle lies on the arc's angular range.
    fn arc_covers(start: f64, sweep: f64, theta: f64) -> bool {
        if sweep >= TAU {
            return true;
        }
        normalize_angle(theta - start) <= sweep
    }

    fn arc_point(center: Point2, radius: f64, theta: f64) -> Point2 {
        center + Point2::new(theta.cos(), theta.sin()) * radius
    }

    /// Closest points of the piece to `p`. Usually one point; for `p` at the
    /// center of an arc every arc point is equidistant and a few spread
    /// samples are returned so that convex-hull tests see the whole arc.
    pub fn closest_points(&self, p: Point2, out: &mut Vec<Point2>) {
        match *self {
            Piece::Segment { a, b } => out.push(closest_on_segment(a, b, p)),
            Piece::Point(q) => out.push(q),
            Piece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let v = p - center;
                if v.norm() <= 1e-12 * radius.max(1.0) {
                    let k = if sweep >= TAU { 3 } else { 2 };
                    for i in 0..=k {
                        if sweep >= TAU && i == k {
                            break;
                        }
                        let th = start + sweep * i as f64 / k as f64;
                        out.push(Self::arc_point(center, radius, th));
                    }
                    return;
                }
                let th = v.y.atan2(v.x);
                if Self::arc_covers(start, sweep, th) {
                    out.push(center + v * (radius / v.norm()));
                } else {
                    let e0 = Self::arc_point(center, radius, start);
                    let e1 = Self::arc_point(center, radius, start + sweep);
                    out.push(if e0.dist(p) <= e1.dist(p) { e0 } else { e1 });
                }
            }
        }
    }

    /// Intersection points of two boundary pieces (tangencies included).
    pub fn intersections(&self, other: &Piece, out: &mut Vec<Point2>) {
        match (*self, *other) {
            (Piece::Segment { a, b }, Piece::Segment { a: c, b: d }) => seg_seg(a, b, c, d, out),
            (
                Piece::Segment { a, b },
                Piece::Arc {
                    center,
                    radius,
                    start,
                    sweep,
                },
            )
            | (
                Piece::Arc {
                    center,
                    radius,
                    start,
                    sweep,
                },
                Piece::Segment { a, b },
            ) => {
                let mut tmp = Vec::new();
                line_circle(a, b, center, radius, &mut tmp);
                for q in tmp {
                    let v = q - center;
                    if Self::arc_covers(start, sweep, v.y.atan2(v.x)) {
                        out.push(q);
                    }
                }
            }
            (
                Piece::Arc {
                    center: c0,
                    radius: r0,
                    start: s0,
                    sweep: w0,
                },
                Piece::Arc {
                    center: c1,
                    radius: r1,
                    start: s1,
                    sweep: w1,
                },
            ) => {
                let mut tmp = Vec::new();
                circle_circle(c0, r0, c1, r1, &mut tmp);
                for q in tmp {
                    let v0 = q - c0;
                    let v1 = q - c1;
                    if Self::arc_covers(s0, w0, v0.y.atan2(v0.x))
                        && Self::arc_covers(s1, w1, v1.y.atan2(v1.x))
                    {
                        out.push(q);
                    }
                }
            }
            (Piece::Point(_), _) | (_, Piece::Point(_)) => {}
        }
    }
}

fn seg_seg(a: Point2, b: Point2, c: Point2, d: Point2, out: &mut Vec<Point2>) {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    let qp = c - a;
    if denom.abs() <= 1e-15 * r.norm() * s.norm() {
        // parallel: report overlap endpoints when collinear
        if qp.cross(r).abs() <= 1e-12 * r.norm().max(1.0) {
            for p in [a, b] {
                if (p - closest_on_segment(c, d, p)).norm() <= 1e-12 {
                    out.push(p);
                }
            }
            for p in [c, d] {
                if (p - closest_on_segment(a, b, p)).norm() <= 1e-12 {
                    out.push(p);
                }
            }
        }
        return;
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let eps = 1e-12;
    if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) {
        out.push(a + r * t.clamp(0.0, 1.0));
    }
}

fn line_circle(a: Point2, b: Point2, center: Point2, radius: f64, out: &mut Vec<Point2>) {
    let d = b - a;
    let f = a - center;
    let qa = d.norm_sq();
    let qb = 2.0 * f.dot(d);
    let qc = f.norm_sq() - radius * radius;
    let disc = qb * qb - 4.0 * qa * qc;
    let tol = 1e-12 * qb.abs().max(qa * radius * radius).max(1e-300);
    if disc < -tol {
        return;
    }
    let sq = disc.max(0.0).sqrt();
    let roots: &[f64] = if sq == 0.0 {
        &[-qb / (2.0 * qa)]
    } else {
        &[(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)]
    };
    for &t in roots {
        if (-1e-12..=1.0 + 1e-12).contains(&t) {
            out.push(a + d * t.clamp(0.0, 1.0));
        }
    }
}

fn circle_circle(c0: Point2, r0: f64, c1: Point2, r1: f64, out: &mut Vec<Point2>) {
    let v = c1 - c0;
    let dd = v.norm();
    if dd == 0.0 {
        return;
    }
    let tol = 1e-12 * (r0 + r1).max(1.0);
    if dd > r0 + r1 + tol || dd < (r0 - r1).abs() - tol {
        return;
    }
    let a = (r0 * r0 - r1 * r1 + dd * dd) / (2.0 * dd);
    let h2 = r0 * r0 - a * a;
    let u = v * (1.0 / dd);
    let base = c0 + u * a;
    if h2 <= 0.0 {
        out.push(base);
        return;
    }
    let h = h2.sqrt();
    let n = Point2::new(-u.y, u.x);
    out.push(base + n * h);
    out.push(base - n * h);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stadium_with_equal_endpoints_is_a_disk() {
        let p = Primitive2D::stadium(Point2::new(1.0, 2.0), Point2::new(1.0, 2.0), 0.5);
        assert!(matches!(p, Primitive2D::Disk { .. }));
    }

    #[test]
    fn stadium_bbox() {
        let p = Primitive2D::stadium(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), 1.0);
        assert_eq!(p.bounding_box(), Rect::new(-1.0, 3.0, -1.0, 1.0));
    }

    #[test]
    fn stadium_pieces_cover_boundary() {
        let p = Primitive2D::stadium(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), 1.0);
        let pieces = p.pieces();
        for q in [
            Point2::new(3.0, 0.0),
            Point2::new(-1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, -1.0),
        ] {
            let d = pieces
                .iter()
                .map(|pc| {
                    let mut v = Vec::new();
                    pc.closest_points(q, &mut v);
                    v[0].dist(q)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-12, "{q:?} not on boundary, d={d}");
        }
    }

    #[test]
    fn circle_intersections() {
        let mut out = Vec::new();
        circle_circle(
            Point2::new(-1.0, 0.0),
            1.0,
            Point2::new(1.0, 0.0),
            1.0,
            &mut out,
        );
        assert_eq!(out.len(), 1);
        assert!(out[0].norm() < 1e-12);
        out.clear();
        circle_circle(
            Point2::new(0.0, 0.0),
            1.0,
            Point2::new(1.0, 0.0),
            1.0,
            &mut out,
        );
        assert_eq!(out.len(), 2);
        for q in out {
            assert!(
                (q.norm() - 1.0).abs() < 1e-12
                    && (q.dist(Point2::new(1.0, 0.0)) - 1.0).abs() < 1e-12
            );
        }
    }

    #[test]
    fn containment_between_primitives() {
        let base = Primitive2D::rectangle(0.0, 3.0, 0.0, 2.0);
        assert!(Primitive2D::disk(Point2::new(1.5, 1.0), 0.5).is_inside(&base, 0.0));
        assert!(!Primitive2D::disk(Point2::new(1.5, 1.0), 1.5).is_inside(&base, 0.0));
        let disk = Primitive2D::disk(Point2::ORIGIN, 5.0);
        assert!(Primitive2D::rectangle(0.0, 3.0, 0.0, 2.0).is_inside(&disk, 0.0));
        assert!(!Primitive2D::rectangle(0.0, 4.0, 0.0, 4.0).is_inside(&disk, 0.0));
    }
}
