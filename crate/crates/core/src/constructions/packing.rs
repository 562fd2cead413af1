use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Rect};

/// Translates that place the input rectangles pairwise disjointly inside
/// the disk `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    pub shifts: Vec<Point2>,
    pub center: Point2,
    pub radius: f64,
}

impl Packing {
    pub fn placed(&self, rects: &[Rect]) -> Vec<Rect> {
        rects
            .iter()
            .zip(&self.shifts)
            .map(|(r, s)| r.translate(*s))
            .collect()
    }
}

/// Relative padding between neighbours, as a fraction of the smaller side.
const PAD: f64 = 0.05;

/// Shelf next-fit decreasing height inside a strip of width
/// `max(widest, √(2·Σ padded area))`. The tallest rectangle keeps its
/// position; the disk is circumscribed about the layout's bounding box.
pub fn pack_rectangles(rects: &[Rect]) -> Packing {
    if rects.is_empty() {
        return Packing {
            shifts: Vec::new(),
            center: Point2::ORIGIN,
            radius: 0.0,
        };
    }
    let pads: Vec<f64> = rects
        .iter()
        .map(|r| PAD * r.width().min(r.height()))
        .collect();
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_by(|&i, &j| {
        rects[j]
            .height()
            .total_cmp(&rects[i].height())
            .then(rects[j].width().total_cmp(&rects[i].width()))
            .then(i.cmp(&j))
    });
    let cell = |i: usize| (rects[i].width() + pads[i], rects[i].height() + pads[i]);
    let widest = (0..rects.len()).map(|i| cell(i).0).fold(0.0, f64::max);
    let area: f64 = (0..rects.len()).map(|i| cell(i).0 * cell(i).1).sum();
    let strip = widest.max((2.0 * area).sqrt());

    let mut lower_left = vec![Point2::ORIGIN; rects.len()];
    let (mut x, mut y, mut shelf_h) = (0.0, 0.0, 0.0);
    for &i in &order {
        let (w, h) = cell(i);
        if x > 0.0 && x + w > strip {
            y += shelf_h;
            x = 0.0;
            shelf_h = 0.0;
        }
        lower_left[i] = Point2::new(x + 0.5 * pads[i], y + 0.5 * pads[i]);
        x += w;
        shelf_h = f64::max(shelf_h, h);
    }
    let first = order[0];
    let offset = Point2::new(rects[first].xmin, rects[first].ymin) - lower_left[first];
    let shifts: Vec<Point2> = (0..rects.len())
        .map(|i| lower_left[i] + offset - Point2::new(rects[i].xmin, rects[i].ymin))
        .collect();
    let bbox = rects
        .iter()
        .zip(&shifts)
        .map(|(r, s)| r.translate(*s))
        .reduce(|a, b| a.union(&b))
        .expect("nonempty");
    Packing {
        shifts,
        center: bbox.center(),
        radius: 0.5 * bbox.diagonal(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_disjoint_inside(rects: &[Rect], p: &Packing) {
        let placed = p.placed(rects);
        for (i, a) in placed.iter().enumerate() {
            for b in &placed[i + 1..] {
                assert!(!a.intersects(b), "{a:?} meets {b:?}");
            }
            for c in a.corners() {
                assert!(c.dist(p.center) <= p.radius * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn single_rect() {
        let r = Rect::new(-1.0, 2.15, -1.0, 1.0);
        let p = pack_rectangles(&[r]);
        assert_eq!(p.shifts, vec![Point2::ORIGIN]);
        assert!((p.radius - 0.5 * r.diagonal()).abs() < 1e-15);
        assert_eq!(p.center, r.center());
    }

    #[test]
    fn two_unit_squares() {
        let rects = [Rect::new(0.0, 1.0, 0.0, 1.0); 2];
        let p = pack_rectangles(&rects);
        assert_disjoint_inside(&rects, &p);
        assert!(p.radius <= 2.5);
    }

    #[test]
    fn shrinking_squares_stay_bounded() {
        // Shelf accounting: every shelf but the first is at most as tall as
        // the last item of the previous one, so the total height is below
        // (area / strip) plus the tallest item.
        let rects: Vec<Rect> = (1..=100)
            .map(|k| Rect::new(0.0, 1.0 / k as f64, 0.0, 1.0 / k as f64))
            .collect();
        let p = pack_rectangles(&rects);
        assert_disjoint_inside(&rects, &p);
        let area: f64 = (1..=100).map(|k| (1.05 / k as f64).powi(2)).sum();
        let strip = (2.0 * area).sqrt();
        let height_bound = 1.05 + area / strip * 2.0;
        assert!(p.radius <= 0.5 * (strip * strip + height_bound * height_bound).sqrt());
    }
}
