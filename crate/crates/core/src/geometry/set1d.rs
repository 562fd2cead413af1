use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Compact subset of the line: finitely many isolated points plus finitely
/// many closed intervals, all pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Set1DRepr", into = "Set1DRepr")]
pub struct Set1D {
    points: Vec<f64>,
    intervals: Vec<(f64, f64)>,
    /// Points and intervals merged into sorted connected components.
    components: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct Set1DRepr {
    points: Vec<f64>,
    intervals: Vec<(f64, f64)>,
}

impl TryFrom<Set1DRepr> for Set1D {
    type Error = GeometryError;
    fn try_from(r: Set1DRepr) -> Result<Self, Self::Error> {
        Set1D::new(r.points, r.intervals)
    }
}

impl From<Set1D> for Set1DRepr {
    fn from(s: Set1D) -> Self {
        Set1DRepr {
            points: s.points,
            intervals: s.intervals,
        }
    }
}

impl Set1D {
    pub fn new(
        mut points: Vec<f64>,
        mut intervals: Vec<(f64, f64)>,
    ) -> Result<Self, GeometryError> {
        if points.iter().any(|p| !p.is_finite())
            || intervals
                .iter()
                .any(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(GeometryError::Invalid(
                "Set1D coordinates must be finite".into(),
            ));
        }
        if points.is_empty() && intervals.is_empty() {
            return Err(GeometryError::Invalid("Set1D must be nonempty".into()));
        }
        points.sort_by(f64::total_cmp);
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GeometryError::Invalid(
                "Set1D points must be distinct".into(),
            ));
        }
        if intervals.iter().any(|(a, b)| a > b) {
            return Err(GeometryError::Invalid("Set1D interval with lo > hi".into()));
        }
        intervals.sort_by(|u, v| u.0.total_cmp(&v.0));
        let mut components: Vec<(f64, f64)> = points
            .iter()
            .map(|&p| (p, p))
            .chain(intervals.iter().copied())
            .collect();
        components.sort_by(|u, v| u.0.total_cmp(&v.0));
        if components.windows(2).any(|w| w[1].0 <= w[0].1) {
            return Err(GeometryError::Invalid(
                "Set1D components must be pairwise disjoint".into(),
            ));
        }
        Ok(Self {
            points,
            intervals,
            components,
        })
    }

    /// Finite point set.
    pub fn from_points(points: Vec<f64>) -> Result<Self, GeometryError> {
        Self::new(points, Vec::new())
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self, GeometryError> {
        Self::new(Vec::new(), vec![(lo, hi)])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Sorted connected components; isolated points appear as `(p, p)`.
    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    pub fn min(&self) -> f64 {
        self.components[0].0
    }

    pub fn max(&self) -> f64 {
        self.components[self.components.len() - 1].1
    }

    /// Lengths of the bounded complementary intervals, in left-to-right order.
    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.components.windows(2).map(|w| w[1].0 - w[0].1)
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.components.partition_point(|c| c.1 < x);
        i < self.components.len() && self.components[i].0 <= x
    }

    pub fn distance(&self, x: f64) -> f64 {
        let i = self.components.partition_point(|c| c.1 < x);
        let mut d = f64::INFINITY;
        if i < self.components.len() {
            d = d.min((self.components[i].0 - x).max(0.0));
        }
        if i > 0 {
            d = d.min(x - self.components[i - 1].1);
        }
        d
    }

    /// Length of the open parallel set `{x : d(x, A) < r}`.
    pub fn parallel_volume(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.intervals.iter().map(|(a, b)| b - a).sum();
        }
        let solid: f64 = self.components.iter().map(|(a, b)| b - a).sum();
        solid + 2.0 * r + self.gaps().map(|g| g.min(2.0 * r)).sum::<f64>()
    }

    /// Exact one-sided derivatives `(left, right)` of the parallel volume at `r > 0`.
    pub fn parallel_volume_derivatives(&self, r: f64) -> (f64, f64) {
        let (mut left, mut right) = (2.0, 2.0);
        for g in self.gaps() {
            if g >= 2.0 * r {
                left += 2.0;
            }
            if g > 2.0 * r {
                right += 2.0;
            }
        }
        (left, right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_overlap_and_empty() {
        assert!(Set1D::new(vec![0.5], vec![(0.0, 1.0)]).is_err());
        assert!(Set1D::new(vec![], vec![]).is_err());
        assert!(Set1D::new(vec![], vec![(0.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn volume_of_three_points() {
        let a = Set1D::from_points(vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.parallel_volume(0.25), 1.5);
        assert_eq!(a.parallel_volume(0.75), 4.0);
        assert_eq!(a.parallel_volume(2.0), 7.0);
        assert_eq!(a.parallel_volume_derivatives(0.5), (6.0, 4.0));
    }

    #[test]
    fn distance_and_membership() {
        let a = Set1D::new(vec![0.0, 1.0, 3.0], vec![(5.0, 6.0)]).unwrap();
        assert!(a.contains(5.5) && a.contains(3.0) && !a.contains(4.0));
        assert!((a.distance(4.2) - 0.8).abs() < 1e-15);
        assert_eq!(a.distance(7.0), 1.0);
        assert_eq!(a.distance(-1.0), 1.0);
    }
}
