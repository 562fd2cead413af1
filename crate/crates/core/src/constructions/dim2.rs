use serde::{Deserialize, Serialize};

use super::{ConstructionError, GammaPolicy};
use crate::fractal::{check_dim2_conditions, TargetRadii};
use crate::geometry::{Geometry2D, Point2, Primitive2D, Rect};

/// Data attached to one radius of the closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusEntry {
    pub s: f64,
    /// `g(s) = √(2b) G_{1/2}(N̄ ∩ [ε, s])`.
    pub g: f64,
    /// Segment length; zero for closure points outside `N`.
    pub gamma: f64,
    /// `Γ_s = Σ_{t<s} γ_t`.
    pub gamma_before: f64,
    /// `J_s = [g + Γ_s, g + Γ_s + γ_s]`.
    pub j: (f64, f64),
    pub in_n: bool,
    /// Predicted jump of the derivative of the volume at `s`: `2γ_s`.
    pub predicted_jump: f64,
    /// The removed ball of radius `s` touches the top and bottom sides of
    /// the enclosing rectangle (happens for `s = b`).
    pub touches_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionMetadata2D {
    /// `max N̄`, also the half-height of the rectangle.
    pub b: f64,
    pub eps: f64,
    /// `G_{1/2}(N̄)` of the realized set.
    pub gap_sum_half: f64,
    /// `Γ = Σ γ_s`.
    pub total_gamma: f64,
    /// Entries sorted by increasing radius.
    pub radii: Vec<RadiusEntry>,
    pub rect: Rect,
    pub geometry: Geometry2D,
}

impl ConstructionMetadata2D {
    /// `max_s max J_s`.
    pub fn max_j(&self) -> f64 {
        self.radii
            .iter()
            .map(|e| e.j.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Critical segments `J_s × {0}` for `s ∈ N`.
    pub fn critical_segments(&self) -> Vec<(f64, (Point2, Point2))> {
        self.radii
            .iter()
            .filter(|e| e.in_n)
            .map(|e| (e.s, (Point2::new(e.j.0, 0.0), Point2::new(e.j.1, 0.0))))
            .collect()
    }

    pub fn entry(&self, s: f64) -> Option<&RadiusEntry> {
        self.radii.iter().find(|e| e.s == s)
    }
}

/// Shared builder: `listed` are the radii of `N` (any order) with their
/// segment lengths, `extra` are closure points outside `N`; `window`
/// evaluates `G_{1/2}(N̄ ∩ [lo, hi])`.
pub(crate) fn build(
    listed: &[(f64, f64)],
    extra: &[f64],
    b: f64,
    eps: f64,
    window: &dyn Fn(f64, f64) -> f64,
) -> Result<ConstructionMetadata2D, ConstructionError> {
    let mut all: Vec<(f64, f64, bool)> = listed.iter().map(|&(s, g)| (s, g, true)).collect();
    all.extend(extra.iter().filter(|&&s| s > 0.0).map(|&s| (s, 0.0, false)));
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let scale = (2.0 * b).sqrt();
    let mut radii = Vec::with_capacity(all.len());
    let mut before = 0.0;
    for &(s, gamma, in_n) in &all {
        let g = scale * window(eps, s);
        let lo = g + before;
        radii.push(RadiusEntry {
            s,
            g,
            gamma,
            gamma_before: before,
            j: (lo, lo + gamma),
            in_n,
            predicted_jump: 2.0 * gamma,
            touches_boundary: s >= b,
        });
        before += gamma;
    }
    let total_gamma = before;
    let smax = all.last().map_or(b, |e| e.0);
    let gap_sum_half = window(eps, smax);
    let rect = Rect::new(-b, b + scale * gap_sum_half + total_gamma, -b, b);
    check_separation(&radii)?;
    let removed = radii
        .iter()
        .map(|e| Primitive2D::stadium(Point2::new(e.j.0, 0.0), Point2::new(e.j.1, 0.0), e.s))
        .collect();
    let geometry = Geometry2D::difference(
        Primitive2D::rectangle(rect.xmin, rect.xmax, rect.ymin, rect.ymax),
        removed,
    )?;
    Ok(ConstructionMetadata2D {
        b,
        eps,
        gap_sum_half,
        total_gamma,
        radii,
        rect,
        geometry,
    })
}

/// `(x' - x)² + s² ≥ s'²` for consecutive radii `s < s'`, with `x' - x` the
/// smallest horizontal offset between `J_{s'}` and `J_s`. Consecutive pairs
/// suffice: offsets add up along the chain while squared radii telescope.
fn check_separation(radii: &[RadiusEntry]) -> Result<(), ConstructionError> {
    for w in radii.windows(2) {
        let (a, c) = (&w[0], &w[1]);
        let dx = c.j.0 - a.j.1;
        let lhs = dx * dx + a.s * a.s;
        let rhs = c.s * c.s;
        if dx < 0.0 || lhs < rhs * (1.0 - 1e-12) {
            return Err(ConstructionError::SeparationCheckFailed(format!(
                "radii {} and {}: offset {dx} too small",
                a.s, c.s
            )));
        }
    }
    Ok(())
}

/// `A = R \ int B` with `B` the union of the stadiums `J_s × {0} ⊕ B(0, s)`.
pub fn construct_dim2_eps(
    n: &TargetRadii,
    eps: f64,
    policy: &GammaPolicy,
) -> Result<ConstructionMetadata2D, ConstructionError> {
    if n.is_empty() {
        return Err(ConstructionError::EmptyTarget);
    }
    let report = check_dim2_conditions(n, eps)?;
    if !report.verdict_i {
        return Err(ConstructionError::ConditionViolated(format!(
            "needs min N̄ ≥ eps > 0 and a finite gap sum (min N̄ = {}, G = {})",
            report.min_closure, report.gap_sum_half
        )));
    }
    let eps = if eps > 0.0 { eps } else { report.min_closure };
    let values = n.values();
    let min_s = values[values.len() - 1];
    let gammas = policy.gammas(values.len(), min_s)?;
    let listed: Vec<(f64, f64)> = values.iter().copied().zip(gammas).collect();
    let window = |lo: f64, hi: f64| n.window_gap_sum(lo, hi, 0.5);
    let mut meta = build(&listed, n.closure_extra(), n.max_closure(), eps, &window)?;
    // The explicit list may be a truncation; the rectangle follows the full closure.
    meta.gap_sum_half = report.gap_sum_half;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_radius() {
        let n = TargetRadii::finite(vec![1.0]).unwrap();
        let m = construct_dim2_eps(&n, 1.0, &GammaPolicy::geometric(0.2)).unwrap();
        assert_eq!(m.b, 1.0);
        assert_eq!(m.radii[0].g, 0.0);
        assert_eq!(m.radii[0].j, (0.0, 0.2));
        assert_eq!(m.rect, Rect::new(-1.0, 1.2, -1.0, 1.0));
        assert!(m.radii[0].touches_boundary);
        let want = Geometry2D::difference(
            Primitive2D::rectangle(-1.0, 1.2, -1.0, 1.0),
            vec![Primitive2D::stadium(
                Point2::ORIGIN,
                Point2::new(0.2, 0.0),
                1.0,
            )],
        )
        .unwrap();
        assert_eq!(m.geometry, want);
    }

    #[test]
    fn two_radii_hand_trace() {
        let n = TargetRadii::finite(vec![1.0, 0.5]).unwrap();
        let m = construct_dim2_eps(&n, 0.5, &GammaPolicy::geometric(0.1)).unwrap();
        let half = m.entry(0.5).unwrap();
        let one = m.entry(1.0).unwrap();
        assert_eq!(half.j, (0.0, 0.05));
        assert!((one.g - 1.0).abs() < 1e-15);
        assert!((one.j.0 - 1.05).abs() < 1e-15 && (one.j.1 - 1.15).abs() < 1e-15);
        assert!((m.total_gamma - 0.15).abs() < 1e-15);
        assert!((m.rect.xmax - 2.15).abs() < 1e-15);
        assert!((one.predicted_jump - 0.2).abs() < 1e-15);
        assert!((m.max_j() - ((2.0f64).sqrt() * m.gap_sum_half + m.total_gamma)).abs() < 1e-12);
    }

    #[test]
    fn separating_points_belong_to_the_set() {
        let n = TargetRadii::finite(vec![1.0, 0.8, 0.5, 0.45, 0.3]).unwrap();
        let m = construct_dim2_eps(&n, 0.3, &GammaPolicy::default()).unwrap();
        for e in &m.radii {
            for t in 0..=10 {
                let x = e.j.0 + (e.j.1 - e.j.0) * t as f64 / 10.0;
                assert!(m.geometry.contains(Point2::new(x, e.s)));
                assert!(m.geometry.contains(Point2::new(x, -e.s)));
            }
        }
        assert!((m.max_j() - ((2.0f64).sqrt() * m.gap_sum_half + m.total_gamma)).abs() < 1e-12);
    }

    #[test]
    fn rejects_sets_touching_zero() {
        let e = TargetRadii::cantor_endpoints(0.1, 0.0, 4).unwrap();
        assert!(matches!(
            construct_dim2_eps(&e, 0.0, &GammaPolicy::default()),
            Err(ConstructionError::ConditionViolated(_))
        ));
        assert!(matches!(
            construct_dim2_eps(
                &TargetRadii::finite(vec![1.0]).unwrap(),
                2.0,
                &GammaPolicy::default()
            ),
            Err(ConstructionError::ConditionViolated(_))
        ));
    }

    #[test]
    fn shifted_cantor_endpoints() {
        let n = TargetRadii::cantor_endpoints(0.1, 0.5, 3).unwrap();
        let m = construct_dim2_eps(&n, 0.5, &GammaPolicy::default()).unwrap();
        assert_eq!(m.radii.iter().filter(|e| e.in_n).count(), n.values().len());
        assert_eq!(m.radii.len(), n.values().len() + 2);
    }
}
