use serde::{Deserialize, Serialize};

use super::string::{FractalString, GeometricTail};
use super::{FractalError, DIVERGENCE_BUDGET, RATIO_MARGIN};

/// Describes an infinite radii set of which `TargetRadii::values` is a
/// truncation to the first `depth` levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiiGenerator {
    /// `shift + E_q`: endpoints of the complementary intervals of the
    /// middle-interval Cantor set with ratio `q`.
    CantorEndpoints { q: f64, shift: f64, depth: u32 },
    /// The complementary intervals of the Cantor set placed side by side
    /// below 1, largest first; the endpoints accumulate only at 0.
    CantorRearranged { q: f64, depth: u32 },
}

impl RadiiGenerator {
    fn q(&self) -> f64 {
        match *self {
            RadiiGenerator::CantorEndpoints { q, .. }
            | RadiiGenerator::CantorRearranged { q, .. } => q,
        }
    }

    pub fn depth(&self) -> u32 {
        match *self {
            RadiiGenerator::CantorEndpoints { depth, .. }
            | RadiiGenerator::CantorRearranged { depth, .. } => depth,
        }
    }

    /// Radii contributed by level `k` (the gaps of length `(1-2q) q^k`).
    pub fn level_points(&self, k: u32) -> Vec<f64> {
        let q = self.q();
        let len = (1.0 - 2.0 * q) * q.powi(k as i32);
        match *self {
            RadiiGenerator::CantorEndpoints { shift, .. } => {
                let side = q.powi(k as i32);
                cantor_left_ends(q, k)
                    .into_iter()
                    .flat_map(|a| [shift + a + q * side, shift + a + side - q * side])
                    .collect()
            }
            RadiiGenerator::CantorRearranged { .. } => {
                let top = (2.0 * q).powi(k as i32);
                (1..=1u64 << k).map(|j| top - j as f64 * len).collect()
            }
        }
    }

    /// Fractal string of the closure (identical for both layouts).
    pub fn closure_string(&self) -> FractalString {
        let q = self.q();
        let depth = self.depth();
        let mut lengths = Vec::new();
        for k in 0..depth {
            let l = (1.0 - 2.0 * q) * q.powi(k as i32);
            lengths.extend(std::iter::repeat_n(l, 1usize << k));
        }
        let tail = GeometricTail {
            count: 2f64.powi(depth as i32),
            count_ratio: 2.0,
            length: (1.0 - 2.0 * q) * q.powi(depth as i32),
            length_ratio: q,
        };
        FractalString::new(lengths)
            .and_then(|s| s.with_tail(tail))
            .expect("valid cantor string")
    }

    /// `G_α(N̄ ∩ [lo, hi])`.
    fn window_gap_sum(&self, lo: f64, hi: f64, alpha: f64) -> f64 {
        let q = self.q();
        match *self {
            RadiiGenerator::CantorEndpoints { shift, .. } => {
                let full = cantor_closed_form(q, alpha);
                // absorbs the rounding of `s - shift` for radii on the set
                let tol = 4.0 * f64::EPSILON * (1.0 + shift.abs());
                let w = CantorWindow {
                    q,
                    lo: lo - shift,
                    hi: hi - shift,
                    alpha,
                    full,
                    tol,
                };
                w.eval(0.0, 1.0, 0).unwrap_or(0.0)
            }
            RadiiGenerator::CantorRearranged { .. } => rearranged_window(q, lo, hi, alpha),
        }
    }
}

/// `G_α(F_q) = (1-2q)^α / (1 - 2q^α)`, infinite when `2q^α ≥ 1`.
pub fn cantor_closed_form(q: f64, alpha: f64) -> f64 {
    let rho = 2.0 * q.powf(alpha);
    if rho >= 1.0 - RATIO_MARGIN {
        f64::INFINITY
    } else {
        (1.0 - 2.0 * q).powf(alpha) / (1.0 - rho)
    }
}

/// Left endpoints of the `2^k` construction intervals at level `k`.
pub(crate) fn cantor_left_ends(q: f64, k: u32) -> Vec<f64> {
    let mut ends = vec![0.0];
    let mut side = 1.0;
    for _ in 0..k {
        let step = side * (1.0 - q);
        ends = ends.iter().flat_map(|&a| [a, a + step]).collect();
        side *= q;
    }
    ends
}

struct CantorWindow {
    q: f64,
    lo: f64,
    hi: f64,
    alpha: f64,
    /// `G_α(F_q)`.
    full: f64,
    tol: f64,
}

impl CantorWindow {
    /// Gap sum of `(a + len·F_q) ∩ [lo, hi]`; `None` when the intersection is empty.
    fn eval(&self, a: f64, len: f64, depth: u32) -> Option<f64> {
        let b = a + len;
        if self.hi < a - self.tol || self.lo > b + self.tol {
            return None;
        }
        if self.lo <= a + self.tol && self.hi >= b - self.tol {
            return Some(len.powf(self.alpha) * self.full);
        }
        if depth > 64 {
            // far below floating resolution: a single point
            return Some(0.0);
        }
        let q = self.q;
        let left = self.eval(a, q * len, depth + 1);
        let right = self.eval(b - q * len, q * len, depth + 1);
        match (left, right) {
            (Some(l), Some(r)) => Some(l + r + ((1.0 - 2.0 * q) * len).powf(self.alpha)),
            (Some(w), None) | (None, Some(w)) => Some(w),
            (None, None) => None,
        }
    }
}

/// Gap sum of the rearranged endpoint closure restricted to `[lo, hi]`.
fn rearranged_window(q: f64, lo: f64, hi: f64, alpha: f64) -> f64 {
    let mut s = 0.0;
    let lo = lo.max(0.0);
    let slack = 1e-9;
    let ln_base = (1.0 - 2.0 * q).ln();
    for k in 0..4000u32 {
        let top = (2.0 * q).powi(k as i32);
        let bottom = 2.0 * q * top;
        if top < lo || top == 0.0 {
            break;
        }
        let len = (1.0 - 2.0 * q) * q.powi(k as i32);
        // 2^k gaps of length len, summed in log space
        let level =
            (k as f64 * std::f64::consts::LN_2 + alpha * (ln_base + k as f64 * q.ln())).exp();
        if bottom >= lo && top <= hi {
            if lo == 0.0 {
                // every deeper level lies in the window as well
                let rho = 2.0 * q.powf(alpha);
                if rho >= 1.0 - RATIO_MARGIN {
                    return f64::INFINITY;
                }
                return s + level / (1.0 - rho);
            }
            s += level;
        } else {
            // gap j spans [top - j len, top - (j-1) len], j = 1..=2^k
            let count = 2f64.powi(k as i32);
            let jmax = ((top - lo) / len + slack).floor().min(count);
            let jmin = ((top - hi) / len + 1.0 - slack).ceil().max(1.0);
            if jmax >= jmin {
                s += (jmax - jmin + 1.0) * len.powf(alpha);
            }
        }
        if s > DIVERGENCE_BUDGET {
            return f64::INFINITY;
        }
    }
    s
}

/// Prescribed set `N` of radii: an explicit strictly decreasing list,
/// accumulation points adjoined in the closure, and an optional generator
/// describing the full infinite set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RadiiRepr", into = "RadiiRepr")]
pub struct TargetRadii {
    values: Vec<f64>,
    closure_extra: Vec<f64>,
    origin_accumulates: bool,
    generator: Option<RadiiGenerator>,
}

#[derive(Serialize, Deserialize)]
struct RadiiRepr {
    values: Vec<f64>,
    #[serde(default)]
    closure_extra: Vec<f64>,
    #[serde(default)]
    origin_accumulates: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<RadiiGenerator>,
}

impl TryFrom<RadiiRepr> for TargetRadii {
    type Error = FractalError;
    fn try_from(r: RadiiRepr) -> Result<Self, FractalError> {
        let mut t = TargetRadii::new(r.values, r.closure_extra, r.origin_accumulates)?;
        t.generator = r.generator;
        Ok(t)
    }
}

impl From<TargetRadii> for RadiiRepr {
    fn from(t: TargetRadii) -> Self {
        RadiiRepr {
            values: t.values,
            closure_extra: t.closure_extra,
            origin_accumulates: t.origin_accumulates,
            generator: t.generator,
        }
    }
}

fn check_q(q: f64) -> Result<(), FractalError> {
    if q > 0.0 && q < 0.5 {
        Ok(())
    } else {
        Err(FractalError::InvalidInput(format!(
            "Cantor ratio q={q} must lie in (0, 1/2)"
        )))
    }
}

impl TargetRadii {
    pub fn new(
        mut values: Vec<f64>,
        mut closure_extra: Vec<f64>,
        origin_accumulates: bool,
    ) -> Result<Self, FractalError> {
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(FractalError::InvalidInput(
                "radii must be positive and finite".into(),
            ));
        }
        if closure_extra.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(FractalError::InvalidInput(
                "closure points must be nonnegative and finite".into(),
            ));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(FractalError::InvalidInput("radii must be distinct".into()));
        }
        closure_extra.sort_by(|a, b| b.total_cmp(a));
        closure_extra.dedup();
        if closure_extra.iter().any(|c| values.contains(c)) {
            return Err(FractalError::InvalidInput(
                "closure points must not repeat listed radii".into(),
            ));
        }
        Ok(Self {
            values,
            closure_extra,
            origin_accumulates,
            generator: None,
        })
    }

    pub fn finite(values: Vec<f64>) -> Result<Self, FractalError> {
        Self::new(values, Vec::new(), false)
    }

    /// `shift + E_q` truncated to the gaps of the first `depth` levels.
    pub fn cantor_endpoints(q: f64, shift: f64, depth: u32) -> Result<Self, FractalError> {
        check_q(q)?;
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(FractalError::InvalidInput(
                "shift must be nonnegative".into(),
            ));
        }
        let generator = RadiiGenerator::CantorEndpoints { q, shift, depth };
        let values: Vec<f64> = (0..depth).flat_map(|k| generator.level_points(k)).collect();
        let extra: Vec<f64> = if shift > 0.0 {
            vec![shift, shift + 1.0]
        } else {
            vec![1.0]
        };
        let mut t = Self::new(values, extra, shift == 0.0)?;
        t.generator = Some(generator);
        Ok(t)
    }

    /// `E'_q = {1, 2q, 2q²+q, 4q², …}` truncated after `depth` levels.
    pub fn cantor_rearranged(q: f64, depth: u32) -> Result<Self, FractalError> {
        check_q(q)?;
        let generator = RadiiGenerator::CantorRearranged { q, depth };
        let values: Vec<f64> = std::iter::once(1.0)
            .chain((0..depth).flat_map(|k| generator.level_points(k)))
            .collect();
        let mut t = Self::new(values, Vec::new(), true)?;
        t.generator = Some(generator);
        Ok(t)
    }

    /// Listed radii, largest first.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn closure_extra(&self) -> &[f64] {
        &self.closure_extra
    }

    pub fn origin_accumulates(&self) -> bool {
        self.origin_accumulates
    }

    pub fn generator(&self) -> Option<&RadiiGenerator> {
        self.generator.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max N̄`.
    pub fn max_closure(&self) -> f64 {
        self.values
            .iter()
            .chain(&self.closure_extra)
            .copied()
            .fold(0.0, f64::max)
    }

    /// `min N̄` (0 when the set accumulates at the origin).
    pub fn min_closure(&self) -> f64 {
        if self.origin_accumulates {
            return 0.0;
        }
        self.values
            .iter()
            .chain(&self.closure_extra)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// True when `N̄` is known exactly: either finite, or generator-backed.
    pub fn closure_is_exact(&self) -> bool {
        self.generator.is_some() || !self.origin_accumulates
    }

    /// Sorted (increasing) points of the closure of the listed radii.
    pub fn closure_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .values
            .iter()
            .chain(&self.closure_extra)
            .copied()
            .collect();
        if self.origin_accumulates {
            pts.push(0.0);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Fractal string of `N̄`.
    pub fn closure_string(&self) -> FractalString {
        if let Some(g) = &self.generator {
            return g.closure_string();
        }
        let pts = self.closure_points();
        FractalString::new(pts.windows(2).map(|w| w[1] - w[0]).collect()).expect("distinct points")
    }

    /// `G_α(N̄ ∩ [lo, hi])`.
    pub fn window_gap_sum(&self, lo: f64, hi: f64, alpha: f64) -> f64 {
        if let Some(g) = &self.generator {
            return g.window_gap_sum(lo, hi, alpha);
        }
        let pts: Vec<f64> = self
            .closure_points()
            .into_iter()
            .filter(|p| *p >= lo && *p <= hi)
            .collect();
        pts.windows(2).map(|w| (w[1] - w[0]).powf(alpha)).sum()
    }

    /// `Σ_{s∈N} s^p`, using the generator's levels for infinite sets.
    pub fn power_sum(&self, p: f64) -> f64 {
        let Some(g) = &self.generator else {
            return self.values.iter().map(|s| s.powf(p)).sum();
        };
        let mut s: f64 = match g {
            RadiiGenerator::CantorRearranged { .. } => 1.0,
            RadiiGenerator::CantorEndpoints { .. } => 0.0,
        };
        let levels = 18;
        let mut prev = f64::NAN;
        let mut last = 0.0;
        for k in 0..levels {
            last = g.level_points(k).iter().map(|x| x.powf(p)).sum::<f64>();
            s += last;
            if k + 1 < levels {
                prev = last;
            }
        }
        let rho = last / prev;
        if rho >= 1.0 - RATIO_MARGIN || s > DIVERGENCE_BUDGET {
            return f64::INFINITY;
        }
        s + last * rho / (1.0 - rho)
    }
}

/// `G_{1/2}(N̄ ∩ [r, ∞))`.
pub fn tail_gap_sum(n: &TargetRadii, r: f64) -> f64 {
    n.window_gap_sum(r, f64::INFINITY, 0.5)
}

/// Rows `(r, G_{1/2}(N̄ ∩ [r, ∞)))` as CSV with a header line.
pub fn tail_gap_csv(n: &TargetRadii, radii: &[f64]) -> String {
    let mut out = String::from("r,tail_gap_sum\n");
    for &r in radii {
        out.push_str(&format!("{:.16e},{:.16e}\n", r, tail_gap_sum(n, r)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force: enumerate the closure points above `r` and sum gaps.
    fn brute_tail(points: &[f64], r: f64) -> f64 {
        let mut p: Vec<f64> = points.iter().copied().filter(|x| *x >= r).collect();
        p.sort_by(f64::total_cmp);
        p.windows(2).map(|w| (w[1] - w[0]).sqrt()).sum()
    }

    #[test]
    fn tail_examples() {
        let n = TargetRadii::finite(vec![1.0, 0.5, 0.25]).unwrap();
        assert!((tail_gap_sum(&n, 0.3) - 0.5f64.sqrt()).abs() < 1e-15);
        let one = TargetRadii::finite(vec![1.0]).unwrap();
        assert_eq!(tail_gap_sum(&one, 0.5), 0.0);
        assert_eq!(tail_gap_sum(&n, 2.0), 0.0);
    }

    #[test]
    fn rearranged_points() {
        let q = 0.3;
        let e = TargetRadii::cantor_rearranged(q, 3).unwrap();
        let v = e.values();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 2.0 * q).abs() < 1e-15);
        assert!((v[2] - (2.0 * q * q + q)).abs() < 1e-15);
        assert!((v[3] - 4.0 * q * q).abs() < 1e-15);
        assert_eq!(v.len(), 1 + 1 + 2 + 4);
    }

    #[test]
    fn rearranged_tail_matches_enumeration() {
        let q = 0.3;
        let e = TargetRadii::cantor_rearranged(q, 14).unwrap();
        let mut pts = e.values().to_vec();
        pts.push(0.0);
        for r in [0.9, 0.6, 0.45, 0.2, 0.05, 0.01] {
            let got = tail_gap_sum(&e, r);
            let want = brute_tail(&pts, r);
            assert!(
                (got - want).abs() < 1e-9 * want.max(1.0),
                "r={r}: {got} vs {want}"
            );
        }
    }

    /// Gaps of `F_q ∩ [r, ∞)` are exactly the gaps of `F_q` whose left end
    /// is at least `r`; lengths are taken analytically per level.
    fn brute_cantor_tail(q: f64, depth: u32, r: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..depth {
            let side = q.powi(k as i32);
            let len = ((1.0 - 2.0 * q) * side).sqrt();
            s += cantor_left_ends(q, k)
                .iter()
                .filter(|&&a| a + q * side >= r)
                .count() as f64
                * len;
        }
        s
    }

    #[test]
    fn cantor_window_matches_deep_enumeration() {
        // levels >= 20 contribute at most 2 * 2^-20 for q = 1/16
        let q = 1.0 / 16.0;
        let e = TargetRadii::cantor_endpoints(q, 0.0, 3).unwrap();
        for r in [0.995, 0.95, 0.7, 0.5, 0.1, 0.0601, 0.004, 0.0] {
            let got = tail_gap_sum(&e, r);
            let want = brute_cantor_tail(q, 20, r);
            assert!((got - want).abs() < 5e-6, "r={r}: {got} vs {want}");
        }
        assert!((tail_gap_sum(&e, 0.0) - cantor_closed_form(q, 0.5)).abs() < 1e-12);
        let shifted = TargetRadii::cantor_endpoints(q, 0.5, 3).unwrap();
        assert!((tail_gap_sum(&shifted, 0.6) - tail_gap_sum(&e, 0.1)).abs() < 1e-12);
    }

    #[test]
    fn cantor_tail_diverges_for_large_q() {
        let e = TargetRadii::cantor_endpoints(0.3, 0.0, 8).unwrap();
        assert!(tail_gap_sum(&e, 0.5).is_infinite());
        assert!(tail_gap_sum(&e, 0.99).is_infinite());
    }

    #[test]
    fn power_sums() {
        let n = TargetRadii::finite(vec![1.0, 0.5]).unwrap();
        assert_eq!(n.power_sum(1.0), 1.5);
        let e = TargetRadii::cantor_rearranged(0.3, 10).unwrap();
        // level sums of s^2 shrink by about 8q^2 = 0.72
        assert!(e.power_sum(2.0).is_finite());
        assert!(e.power_sum(1.0).is_infinite());
        assert!(TargetRadii::cantor_endpoints(0.1, 0.0, 8)
            .unwrap()
            .power_sum(2.0)
            .is_infinite());
    }

    #[test]
    fn serde_round_trip() {
        let e = TargetRadii::cantor_rearranged(0.3, 4).unwrap();
        let js = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<TargetRadii>(&js).unwrap(), e);
        assert!(serde_json::from_str::<TargetRadii>(r#"{"values":[1,-1]}"#).is_err());
    }

    proptest! {
        #[test]
        fn tail_gap_sum_is_non_increasing(vals in prop::collection::btree_set(1u32..10_000, 1..20),
                                          r1 in 0.0f64..1.2, dr in 0.0f64..0.5) {
            let n = TargetRadii::finite(vals.iter().map(|v| *v as f64 / 10_000.0).collect()).unwrap();
            prop_assert!(tail_gap_sum(&n, r1 + dr) <= tail_gap_sum(&n, r1) + 1e-12);
        }

        #[test]
        fn rearranged_tail_is_non_increasing(q in 0.26f64..0.42, r1 in 0.001f64..1.0, dr in 0.0f64..0.5) {
            let e = TargetRadii::cantor_rearranged(q, 6).unwrap();
            prop_assert!(tail_gap_sum(&e, r1 + dr) <= tail_gap_sum(&e, r1) * (1.0 + 1e-12) + 1e-12);
        }
    }
}
