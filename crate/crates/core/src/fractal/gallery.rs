use serde::Serialize;

use super::radii::{cantor_closed_form, cantor_left_ends, RadiiGenerator, TargetRadii};
use super::string::FractalString;
use super::FractalError;
use crate::geometry::Set1D;

/// Middle-interval Cantor set `F_q` and the radii sets built from it.
#[derive(Debug, Clone, Serialize)]
pub struct CantorGallery {
    pub q: f64,
    pub depth: u32,
    /// Depth of the point sets `f_q`, `e_q` and `e_q_prime`: the requested
    /// depth, lowered so that construction intervals stay above
    /// [`MIN_SIDE`] and distinct endpoints stay distinct in floating point.
    pub set_depth: u32,
    /// The `2^set_depth` construction intervals of length `q^set_depth`.
    pub f_q: Set1D,
    /// String of `F_q` itself: explicit gaps up to `depth` plus the geometric tail.
    pub f_q_string: FractalString,
    pub e_q: TargetRadii,
    pub e_q_prime: TargetRadii,
}

impl CantorGallery {
    /// `G_α(F_q)` in closed form (`+∞` when `2q^α ≥ 1`).
    pub fn closed_form_gap_sum(&self, alpha: f64) -> f64 {
        cantor_closed_form(self.q, alpha)
    }

    /// `log 2 / log(1/q)`.
    pub fn minkowski_dimension(&self) -> f64 {
        std::f64::consts::LN_2 / (1.0 / self.q).ln()
    }

    /// Number of gaps of each level among the explicit lengths.
    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.depth as usize];
        for l in self.f_q_string.lengths() {
            let k = ((l / (1.0 - 2.0 * self.q)).ln() / self.q.ln()).round() as usize;
            counts[k] += 1;
        }
        counts
    }
}

/// Smallest construction interval materialized by [`cantor_gallery`].
pub const MIN_SIDE: f64 = 1e-12;

pub fn cantor_gallery(q: f64, depth: u32) -> Result<CantorGallery, FractalError> {
    if !(q > 0.0 && q < 0.5) {
        return Err(FractalError::InvalidInput(format!(
            "q={q} must lie in (0, 1/2)"
        )));
    }
    if depth == 0 || depth > 24 {
        return Err(FractalError::InvalidInput(
            "depth must be between 1 and 24".into(),
        ));
    }
    let set_depth = (1..=depth)
        .take_while(|k| q.powi(*k as i32) >= MIN_SIDE)
        .last()
        .unwrap_or(1);
    let side = q.powi(set_depth as i32);
    let intervals = cantor_left_ends(q, set_depth)
        .into_iter()
        .map(|a| (a, a + side))
        .collect();
    let f_q =
        Set1D::new(Vec::new(), intervals).map_err(|e| FractalError::InvalidInput(e.to_string()))?;
    let f_q_string = RadiiGenerator::CantorEndpoints {
        q,
        shift: 0.0,
        depth,
    }
    .closure_string();
    Ok(CantorGallery {
        q,
        depth,
        set_depth,
        f_q,
        f_q_string,
        e_q: TargetRadii::cantor_endpoints(q, 0.0, set_depth)?,
        e_q_prime: TargetRadii::cantor_rearranged(q, set_depth)?,
    })
}

/// Number of cells `[kδ, (k+1)δ)` meeting `a`.
fn mesh_count(a: &Set1D, delta: f64) -> u64 {
    let mut count = 0u64;
    let mut last: Option<i64> = None;
    for &(lo, hi) in a.components() {
        let i0 = (lo / delta).floor() as i64;
        let i1 = (hi / delta).floor() as i64;
        let start = match last {
            Some(l) if i0 <= l => l + 1,
            _ => i0,
        };
        if i1 >= start {
            count += (i1 - start + 1) as u64;
        }
        last = Some(last.map_or(i1, |l| l.max(i1)));
    }
    count
}

/// Least-squares slope of `log N(δ)` against `log(1/δ)`.
pub fn box_counting_dimension(a: &Set1D, scales: &[f64]) -> Result<f64, FractalError> {
    if scales.len() < 4 || scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(FractalError::InvalidInput(
            "need at least 4 positive scales".into(),
        ));
    }
    let (smin, smax) = scales.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
        (lo.min(*s), hi.max(*s))
    });
    if smax / smin < 100.0 {
        return Err(FractalError::InvalidInput(
            "scales must span at least two decades".into(),
        ));
    }
    let xs: Vec<f64> = scales.iter().map(|s| -s.ln()).collect();
    let ys: Vec<f64> = scales
        .iter()
        .map(|&s| (mesh_count(a, s) as f64).ln())
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    if stderr > 0.05 {
        return Err(FractalError::DegenerateFit(format!(
            "slope {slope:.4} with standard error {stderr:.4}"
        )));
    }
    Ok(slope)
}

#[cfg(test)]
mod tests {
    use super::super::string::fractal_string_of;
    use super::*;

    fn log_scales(lo_exp: f64, hi_exp: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn level_counts_double() {
        let g = cantor_gallery(1.0 / 3.0, 6).unwrap();
        assert_eq!(g.level_counts(), vec![1, 2, 4, 8, 16, 32]);
        let lens = g.f_q_string.lengths();
        assert!((lens[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((lens[1] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn closed_forms() {
        let g = cantor_gallery(1.0 / 9.0, 14).unwrap();
        assert!((g.closed_form_gap_sum(0.5) - 7f64.sqrt()).abs() < 1e-12);
        assert!((g.f_q_string.gap_sum(0.5) - 7f64.sqrt()).abs() < 1e-9);
        assert!((cantor_gallery(0.25, 3).unwrap().minkowski_dimension() - 0.5).abs() < 1e-15);
        for q in [1.0 / 16.0, 1.0 / 25.0] {
            let g = cantor_gallery(q, 14).unwrap();
            assert!(g.set_depth < 14 && q.powi(g.set_depth as i32) >= MIN_SIDE);
            assert_eq!(g.f_q.components().len(), 1 << g.set_depth);
            let want = (1.0 - 2.0 * q).sqrt() / (1.0 - 2.0 * q.sqrt());
            assert!((g.f_q_string.gap_sum(0.5) - want).abs() < 1e-12 * want);
        }
        assert!(cantor_gallery(1.0 / 3.0, 14)
            .unwrap()
            .f_q_string
            .gap_sum(0.5)
            .is_infinite());
    }

    #[test]
    fn explicit_strings_increase_to_closed_form() {
        let q = 1.0 / 9.0;
        let target = cantor_closed_form(q, 0.5);
        let mut prev = 0.0;
        for depth in 1..=12 {
            let g = cantor_gallery(q, depth).unwrap();
            let s = fractal_string_of(&g.f_q).gap_sum(0.5);
            assert!(s > prev && s < target);
            prev = s;
        }
        assert!((target - prev) / target < 0.01);
    }

    #[test]
    fn box_counting() {
        let scales = log_scales(-1.0, -4.0, 16);
        let unit = Set1D::interval(0.0, 1.0).unwrap();
        assert!((box_counting_dimension(&unit, &scales).unwrap() - 1.0).abs() < 0.05);
        let pts = Set1D::from_points(vec![0.0, 0.3, 0.7]).unwrap();
        assert!(box_counting_dimension(&pts, &scales).unwrap().abs() < 0.05);
        let f = cantor_gallery(0.25, 12).unwrap().f_q;
        let d = box_counting_dimension(&f, &log_scales(-1.0, -6.0, 24)).unwrap();
        assert!((d - 0.5).abs() < 0.05, "{d}");
        assert!(box_counting_dimension(&unit, &[0.1, 0.05, 0.02, 0.01]).is_err());
    }
}
