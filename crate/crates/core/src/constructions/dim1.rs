use super::ConstructionError;
use crate::fractal::{fractal_string_of, TargetRadii};
use crate::geometry::Set1D;

/// Points `a_0 = 0`, `a_k = Σ_{j≤k} 2 s_j` (radii in decreasing order). For
/// sets that continue beyond the listed radii the limit point
/// `a_∞ = 2 Σ s` is appended; the last gap then stands in for all
/// unlisted radii.
pub fn construct_dim1(n: &TargetRadii) -> Result<Set1D, ConstructionError> {
    if n.is_empty() {
        return Err(ConstructionError::EmptyTarget);
    }
    let total = n.power_sum(1.0);
    if !total.is_finite() {
        return Err(ConstructionError::SummabilityViolated(
            "Σ s diverges".into(),
        ));
    }
    let mut points = Vec::with_capacity(n.values().len() + 2);
    let mut a = 0.0;
    points.push(a);
    for &s in n.values() {
        a += 2.0 * s;
        points.push(a);
    }
    let infinite = n.generator().is_some() || n.origin_accumulates();
    if infinite && 2.0 * total > a {
        points.push(2.0 * total);
    }
    Ok(Set1D::from_points(points)?)
}

/// Radii `ℓ/2` for the gap lengths `ℓ` of `a`.
pub fn predicted_nondiff_1d(a: &Set1D) -> TargetRadii {
    let mut radii: Vec<f64> = fractal_string_of(a)
        .lengths()
        .iter()
        .map(|l| l / 2.0)
        .collect();
    radii.dedup();
    TargetRadii::finite(radii).expect("half gap lengths are positive and distinct after dedup")
}
