use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::engine::{extract_level_set, DistanceField, SurfaceCloud};

/// Tent integrals `Σ w · max(0, 1 − |x − c|/ρ)` keyed by lattice center.
fn tent_integrals(cloud: &SurfaceCloud, spacing: f64, rho: f64) -> HashMap<(i64, i64), f64> {
    let mut acc = HashMap::new();
    let reach = (rho / spacing).ceil() as i64;
    for p in &cloud.points {
        let (ci, cj) = (
            (p.x.x / spacing).round() as i64,
            (p.x.y / spacing).round() as i64,
        );
        for j in cj - reach..=cj + reach {
            for i in ci - reach..=ci + reach {
                let dx = p.x.x - i as f64 * spacing;
                let dy = p.x.y - j as f64 * spacing;
                let t = 1.0 - dx.hypot(dy) / rho;
                if t > 0.0 {
                    *acc.entry((i, j)).or_insert(0.0) += p.weight * t;
                }
            }
        }
    }
    acc
}

/// Largest `|∫f dμ − ∫f dν|` over tents of radius `4h` centered on the
/// lattice `2h·ℤ²` and the constant function 1, with `h` the coarser of the
/// two cloud resolutions.
pub fn flat_distance(mu: &SurfaceCloud, nu: &SurfaceCloud) -> Result<f64, AnalysisError> {
    if mu.is_empty() || nu.is_empty() {
        return Err(AnalysisError::EmptyCloud);
    }
    let h = mu.h.max(nu.h);
    let (spacing, rho) = (2.0 * h, 4.0 * h);
    let a = tent_integrals(mu, spacing, rho);
    let b = tent_integrals(nu, spacing, rho);
    let mut best = (mu.total_weight() - nu.total_weight()).abs();
    for (k, va) in &a {
        best = best.max((va - b.get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, vb) in &b {
        if !a.contains_key(k) {
            best = best.max(vb.abs());
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: u32,
    pub r_minus: f64,
    pub r_plus: f64,
    pub flat_minus: f64,
    pub flat_plus: f64,
    pub mass_minus: f64,
    pub mass_plus: f64,
    /// Gap between the one-sided mass limits at `r0`, each extrapolated
    /// linearly from `r0 ± δ_k` and `r0 ± 2δ_k` to remove the smooth trend.
    pub mass_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub r0: f64,
    pub delta: f64,
    pub mass_r0: f64,
    /// `r0` was listed as a non-differentiability radius.
    pub nondiff_r0: bool,
    pub rows: Vec<ConvergenceRow>,
    /// Flat distances over the second half of the schedule never increase.
    pub eventually_decreasing: bool,
    pub final_flat: f64,
    /// Largest relative mass deviation at the last step.
    pub final_mass_dev: f64,
    pub min_mass_gap: f64,
    pub tol_frac: f64,
    /// At a differentiability radius: decreasing, final flat distance and
    /// mass deviation below `tol_frac · mass(r0)`. At a listed
    /// non-differentiability radius: always false.
    pub converges: bool,
}

/// Surface measures at `r0 ± 2^{-k} δ`, `k = 1..=kmax`, compared with the
/// one at `r0`. The radii `r0 ± δ` are also extracted to extrapolate the
/// first mass gap. Schedules reaching past another listed
/// non-differentiability radius are rejected.
pub fn weak_convergence_report(
    field: &DistanceField,
    r0: f64,
    delta: f64,
    kmax: u32,
    known_nondiff: &[f64],
    tol_frac: f64,
) -> Result<ConvergenceReport, AnalysisError> {
    if kmax == 0 || !(delta > 0.0) {
        return Err(AnalysisError::InvalidSchedule(
            "need δ > 0 and at least one step".into(),
        ));
    }
    let same = 2.0 * field.h();
    let reach = delta;
    if let Some(n) = known_nondiff
        .iter()
        .find(|n| (**n - r0).abs() > same && (**n - r0).abs() <= reach + same)
    {
        return Err(AnalysisError::InvalidSchedule(format!(
            "r0 ± {reach} around {r0} straddles the non-differentiability radius {n}"
        )));
    }
    let nondiff_r0 = known_nondiff.iter().any(|n| (n - r0).abs() <= same);
    let mut radii = vec![r0];
    for k in 0..=kmax {
        let off = delta * 0.5f64.powi(k as i32);
        radii.push(r0 - off);
        radii.push(r0 + off);
    }
    let clouds = radii
        .par_iter()
        .map(|&r| extract_level_set(field, r))
        .collect::<Result<Vec<SurfaceCloud>, _>>()?;
    let base = &clouds[0];
    let mass_r0 = base.total_weight();
    let mass = |k: u32, side: usize| clouds[2 * k as usize + 1 + side].total_weight();
    let mut rows = Vec::new();
    for k in 1..=kmax {
        let (m, p) = (&clouds[2 * k as usize + 1], &clouds[2 * k as usize + 2]);
        let (mass_minus, mass_plus) = (m.total_weight(), p.total_weight());
        let lim_minus = 2.0 * mass_minus - mass(k - 1, 0);
        let lim_plus = 2.0 * mass_plus - mass(k - 1, 1);
        rows.push(ConvergenceRow {
            k,
            r_minus: m.r,
            r_plus: p.r,
            flat_minus: flat_distance(m, base)?,
            flat_plus: flat_distance(p, base)?,
            mass_minus,
            mass_plus,
            mass_gap: (lim_plus - lim_minus).abs(),
        });
    }
    let flats: Vec<f64> = rows.iter().map(|r| r.flat_minus.max(r.flat_plus)).collect();
    let eventually_decreasing = flats[flats.len() / 2..].windows(2).all(|w| w[1] <= w[0]);
    let last = rows.last().expect("kmax ≥ 1");
    let final_flat = flats[flats.len() - 1];
    let final_mass_dev = (last.mass_minus - mass_r0)
        .abs()
        .max((last.mass_plus - mass_r0).abs())
        / mass_r0;
    let min_mass_gap = rows
        .iter()
        .map(|r| r.mass_gap)
        .fold(f64::INFINITY, f64::min);
    let converges = !nondiff_r0
        && eventually_decreasing
        && final_flat < tol_frac * mass_r0
        && final_mass_dev < tol_frac;
    Ok(ConvergenceReport {
        r0,
        delta,
        mass_r0,
        nondiff_r0,
        rows,
        eventually_decreasing,
        final_flat,
        final_mass_dev,
        min_mass_gap,
        tol_frac,
        converges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{construct_dim2_eps, GammaPolicy};
    use crate::engine::SurfacePoint;
    use crate::fractal::TargetRadii;
    use crate::geometry::{Geometry2D, Point2, Primitive2D};
    use std::f64::consts::PI;

    fn circle(r: f64, n: usize, h: f64) -> SurfaceCloud {
        let w = 2.0 * PI * r / n as f64;
        let points = (0..n)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                let x = Point2::new(r * t.cos(), r * t.sin());
                SurfacePoint {
                    x,
                    weight: w,
                    ends: (x, x),
                    projection: None,
                }
            })
            .collect();
        SurfaceCloud { r, h, points }
    }

    #[test]
    fn flat_distance_basics() {
        let a = circle(1.0, 2000, 0.01);
        assert_eq!(flat_distance(&a, &a).unwrap(), 0.0);
        let d1 = flat_distance(&circle(1.0, 2000, 0.01), &circle(1.1, 2000, 0.01)).unwrap();
        let d2 = flat_distance(&circle(1.0, 2000, 0.01), &circle(1.01, 2000, 0.01)).unwrap();
        assert!(d1 <= 2.0 * PI * 0.1 + 1e-12 && d2 < d1, "{d1} {d2}");
        let mut b = a.clone();
        b.points.iter_mut().for_each(|p| p.weight *= 2.0);
        assert!(flat_distance(&a, &b).unwrap() >= a.total_weight() - 1e-12);
        let empty = SurfaceCloud {
            r: 1.0,
            h: 0.01,
            points: Vec::new(),
        };
        assert_eq!(flat_distance(&a, &empty), Err(AnalysisError::EmptyCloud));
    }

    #[test]
    fn disk_measures_converge() {
        let g: Geometry2D = Primitive2D::disk(Point2::ORIGIN, 1.0).into();
        let f = DistanceField::from_geometry(&g, 1.0, 0.005, "disk").unwrap();
        let rep = weak_convergence_report(&f, 0.5, 0.2, 6, &[], 0.02).unwrap();
        assert!(rep.converges, "{rep:#?}");
    }

    #[test]
    fn construction_mass_gap_persists() {
        let m = construct_dim2_eps(
            &TargetRadii::finite(vec![1.0]).unwrap(),
            1.0,
            &GammaPolicy::default(),
        )
        .unwrap();
        let two_gamma = m.radii[0].predicted_jump;
        let f = DistanceField::from_geometry(&m.geometry, 1.3, 0.005, "c1").unwrap();
        let smooth = weak_convergence_report(&f, 0.7, 0.2, 6, &[1.0], 0.02).unwrap();
        assert!(smooth.converges, "{smooth:#?}");
        let at_s = weak_convergence_report(&f, 1.0, 0.2, 6, &[1.0], 0.02).unwrap();
        assert!(at_s.nondiff_r0 && !at_s.converges);
        assert!(at_s.min_mass_gap >= 0.5 * two_gamma, "{at_s:#?}");
        assert!(matches!(
            weak_convergence_report(&f, 0.85, 0.2, 6, &[1.0], 0.02),
            Err(AnalysisError::InvalidSchedule(_))
        ));
    }
}
