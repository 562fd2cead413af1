use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::ExactVolume;
use super::field::DistanceField;
use super::EngineError;

/// Radii `r_k = k · step` for `k0 ≤ k ≤ k1`. Integer multiples keep scaled
/// radii `λ r_k` on the grid for dyadic `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiiGrid {
    pub step: f64,
    pub k0: i64,
    pub k1: i64,
}

impl RadiiGrid {
    /// Multiples of `step` inside `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self, EngineError> {
        if !(step > 0.0) || !(lo > 0.0) || !(hi >= lo) {
            return Err(EngineError::InvalidInput(format!(
                "bad radii grid [{lo}, {hi}] step {step}"
            )));
        }
        let k0 = (lo / step).ceil() as i64;
        let k1 = (hi / step).floor() as i64;
        if k1 < k0 {
            return Err(EngineError::InvalidInput(format!(
                "no multiple of {step} in [{lo}, {hi}]"
            )));
        }
        Ok(RadiiGrid { step, k0, k1 })
    }

    /// Step `h/2` over `[lo, hi]`, which must lie in the field's trusted band.
    pub fn for_field(field: &DistanceField, lo: f64, hi: f64) -> Result<Self, EngineError> {
        field.check_band(lo)?;
        field.check_band(hi)?;
        Self::uniform(lo, hi, 0.5 * field.h())
    }

    pub fn len(&self) -> usize {
        (self.k1 - self.k0 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.k1 < self.k0
    }

    pub fn radius(&self, idx: usize) -> f64 {
        (self.k0 + idx as i64) as f64 * self.step
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.radius(k)).collect()
    }

    /// Smallest index with `r ≥ x` (or `r > x` when `strict`), or `len()`.
    fn first_index(&self, x: f64, strict: bool) -> usize {
        let n = self.len();
        let above = |k: usize| {
            if strict {
                self.radius(k) > x
            } else {
                self.radius(k) >= x
            }
        };
        let guess = ((x / self.step).floor() as i64 - self.k0).clamp(0, n as i64) as usize;
        let mut k = guess.saturating_sub(1);
        while k < n && !above(k) {
            k += 1;
        }
        while k > 0 && above(k - 1) {
            k -= 1;
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMode {
    /// `h² · #{cells : d < r}`.
    Count,
    /// Each cell contributes the fraction of its square on which the local
    /// linear model `d(c) + n·(x - c)` is below `r`.
    Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolumeSource {
    ExactOracle {
        family: ExactVolume,
    },
    Grid {
        h: f64,
        mode: VolumeMode,
        label: String,
    },
}

/// Sampled volume function `r ↦ V(r)` on a [`RadiiGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSamples {
    pub grid: RadiiGrid,
    pub radii: Vec<f64>,
    pub volume: Vec<f64>,
    /// Per-sample error bound: `h²` times the number of cells whose
    /// square straddles the level `r` (zero for exact oracles).
    pub err: Vec<f64>,
    pub dimension: u32,
    pub source: VolumeSource,
}

impl VolumeSamples {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Grid resolution, if sampled from a field.
    pub fn h(&self) -> Option<f64> {
        match &self.source {
            VolumeSource::Grid { h, .. } => Some(*h),
            VolumeSource::ExactOracle { .. } => None,
        }
    }

    /// Index of the sample at `r`, if `r` is a grid radius (to a quarter step).
    pub fn index_of(&self, r: f64) -> Option<usize> {
        let k = (r / self.grid.step).round() as i64 - self.grid.k0;
        (k >= 0
            && (k as usize) < self.len()
            && (self.radii[k as usize] - r).abs() <= 0.25 * self.grid.step)
            .then_some(k as usize)
    }

    /// Index of the sample nearest to `r`, clamped to the grid.
    pub fn nearest_index(&self, r: f64) -> usize {
        let k = (r / self.grid.step).round() as i64 - self.grid.k0;
        k.clamp(0, self.len() as i64 - 1) as usize
    }
}

/// CDF at `s ∈ [0, a + b]` of the sum of uniforms on `[0, a]` and `[0, b]`.
fn trapezoid_cdf(s: f64, a: f64, b: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if s <= 0.0 {
        return 0.0;
    }
    if s >= a + b {
        return 1.0;
    }
    if lo <= 1e-12 * hi {
        return (s / hi).clamp(0.0, 1.0);
    }
    if s <= lo {
        s * s / (2.0 * a * b)
    } else if s <= hi {
        (s - 0.5 * lo) / hi
    } else {
        1.0 - (a + b - s).powi(2) / (2.0 * a * b)
    }
}

/// Rows per work item; fixed so that the summation order, and with it the
/// output, does not depend on scheduling.
const ROWS_PER_BLOCK: usize = 32;

struct Partial {
    full: Vec<i64>,
    frac: Vec<f64>,
    straddle: Vec<u32>,
}

/// `V(r)` on `radii` from one pass over the field (cumulative histogram of
/// cells plus fractional contributions near each level).
pub fn volume_function(
    field: &DistanceField,
    radii: &RadiiGrid,
    mode: VolumeMode,
) -> Result<VolumeSamples, EngineError> {
    field.check_band(radii.radius(0))?;
    field.check_band(radii.radius(radii.len() - 1))?;
    let h = field.h();
    let n = radii.len();
    let nx = field.grid.nx;
    let blocks: Vec<Partial> = field
        .values
        .par_chunks(nx * ROWS_PER_BLOCK)
        .zip(field.normals.par_chunks(nx * ROWS_PER_BLOCK))
        .map(|(vals, norms)| {
            let mut p = Partial {
                full: vec![0; n + 1],
                frac: vec![0.0; n],
                straddle: vec![0; n],
            };
            for (&v, nrm) in vals.iter().zip(norms) {
                if v == 0.0 {
                    p.full[0] += 1;
                    continue;
                }
                let (a, b) = (nrm[0].abs() * h, nrm[1].abs() * h);
                let half = 0.5 * (a + b);
                let k_lo = radii.first_index(v - half, true);
                let k_full = radii.first_index(v + half, false);
                for k in k_lo..k_full {
                    p.straddle[k] += 1;
                }
                match mode {
                    VolumeMode::Count => p.full[radii.first_index(v, true)] += 1,
                    VolumeMode::Coverage => {
                        p.full[k_full] += 1;
                        for k in k_lo..k_full {
                            p.frac[k] += trapezoid_cdf(radii.radius(k) - (v - half), a, b);
                        }
                    }
                }
            }
            p
        })
        .collect();
    let mut full = vec![0i64; n + 1];
    let mut frac = vec![0.0; n];
    let mut straddle = vec![0u64; n];
    for b in &blocks {
        for k in 0..n {
            full[k] += b.full[k];
            frac[k] += b.frac[k];
            straddle[k] += b.straddle[k] as u64;
        }
    }
    let cell = h * h;
    let mut running = 0i64;
    let mut volume = Vec::with_capacity(n);
    for k in 0..n {
        running += full[k];
        volume.push(cell * (running as f64 + frac[k]));
    }
    Ok(VolumeSamples {
        grid: *radii,
        radii: radii.radii(),
        volume,
        err: straddle.iter().map(|c| cell * *c as f64).collect(),
        dimension: 2,
        source: VolumeSource::Grid {
            h,
            mode,
            label: field.label.clone(),
        },
    })
}

/// `|V_h(r) − V_{2h}(r)|` on `radii`, with `V_{2h}` from the coarsened
/// field: an a-posteriori estimate of the error of `V_h` that, unlike
/// `err`, reflects the actual accuracy of the estimator.
pub fn volume_discrepancy(
    field: &DistanceField,
    radii: &RadiiGrid,
    mode: VolumeMode,
) -> Result<Vec<f64>, EngineError> {
    let fine = volume_function(field, radii, mode)?;
    let coarse = volume_function(&field.coarsened(), radii, mode)?;
    Ok(fine
        .volume
        .iter()
        .zip(&coarse.volume)
        .map(|(a, b)| (a - b).abs())
        .collect())
}

/// Closed-form samples (zero error).
pub fn volume_from_exact(family: &ExactVolume, radii: &RadiiGrid) -> VolumeSamples {
    let r = radii.radii();
    VolumeSamples {
        grid: *radii,
        volume: r.iter().map(|&x| family.value(x)).collect(),
        err: vec![0.0; r.len()],
        radii: r,
        dimension: family.dimension(),
        source: VolumeSource::ExactOracle {
            family: family.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Geometry2D, Point2, Primitive2D};
    use proptest::prelude::*;

    #[test]
    fn trapezoid_integrates_to_one() {
        let (a, b) = (0.3, 0.7);
        let n = 10_000;
        // derivative of the CDF is the trapezoid density; compare mean
        let mean: f64 = (0..n)
            .map(|k| {
                let s = (k as f64 + 0.5) / n as f64;
                1.0 - trapezoid_cdf(s, a, b)
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 1e-6);
        assert_eq!(trapezoid_cdf(0.5, 0.0, 1.0), 0.5);
    }

    #[test]
    fn radii_grid_indices() {
        let g = RadiiGrid::uniform(0.05, 1.5, 0.001).unwrap();
        assert_eq!(g.len(), 1451);
        assert_eq!(g.radius(950), 1.0);
        assert_eq!(g.first_index(1.0, false), 950);
        assert_eq!(g.first_index(1.0, true), 951);
        assert_eq!(g.first_index(0.0, true), 0);
        assert_eq!(g.first_index(9.0, true), 1451);
    }

    #[test]
    fn disk_volume_within_error() {
        let g: Geometry2D = Primitive2D::disk(Point2::ORIGIN, 1.0).into();
        let f = DistanceField::from_geometry(&g, 1.0, 0.01, "disk").unwrap();
        let radii = RadiiGrid::for_field(&f, 0.05, 0.85).unwrap();
        let exact = volume_from_exact(&ExactVolume::Disk { radius: 1.0 }, &radii);
        for mode in [VolumeMode::Coverage, VolumeMode::Count] {
            let vs = volume_function(&f, &radii, mode).unwrap();
            for k in 0..vs.len() {
                assert!(
                    (vs.volume[k] - exact.volume[k]).abs() <= vs.err[k],
                    "{mode:?} r={}",
                    vs.radii[k]
                );
            }
        }
        assert!(matches!(
            RadiiGrid::for_field(&f, 0.01, 0.5),
            Err(EngineError::RadiusOutOfBand { .. })
        ));
    }

    #[test]
    fn discrepancy_dominates_actual_error() {
        for (g, fam) in [
            (
                Geometry2D::from(Primitive2D::points(vec![
                    Point2::new(-1.0, 0.0),
                    Point2::new(1.0, 0.0),
                ])),
                ExactVolume::TwoPoints { distance: 2.0 },
            ),
            (
                Primitive2D::disk(Point2::ORIGIN, 1.0).into(),
                ExactVolume::Disk { radius: 1.0 },
            ),
        ] {
            let f = DistanceField::from_geometry(&g, 1.6, 0.005, "x").unwrap();
            let radii = RadiiGrid::for_field(&f, 0.05, 1.5).unwrap();
            let vs = volume_function(&f, &radii, VolumeMode::Coverage).unwrap();
            let exact = volume_from_exact(&fam, &radii);
            let actual = vs
                .volume
                .iter()
                .zip(&exact.volume)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let disc = volume_discrepancy(&f, &radii, VolumeMode::Coverage)
                .unwrap()
                .into_iter()
                .fold(0.0, f64::max);
            assert!(actual <= disc && disc < 0.01, "{fam:?}: {actual} {disc}");
        }
    }

    #[test]
    fn coverage_is_far_tighter_than_counting() {
        let g = Geometry2D::rect_boundary(0.0, 3.0, 0.0, 2.0).unwrap();
        let f = DistanceField::from_geometry(&g, 1.6, 0.01, "rb").unwrap();
        let radii = RadiiGrid::for_field(&f, 0.05, 1.5).unwrap();
        let vs = volume_function(&f, &radii, VolumeMode::Coverage).unwrap();
        let exact = volume_from_exact(&ExactVolume::RectBoundary { s: 1.0 }, &radii);
        for k in 0..vs.len() {
            let dev = (vs.volume[k] - exact.volume[k]).abs();
            assert!(dev <= vs.err[k]);
            // away from the collapse of the inner rectangle
            if (vs.radii[k] - 1.0).abs() > 0.01 {
                assert!(
                    dev <= 0.02 * vs.err[k],
                    "r={} dev={dev} err={}",
                    vs.radii[k],
                    vs.err[k]
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn nondecreasing_and_continuous(x in -1.0f64..1.0, y in -1.0f64..1.0, rad in 0.1f64..0.6) {
            let g = Geometry2D::union(vec![
                Primitive2D::disk(Point2::new(x, y), rad).into(),
                Primitive2D::points(vec![Point2::new(0.0, 0.0), Point2::new(1.3, 0.2)]).into(),
            ]).unwrap();
            let f = DistanceField::from_geometry(&g, 0.8, 0.02, "p").unwrap();
            let radii = RadiiGrid::for_field(&f, 0.04, 0.7).unwrap();
            let vs = volume_function(&f, &radii, VolumeMode::Coverage).unwrap();
            for k in 1..vs.len() {
                prop_assert!(vs.volume[k] >= vs.volume[k - 1]);
                prop_assert!(vs.volume[k] - vs.volume[k - 1] <= vs.err[k] + vs.err[k - 1]);
            }
        }
    }
}
