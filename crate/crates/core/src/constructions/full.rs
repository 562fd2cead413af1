use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dim2::{build, ConstructionMetadata2D};
use super::packing::{pack_rectangles, Packing};
use super::{ConstructionError, GammaPolicy};
use crate::fractal::{check_dim2_conditions, TargetRadii};
use crate::geometry::{Geometry2D, Point2, Primitive2D, Rect};

/// One compact piece `K_{n,i} = N̄ ∩ [lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPiece {
    pub lo: f64,
    pub hi: f64,
    /// Listed radii (elements of `N`) in the piece, increasing.
    pub radii: Vec<f64>,
    /// Closure points of the piece that are not listed radii.
    pub extra: Vec<f64>,
    /// Certified `G_{1/2}(K_{n,i})`.
    pub gap_sum_half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDecomposition {
    pub n: u32,
    /// `δ_n = b 2^{-n}`; the band is `(δ_n / 2, δ_n]`.
    pub delta_n: f64,
    pub band_gap_sum: f64,
    pub pieces: Vec<TailPiece>,
    pub p_n: usize,
    /// `δ_n^{-1/2} G_{1/2}(K_n) + 1`.
    pub p_bound: f64,
    /// `2 δ_n^{1/2}`.
    pub piece_bound: f64,
}

/// Greedy split of the band `K_n = N̄ ∩ (δ_n/2, δ_n]` from left to right:
/// a piece grows while its gap sum stays within `2√δ_n`; when the next gap
/// would exceed the budget the gap is dropped and a new piece starts. Cuts
/// are only made across genuine gaps of `N̄`. Both bounds are checked on
/// the result.
pub fn decompose_tail(n: &TargetRadii, level: u32) -> Result<TailDecomposition, ConstructionError> {
    if n.is_empty() {
        return Err(ConstructionError::EmptyTarget);
    }
    let b = n.max_closure();
    let delta = b * 0.5f64.powi(level as i32);
    let band_lo = 0.5 * delta;
    let in_band = |s: f64| s > band_lo && s <= delta;
    let mut pts: Vec<(f64, bool)> = n
        .values()
        .iter()
        .filter(|s| in_band(**s))
        .map(|&s| (s, true))
        .collect();
    pts.extend(
        n.closure_extra()
            .iter()
            .filter(|s| in_band(**s))
            .map(|&s| (s, false)),
    );
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let window = |lo: f64, hi: f64| n.window_gap_sum(lo, hi, 0.5);
    let budget = 2.0 * delta.sqrt();
    let mut pieces = Vec::new();
    if pts.is_empty() {
        return Ok(TailDecomposition {
            n: level,
            delta_n: delta,
            band_gap_sum: 0.0,
            pieces,
            p_n: 0,
            p_bound: 1.0,
            piece_bound: budget,
        });
    }
    let band_gap_sum = window(pts[0].0, pts[pts.len() - 1].0);
    let mut start = 0usize;
    for j in 1..=pts.len() {
        let close = j == pts.len() || {
            let (prev, next) = (pts[j - 1].0, pts[j].0);
            let genuine_gap =
                (window(prev, next) - (next - prev).sqrt()).abs() <= 1e-9 * (next - prev).sqrt();
            genuine_gap && window(pts[start].0, next) > budget
        };
        if close {
            let slice = &pts[start..j];
            let (lo, hi) = (slice[0].0, slice[slice.len() - 1].0);
            pieces.push(TailPiece {
                lo,
                hi,
                radii: slice.iter().filter(|p| p.1).map(|p| p.0).collect(),
                extra: slice.iter().filter(|p| !p.1).map(|p| p.0).collect(),
                gap_sum_half: window(lo, hi),
            });
            start = j;
        }
    }
    let dec = TailDecomposition {
        n: level,
        delta_n: delta,
        band_gap_sum,
        p_n: pieces.len(),
        p_bound: band_gap_sum / delta.sqrt() + 1.0,
        piece_bound: budget,
        pieces,
    };
    certify(&dec)?;
    Ok(dec)
}

fn certify(d: &TailDecomposition) -> Result<(), ConstructionError> {
    let tol = 1e-12 * d.piece_bound;
    if let Some(p) = d
        .pieces
        .iter()
        .find(|p| p.gap_sum_half > d.piece_bound + tol)
    {
        return Err(ConstructionError::BoundViolated(format!(
            "piece [{}, {}] has gap sum {} > {}",
            p.lo, p.hi, p.gap_sum_half, d.piece_bound
        )));
    }
    if d.p_n as f64 > d.p_bound + 1e-12 {
        return Err(ConstructionError::BoundViolated(format!(
            "{} pieces exceed bound {}",
            d.p_n, d.p_bound
        )));
    }
    Ok(())
}

/// One packed sub-construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceConstruction {
    pub level: u32,
    pub delta_n: f64,
    pub piece: TailPiece,
    /// `Γ_{n,i}`.
    pub total_gamma: f64,
    /// Sub-construction in local coordinates.
    pub meta: ConstructionMetadata2D,
    pub shift: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullConstruction {
    pub b: f64,
    pub max_level: u32,
    pub decompositions: Vec<TailDecomposition>,
    pub pieces: Vec<PieceConstruction>,
    pub packing: Packing,
    /// Listed radii below `δ_{max_level+1}` that are not realized.
    pub unrealized: Vec<f64>,
    /// `Σ λ²(R_{n,i})`.
    pub area_total: f64,
    /// `12 Σ δ_n^{3/2} G_{1/2}(K_n) + 12 Σ δ_n²` over the non-empty bands.
    pub area_bound: f64,
    pub geometry: Geometry2D,
}

/// Segment lengths inside one piece: `Γ 2^{-(k+1)}` in decreasing radius
/// order, the smallest radius taking the remainder so the total is `Γ`.
fn piece_gammas(total: f64, count: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..count)
        .map(|k| total * 0.5f64.powi(k as i32 + 1))
        .collect();
    if let Some(last) = g.last_mut() {
        *last = total * 0.5f64.powi(count as i32 - 1);
    }
    g
}

/// Realizes `N` by splitting each dyadic band into pieces with small gap
/// sums, building the ε-construction for every piece inside
/// `R_{n,i} = [-δ_n, δ_n + √(2δ_n) G_{n,i} + Γ_{n,i}] × [-δ_n, δ_n]`, and
/// packing the rectangles into a disk whose remainder is filled in.
pub fn construct_dim2_full(
    n: &TargetRadii,
    max_level: u32,
    policy: &GammaPolicy,
) -> Result<FullConstruction, ConstructionError> {
    if n.is_empty() {
        return Err(ConstructionError::EmptyTarget);
    }
    let report = check_dim2_conditions(n, 0.0)?;
    if !report.verdict_ii {
        return Err(ConstructionError::ConditionViolated(
            "the integral condition is not satisfied".into(),
        ));
    }
    let b = n.max_closure();
    let min_s = n.values()[n.values().len() - 1];
    let gamma0 = policy.gamma0(min_s);
    let decompositions: Vec<TailDecomposition> = (0..=max_level)
        .into_par_iter()
        .map(|level| decompose_tail(n, level))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(u32, f64, TailPiece)> = decompositions
        .iter()
        .flat_map(|d| d.pieces.iter().map(move |p| (d.n, d.delta_n, p.clone())))
        .filter(|(_, _, p)| !p.radii.is_empty())
        .collect();
    let built: Vec<(u32, f64, TailPiece, f64, ConstructionMetadata2D)> = jobs
        .into_par_iter()
        .map(|(level, delta, piece)| {
            let total = if piece.gap_sum_half > 0.0 {
                (2.0 - 2f64.sqrt()) * delta.sqrt() * piece.gap_sum_half
            } else {
                gamma0 * delta / b
            };
            let mut desc = piece.radii.clone();
            desc.reverse();
            let listed: Vec<(f64, f64)> = desc
                .iter()
                .copied()
                .zip(piece_gammas(total, desc.len()))
                .collect();
            let (lo, hi) = (piece.lo, piece.hi);
            let window = |a: f64, c: f64| n.window_gap_sum(a.max(lo), c.min(hi), 0.5);
            let meta = build(&listed, &piece.extra, delta, lo, &window)?;
            Ok((level, delta, piece, total, meta))
        })
        .collect::<Result<_, ConstructionError>>()?;

    let rects: Vec<Rect> = built.iter().map(|p| p.4.rect).collect();
    let packing = pack_rectangles(&rects);
    let placed = packing.placed(&rects);
    for (i, a) in placed.iter().enumerate() {
        if placed[i + 1..].iter().any(|c| a.intersects(c)) {
            return Err(ConstructionError::PackingOverflow(
                "packed rectangles overlap".into(),
            ));
        }
    }
    // Slightly enlarged so that rectangle corners lie strictly inside.
    let radius = packing.radius * (1.0 + 1e-9);
    let mut children: Vec<Geometry2D> = built
        .iter()
        .zip(&packing.shifts)
        .map(|(p, s)| p.4.geometry.translate(*s))
        .collect();
    let holes = placed
        .iter()
        .map(|r| Primitive2D::rectangle(r.xmin, r.xmax, r.ymin, r.ymax))
        .collect();
    children.push(Geometry2D::difference(
        Primitive2D::disk(packing.center, radius),
        holes,
    )?);
    let geometry = Geometry2D::union(children)?;

    let area_total = rects.iter().map(Rect::area).sum();
    let area_bound = decompositions
        .iter()
        .filter(|d| d.p_n > 0)
        .map(|d| 12.0 * d.delta_n.powf(1.5) * d.band_gap_sum + 12.0 * d.delta_n * d.delta_n)
        .sum();
    let cutoff = 0.5 * b * 0.5f64.powi(max_level as i32);
    let unrealized = n
        .values()
        .iter()
        .copied()
        .filter(|s| *s <= cutoff)
        .collect();
    let pieces = built
        .into_iter()
        .zip(&packing.shifts)
        .map(
            |((level, delta_n, piece, total_gamma, meta), shift)| PieceConstruction {
                level,
                delta_n,
                piece,
                total_gamma,
                meta,
                shift: *shift,
            },
        )
        .collect();
    Ok(FullConstruction {
        b,
        max_level,
        decompositions,
        pieces,
        packing: Packing { radius, ..packing },
        unrealized,
        area_total,
        area_bound,
        geometry,
    })
}

#[cfg(test)]
mod tests {
    use super::super::construct_dim2_eps;
    use super::*;

    /// Exhaustive oracle: minimal number of contiguous pieces with every
    /// piece's gap sum within budget (the gap at a cut is dropped).
    fn brute_min_pieces(pts: &[f64], budget: f64) -> usize {
        let m = pts.len();
        let mut best = usize::MAX;
        for mask in 0u32..(1 << (m - 1)) {
            let mut ok = true;
            let mut start = 0;
            let mut count = 0;
            for j in 1..=m {
                if j == m || mask & (1 << (j - 1)) != 0 {
                    let g: f64 = pts[start..j].windows(2).map(|w| (w[1] - w[0]).sqrt()).sum();
                    ok &= g <= budget;
                    count += 1;
                    start = j;
                }
            }
            if ok {
                best = best.min(count);
            }
        }
        best
    }

    #[test]
    fn trivial_decompositions() {
        let n = TargetRadii::finite(vec![1.0]).unwrap();
        let d = decompose_tail(&n, 0).unwrap();
        assert_eq!(d.p_n, 1);
        assert_eq!(d.pieces[0].gap_sum_half, 0.0);
        let n = TargetRadii::finite(vec![1.0, 0.9, 0.8]).unwrap();
        let d = decompose_tail(&n, 0).unwrap();
        assert!(d.band_gap_sum <= 2.0);
        assert_eq!(d.p_n, 1);
    }

    #[test]
    fn uniform_points_match_exhaustive_split() {
        // Budget 2√δ with δ = 1 is 2; gaps of 0.12 cost 0.346 each, so
        // five points in a band fit, and a dense band forces cuts.
        for (count, spacing) in [(5usize, 0.12), (12, 0.04), (9, 0.0624)] {
            let pts: Vec<f64> = (0..count).map(|k| 1.0 - spacing * k as f64).collect();
            let n = TargetRadii::finite(pts.clone()).unwrap();
            let d = decompose_tail(&n, 0).unwrap();
            let mut inc = pts.clone();
            inc.sort_by(f64::total_cmp);
            assert_eq!(d.p_n, brute_min_pieces(&inc, 2.0), "count {count}");
        }
        // Same shapes at a smaller scale force several pieces.
        let pts: Vec<f64> = (0..20).map(|k| 0.01 * (1.0 - 0.024 * k as f64)).collect();
        let n = TargetRadii::finite(pts.clone()).unwrap();
        let d = decompose_tail(&n, 0).unwrap();
        let mut inc = pts.clone();
        inc.sort_by(f64::total_cmp);
        let want = brute_min_pieces(&inc, 2.0 * d.delta_n.sqrt());
        assert!(want > 1);
        assert_eq!(d.p_n, want);
    }

    #[test]
    fn bands_cover_the_set() {
        let e = TargetRadii::cantor_rearranged(0.3, 9).unwrap();
        let mut covered = 0;
        for level in 0..30 {
            let d = decompose_tail(&e, level).unwrap();
            covered += d.pieces.iter().map(|p| p.radii.len()).sum::<usize>();
            for p in &d.pieces {
                assert!(p.gap_sum_half <= d.piece_bound * (1.0 + 1e-12));
            }
        }
        assert_eq!(covered, e.values().len());
    }

    #[test]
    fn single_radius_matches_eps_construction() {
        let n = TargetRadii::finite(vec![1.0]).unwrap();
        let full = construct_dim2_full(&n, 4, &GammaPolicy::default()).unwrap();
        let eps = construct_dim2_eps(&n, 1.0, &GammaPolicy::default()).unwrap();
        assert_eq!(full.pieces.len(), 1);
        assert_eq!(full.pieces[0].meta.geometry, eps.geometry);
        assert_eq!(full.pieces[0].shift, Point2::ORIGIN);
    }

    #[test]
    fn three_bands_pack_disjointly() {
        let n = TargetRadii::finite(vec![1.0, 0.5, 0.125]).unwrap();
        let full = construct_dim2_full(&n, 6, &GammaPolicy::default()).unwrap();
        assert_eq!(full.decompositions.iter().filter(|d| d.p_n > 0).count(), 3);
        let placed: Vec<Rect> = full
            .pieces
            .iter()
            .map(|p| p.meta.rect.translate(p.shift))
            .collect();
        for (i, a) in placed.iter().enumerate() {
            for c in &placed[i + 1..] {
                assert!(!a.intersects(c));
            }
        }
        assert!(full.area_total <= full.area_bound);
        assert!(full.unrealized.is_empty());
        // every critical segment keeps its separating points
        for p in &full.pieces {
            for e in &p.meta.radii {
                let x = Point2::new(0.5 * (e.j.0 + e.j.1), e.s) + p.shift;
                assert!(full.geometry.contains(x));
            }
        }
    }

    #[test]
    fn rearranged_cantor_realization() {
        let e = TargetRadii::cantor_rearranged(0.3, 6).unwrap();
        let full = construct_dim2_full(&e, 8, &GammaPolicy::default()).unwrap();
        assert!(full.area_total <= full.area_bound);
        let realized: usize = full.pieces.iter().map(|p| p.piece.radii.len()).sum();
        assert_eq!(realized + full.unrealized.len(), e.values().len());
    }
}
