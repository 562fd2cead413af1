use std::collections::BTreeMap;

use rayon::prelude::*;

use super::field::{DistanceField, FieldSource, Grid};
use super::EngineError;
use crate::geometry::{Geometry2D, Piece, Point2, Primitive2D, Rect};

/// Cell-center membership plus sub-cell boundary samples.
#[derive(Debug, Clone)]
pub struct Bitmap {
    pub grid: Grid,
    /// `contains` evaluated at each cell center.
    pub bits: Vec<bool>,
    /// For cells crossed by the boundary of the set without their center in
    /// it: the sampled boundary point closest to the center.
    pub seeds: BTreeMap<usize, Point2>,
}

impl Bitmap {
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// Membership bit per cell center over the lattice covering `rect`.
pub fn rasterize_membership(g: &Geometry2D, rect: Rect, h: f64) -> Result<Bitmap, EngineError> {
    rasterize_on(g, Grid::covering(rect, h)?)
}

pub(crate) fn rasterize_on(g: &Geometry2D, grid: Grid) -> Result<Bitmap, EngineError> {
    let mut bits = vec![false; grid.cells()];
    bits.par_chunks_mut(grid.nx)
        .enumerate()
        .for_each(|(j, row)| {
            for (i, b) in row.iter_mut().enumerate() {
                *b = g.contains(grid.center(i, j));
            }
        });
    let mut samples = Vec::new();
    boundary_samples(g, 0.25 * grid.h, &mut samples);
    let mut seeds = BTreeMap::new();
    for p in samples {
        if !near_member(g, p, 1e-9 * (1.0 + p.norm())) {
            continue;
        }
        let Some((i, j)) = grid.locate(p) else {
            continue;
        };
        let k = j * grid.nx + i;
        if bits[k] {
            continue;
        }
        let c = grid.center(i, j);
        seeds
            .entry(k)
            .and_modify(|q: &mut Point2| {
                if p.dist(c) < q.dist(c) {
                    *q = p;
                }
            })
            .or_insert(p);
    }
    Ok(Bitmap { grid, bits, seeds })
}

fn near_member(g: &Geometry2D, p: Point2, tol: f64) -> bool {
    match g {
        Geometry2D::Leaf(q) => q.depth(p) >= -tol,
        Geometry2D::Union(children) => children.iter().any(|c| near_member(c, p, tol)),
        Geometry2D::Difference { base, removed } => {
            base.depth(p) >= -tol
                && removed
                    .iter()
                    .all(|r| matches!(r, Primitive2D::Points { .. }) || r.depth(p) <= tol)
        }
    }
}

fn boundary_samples(g: &Geometry2D, step: f64, out: &mut Vec<Point2>) {
    let mut prims: Vec<&Primitive2D> = Vec::new();
    collect_primitives(g, &mut prims);
    for prim in prims {
        for piece in prim.pieces() {
            match piece {
                Piece::Point(p) => out.push(p),
                Piece::Segment { a, b } => {
                    let n = ((b - a).norm() / step).ceil().max(1.0) as usize;
                    out.extend((0..=n).map(|k| a + (b - a) * (k as f64 / n as f64)));
                }
                Piece::Arc {
                    center,
                    radius,
                    start,
                    sweep,
                } => {
                    let n = (radius * sweep / step).ceil().max(1.0) as usize;
                    out.extend((0..=n).map(|k| {
                        let t = start + sweep * k as f64 / n as f64;
                        center + Point2::new(t.cos(), t.sin()) * radius
                    }));
                }
            }
        }
    }
}

fn collect_primitives<'a>(g: &'a Geometry2D, out: &mut Vec<&'a Primitive2D>) {
    match g {
        Geometry2D::Leaf(p) => out.push(p),
        Geometry2D::Union(children) => children.iter().for_each(|c| collect_primitives(c, out)),
        Geometry2D::Difference { base, removed } => {
            out.push(base);
            out.extend(removed.iter());
        }
    }
}

/// Lower envelope of parabolas `(x - q)² + f(q)` over the finite entries.
fn envelope_1d(f: &[f64], d: &mut [f64], arg: &mut [usize], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for q in 0..f.len() {
        if !f[q].is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let pf = p as f64;
            let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf));
            if s <= *z.last().expect("paired with v") {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        d.fill(f64::INFINITY);
        return;
    }
    z.push(f64::INFINITY);
    let mut k = 0;
    for x in 0..f.len() {
        let xf = x as f64;
        while z[k + 1] < xf {
            k += 1;
        }
        let q = v[k];
        d[x] = (xf - q as f64).powi(2) + f[q];
        arg[x] = q;
    }
}

/// Exact squared Euclidean distance transform (separable, two passes) of the
/// occupied cells, with a nearest occupied cell per cell. Distances are then
/// taken to that cell's seed: the center for member cells, the sampled
/// boundary point otherwise.
pub fn distance_transform(bitmap: &Bitmap) -> Result<DistanceField, EngineError> {
    let Grid { nx, ny, .. } = bitmap.grid;
    let grid = bitmap.grid;
    let occupied = |k: usize| bitmap.bits[k] || bitmap.seeds.contains_key(&k);
    if !(0..grid.cells()).any(occupied) {
        return Err(EngineError::EmptySet);
    }
    // Columns: column-major scratch of squared distances and nearest rows.
    let mut col_d = vec![0.0; grid.cells()];
    let mut col_arg = vec![0usize; grid.cells()];
    col_d
        .par_chunks_mut(ny)
        .zip(col_arg.par_chunks_mut(ny))
        .enumerate()
        .for_each(|(i, (d, arg))| {
            let f: Vec<f64> = (0..ny)
                .map(|j| {
                    if occupied(j * nx + i) {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .collect();
            let (mut v, mut z) = (Vec::new(), Vec::new());
            envelope_1d(&f, d, arg, &mut v, &mut z);
        });
    let mut values = vec![0.0; grid.cells()];
    let mut normals = vec![[0.0; 2]; grid.cells()];
    values
        .par_chunks_mut(nx)
        .zip(normals.par_chunks_mut(nx))
        .enumerate()
        .for_each(|(j, (vrow, nrow))| {
            let f: Vec<f64> = (0..nx).map(|i| col_d[i * ny + j]).collect();
            let mut d = vec![0.0; nx];
            let mut arg = vec![0usize; nx];
            let (mut v, mut z) = (Vec::new(), Vec::new());
            envelope_1d(&f, &mut d, &mut arg, &mut v, &mut z);
            for i in 0..nx {
                let k = j * nx + i;
                if bitmap.bits[k] {
                    continue;
                }
                let (fi, fj) = (arg[i], col_arg[arg[i] * ny + j]);
                let fk = fj * nx + fi;
                let seed = bitmap
                    .seeds
                    .get(&fk)
                    .copied()
                    .unwrap_or_else(|| grid.center(fi, fj));
                let p = grid.center(i, j);
                let dist = p.dist(seed);
                vrow[i] = dist;
                if dist > 0.0 {
                    let n = (p - seed) * (1.0 / dist);
                    nrow[i] = [n.x, n.y];
                }
            }
        });
    Ok(DistanceField {
        grid,
        values,
        normals,
        source: FieldSource::DistanceTransform,
        label: String::new(),
        margin: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CompactSet, DistanceOracle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disk_area_from_popcount() {
        let g: Geometry2D = Primitive2D::disk(Point2::ORIGIN, 1.0).into();
        let b = rasterize_membership(&g, Rect::new(-1.5, 1.5, -1.5, 1.5), 0.01).unwrap();
        assert!((b.popcount() as f64 * 1e-4 - std::f64::consts::PI).abs() < 0.05);
        let far = rasterize_membership(&g, Rect::new(3.0, 4.0, 3.0, 4.0), 0.01).unwrap();
        assert_eq!(far.popcount(), 0);
        assert!(matches!(
            distance_transform(&far),
            Err(EngineError::EmptySet)
        ));
    }

    #[test]
    fn zero_area_boundary_marks_only_lattice_centers() {
        let g = Geometry2D::rect_boundary(0.0, 3.0, 0.0, 2.0).unwrap();
        let b = rasterize_membership(&g, Rect::new(-0.5, 3.5, -0.5, 2.5), 0.05).unwrap();
        // Every center on the four sides, and no others.
        assert_eq!(b.popcount(), 2 * 61 + 2 * 39);
        let skew = Geometry2D::rect_boundary(0.013, 3.013, 0.017, 2.017).unwrap();
        let b = rasterize_membership(&skew, Rect::new(-0.5, 3.5, -0.5, 2.5), 0.05).unwrap();
        assert_eq!(b.popcount(), 0);
        assert!(b.seeds.len() as f64 <= 10.0 / 0.05 * 1.1 + 8.0);
    }

    #[test]
    fn single_cell_is_radial() {
        let grid = Grid::covering(Rect::new(-1.0, 1.0, -1.0, 1.0), 0.1).unwrap();
        let mut bits = vec![false; grid.cells()];
        let (ci, cj) = grid.locate(Point2::new(0.3, -0.2)).unwrap();
        bits[cj * grid.nx + ci] = true;
        let f = distance_transform(&Bitmap {
            grid,
            bits,
            seeds: BTreeMap::new(),
        })
        .unwrap();
        let c = grid.center(ci, cj);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                assert!((f.value(i, j) - grid.center(i, j).dist(c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_points_is_min_of_radial_fields() {
        let (a, b) = (Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0));
        let g: Geometry2D = Primitive2D::points(vec![a, b]).into();
        let bm = rasterize_membership(&g, Rect::new(-2.0, 2.0, -1.5, 1.5), 0.02).unwrap();
        assert_eq!(bm.popcount(), 2);
        let f = distance_transform(&bm).unwrap();
        for j in (0..f.grid.ny).step_by(7) {
            for i in (0..f.grid.nx).step_by(5) {
                let p = f.grid.center(i, j);
                assert!((f.value(i, j) - p.dist(a).min(p.dist(b))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disk_raster_tracks_exact_distance() {
        let g: Geometry2D = Primitive2D::disk(Point2::new(0.1, -0.05), 1.0).into();
        let h = 0.01;
        let bm = rasterize_membership(&g, Rect::new(-2.0, 2.0, -2.0, 2.0), h).unwrap();
        let f = distance_transform(&bm).unwrap();
        let oracle = DistanceOracle::compile(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let p = Point2::new(rng.gen_range(-1.9..1.9), rng.gen_range(-1.9..1.9));
            let grid_d = f.sample(p).unwrap();
            worst = worst.max((grid_d - oracle.distance(p)).abs());
            assert_eq!(g.exact_distance(p).unwrap(), oracle.distance(p));
        }
        assert!(worst <= h, "worst deviation {worst}");
    }
}
