use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::edt::{distance_transform, rasterize_on};
use super::{EngineError, DEFAULT_MAX_CELLS, MAX_CELLS_ENV};
use crate::geometry::{DistanceOracle, Geometry2D, Point2, Rect};

/// Cell budget from the environment, falling back to the default.
pub fn max_cells() -> usize {
    std::env::var(MAX_CELLS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_CELLS)
}

/// Lattice of cell centers `(i h, j h)` for `i0 ≤ i < i0 + nx`, `j0 ≤ j < j0 + ny`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub i0: i64,
    pub j0: i64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl Grid {
    /// Smallest lattice whose centers cover `rect`.
    pub fn covering(rect: Rect, h: f64) -> Result<Self, EngineError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(EngineError::InvalidInput(format!(
                "spacing must be positive, got {h}"
            )));
        }
        let i0 = (rect.xmin / h).floor() as i64;
        let i1 = (rect.xmax / h).ceil() as i64;
        let j0 = (rect.ymin / h).floor() as i64;
        let j1 = (rect.ymax / h).ceil() as i64;
        let (nx, ny) = ((i1 - i0 + 1) as usize, (j1 - j0 + 1) as usize);
        let cells = nx.saturating_mul(ny);
        let budget = max_cells();
        if cells > budget {
            return Err(EngineError::GridTooLarge { cells, budget });
        }
        Ok(Grid { i0, j0, nx, ny, h })
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn x(&self, i: usize) -> f64 {
        (self.i0 + i as i64) as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        (self.j0 + j as i64) as f64 * self.h
    }

    pub fn center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(self.x(i), self.y(j))
    }

    /// Rectangle spanned by the cell centers.
    pub fn extent(&self) -> Rect {
        Rect::new(
            self.x(0),
            self.x(self.nx - 1),
            self.y(0),
            self.y(self.ny - 1),
        )
    }

    /// Index of the cell whose center is closest to `p`, if inside.
    pub fn locate(&self, p: Point2) -> Option<(usize, usize)> {
        let i = (p.x / self.h).round() as i64 - self.i0;
        let j = (p.y / self.h).round() as i64 - self.j0;
        (i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny)
            .then_some((i as usize, j as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    ExactOracle,
    DistanceTransform,
}

/// Sampled `d(·, A)` at the cell centers, with the unit direction away from
/// a nearest point (zero where the value is zero).
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub normals: Vec<[f64; 2]>,
    pub source: FieldSource,
    pub label: String,
    /// Distance from the set's bounding box to the edge of the lattice.
    pub margin: f64,
}

impl DistanceField {
    /// Field over the bounding box of `g` inflated by `pad`. Uses the exact
    /// oracle when the geometry supports it.
    pub fn from_geometry(
        g: &Geometry2D,
        pad: f64,
        h: f64,
        label: &str,
    ) -> Result<Self, EngineError> {
        let bbox = g.bounding_box();
        let grid = Grid::covering(bbox.inflate(pad), h)?;
        let margin = pad;
        match DistanceOracle::compile(g) {
            Ok(oracle) => Ok(Self::from_oracle(g, &oracle, grid, margin, label)),
            Err(_) => {
                let bitmap = rasterize_on(g, grid)?;
                let mut f = distance_transform(&bitmap)?;
                f.label = label.to_string();
                f.margin = margin;
                Ok(f)
            }
        }
    }

    fn from_oracle(
        g: &Geometry2D,
        oracle: &DistanceOracle,
        grid: Grid,
        margin: f64,
        label: &str,
    ) -> Self {
        let mut values = vec![0.0; grid.cells()];
        let mut normals = vec![[0.0; 2]; grid.cells()];
        values
            .par_chunks_mut(grid.nx)
            .zip(normals.par_chunks_mut(grid.nx))
            .enumerate()
            .for_each(|(j, (vrow, nrow))| {
                for i in 0..grid.nx {
                    let p = grid.center(i, j);
                    if g.contains(p) {
                        continue;
                    }
                    let (a, d) = oracle.nearest(p);
                    if d > 0.0 {
                        vrow[i] = d;
                        let n = (p - a) * (1.0 / d);
                        nrow[i] = [n.x, n.y];
                    }
                }
            });
        DistanceField {
            grid,
            values,
            normals,
            source: FieldSource::ExactOracle,
            label: label.to_string(),
            margin,
        }
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn normal(&self, i: usize, j: usize) -> Point2 {
        let n = self.normals[j * self.grid.nx + i];
        Point2::new(n[0], n[1])
    }

    /// Estimated nearest point of `A` seen from the cell center.
    pub fn foot(&self, i: usize, j: usize) -> Point2 {
        self.grid.center(i, j) - self.normal(i, j) * self.value(i, j)
    }

    /// Radii in which discretization bias is controlled: at least `2h` and
    /// at most `2h` short of the lattice margin.
    pub fn trusted_band(&self) -> (f64, f64) {
        (2.0 * self.h(), self.margin - 2.0 * self.h())
    }

    pub fn check_band(&self, r: f64) -> Result<(), EngineError> {
        let (lo, hi) = self.trusted_band();
        if r < lo || r > hi {
            return Err(EngineError::RadiusOutOfBand { r, lo, hi });
        }
        Ok(())
    }

    /// The same field on the lattice of spacing `2h`: every other cell
    /// center, values and directions copied.
    pub fn coarsened(&self) -> Self {
        let g = self.grid;
        let i0 = g.i0.div_euclid(2) + (g.i0.rem_euclid(2) != 0) as i64;
        let j0 = g.j0.div_euclid(2) + (g.j0.rem_euclid(2) != 0) as i64;
        let i_end = (g.i0 + g.nx as i64 - 1).div_euclid(2);
        let j_end = (g.j0 + g.ny as i64 - 1).div_euclid(2);
        let grid = Grid {
            i0,
            j0,
            nx: (i_end - i0 + 1).max(0) as usize,
            ny: (j_end - j0 + 1).max(0) as usize,
            h: 2.0 * g.h,
        };
        let mut values = Vec::with_capacity(grid.cells());
        let mut normals = Vec::with_capacity(grid.cells());
        for jj in 0..grid.ny {
            let j = (2 * (j0 + jj as i64) - g.j0) as usize;
            for ii in 0..grid.nx {
                let i = (2 * (i0 + ii as i64) - g.i0) as usize;
                values.push(self.value(i, j));
                normals.push(self.normals[j * g.nx + i]);
            }
        }
        DistanceField {
            grid,
            values,
            normals,
            source: self.source,
            label: self.label.clone(),
            margin: self.margin - g.h,
        }
    }

    /// Bilinear interpolation of the field, `None` outside the lattice.
    pub fn sample(&self, p: Point2) -> Option<f64> {
        let g = &self.grid;
        let fx = p.x / g.h - g.i0 as f64;
        let fy = p.y / g.h - g.j0 as f64;
        if fx < 0.0 || fy < 0.0 || fx > (g.nx - 1) as f64 || fy > (g.ny - 1) as f64 {
            return None;
        }
        let i = (fx.floor() as usize).min(g.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(g.ny.saturating_sub(2));
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let v = |a: usize, b: usize| self.value(a, b);
        Some(
            (1.0 - ty) * ((1.0 - tx) * v(i, j) + tx * v(i + 1, j))
                + ty * ((1.0 - tx) * v(i, j + 1) + tx * v(i + 1, j + 1)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Primitive2D;
    use proptest::prelude::*;

    #[test]
    fn lattice_alignment() {
        let g = Grid::covering(Rect::new(-0.0105, 0.02, 0.0, 0.01), 0.01).unwrap();
        assert_eq!((g.i0, g.nx, g.j0, g.ny), (-2, 5, 0, 2));
        assert_eq!(g.x(2), 0.0);
        assert_eq!(g.locate(Point2::new(0.0049, 0.0051)), Some((2, 1)));
        assert!(matches!(
            Grid::covering(Rect::new(0.0, 1e3, 0.0, 1e3), 1e-3),
            Err(EngineError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn coarsening_keeps_even_centers() {
        let g: Geometry2D = Primitive2D::disk(Point2::ORIGIN, 1.0).into();
        let f = DistanceField::from_geometry(&g, 0.5, 0.05, "disk").unwrap();
        let c = f.coarsened();
        assert_eq!(c.h(), 0.1);
        for j in 0..c.grid.ny {
            for i in 0..c.grid.nx {
                let p = c.grid.center(i, j);
                let (fi, fj) = f.grid.locate(p).unwrap();
                assert_eq!(c.value(i, j), f.value(fi, fj));
            }
        }
        assert!(c.grid.extent().xmin - f.grid.extent().xmin <= 0.05 + 1e-12);
    }

    #[test]
    fn oracle_field_values_and_feet() {
        let g: Geometry2D = Primitive2D::disk(Point2::ORIGIN, 1.0).into();
        let f = DistanceField::from_geometry(&g, 1.0, 0.05, "disk").unwrap();
        assert_eq!(f.source, FieldSource::ExactOracle);
        for j in 0..f.grid.ny {
            for i in 0..f.grid.nx {
                let p = f.grid.center(i, j);
                let want = (p.norm() - 1.0).max(0.0);
                assert!((f.value(i, j) - want).abs() < 1e-12);
                if want > 0.0 {
                    assert!((f.foot(i, j).norm() - 1.0).abs() < 1e-12);
                }
            }
        }
        let (lo, hi) = f.trusted_band();
        assert!((lo - 0.1).abs() < 1e-15 && (hi - 0.9).abs() < 1e-12);
        assert!(f.check_band(0.95).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn discrete_lipschitz(cx in -0.5f64..0.5, cy in -0.5f64..0.5, w in 0.2f64..1.0) {
            let g = Geometry2D::union(vec![
                Primitive2D::rectangle(cx, cx + w, cy, cy + 0.3).into(),
                Primitive2D::points(vec![Point2::new(1.0, 1.0)]).into(),
            ]).unwrap();
            let f = DistanceField::from_geometry(&g, 0.5, 0.04, "p").unwrap();
            let (nx, ny) = (f.grid.nx, f.grid.ny);
            for j in 0..ny {
                for i in 0..nx {
                    let v = f.value(i, j);
                    prop_assert_eq!(v == 0.0, g.contains(f.grid.center(i, j)));
                    if i + 1 < nx {
                        prop_assert!((v - f.value(i + 1, j)).abs() <= 0.04 * (1.0 + 1e-12));
                    }
                    if j + 1 < ny {
                        prop_assert!((v - f.value(i, j + 1)).abs() <= 0.04 * (1.0 + 1e-12));
                    }
                }
            }
        }
    }
}
