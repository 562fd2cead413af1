use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::engine::VolumeSamples;

/// One-sided window: `samples` points at offsets `stride, 2·stride, …`
/// from the evaluation radius, which itself is excluded, fitted by a
/// polynomial of the given degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub samples: usize,
    pub stride: usize,
    pub degree: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            samples: 12,
            stride: 1,
            degree: 3,
        }
    }
}

impl WindowSpec {
    /// Samples needed on each side.
    pub fn reach(self) -> usize {
        self.samples * self.stride
    }

    pub fn is_valid(self) -> bool {
        self.degree >= 1 && self.samples >= 2 * self.degree + 2 && self.stride >= 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    pub r: f64,
    pub left: f64,
    pub right: f64,
    pub window: WindowSpec,
    /// Slope error bars of each side, see [`one_sided_derivatives`].
    pub left_noise: f64,
    pub right_noise: f64,
    /// The larger of the two error bars.
    pub noise: f64,
    /// Largest fit residual in volume units.
    pub residual: f64,
}

impl DerivativeEstimate {
    pub fn jump(&self) -> f64 {
        self.left - self.right
    }

    /// Error bar of [`jump`](Self::jump).
    pub fn jump_noise(&self) -> f64 {
        self.left_noise + self.right_noise
    }
}

/// Least-squares polynomial through the window: `P = (XᵀX)⁻¹Xᵀ` with rows
/// `[1, τ, …, τ^degree]`, `τ = offset / (samples · stride · step)`.
struct Stencil {
    design: DMatrix<f64>,
    proj: DMatrix<f64>,
    scale: f64,
    slope_l1: f64,
}

impl Stencil {
    fn new(samples: usize, stride: usize, degree: usize, step: f64, sign: f64) -> Self {
        let scale = (samples * stride) as f64 * step;
        let design = DMatrix::from_fn(samples, degree + 1, |m, p| {
            (sign * (m + 1) as f64 / samples as f64).powi(p as i32)
        });
        let proj = design
            .clone()
            .pseudo_inverse(1e-13)
            .expect("non-negative tolerance");
        let slope_l1 = proj.row(1).iter().map(|c| c.abs()).sum::<f64>() / scale;
        Stencil {
            design,
            proj,
            scale,
            slope_l1,
        }
    }

    fn len(&self) -> usize {
        self.design.nrows()
    }

    /// `(slope, max residual)` for the window values `v`.
    fn fit(&self, v: &[f64]) -> (f64, f64) {
        let y = DVector::from_column_slice(v);
        let c = &self.proj * &y;
        let resid = (&self.design * &c - &y).amax();
        let floor = 16.0 * f64::EPSILON * y.amax();
        (c[1] / self.scale, resid.max(floor))
    }
}

struct SidedStencils {
    left: Stencil,
    right: Stencil,
    left_half: Stencil,
    right_half: Stencil,
    /// Bias of the full window implied by the halving discrepancy when the
    /// bias decays like `√width`, the slowest rate seen in practice (at a
    /// tangency, where `V` has a `t^{3/2}` term).
    bias_factor: f64,
    spec: WindowSpec,
}

impl SidedStencils {
    fn new(spec: WindowSpec, step: f64) -> Self {
        let (n, d) = (spec.samples, spec.degree);
        let half = n / 2;
        SidedStencils {
            left: Stencil::new(n, spec.stride, d, step, -1.0),
            right: Stencil::new(n, spec.stride, d, step, 1.0),
            left_half: Stencil::new(half, spec.stride, d, step, -1.0),
            right_half: Stencil::new(half, spec.stride, d, step, 1.0),
            bias_factor: 1.0 / (1.0 - (half as f64 / n as f64).sqrt()),
            spec,
        }
    }

    fn estimate(&self, vs: &VolumeSamples, k: usize) -> Option<DerivativeEstimate> {
        let reach = self.spec.reach();
        if k < reach || k + reach >= vs.len() {
            return None;
        }
        let s = self.spec.stride;
        let lv: Vec<f64> = (1..=self.spec.samples)
            .map(|m| vs.volume[k - m * s])
            .collect();
        let rv: Vec<f64> = (1..=self.spec.samples)
            .map(|m| vs.volume[k + m * s])
            .collect();
        let (left, lres) = self.left.fit(&lv);
        let (right, rres) = self.right.fit(&rv);
        let (left_half, _) = self.left_half.fit(&lv[..self.left_half.len()]);
        let (right_half, _) = self.right_half.fit(&rv[..self.right_half.len()]);
        let left_noise =
            (lres * self.left.slope_l1).max(self.bias_factor * (left - left_half).abs());
        let right_noise =
            (rres * self.right.slope_l1).max(self.bias_factor * (right - right_half).abs());
        Some(DerivativeEstimate {
            r: vs.radii[k],
            left,
            right,
            window: self.spec,
            left_noise,
            right_noise,
            noise: left_noise.max(right_noise),
            residual: lres.max(rres),
        })
    }
}

/// Left and right slopes at the sample nearest to `r` from polynomial
/// least-squares fits over the one-sided windows.
///
/// Each side carries an error bar: the largest fit residual (floored at
/// rounding level) times the ℓ¹ norm of the slope weights, or the change of
/// slope when the window is halved scaled to the bias it implies for a
/// `√width` decay, whichever is larger. The second term exposes unmodelled
/// singular terms that fit with small residuals, so near a tangency the
/// error bar is as large as the spurious jump.
pub fn one_sided_derivatives(
    vs: &VolumeSamples,
    r: f64,
    spec: WindowSpec,
) -> Result<DerivativeEstimate, AnalysisError> {
    if !spec.is_valid() {
        return Err(AnalysisError::InsufficientSamples(
            "windows need degree ≥ 1, samples ≥ 2·degree + 2 and stride ≥ 1".into(),
        ));
    }
    let k = vs.nearest_index(r);
    SidedStencils::new(spec, vs.grid.step)
        .estimate(vs, k)
        .ok_or_else(|| {
            AnalysisError::InsufficientSamples(format!(
                "r = {r} needs {} samples on each side",
                spec.reach()
            ))
        })
}

/// Jump `left − right` at one radius with its error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEntry {
    pub r: f64,
    pub left: f64,
    pub right: f64,
    pub stat: f64,
    pub noise: f64,
    /// Largest fit residual of the two windows, in volume units.
    pub residual: f64,
}

/// Estimates at every sample with full windows on both sides.
pub(crate) fn all_estimates(vs: &VolumeSamples, spec: WindowSpec) -> Vec<DerivativeEstimate> {
    let reach = spec.reach();
    if !spec.is_valid() || vs.len() <= 2 * reach {
        return Vec::new();
    }
    let st = SidedStencils::new(spec, vs.grid.step);
    (reach..vs.len() - reach)
        .into_par_iter()
        .map(|k| st.estimate(vs, k).expect("inside reach"))
        .collect()
}

/// Jump statistics at every sample with full windows on both sides.
pub fn jump_profile(vs: &VolumeSamples, spec: WindowSpec) -> Vec<JumpEntry> {
    all_estimates(vs, spec)
        .into_iter()
        .map(|e| JumpEntry {
            r: e.r,
            left: e.left,
            right: e.right,
            stat: e.jump(),
            noise: e.jump_noise(),
            residual: e.residual,
        })
        .collect()
}
