//! Fractal strings, gap sums and admissibility conditions for prescribed
//! sets of radii.

mod conditions;
mod gallery;
mod radii;
mod string;

use thiserror::Error;

pub use conditions::{
    check_conditions, check_dim2_conditions, integral_condition, ConditionReport, IntegralReport,
    Quadrature,
};
pub use gallery::{box_counting_dimension, cantor_gallery, CantorGallery, MIN_SIDE};
pub use radii::{cantor_closed_form, tail_gap_csv, tail_gap_sum, RadiiGenerator, TargetRadii};
pub use string::{fractal_string_of, FractalString, GeometricTail};

/// Partial sums above this are reported as divergent.
pub const DIVERGENCE_BUDGET: f64 = 1e12;
/// Geometric ratios within this margin of 1 are treated as divergent.
pub const RATIO_MARGIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FractalError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("inconclusive tail: {0}")]
    InconclusiveTail(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn gap_sum_scales_homogeneously(lens in prop::collection::vec(1e-3f64..10.0, 0..30),
                                        c in 0.01f64..100.0, alpha in 0.1f64..2.0) {
            let s = FractalString::new(lens).unwrap();
            let lhs = s.scaled(c).gap_sum(alpha);
            let rhs = c.powf(alpha) * s.gap_sum(alpha);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }

        #[test]
        fn tailed_gap_sum_scales_homogeneously(q in 0.01f64..0.2, c in 0.1f64..10.0) {
            let s = cantor_gallery(q, 6).unwrap().f_q_string;
            let lhs = s.scaled(c).gap_sum(0.5);
            prop_assert!((lhs - c.sqrt() * s.gap_sum(0.5)).abs() <= 1e-12 * lhs);
        }
    }
}
