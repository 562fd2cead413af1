use serde::{Deserialize, Serialize};

use super::{FractalError, DIVERGENCE_BUDGET, RATIO_MARGIN};
use crate::geometry::Set1D;

/// Geometric family of gap lengths appended after the explicit list:
/// level `j` holds `count * count_ratio^j` gaps of length
/// `length * length_ratio^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricTail {
    pub count: f64,
    pub count_ratio: f64,
    pub length: f64,
    pub length_ratio: f64,
}

impl GeometricTail {
    /// Ratio of consecutive level contributions to `G_α`.
    pub fn ratio(&self, alpha: f64) -> f64 {
        self.count_ratio * self.length_ratio.powf(alpha)
    }

    pub fn gap_sum(&self, alpha: f64) -> f64 {
        let rho = self.ratio(alpha);
        if rho >= 1.0 - RATIO_MARGIN {
            return f64::INFINITY;
        }
        self.count * self.length.powf(alpha) / (1.0 - rho)
    }
}

/// Non-increasing sequence of gap lengths, optionally continued by a
/// geometric tail for infinite strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractalString {
    lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<GeometricTail>,
}

impl FractalString {
    pub fn new(mut lengths: Vec<f64>) -> Result<Self, FractalError> {
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(FractalError::InvalidInput(
                "string lengths must be positive and finite".into(),
            ));
        }
        lengths.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            lengths,
            tail: None,
        })
    }

    pub fn with_tail(mut self, tail: GeometricTail) -> Result<Self, FractalError> {
        let ok = [tail.count, tail.count_ratio, tail.length, tail.length_ratio]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
            && tail.length_ratio < 1.0;
        if !ok {
            return Err(FractalError::InvalidInput(
                "tail parameters must be positive with length ratio < 1".into(),
            ));
        }
        if let Some(&last) = self.lengths.last() {
            if tail.length > last {
                return Err(FractalError::InvalidInput(
                    "tail lengths must not exceed the explicit lengths".into(),
                ));
            }
        }
        self.tail = Some(tail);
        Ok(self)
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn tail(&self) -> Option<&GeometricTail> {
        self.tail.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty() && self.tail.is_none()
    }

    /// Multiply every length by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            lengths: self.lengths.iter().map(|l| l * c).collect(),
            tail: self.tail.map(|t| GeometricTail {
                length: t.length * c,
                ..t
            }),
        }
    }

    /// `G_α = Σ ℓ_j^α`, `+∞` when the sum diverges or exceeds the budget.
    pub fn gap_sum(&self, alpha: f64) -> f64 {
        assert!(alpha > 0.0, "gap sum needs alpha > 0");
        let mut s = 0.0;
        for l in &self.lengths {
            s += l.powf(alpha);
            if s > DIVERGENCE_BUDGET {
                return f64::INFINITY;
            }
        }
        if let Some(t) = &self.tail {
            s += t.gap_sum(alpha);
        }
        if s > DIVERGENCE_BUDGET {
            f64::INFINITY
        } else {
            s
        }
    }
}

/// Gap lengths of the bounded complementary intervals of `a`, largest first.
pub fn fractal_string_of(a: &Set1D) -> FractalString {
    let mut lengths: Vec<f64> = a.gaps().collect();
    lengths.sort_by(|x, y| y.total_cmp(x));
    FractalString {
        lengths,
        tail: None,
    }
}
