use serde::{Deserialize, Serialize};

use super::radii::{tail_gap_sum, TargetRadii};
use super::{FractalError, RATIO_MARGIN};

/// Quadrature controls for [`integral_condition`] on infinite sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Dyadic bands `[b 2^{-n-1}, b 2^{-n}]`, `n = 0..bands`, evaluated explicitly.
    pub bands: u32,
    /// Geometric sub-intervals per band for the monotone bracketing.
    pub subdivisions: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            bands: 40,
            subdivisions: 16,
        }
    }
}

/// Value of `∫₀^∞ G_{1/2}(N̄ ∩ [r,∞)) √r dr` and its convergence verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    #[serde(with = "crate::ext")]
    pub value: f64,
    #[serde(with = "crate::ext")]
    pub lower: f64,
    #[serde(with = "crate::ext")]
    pub upper: f64,
    pub finite: bool,
    /// True when `value` comes from the exact piecewise formula.
    pub exact: bool,
    /// `δ_n^{3/2} G_{1/2}(N̄ ∩ [δ_{n+1}, δ_n])` for the evaluated bands.
    #[serde(with = "ext_vec")]
    pub band_terms: Vec<f64>,
    /// Per-band decay ratio estimated on the tail of `band_terms`.
    #[serde(with = "crate::ext")]
    pub decay_ratio: f64,
}

mod ext_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(serde::Serialize, Deserialize)]
    struct E(#[serde(with = "crate::ext")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&E(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<E>::deserialize(d)?.into_iter().map(|e| e.0).collect())
    }
}

/// `∫_a^b √r dr`.
fn sqrt_integral(a: f64, b: f64) -> f64 {
    2.0 / 3.0 * (b.powf(1.5) - a.powf(1.5))
}

/// Exact value for a finite closure: the integrand is constant between
/// consecutive closure points.
fn finite_integral(points_increasing: &[f64]) -> f64 {
    let m = points_increasing.len();
    let mut suffix = vec![0.0; m + 1];
    for i in (0..m.saturating_sub(1)).rev() {
        suffix[i] = suffix[i + 1] + (points_increasing[i + 1] - points_increasing[i]).sqrt();
    }
    let mut prev = 0.0;
    let mut total = 0.0;
    for (i, &p) in points_increasing.iter().enumerate() {
        total += suffix[i] * sqrt_integral(prev, p);
        prev = p;
    }
    total
}

fn band_terms(n: &TargetRadii, b: f64, bands: u32) -> Vec<f64> {
    (0..bands)
        .map(|k| {
            let hi = b * 0.5f64.powi(k as i32);
            hi.powf(1.5) * n.window_gap_sum(0.5 * hi, hi, 0.5)
        })
        .collect()
}

/// Geometric decay per band over the last half of the terms: ratio of the
/// sums over the third and fourth quarters, normalised per band.
fn decay_ratio(terms: &[f64]) -> f64 {
    let m = terms.len();
    let q = m / 4;
    if q == 0 {
        return f64::NAN;
    }
    let s1: f64 = terms[m - 2 * q..m - q].iter().sum();
    let s2: f64 = terms[m - q..].iter().sum();
    if s1 == 0.0 {
        return 0.0;
    }
    (s2 / s1).powf(1.0 / q as f64)
}

/// Condition on `∫ G_{1/2}(N̄∩[r,∞)) √r dr`. Finite closures are integrated
/// exactly; generator-backed sets are bracketed band by band using the
/// monotonicity of the integrand, and the verdict comes from the decay of
/// the dyadic band sums.
pub fn integral_condition(
    n: &TargetRadii,
    quad: &Quadrature,
) -> Result<IntegralReport, FractalError> {
    if n.is_empty() {
        return Err(FractalError::InvalidInput("radii set is empty".into()));
    }
    let b = n.max_closure();
    if n.generator().is_none() {
        if n.origin_accumulates() {
            return Err(FractalError::InconclusiveTail(
                "set accumulates at 0 but only a truncated list is known".into(),
            ));
        }
        let pts = n.closure_points();
        let v = finite_integral(&pts);
        return Ok(IntegralReport {
            value: v,
            lower: v,
            upper: v,
            finite: true,
            exact: true,
            band_terms: band_terms(n, b, quad.bands.min(64)),
            decay_ratio: 0.0,
        });
    }
    if quad.bands < 8 || quad.subdivisions == 0 {
        return Err(FractalError::InvalidInput(
            "need at least 8 bands and one subdivision".into(),
        ));
    }
    let terms = band_terms(n, b, quad.bands);
    if terms.iter().any(|t| t.is_infinite()) {
        return Ok(IntegralReport {
            value: f64::INFINITY,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            finite: false,
            exact: false,
            band_terms: terms,
            decay_ratio: f64::INFINITY,
        });
    }
    let rho = decay_ratio(&terms);
    let (mut lower, mut upper) = (0.0, 0.0);
    let mut last_band = 0.0;
    for k in 0..quad.bands {
        let hi = b * 0.5f64.powi(k as i32);
        let lo = 0.5 * hi;
        let mut band_upper = 0.0;
        let mut g_right = tail_gap_sum(n, hi);
        for j in (0..quad.subdivisions).rev() {
            let a = lo * 2f64.powf(j as f64 / quad.subdivisions as f64);
            let c = lo * 2f64.powf((j + 1) as f64 / quad.subdivisions as f64);
            let g_left = tail_gap_sum(n, a);
            let w = sqrt_integral(a, c);
            lower += g_right * w;
            band_upper += g_left * w;
            g_right = g_left;
        }
        upper += band_upper;
        last_band = band_upper;
    }
    let finite = rho < 1.0 - RATIO_MARGIN;
    if finite {
        upper += last_band * rho / (1.0 - rho);
    } else {
        upper = f64::INFINITY;
    }
    Ok(IntegralReport {
        value: if finite {
            0.5 * (lower + upper)
        } else {
            f64::INFINITY
        },
        lower,
        upper,
        finite,
        exact: false,
        band_terms: terms,
        decay_ratio: rho,
    })
}

/// Realizability report for a prescribed set of radii in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `G_{1/2}(N̄)`.
    #[serde(with = "crate::ext")]
    pub gap_sum_half: f64,
    /// Closures are countable by construction, hence null.
    pub lebesgue_null: bool,
    #[serde(with = "crate::ext")]
    pub integral_value: f64,
    /// `None` when the integral verdict is inconclusive.
    pub integral_finite: Option<bool>,
    #[serde(with = "crate::ext")]
    pub sum_s: f64,
    #[serde(with = "crate::ext")]
    pub sum_s2: f64,
    #[serde(with = "crate::ext")]
    pub sum_sd: f64,
    pub d: u32,
    pub min_closure: f64,
    pub eps: f64,
    pub truncation_depth: Option<u32>,
    pub verdict_i: bool,
    pub verdict_ii: bool,
    pub notes: Vec<String>,
}

/// Conditions (i) and (ii) for the plane, plus the summability conditions
/// `Σ s < ∞`, `Σ s² < ∞` and `Σ s^d < ∞`.
pub fn check_conditions(
    n: &TargetRadii,
    eps: f64,
    d: u32,
) -> Result<ConditionReport, FractalError> {
    if n.is_empty() {
        return Err(FractalError::InvalidInput("radii set is empty".into()));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(FractalError::InvalidInput(
            "eps must be a nonnegative real".into(),
        ));
    }
    let mut notes = Vec::new();
    let gap_sum_half = n.closure_string().gap_sum(0.5);
    let lebesgue_null = true;
    let (integral_value, integral_finite) = match integral_condition(n, &Quadrature::default()) {
        Ok(rep) => {
            if !rep.exact {
                notes.push(format!(
                    "integral bracketed in [{:.6e}, {:.6e}], band decay ratio {:.4}",
                    rep.lower, rep.upper, rep.decay_ratio
                ));
            }
            (rep.value, Some(rep.finite))
        }
        Err(FractalError::InconclusiveTail(msg)) => {
            notes.push(format!("integral verdict inconclusive: {msg}"));
            (f64::NAN, None)
        }
        Err(e) => return Err(e),
    };
    if !n.closure_is_exact() {
        notes.push("closure known only through a truncated list; gap sum is a lower bound".into());
    }
    let min_closure = n.min_closure();
    let verdict_i =
        lebesgue_null && gap_sum_half.is_finite() && min_closure > 0.0 && min_closure >= eps;
    let verdict_ii = lebesgue_null && integral_finite == Some(true);
    Ok(ConditionReport {
        gap_sum_half,
        lebesgue_null,
        integral_value,
        integral_finite,
        sum_s: n.power_sum(1.0),
        sum_s2: n.power_sum(2.0),
        sum_sd: n.power_sum(d as f64),
        d,
        min_closure,
        eps,
        truncation_depth: n.generator().map(|g| g.depth()),
        verdict_i,
        verdict_ii,
        notes,
    })
}

pub fn check_dim2_conditions(n: &TargetRadii, eps: f64) -> Result<ConditionReport, FractalError> {
    check_conditions(n, eps, 2)
}
