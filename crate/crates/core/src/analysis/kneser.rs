use serde::{Deserialize, Serialize};

use super::derivatives::{all_estimates, jump_profile, one_sided_derivatives, WindowSpec};
use super::nondiff::noise_floor;
use super::AnalysisError;
use crate::engine::VolumeSamples;

/// Scale factors of the sweep.
const LAMBDAS: [f64; 4] = [1.0, 1.25, 1.5, 2.0];
/// At most this many base radii enter the pair sweep.
const MAX_BASE_POINTS: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KneserReport {
    pub d: u32,
    pub triples: usize,
    /// Largest `V(λb) − V(λa) − λ^d (V(b) − V(a))` over the sweep.
    pub worst_violation: f64,
    /// `(λ, a, b)` attaining it.
    pub worst_triple: (f64, f64, f64),
    pub tol: f64,
    pub pass: bool,
}

/// Checks `V(λb) − V(λa) ≤ λ^d (V(b) − V(a))` for `λ ∈ {1, 1.25, 1.5, 2}`
/// and pairs `a < b` of grid radii whose index is a multiple of 4, so that
/// every scaled radius is itself a grid radius (no interpolation).
pub fn kneser_check(vs: &VolumeSamples, d: u32, tol: f64) -> KneserReport {
    let g = vs.grid;
    let first = (g.k0 + 3).div_euclid(4) * 4;
    let mut base: Vec<i64> = (first..=g.k1).step_by(4).collect();
    if base.len() > MAX_BASE_POINTS {
        let stride = base.len().div_ceil(MAX_BASE_POINTS);
        base = base.into_iter().step_by(stride).collect();
    }
    let at = |k: i64| -> Option<f64> {
        (k >= g.k0 && k <= g.k1).then(|| vs.volume[(k - g.k0) as usize])
    };
    let mut worst = f64::NEG_INFINITY;
    let mut worst_triple = (f64::NAN, f64::NAN, f64::NAN);
    let mut triples = 0;
    for &lambda in &LAMBDAS {
        // λ = p/4 with integer p
        let p = (lambda * 4.0).round() as i64;
        let scale = lambda.powi(d as i32);
        for (i, &ka) in base.iter().enumerate() {
            let Some(fla) = at(ka * p / 4) else { continue };
            let fa = at(ka).expect("base radius on the grid");
            for &kb in &base[i + 1..] {
                let Some(flb) = at(kb * p / 4) else { break };
                let fb = at(kb).expect("base radius on the grid");
                let v = (flb - fla) - scale * (fb - fa);
                triples += 1;
                if v > worst {
                    worst = v;
                    worst_triple = (lambda, ka as f64 * g.step, kb as f64 * g.step);
                }
            }
        }
    }
    KneserReport {
        d,
        triples,
        worst_violation: worst,
        worst_triple,
        tol,
        pass: triples > 0 && worst <= tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StachoReport {
    pub checked: usize,
    /// Largest `right − left − 3·noise` over all samples.
    pub worst_excess: f64,
    pub at: f64,
    pub pass: bool,
}

/// `V′₊(r) ≤ V′₋(r) + 3·noise` at every sample with full windows.
pub fn stacho_check(vs: &VolumeSamples, spec: WindowSpec) -> StachoReport {
    let mut worst = f64::NEG_INFINITY;
    let mut at = f64::NAN;
    let estimates = all_estimates(vs, spec);
    for e in &estimates {
        let excess = e.right - e.left - 3.0 * e.noise;
        if excess > worst {
            worst = excess;
            at = e.r;
        }
    }
    StachoReport {
        checked: estimates.len(),
        worst_excess: worst,
        at,
        pass: !estimates.is_empty() && worst <= 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub k: u32,
    pub r_minus: f64,
    pub r_plus: f64,
    /// Largest deviation of the one-sided slopes at `r0 − 2^{-k}δ` from the
    /// central slope at `r0`.
    pub err_minus: f64,
    pub err_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub r0: f64,
    /// False when `r0` itself carries a jump above the threshold.
    pub applicable: bool,
    pub central: f64,
    pub jump_at_r0: f64,
    pub rows: Vec<ContinuityRow>,
    pub tol: f64,
    pub converges: bool,
}

/// Slopes at `r0 ± 2^{-k} δ`, `k = 1..=kmax`, compared with the central
/// slope `(V′₋ + V′₊)/2` at `r0`. Converges when the deviations of the last
/// half of the schedule are non-increasing and the final one is within
/// `tol`.
pub fn derivative_continuity_check(
    vs: &VolumeSamples,
    r0: f64,
    delta: f64,
    kmax: u32,
    spec: WindowSpec,
    tol: f64,
) -> Result<ContinuityReport, AnalysisError> {
    let e0 = one_sided_derivatives(vs, r0, spec)?;
    let noise = noise_floor(&jump_profile(vs, spec));
    let central = 0.5 * (e0.left + e0.right);
    let threshold = (4.0 * noise).max(tol);
    if e0.jump() > threshold {
        return Ok(ContinuityReport {
            r0,
            applicable: false,
            central,
            jump_at_r0: e0.jump(),
            rows: Vec::new(),
            tol,
            converges: false,
        });
    }
    let mut rows = Vec::new();
    for k in 1..=kmax {
        let off = delta * 0.5f64.powi(k as i32);
        let m = one_sided_derivatives(vs, r0 - off, spec)?;
        let p = one_sided_derivatives(vs, r0 + off, spec)?;
        let dev =
            |e: &super::DerivativeEstimate| (e.left - central).abs().max((e.right - central).abs());
        rows.push(ContinuityRow {
            k,
            r_minus: m.r,
            r_plus: p.r,
            err_minus: dev(&m),
            err_plus: dev(&p),
        });
    }
    let errs: Vec<f64> = rows.iter().map(|r| r.err_minus.max(r.err_plus)).collect();
    let tail = &errs[errs.len() / 2..];
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0] + 3.0 * noise);
    let converges = decreasing && errs.last().is_some_and(|e| *e <= tol);
    Ok(ContinuityReport {
        r0,
        applicable: true,
        central,
        jump_at_r0: e0.jump(),
        rows,
        tol,
        converges,
    })
}
