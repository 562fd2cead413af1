use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use parvol::constructions::{construct_dim2_eps, GammaPolicy};
use parvol::engine::ExactVolume;
use parvol::fractal::TargetRadii;
use parvol::geometry::{Geometry2D, Set1D};

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("'{t}' is not a number: {e}"))
        })
        .collect()
}

/// `1,0.5,0.25`, `cantor:Q:DEPTH[:SHIFT]` or `rearranged:Q:DEPTH`.
pub fn parse_radii(s: &str) -> Result<TargetRadii> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .ok_or_else(|| anyhow!("radii spec '{s}' is missing a field"))?
            .parse::<f64>()
            .map_err(|e| anyhow!("radii spec '{s}': {e}"))
    };
    let depth = |i: usize| -> Result<u32> {
        parts
            .get(i)
            .ok_or_else(|| anyhow!("radii spec '{s}' needs a depth"))?
            .parse::<u32>()
            .map_err(|e| anyhow!("radii spec '{s}': {e}"))
    };
    Ok(match parts[0] {
        "cantor" => {
            let shift = if parts.len() > 3 { num(3)? } else { 0.0 };
            TargetRadii::cantor_endpoints(num(1)?, shift, depth(2)?)?
        }
        "rearranged" => TargetRadii::cantor_rearranged(num(1)?, depth(2)?)?,
        _ => TargetRadii::finite(parse_list(s)?)?,
    })
}

pub struct ConstructionParams {
    pub eps: f64,
    pub gamma0: Option<f64>,
}

impl ConstructionParams {
    pub fn policy(&self) -> GammaPolicy {
        GammaPolicy::Geometric {
            gamma0: self.gamma0,
        }
    }
}

/// A planar set, with the radii at which the volume is known to break.
pub struct Planar {
    pub label: String,
    pub geometry: Geometry2D,
    /// Known non-differentiability radii and their jumps.
    pub expected: Vec<(f64, f64)>,
}

pub enum Source {
    Planar(Planar),
    Line { label: String, set: Set1D },
}

/// `rectboundary:S`, `disk:R`, `twopoints:D`, `construction:RADII`,
/// `line:X1,X2,…` or `@file.json` holding a geometry.
pub fn parse_geometry(spec: &str, params: &ConstructionParams) -> Result<Source> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let geometry: Geometry2D =
            serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
        geometry.validate()?;
        return Ok(Source::Planar(Planar {
            label: path.to_string(),
            geometry,
            expected: Vec::new(),
        }));
    }
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let kind = kind.replace('_', "").to_ascii_lowercase();
    let label = spec.to_string();
    match kind.as_str() {
        "line" => Ok(Source::Line {
            label,
            set: Set1D::from_points(parse_list(rest)?)?,
        }),
        "construction" => {
            let n = TargetRadii::finite(parse_list(rest)?)?;
            let meta = construct_dim2_eps(&n, params.eps, &params.policy())?;
            let expected = meta
                .radii
                .iter()
                .filter(|e| e.in_n)
                .map(|e| (e.s, e.predicted_jump))
                .collect();
            Ok(Source::Planar(Planar {
                label,
                geometry: meta.geometry,
                expected,
            }))
        }
        "rectboundary" | "twopoints" | "disk" => {
            let canonical = match kind.as_str() {
                "rectboundary" => "rect_boundary",
                "twopoints" => "two_points",
                _ => "disk",
            };
            let family = ExactVolume::from_kind(canonical, &parse_list(rest)?)?;
            let expected = match family {
                ExactVolume::RectBoundary { s } => vec![(s, 2.0)],
                _ => Vec::new(),
            };
            Ok(Source::Planar(Planar {
                label,
                geometry: family.geometry()?,
                expected,
            }))
        }
        _ => bail!("unknown geometry '{spec}'"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ConstructionParams {
        ConstructionParams {
            eps: 0.0,
            gamma0: None,
        }
    }

    #[test]
    fn radii_specs() {
        assert_eq!(parse_radii("1, 0.5").unwrap().values(), &[1.0, 0.5]);
        assert!(parse_radii("cantor:0.3:4").unwrap().generator().is_some());
        assert!(parse_radii("rearranged:0.3").is_err());
        assert!(parse_radii("1,x").is_err());
    }

    #[test]
    fn geometry_specs() {
        match parse_geometry("rect_boundary:1", &params()).unwrap() {
            Source::Planar(p) => assert_eq!(p.expected, vec![(1.0, 2.0)]),
            Source::Line { .. } => panic!("planar expected"),
        }
        assert!(matches!(
            parse_geometry("line:0,2,3", &params()).unwrap(),
            Source::Line { .. }
        ));
        match parse_geometry("construction:1,0.5", &params()).unwrap() {
            Source::Planar(p) => assert_eq!(p.expected.len(), 2),
            Source::Line { .. } => panic!("planar expected"),
        }
        assert!(parse_geometry("torus:1", &params()).is_err());
        assert!(parse_geometry("disk:-1", &params()).is_err());
    }
}
