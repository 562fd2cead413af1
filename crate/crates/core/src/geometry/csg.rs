use serde::{Deserialize, Serialize};

use super::point::{Point2, Rect};
use super::primitive::Primitive2D;
use super::GeometryError;

/// Compact planar set built from exact primitives.
///
/// `Difference` is the closed `base` minus the open interiors of `removed`,
/// so boundaries of removed primitives (and tangency points) stay in the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeomRepr", into = "GeomRepr")]
pub enum Geometry2D {
    Leaf(Primitive2D),
    Union(Vec<Geometry2D>),
    Difference {
        base: Primitive2D,
        removed: Vec<Primitive2D>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum NodeRepr {
    Union {
        children: Vec<Geometry2D>,
    },
    Difference {
        base: Primitive2D,
        removed: Vec<Primitive2D>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GeomRepr {
    Node(NodeRepr),
    Leaf(Primitive2D),
}

impl TryFrom<GeomRepr> for Geometry2D {
    type Error = GeometryError;
    fn try_from(r: GeomRepr) -> Result<Self, GeometryError> {
        let g = match r {
            GeomRepr::Leaf(p) => Geometry2D::Leaf(p),
            GeomRepr::Node(NodeRepr::Union { children }) => Geometry2D::Union(children),
            GeomRepr::Node(NodeRepr::Difference { base, removed }) => {
                Geometry2D::Difference { base, removed }
            }
        };
        g.validate()?;
        Ok(g)
    }
}

impl From<Geometry2D> for GeomRepr {
    fn from(g: Geometry2D) -> Self {
        match g {
            Geometry2D::Leaf(p) => GeomRepr::Leaf(p),
            Geometry2D::Union(children) => GeomRepr::Node(NodeRepr::Union { children }),
            Geometry2D::Difference { base, removed } => {
                GeomRepr::Node(NodeRepr::Difference { base, removed })
            }
        }
    }
}

impl From<Primitive2D> for Geometry2D {
    fn from(p: Primitive2D) -> Self {
        Geometry2D::Leaf(p)
    }
}

impl Geometry2D {
    pub fn difference(base: Primitive2D, removed: Vec<Primitive2D>) -> Result<Self, GeometryError> {
        let g = Geometry2D::Difference { base, removed };
        g.validate()?;
        Ok(g)
    }

    pub fn union(children: Vec<Geometry2D>) -> Result<Self, GeometryError> {
        let g = Geometry2D::Union(children);
        g.validate()?;
        Ok(g)
    }

    /// Boundary of the rectangle `[xmin,xmax]×[ymin,ymax]` as a zero-area set.
    pub fn rect_boundary(
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    ) -> Result<Self, GeometryError> {
        let r = Primitive2D::rectangle(xmin, xmax, ymin, ymax);
        Self::difference(r.clone(), vec![r])
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            Geometry2D::Leaf(p) => p.validate(),
            Geometry2D::Union(children) => {
                if children.is_empty() {
                    return Err(GeometryError::Invalid(
                        "union needs at least one child".into(),
                    ));
                }
                children.iter().try_for_each(Geometry2D::validate)
            }
            Geometry2D::Difference { base, removed } => {
                base.validate()?;
                if matches!(base, Primitive2D::Points { .. }) {
                    return Err(GeometryError::Invalid(
                        "difference base must have nonempty interior".into(),
                    ));
                }
                removed.iter().try_for_each(Primitive2D::validate)
            }
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Geometry2D::Leaf(q) => q.contains(p),
            Geometry2D::Union(children) => children.iter().any(|c| c.contains(p)),
            Geometry2D::Difference { base, removed } => {
                base.contains(p) && !removed.iter().any(|r| r.interior_contains(p))
            }
        }
    }

    /// Smallest axis-aligned rectangle containing the set (exact for
    /// primitives; for differences the base box is returned).
    pub fn bounding_box(&self) -> Rect {
        match self {
            Geometry2D::Leaf(p) => p.bounding_box(),
            Geometry2D::Union(children) => children
                .iter()
                .map(Geometry2D::bounding_box)
                .reduce(|a, b| a.union(&b))
                .expect("validated nonempty"),
            Geometry2D::Difference { base, .. } => base.bounding_box(),
        }
    }

    /// Upper bound on the diameter (diagonal of the bounding box).
    pub fn diameter_bound(&self) -> f64 {
        self.bounding_box().diagonal()
    }

    pub fn translate(&self, v: Point2) -> Geometry2D {
        match self {
            Geometry2D::Leaf(p) => Geometry2D::Leaf(p.translate(v)),
            Geometry2D::Union(children) => {
                Geometry2D::Union(children.iter().map(|c| c.translate(v)).collect())
            }
            Geometry2D::Difference { base, removed } => Geometry2D::Difference {
                base: base.translate(v),
                removed: removed.iter().map(|r| r.translate(v)).collect(),
            },
        }
    }

    /// Lebesgue measure where it is computable in closed form (leaves and
    /// differences whose removed primitives are pairwise interior-disjoint);
    /// `None` otherwise.
    pub fn closed_form_area(&self) -> Option<f64> {
        match self {
            Geometry2D::Leaf(p) => Some(p.area()),
            Geometry2D::Union(_) => None,
            Geometry2D::Difference { base, removed } => {
                for (i, a) in removed.iter().enumerate() {
                    for b in &removed[i + 1..] {
                        let (ra, rb) = (a.bounding_box(), b.bounding_box());
                        if ra.xmin < rb.xmax
                            && rb.xmin < ra.xmax
                            && ra.ymin < rb.ymax
                            && rb.ymin < ra.ymax
                        {
                            return None;
                        }
                    }
                }
                Some(base.area() - removed.iter().map(Primitive2D::area).sum::<f64>())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shapes() {
        let g = Geometry2D::difference(
            Primitive2D::rectangle(0.0, 3.0, 0.0, 2.0),
            vec![Primitive2D::disk(Point2::new(1.5, 1.0), 0.5)],
        )
        .unwrap();
        let js = serde_json::to_value(&g).unwrap();
        assert_eq!(js["kind"], "difference");
        assert_eq!(js["base"]["kind"], "rectangle");
        assert_eq!(js["removed"][0]["kind"], "disk");
        let back: Geometry2D = serde_json::from_value(js).unwrap();
        assert_eq!(back, g);

        let leaf: Geometry2D =
            serde_json::from_str(r#"{"kind":"disk","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(
            leaf,
            Geometry2D::Leaf(Primitive2D::disk(Point2::ORIGIN, 1.0))
        );
        let bad =
            serde_json::from_str::<Geometry2D>(r#"{"kind":"disk","center":[0,0],"radius":-1}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn tangent_points_stay_in_the_set() {
        let g = Geometry2D::difference(
            Primitive2D::rectangle(-1.0, 1.0, -1.0, 1.0),
            vec![Primitive2D::disk(Point2::ORIGIN, 1.0)],
        )
        .unwrap();
        assert!(g.contains(Point2::new(1.0, 0.0)));
        assert!(g.contains(Point2::new(0.0, -1.0)));
        assert!(!g.contains(Point2::new(0.5, 0.0)));
        assert!(g.contains(Point2::new(0.99, 0.99)));
    }
}
