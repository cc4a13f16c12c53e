use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{great_circle, wrap_angle, ModelKind, Point, SpectralModel};
use crate::error::{Error, Result};

/// Open observation set 𝒪 on a catalog model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationDescriptor {
    /// `θ ∈ (a, b)` modulo 2π, on the circle.
    AngularInterval { a: f64, b: f64 },
    /// Product of angular intervals, one per torus axis.
    TorusBox { intervals: Vec<[f64; 2]> },
    /// Geodesic cap `{x : d(x, center) < radius}` on the unit-sphere chart;
    /// `center` is `[colatitude, longitude]`, `radius` an angle.
    SphericalCap { center: [f64; 2], radius: f64 },
}

fn in_open_arc(theta: f64, a: f64, width: f64) -> bool {
    let d = (theta - a).rem_euclid(TAU);
    d > 0.0 && d < width
}

impl ObservationDescriptor {
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            ObservationDescriptor::AngularInterval { a, b } => in_open_arc(p.coords[0], *a, b - a),
            ObservationDescriptor::TorusBox { intervals } => intervals
                .iter()
                .zip(&p.coords)
                .all(|(iv, &t)| iv[1] - iv[0] >= TAU || in_open_arc(t, iv[0], iv[1] - iv[0])),
            ObservationDescriptor::SphericalCap { center, radius } => {
                let c = Point::spherical(center[0], center[1]);
                great_circle(p, &c) < *radius
            }
        }
    }

    /// Checks the descriptor against the model kind and that both the set
    /// and the complement of its closure are nonempty.
    pub fn validate(&self, kind: &ModelKind) -> Result<()> {
        let label = format!("{self:?}");
        match (self, kind) {
            (ObservationDescriptor::AngularInterval { a, b }, ModelKind::Circle { .. }) => {
                let w = b - a;
                if !(a.is_finite() && b.is_finite()) || w <= 0.0 {
                    return Err(Error::EmptyObservation(label));
                }
                if w >= TAU {
                    return Err(Error::ComplementEmpty(label));
                }
            }
            (ObservationDescriptor::TorusBox { intervals }, ModelKind::FlatTorus { edges }) => {
                if intervals.len() != edges.len() {
                    return Err(Error::LengthMismatch {
                        expected: edges.len(),
                        got: intervals.len(),
                    });
                }
                if intervals.iter().any(|iv| iv[1] - iv[0] <= 0.0) {
                    return Err(Error::EmptyObservation(label));
                }
                if intervals.iter().all(|iv| iv[1] - iv[0] >= TAU) {
                    return Err(Error::ComplementEmpty(label));
                }
            }
            (ObservationDescriptor::SphericalCap { radius, .. }, ModelKind::Sphere2 { .. }) => {
                if !(*radius > 0.0) {
                    return Err(Error::EmptyObservation(label));
                }
                if *radius >= PI {
                    return Err(Error::ComplementEmpty(label));
                }
            }
            _ => {
                return Err(Error::InvalidModel(format!(
                    "observation descriptor {label} does not apply to a {} model",
                    kind.name()
                )))
            }
        }
        Ok(())
    }

    /// A point well inside the set, used to place sources.
    pub fn center(&self) -> Point {
        match self {
            ObservationDescriptor::AngularInterval { a, b } => {
                Point::new(vec![wrap_angle(0.5 * (a + b))])
            }
            ObservationDescriptor::TorusBox { intervals } => Point::new(
                intervals
                    .iter()
                    .map(|iv| wrap_angle(0.5 * (iv[0] + iv[1])))
                    .collect(),
            ),
            ObservationDescriptor::SphericalCap { center, .. } => {
                Point::spherical(center[0], center[1])
            }
        }
    }
}

/// Quadrature nodes of a model that fall inside an observation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub descriptor: ObservationDescriptor,
    /// Indices into the model's quadrature node table.
    pub node_indices: Vec<usize>,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub complement_nonempty: bool,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Restricts full node samples to the observation nodes.
    pub fn restrict(&self, samples: &[f64]) -> Vec<f64> {
        self.node_indices.iter().map(|&i| samples[i]).collect()
    }

    /// Membership mask over the model's full node table.
    pub fn mask(&self, total_nodes: usize) -> Vec<bool> {
        let mut m = vec![false; total_nodes];
        for &i in &self.node_indices {
            m[i] = true;
        }
        m
    }
}

impl SpectralModel {
    pub fn restrict_to_observation(&self, descriptor: &ObservationDescriptor) -> Result<ObservationSet> {
        descriptor.validate(self.kind())?;
        let node_indices: Vec<usize> = self
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, p)| descriptor.contains(p))
            .map(|(i, _)| i)
            .collect();
        if node_indices.is_empty() {
            return Err(Error::EmptyObservation(format!("{descriptor:?}")));
        }
        if node_indices.len() == self.nodes().len() {
            return Err(Error::ComplementEmpty(format!(
                "{descriptor:?} contains every quadrature node"
            )));
        }
        Ok(ObservationSet {
            descriptor: descriptor.clone(),
            nodes: node_indices.iter().map(|&i| self.nodes()[i].clone()).collect(),
            weights: node_indices.iter().map(|&i| self.weights()[i]).collect(),
            node_indices,
            complement_nonempty: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::build_model;

    #[test]
    fn half_circle_excludes_endpoints() {
        let m = build_model(ModelKind::Circle { radius: 1.0 }, 4, Some(vec![16])).unwrap();
        let obs = m
            .restrict_to_observation(&ObservationDescriptor::AngularInterval { a: 0.0, b: PI })
            .unwrap();
        assert_eq!(obs.len(), 7);
        assert!(obs.nodes.iter().all(|p| p.coords[0] > 0.0 && p.coords[0] < PI));
        assert!(obs.complement_nonempty);
    }

    #[test]
    fn full_circle_has_empty_complement() {
        let m = build_model(ModelKind::Circle { radius: 1.0 }, 4, None).unwrap();
        let r = m.restrict_to_observation(&ObservationDescriptor::AngularInterval { a: 0.0, b: TAU });
        assert!(matches!(r, Err(Error::ComplementEmpty(_))));
    }

    #[test]
    fn interval_wrapping_through_zero() {
        let d = ObservationDescriptor::AngularInterval { a: -0.5, b: 0.5 };
        assert!(d.contains(&Point::new(vec![0.1])));
        assert!(d.contains(&Point::new(vec![TAU - 0.1])));
        assert!(!d.contains(&Point::new(vec![1.0])));
    }

    #[test]
    fn polar_cap_selects_colatitudes() {
        let m = build_model(ModelKind::Sphere2 { radius: 1.0 }, 4, None).unwrap();
        let obs = m
            .restrict_to_observation(&ObservationDescriptor::SphericalCap {
                center: [0.0, 0.0],
                radius: PI / 3.0,
            })
            .unwrap();
        assert!(!obs.is_empty());
        assert!(obs.nodes.iter().all(|p| p.coords[0] < PI / 3.0));
        let expected = m.nodes().iter().filter(|p| p.coords[0] < PI / 3.0).count();
        assert_eq!(obs.len(), expected);
    }

    #[test]
    fn tiny_interval_between_nodes_is_empty() {
        let m = build_model(ModelKind::Circle { radius: 1.0 }, 4, Some(vec![8])).unwrap();
        let r = m.restrict_to_observation(&ObservationDescriptor::AngularInterval { a: 0.1, b: 0.2 });
        assert!(matches!(r, Err(Error::EmptyObservation(_))));
    }

    #[test]
    fn descriptor_kind_mismatch() {
        let m = build_model(ModelKind::Circle { radius: 1.0 }, 4, None).unwrap();
        let r = m.restrict_to_observation(&ObservationDescriptor::SphericalCap {
            center: [0.0, 0.0],
            radius: 0.5,
        });
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }
}
