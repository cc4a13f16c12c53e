use serde::{Deserialize, Serialize};

use super::{ModelKind, Point};
use crate::error::{Error, Result};

/// Exact isometries of the catalog models with closed-form action on charts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Isometry {
    Identity,
    /// `θ ↦ θ + angle`.
    CircleRotation { angle: f64 },
    /// `θ ↦ 2·axis - θ`.
    CircleReflection { axis: f64 },
    /// `θ_i ↦ θ_i + shifts_i`.
    TorusTranslation { shifts: Vec<f64> },
    /// Rotation about the polar axis: longitude `↦` longitude + angle.
    SphereAxialRotation { angle: f64 },
}

impl Isometry {
    pub fn check_kind(&self, kind: &ModelKind) -> Result<()> {
        let ok = match (self, kind) {
            (Isometry::Identity, _) => true,
            (Isometry::CircleRotation { .. } | Isometry::CircleReflection { .. }, ModelKind::Circle { .. }) => true,
            (Isometry::TorusTranslation { shifts }, ModelKind::FlatTorus { edges }) => shifts.len() == edges.len(),
            (Isometry::SphereAxialRotation { .. }, ModelKind::Sphere2 { .. }) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedIsometry(format!("{self:?} on a {} model", kind.name())))
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        match self {
            Isometry::Identity => p.clone(),
            Isometry::CircleRotation { angle } => Point::periodic(vec![p.coords[0] + angle]),
            Isometry::CircleReflection { axis } => Point::periodic(vec![2.0 * axis - p.coords[0]]),
            Isometry::TorusTranslation { shifts } => {
                Point::periodic(p.coords.iter().zip(shifts).map(|(c, s)| c + s).collect())
            }
            Isometry::SphereAxialRotation { angle } => Point::spherical(p.coords[0], p.coords[1] + angle),
        }
    }

    pub fn inverse(&self) -> Isometry {
        match self {
            Isometry::Identity => Isometry::Identity,
            Isometry::CircleRotation { angle } => Isometry::CircleRotation { angle: -angle },
            Isometry::CircleReflection { axis } => Isometry::CircleReflection { axis: *axis },
            Isometry::TorusTranslation { shifts } => Isometry::TorusTranslation {
                shifts: shifts.iter().map(|s| -s).collect(),
            },
            Isometry::SphereAxialRotation { angle } => Isometry::SphereAxialRotation { angle: -angle },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ModelKind;

    #[test]
    fn inverse_undoes_action() {
        let p = Point::new(vec![0.4, 5.9]);
        for iso in [
            Isometry::SphereAxialRotation { angle: 1.1 },
            Isometry::TorusTranslation { shifts: vec![0.3, -2.0] },
        ] {
            let back = iso.inverse().apply(&iso.apply(&p));
            for (a, b) in back.coords.iter().zip(&p.coords) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let r = Isometry::CircleReflection { axis: 0.5 };
        let q = Point::new(vec![0.2]);
        assert!((r.apply(&r.apply(&q)).coords[0] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn isometries_preserve_distance() {
        let kind = ModelKind::Sphere2 { radius: 1.0 };
        let iso = Isometry::SphereAxialRotation { angle: 0.77 };
        let x = Point::new(vec![0.3, 0.1]);
        let y = Point::new(vec![2.0, 4.0]);
        let d0 = kind.distance(&x, &y);
        let d1 = kind.distance(&iso.apply(&x), &iso.apply(&y));
        assert!((d0 - d1).abs() < 1e-14);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let iso = Isometry::CircleRotation { angle: 1.0 };
        assert!(iso.check_kind(&ModelKind::Sphere2 { radius: 1.0 }).is_err());
        assert!(iso.check_kind(&ModelKind::Circle { radius: 1.0 }).is_ok());
    }
}
