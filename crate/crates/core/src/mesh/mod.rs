//! Part meshes, scenes, topology validation and OBJ exchange.

mod obj;
mod validate;

pub use obj::{export_obj, import_obj, ObjError};
pub use validate::{validate, ValidationReport};

use crate::annotations::PartId;
use crate::geometry::{Point3, Vector3};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Base,
    Refined,
}

/// Vertex indices of one end-cap: the fixed rim ring, the interior
/// vertices and the plane the cap was built in.
#[derive(Debug, Clone, PartialEq)]
pub struct CapRegion {
    pub rim: Vec<u32>,
    pub interior: Vec<u32>,
    pub triangles: std::ops::Range<usize>,
    pub center: Point3,
    /// Outward cap normal.
    pub axis: Vector3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartMesh {
    pub part: PartId,
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
    pub provenance: Provenance,
    /// Start (t = 0) and end (t = 1) caps, when the mesh came from a sweep.
    pub caps: Option<[CapRegion; 2]>,
}

impl PartMesh {
    pub fn new(part: PartId, vertices: Vec<Point3>, triangles: Vec<[u32; 3]>) -> Self {
        Self {
            part,
            vertices,
            triangles,
            provenance: Provenance::Base,
            caps: None,
        }
    }

    pub fn triangle_area(&self, t: &[u32; 3]) -> f64 {
        let [a, b, c] = t.map(|i| self.vertices[i as usize]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Signed enclosed volume; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i as usize].coords);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("duplicate {0} in scene")]
    DuplicatePart(PartId),
}

/// Ordered union of part meshes in shared world units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    parts: Vec<PartMesh>,
}

impl Scene {
    pub fn new(parts: Vec<PartMesh>) -> Result<Self, SceneError> {
        let mut seen = std::collections::HashSet::new();
        for p in &parts {
            if !seen.insert(p.part) {
                return Err(SceneError::DuplicatePart(p.part));
            }
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[PartMesh] {
        &self.parts
    }

    pub fn into_parts(self) -> Vec<PartMesh> {
        self.parts
    }
}
