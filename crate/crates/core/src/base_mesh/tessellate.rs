use super::GeneralizedCylinder;
use crate::geometry::Point3;
use crate::mesh::{CapRegion, PartMesh};
use thiserror::Error;

/// Radii below this are clamped so rings stay non-degenerate.
pub const MIN_RADIUS: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TessellateError {
    #[error("need at least 2 cross-sections, got {0}")]
    TooFewSections(usize),
    #[error("cross-sections disagree on angular sample count")]
    RaggedSections,
    #[error("cross-section {0} has a non-finite radius")]
    DegenerateRing(usize),
    #[error("cap needs at least one ring, got 0")]
    NoCapRings,
}

/// Tessellate with planar fan caps.
pub fn tessellate(gc: &GeneralizedCylinder) -> Result<PartMesh, TessellateError> {
    tessellate_with(gc, 1)
}

/// Ring-to-ring side strips plus planar caps. Each cap is split into
/// `cap_rings` concentric bands (1 gives a fan) so it can later be
/// deformed.
pub fn tessellate_with(
    gc: &GeneralizedCylinder,
    cap_rings: usize,
) -> Result<PartMesh, TessellateError> {
    let secs = &gc.sections;
    if secs.len() < 2 {
        return Err(TessellateError::TooFewSections(secs.len()));
    }
    if cap_rings == 0 {
        return Err(TessellateError::NoCapRings);
    }
    let a = secs[0].radii.len();
    if secs.iter().any(|s| s.radii.len() != a) || a < 3 {
        return Err(TessellateError::RaggedSections);
    }
    let mut vertices = Vec::with_capacity(secs.len() * a + 2 * (cap_rings - 1) * a + 2);
    for (j, s) in secs.iter().enumerate() {
        for k in 0..a {
            let r = s.radii[k];
            if !r.is_finite() {
                return Err(TessellateError::DegenerateRing(j));
            }
            let theta = super::sample_angle(k, a);
            vertices.push(s.center + s.frame.radial(theta) * r.max(MIN_RADIUS));
        }
    }
    let idx = |j: usize, k: usize| (j * a + k % a) as u32;
    let mut triangles = Vec::with_capacity(2 * a * (secs.len() - 1) + 4 * a * cap_rings);
    for j in 0..secs.len() - 1 {
        for k in 0..a {
            triangles.push([idx(j, k), idx(j, k + 1), idx(j + 1, k + 1)]);
            triangles.push([idx(j, k), idx(j + 1, k + 1), idx(j + 1, k)]);
        }
    }
    let last = secs.len() - 1;
    let mut start = build_cap(
        &mut vertices,
        &mut triangles,
        secs[0].center,
        (0..a).map(|k| idx(0, k)).collect(),
        cap_rings,
        false,
    );
    start.axis = -secs[0].frame.tangent;
    let mut end = build_cap(
        &mut vertices,
        &mut triangles,
        secs[last].center,
        (0..a).map(|k| idx(last, k)).collect(),
        cap_rings,
        true,
    );
    end.axis = secs[last].frame.tangent;
    let mut mesh = PartMesh::new(gc.part, vertices, triangles);
    mesh.caps = Some([start, end]);
    Ok(mesh)
}

/// Concentric bands from `rim` towards `center`. Start caps face against
/// the skeleton tangent, end caps along it.
fn build_cap(
    vertices: &mut Vec<Point3>,
    triangles: &mut Vec<[u32; 3]>,
    center: Point3,
    rim: Vec<u32>,
    rings: usize,
    end: bool,
) -> CapRegion {
    let a = rim.len();
    let first_tri = triangles.len();
    let mut interior = Vec::with_capacity((rings - 1) * a + 1);
    let mut outer = rim.clone();
    for i in (1..rings).rev() {
        let f = i as f64 / rings as f64;
        let inner: Vec<u32> = outer
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let p = vertices[rim[k] as usize];
                vertices.push(center + (p - center) * f);
                (vertices.len() - 1) as u32
            })
            .collect();
        for k in 0..a {
            let (o0, o1, i0, i1) = (outer[k], outer[(k + 1) % a], inner[k], inner[(k + 1) % a]);
            if end {
                triangles.push([i0, o0, o1]);
                triangles.push([i0, o1, i1]);
            } else {
                triangles.push([i0, o1, o0]);
                triangles.push([i0, i1, o1]);
            }
        }
        interior.extend_from_slice(&inner);
        outer = inner;
    }
    vertices.push(center);
    let c = (vertices.len() - 1) as u32;
    for k in 0..a {
        let (o0, o1) = (outer[k], outer[(k + 1) % a]);
        triangles.push(if end { [c, o0, o1] } else { [c, o1, o0] });
    }
    interior.push(c);
    CapRegion {
        rim,
        interior,
        triangles: first_tri..triangles.len(),
        center,
        axis: Default::default(),
    }
}
