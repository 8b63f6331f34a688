use super::PartMesh;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub vertices: usize,
    pub triangles: usize,
    pub index_errors: usize,
    pub manifold: bool,
    pub non_manifold_edges: usize,
    pub non_manifold_vertices: usize,
    pub watertight: bool,
    pub boundary_edges: usize,
    pub orientation_consistent: bool,
    /// Faces whose winding disagrees with most of their neighbours.
    pub inconsistent_faces: Vec<usize>,
    pub outward: bool,
    pub degenerate_triangles: usize,
    pub euler_characteristic: i64,
    pub passed: bool,
}

/// Inspect topology and winding. Never mutates the mesh.
pub fn validate(mesh: &PartMesh) -> ValidationReport {
    let nv = mesh.vertices.len();
    let mut index_errors = 0;
    let mut good = Vec::with_capacity(mesh.triangles.len());
    for (fi, t) in mesh.triangles.iter().enumerate() {
        let in_range = t.iter().all(|&i| (i as usize) < nv);
        let distinct = t[0] != t[1] && t[1] != t[2] && t[0] != t[2];
        if in_range && distinct {
            good.push(fi);
        } else {
            index_errors += 1;
        }
    }

    // undirected edge -> faces with the edge's direction in that face
    let mut edges: BTreeMap<(u32, u32), Vec<(usize, bool)>> = BTreeMap::new();
    for &fi in &good {
        let t = mesh.triangles[fi];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            edges.entry(key).or_default().push((fi, a < b));
        }
    }

    let mut boundary_edges = 0;
    let mut non_manifold_edges = 0;
    let mut per_face_bad: HashMap<usize, usize> = HashMap::new();
    let mut inconsistent_edges = 0;
    for uses in edges.values() {
        match uses.len() {
            1 => boundary_edges += 1,
            2 => {
                if uses[0].1 == uses[1].1 {
                    inconsistent_edges += 1;
                    *per_face_bad.entry(uses[0].0).or_default() += 1;
                    *per_face_bad.entry(uses[1].0).or_default() += 1;
                }
            }
            _ => non_manifold_edges += 1,
        }
    }
    let threshold = if per_face_bad.values().any(|&c| c >= 2) {
        2
    } else {
        1
    };
    let mut inconsistent_faces: Vec<usize> = per_face_bad
        .iter()
        .filter(|(_, &c)| c >= threshold)
        .map(|(&f, _)| f)
        .collect();
    inconsistent_faces.sort_unstable();

    let non_manifold_vertices = count_non_manifold_vertices(mesh, &good);
    let degenerate_triangles = good
        .iter()
        .filter(|&&fi| mesh.triangle_area(&mesh.triangles[fi]) <= DEGENERATE_AREA)
        .count();

    let manifold = non_manifold_edges == 0 && non_manifold_vertices == 0;
    let watertight = boundary_edges == 0 && non_manifold_edges == 0 && !good.is_empty();
    let orientation_consistent = inconsistent_edges == 0;
    let volume: f64 = good
        .iter()
        .map(|&fi| {
            let [a, b, c] = mesh.triangles[fi].map(|i| mesh.vertices[i as usize].coords);
            a.dot(&b.cross(&c)) / 6.0
        })
        .sum();
    let outward = watertight && orientation_consistent && volume > 0.0;
    let euler_characteristic = nv as i64 - edges.len() as i64 + good.len() as i64;
    let passed = index_errors == 0
        && manifold
        && watertight
        && orientation_consistent
        && outward
        && degenerate_triangles == 0;

    ValidationReport {
        vertices: nv,
        triangles: mesh.triangles.len(),
        index_errors,
        manifold,
        non_manifold_edges,
        non_manifold_vertices,
        watertight,
        boundary_edges,
        orientation_consistent,
        inconsistent_faces,
        outward,
        degenerate_triangles,
        euler_characteristic,
        passed,
    }
}

/// Vertices whose incident faces do not form one edge-connected fan.
fn count_non_manifold_vertices(mesh: &PartMesh, good: &[usize]) -> usize {
    let mut incident: HashMap<u32, Vec<usize>> = HashMap::new();
    for &fi in good {
        for &v in &mesh.triangles[fi] {
            incident.entry(v).or_default().push(fi);
        }
    }
    let mut bad = 0;
    for (&v, faces) in &incident {
        // Union-find over the faces around v, joined when they share an
        // edge through v.
        let mut parent: Vec<usize> = (0..faces.len()).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            let mut j = i;
            while p[j] != r {
                let n = p[j];
                p[j] = r;
                j = n;
            }
            r
        }
        let mut by_other: HashMap<u32, Vec<usize>> = HashMap::new();
        for (k, &fi) in faces.iter().enumerate() {
            for &w in &mesh.triangles[fi] {
                if w != v {
                    by_other.entry(w).or_default().push(k);
                }
            }
        }
        for group in by_other.values() {
            for pair in group.windows(2) {
                let (a, b) = (find(&mut parent, pair[0]), find(&mut parent, pair[1]));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let roots = (0..faces.len())
            .filter(|&k| find(&mut parent, k) == k)
            .count();
        if roots > 1 {
            bad += 1;
        }
    }
    bad
}
