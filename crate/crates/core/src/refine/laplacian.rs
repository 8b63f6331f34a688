use super::{EndCapEdit, RefineError};
use crate::geometry::{Point3, Vector3};
use crate::mesh::{CapRegion, PartMesh, Provenance};
use std::collections::{BTreeMap, BTreeSet};

/// Conjugate-gradient stopping threshold on `‖Ax - b‖∞`, relative to
/// `max(1, ‖b‖∞)`.
pub const CG_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct EndCapResult {
    pub mesh: PartMesh,
    pub edit: EndCapEdit,
    /// `‖Ax - b‖∞` of the solved system, over all three coordinates.
    pub residual: f64,
    /// Largest distance of a constrained vertex from its target.
    pub constraint_residual: f64,
    pub iterations: usize,
}

/// Uniform graph Laplacian of a cap: vertex ids (rim first, then interior)
/// and the neighbours of each, as positions in that list.
pub fn cap_laplacian(mesh: &PartMesh, cap: &CapRegion) -> (Vec<u32>, Vec<Vec<usize>>) {
    let ids: Vec<u32> = cap.rim.iter().chain(&cap.interior).copied().collect();
    let local: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut nbrs = vec![BTreeSet::new(); ids.len()];
    for tri in &mesh.triangles[cap.triangles.clone()] {
        for e in 0..3 {
            let (a, b) = (local[&tri[e]], local[&tri[(e + 1) % 3]]);
            nbrs[a].insert(b);
            nbrs[b].insert(a);
        }
    }
    (
        ids,
        nbrs.into_iter().map(|s| s.into_iter().collect()).collect(),
    )
}

/// Targets for interior cap vertices from an erosion profile: each profile
/// point is projected along the cap axis onto the cap plane and claims the
/// nearest interior vertex, which is moved along the axis to the point's
/// height. A vertex claimed twice keeps its nearest claim.
pub fn match_erosion_profile(
    mesh: &PartMesh,
    cap: &CapRegion,
    profile: &[Point3],
) -> Vec<(u32, Point3)> {
    let mut best: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    for p in profile {
        let h = (p - cap.center).dot(&cap.axis);
        let foot = p - cap.axis * h;
        let nearest = cap
            .interior
            .iter()
            .map(|&v| {
                let q = mesh.vertices[v as usize];
                let along = (q - cap.center).dot(&cap.axis);
                (v, (q - cap.axis * along - foot).norm())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        if let Some((v, d)) = nearest {
            let e = best.entry(v).or_insert((d, h));
            if d < e.0 {
                *e = (d, h);
            }
        }
    }
    best.into_iter()
        .map(|(v, (_, h))| {
            let q = mesh.vertices[v as usize];
            let along = (q - cap.center).dot(&cap.axis);
            (v, q + cap.axis * (h - along))
        })
        .collect()
}

/// Deform the edited cap by matching its erosion profile and solving the
/// constrained Laplacian system.
pub fn laplacian_endcap(mesh: &PartMesh, edit: &EndCapEdit) -> Result<EndCapResult, RefineError> {
    let cap = cap_of(mesh, edit.end.index())?;
    let targets = match_erosion_profile(mesh, cap, &edit.profile);
    let mut out = deform_cap(mesh, edit.end.index(), &targets)?;
    out.edit = EndCapEdit {
        displacements: out.edit.displacements,
        ..edit.clone()
    };
    Ok(out)
}

fn cap_of(mesh: &PartMesh, end: usize) -> Result<&CapRegion, RefineError> {
    mesh.caps
        .as_ref()
        .map(|c| &c[end])
        .ok_or_else(|| RefineError::NoCap(format!("{}", mesh.part)))
}

/// Move interior cap vertices so matched ones sit at `targets` while the
/// rim stays fixed and the rest keep their original Laplacian
/// coordinates. Targets on rim vertices are ignored.
pub fn deform_cap(
    mesh: &PartMesh,
    end: usize,
    targets: &[(u32, Point3)],
) -> Result<EndCapResult, RefineError> {
    let cap = cap_of(mesh, end)?;
    let (ids, nbrs) = cap_laplacian(mesh, cap);
    let n_rim = cap.rim.len();
    let orig: Vec<Point3> = ids.iter().map(|&v| mesh.vertices[v as usize]).collect();
    let mut fixed: Vec<Option<Point3>> = (0..ids.len())
        .map(|i| (i < n_rim).then_some(orig[i]))
        .collect();
    let local: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    for (v, p) in targets {
        match local.get(v) {
            Some(&i) if i >= n_rim => fixed[i] = Some(*p),
            _ => {}
        }
    }
    let free: Vec<usize> = (0..ids.len()).filter(|&i| fixed[i].is_none()).collect();
    let mut slot = vec![usize::MAX; ids.len()];
    for (k, &i) in free.iter().enumerate() {
        slot[i] = k;
    }
    check_anchored(&free, &slot, &nbrs, &fixed)?;

    let laplace = |i: usize| -> Vector3 {
        orig[i].coords * nbrs[i].len() as f64
            - nbrs[i]
                .iter()
                .fold(Vector3::zeros(), |acc, &j| acc + orig[j].coords)
    };
    let mut rhs = vec![Vector3::zeros(); free.len()];
    for (k, &i) in free.iter().enumerate() {
        rhs[k] = laplace(i)
            + nbrs[i]
                .iter()
                .filter_map(|&j| fixed[j])
                .fold(Vector3::zeros(), |acc, p| acc + p.coords);
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (k, &i) in free.iter().enumerate() {
            let mut s = x[k] * nbrs[i].len() as f64;
            for &j in &nbrs[i] {
                if slot[j] != usize::MAX {
                    s -= x[slot[j]];
                }
            }
            out[k] = s;
        }
    };
    let mut x: Vec<Vector3> = free.iter().map(|&i| orig[i].coords).collect();
    let (mut iterations, mut residual) = (0, 0.0f64);
    let mut ax = vec![0.0; free.len()];
    for c in 0..3 {
        let b: Vec<f64> = rhs.iter().map(|v| v[c]).collect();
        let mut xc: Vec<f64> = x.iter().map(|v| v[c]).collect();
        iterations = iterations.max(conjugate_gradient(apply, &b, &mut xc));
        apply(&xc, &mut ax);
        residual = ax
            .iter()
            .zip(&b)
            .fold(residual, |m, (a, b)| m.max((a - b).abs()));
        for (v, s) in x.iter_mut().zip(&xc) {
            v[c] = *s;
        }
    }

    let mut out = mesh.clone();
    for (k, &i) in free.iter().enumerate() {
        out.vertices[ids[i] as usize] = Point3::from(x[k]);
    }
    for (i, p) in fixed.iter().enumerate().skip(n_rim) {
        if let Some(p) = p {
            out.vertices[ids[i] as usize] = *p;
        }
    }
    out.provenance = Provenance::Refined;
    let mut constraint_residual: f64 = 0.0;
    for (i, p) in fixed.iter().enumerate().skip(n_rim) {
        if let Some(p) = p {
            constraint_residual =
                constraint_residual.max((out.vertices[ids[i] as usize] - p).norm());
        }
    }
    let displacements = cap
        .interior
        .iter()
        .map(|&v| (v, out.vertices[v as usize] - mesh.vertices[v as usize]))
        .filter(|(_, d)| *d != Vector3::zeros())
        .collect();
    let edit = EndCapEdit {
        source: crate::annotations::StrokeId(0),
        end: if end == 0 {
            super::CapEnd::Start
        } else {
            super::CapEnd::End
        },
        profile: Vec::new(),
        displacements,
    };
    Ok(EndCapResult {
        mesh: out,
        edit,
        residual,
        constraint_residual,
        iterations,
    })
}

/// Every free vertex must reach a fixed one, or the system is singular.
fn check_anchored(
    free: &[usize],
    slot: &[usize],
    nbrs: &[Vec<usize>],
    fixed: &[Option<Point3>],
) -> Result<(), RefineError> {
    let mut reached = vec![false; free.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (k, &i) in free.iter().enumerate() {
        if nbrs[i].iter().any(|&j| fixed[j].is_some()) {
            reached[k] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        for &j in &nbrs[i] {
            let k = slot[j];
            if k != usize::MAX && !reached[k] {
                reached[k] = true;
                stack.push(j);
            }
        }
    }
    match reached.iter().position(|r| !r) {
        Some(k) => Err(RefineError::SingularSystem(format!(
            "cap vertex {} has no path to a fixed vertex",
            free[k]
        ))),
        None => Ok(()),
    }
}

/// Solve the SPD system `A x = b` in place from the initial `x`, returning
/// the iteration count.
fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]) + Copy,
    b: &[f64],
    x: &mut [f64],
) -> usize {
    let n = b.len();
    if n == 0 {
        return 0;
    }
    let tol = CG_TOLERANCE * b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let inf = |u: &[f64]| u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    if inf(&r) <= tol {
        return 0;
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    for it in 1..=10 * n + 10 {
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if inf(&r) <= tol {
            return it;
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    10 * n + 10
}
