//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use orthomodel_core::annotations::{AnnotationLabel, PartId, Project, StrokeId};
use orthomodel_core::edges::EdgeMap;
use orthomodel_core::geometry::{Point2, Point3, Vector2};
use orthomodel_core::mesh::{CapRegion, PartMesh};
use std::collections::BTreeSet;
use orthomodel_core::View;
use std::f64::consts::TAU;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Canonical pair written out by hand: front drops z, side maps z to -x.
pub fn project_by_hand(view: View, p: &Point3) -> Point2 {
    match view {
        View::Front => Point2::new(p.x, p.y),
        View::Side => Point2::new(-p.z, p.y),
    }
}

/// Exhaustive boundary search over every edge point.
/// Returns (edge index, offset, cost).
pub fn brute_force_ray(
    points: &[Point2],
    c: &Point2,
    u: &Vector2,
    angular_tol: f64,
    lateral_tol: f64,
    w: f64,
) -> Option<(usize, f64, f64)> {
    let cos_tol = angular_tol.cos();
    let mut best: Option<(f64, f64, usize)> = None;
    for (i, e) in points.iter().enumerate() {
        let v = e - c;
        let n = v.norm();
        let lambda = v.dot(u);
        if n == 0.0 || lambda < n * cos_tol || v.norm_squared() - lambda * lambda > lateral_tol * lateral_tol {
            continue;
        }
        let probe = c + u * lambda;
        let d = points.iter().map(|q| (q - probe).norm_squared()).fold(f64::INFINITY, f64::min).sqrt();
        let cand = (d + w * lambda, lambda, i);
        if best.is_none_or(|b| cand < b) {
            best = Some(cand);
        }
    }
    best.map(|(cost, lambda, i)| (i, lambda, cost))
}

/// Random 64×64 pixel-centre edge map mixing a few line segments and noise.
pub fn random_edge_map(rng: &mut StdRng) -> EdgeMap {
    let mut pts = Vec::new();
    let mut taken = vec![false; 64 * 64];
    let mut put = |x: i64, y: i64, pts: &mut Vec<Point2>| {
        if (0..64).contains(&x) && (0..64).contains(&y) && !taken[(y * 64 + x) as usize] {
            taken[(y * 64 + x) as usize] = true;
            pts.push(Point2::new(x as f64 - 31.5, 31.5 - y as f64));
        }
    };
    for _ in 0..rng.random_range(2..6) {
        let (x0, y0) = (rng.random_range(0.0..64.0), rng.random_range(0.0..64.0));
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let len = rng.random_range(10.0..60.0);
        let steps = (len * 1.5) as usize;
        for s in 0..steps {
            let f = s as f64 / 1.5;
            put((x0 + f * a.cos()) as i64, (y0 + f * a.sin()) as i64, &mut pts);
        }
    }
    for _ in 0..rng.random_range(0..80) {
        put(rng.random_range(0..64), rng.random_range(0..64), &mut pts);
    }
    EdgeMap::from_points(View::Front, pts, 4.0)
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Natural cubic spline through `(x_i, y_i)` evaluated at `u`, via the
/// classic tridiagonal system for the second derivatives.
pub fn natural_spline(xs: &[f64], ys: &[f64], u: f64) -> f64 {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n > 2 {
        let k = n - 2;
        let (mut sub, mut diag, mut sup, mut rhs) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        for i in 1..n - 1 {
            let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            sub[i - 1] = h0;
            diag[i - 1] = 2.0 * (h0 + h1);
            sup[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        // Thomas algorithm
        for i in 1..k {
            let f = sub[i] / diag[i - 1];
            diag[i] -= f * sup[i - 1];
            rhs[i] -= f * rhs[i - 1];
        }
        let mut sol = vec![0.0; k];
        sol[k - 1] = rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            sol[i] = (rhs[i] - sup[i] * sol[i + 1]) / diag[i];
        }
        m[1..n - 1].copy_from_slice(&sol);
    }
    let i = (1..n).find(|&i| u <= xs[i]).unwrap_or(n - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let h = x1 - x0;
    let (a, b) = ((x1 - u) / h, (u - x0) / h);
    a * ys[i - 1] + b * ys[i] + ((a * a * a - a) * m[i - 1] + (b * b * b - b) * m[i]) * h * h / 6.0
}

/// Closest distance from `p` to triangle `abc` (Ericson, Real-Time
/// Collision Detection, 5.1.5).
pub fn point_triangle_distance(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> f64 {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let (v, w) = (vb * denom, vc * denom);
    (p - (a + ab * v + ac * w)).norm()
}

/// Symmetric Hausdorff distance between a mesh and the sphere of radius
/// `r` at the origin, from dense samples of both.
pub fn hausdorff_to_sphere(mesh: &PartMesh, r: f64) -> f64 {
    let mut worst: f64 = 0.0;
    // mesh -> sphere: vertices, edge midpoints and barycentres
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
        for w in [(1.0, 0.0, 0.0), (0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5), (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)] {
            let p = a.coords * w.0 + b.coords * w.1 + c.coords * w.2;
            worst = worst.max((p.norm() - r).abs());
        }
    }
    // sphere -> mesh: Fibonacci samples
    let n = 1500;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for i in 0..n {
        let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let rad = (1.0 - y * y).sqrt();
        let th = golden * i as f64;
        let p = Point3::new(r * rad * th.cos(), r * y, r * rad * th.sin());
        let d = mesh
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
                point_triangle_distance(&p, &a, &b, &c)
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    worst
}

/// Dense uniform Laplacian solve of a cap with the given fixed vertices,
/// by LU decomposition. Returns new positions of all listed vertices.
pub fn dense_cap_solve(
    positions: &[Point3],
    edges: &[(usize, usize)],
    fixed: &[(usize, Point3)],
) -> Vec<Point3> {
    let n = positions.len();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for &(a, b) in edges {
        lap[(a, a)] += 1.0;
        lap[(b, b)] += 1.0;
        lap[(a, b)] -= 1.0;
        lap[(b, a)] -= 1.0;
    }
    let mut out = positions.to_vec();
    for c in 0..3 {
        let x0 = DVector::from_iterator(n, positions.iter().map(|p| p[c]));
        let delta = &lap * &x0;
        let mut a = lap.clone();
        let mut b = delta.clone();
        for &(i, p) in fixed {
            a.row_mut(i).fill(0.0);
            a[(i, i)] = 1.0;
            b[i] = p[c];
        }
        let x = a.lu().solve(&b).expect("cap system is nonsingular");
        for i in 0..n {
            out[i][c] = x[i];
        }
    }
    out
}

/// Closed addition stroke around a vertical skeleton: the loop of radius
/// `r` at height `y`, drawn in the front view with `n` key points.
pub fn ring_stroke(project: &mut Project, part: PartId, y: f64, r: f64, n: usize) -> StrokeId {
    let angles: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let front: Vec<Point2> = angles.iter().map(|a| Point2::new(r * a.cos(), y)).collect();
    let side: Vec<Point2> = angles.iter().map(|a| Point2::new(-r * a.sin(), y)).collect();
    project
        .add_stroke_pair(View::Front, &front, &side, AnnotationLabel::Addition, part, None)
        .expect("ring inside the drawing")
        .id
}

/// Open addition stroke at image column `x` of `view` through rows `ys`.
pub fn profile_stroke(project: &mut Project, part: PartId, view: View, x: f64, ys: &[f64]) -> StrokeId {
    let pts: Vec<Point2> = ys.iter().map(|&y| Point2::new(x, y)).collect();
    project
        .add_stroke(view, &pts, AnnotationLabel::Addition, part, None)
        .expect("profile inside the drawing")
        .id
}

/// Add one to three random addition strokes near the silhouette of a
/// vertical part whose radius at height `y` is `radius(y)`.
pub fn random_annotations(
    rng: &mut StdRng,
    project: &mut Project,
    part: PartId,
    y_range: (f64, f64),
    radius: impl Fn(f64) -> f64,
) {
    for _ in 0..rng.random_range(1..=3) {
        let y0 = rng.random_range(y_range.0..y_range.1 - 40.0);
        let len = rng.random_range(20.0..(y_range.1 - y0));
        if rng.random_bool(0.3) {
            let y = y0 + len / 2.0;
            let r = radius(y) + rng.random_range(-6.0..6.0);
            ring_stroke(project, part, y, r, rng.random_range(4..9));
            continue;
        }
        let view = if rng.random_bool(0.5) { View::Front } else { View::Side };
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let n = rng.random_range(2..6);
        let ys: Vec<f64> = (0..n).map(|i| y0 + len * i as f64 / (n - 1) as f64).collect();
        let x = side * (radius(y0 + len / 2.0) + rng.random_range(-6.0..6.0));
        profile_stroke(project, part, view, x, &ys);
    }
}

/// Cap vertices (rim first) and edges read straight from the cap's
/// triangles.
pub fn cap_graph(mesh: &PartMesh, cap: &CapRegion) -> (Vec<u32>, Vec<(usize, usize)>) {
    let mut ids: Vec<u32> = cap.rim.clone();
    ids.extend(&cap.interior);
    let index = |v: u32| ids.iter().position(|&x| x == v).unwrap();
    let mut edges = BTreeSet::new();
    for t in &mesh.triangles[cap.triangles.clone()] {
        for i in 0..3 {
            let (a, b) = (index(t[i]), index(t[(i + 1) % 3]));
            edges.insert((a.min(b), a.max(b)));
        }
    }
    (ids, edges.into_iter().collect())
}

/// Largest violation of `L x = L x0` over the free cap vertices, with `L`
/// the uniform graph Laplacian of the cap.
pub fn cap_system_residual(before: &PartMesh, after: &PartMesh, cap: &CapRegion, fixed: &[u32]) -> f64 {
    let (ids, edges) = cap_graph(before, cap);
    let mut nbrs = vec![Vec::new(); ids.len()];
    for &(a, b) in &edges {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let lap = |m: &PartMesh, i: usize, c: usize| {
        let p = |k: usize| m.vertices[ids[k] as usize][c];
        p(i) * nbrs[i].len() as f64 - nbrs[i].iter().map(|&j| p(j)).sum::<f64>()
    };
    let mut worst: f64 = 0.0;
    for i in (0..ids.len()).filter(|&i| !fixed.contains(&ids[i])) {
        for c in 0..3 {
            worst = worst.max((lap(after, i, c) - lap(before, i, c)).abs());
        }
    }
    worst
}
