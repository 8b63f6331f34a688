use super::{BoundaryConstraint, BoundarySet};
use crate::base_mesh::GeneralizedCylinder;
use crate::edges::EdgeMap;
use crate::geometry::Point2;
use crate::View;

/// Refined constraints with the objective before and after.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Refinement {
    pub constraints: Vec<RefinedConstraint>,
    pub objective_before: f64,
    pub objective_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedConstraint {
    pub constraint: BoundaryConstraint,
    /// Samples moved onto an edge point.
    pub snapped: usize,
}

/// Per-sample term `dist(q, E) + w |q - c|`, with `c` the skeleton's image.
/// An empty edge map contributes no distance term.
pub fn sample_objective(edges: &EdgeMap, q: &Point2, c: &Point2, regularizer: f64) -> f64 {
    let d = edges.nearest(q).map_or(0.0, |(_, d)| d);
    d + regularizer * (q - c).norm()
}

/// Snap every constraint sample to its nearest edge point when that edge
/// point is within `snap_radius` (world units) and does not raise the
/// sample's term; other samples keep their annotated position.
pub fn minimize_objective(
    edges_front: &EdgeMap,
    edges_side: &EdgeMap,
    set: &BoundarySet,
    gc: &GeneralizedCylinder,
    snap_radius: f64,
    regularizer: f64,
) -> Refinement {
    let skel = &gc.skeleton;
    let cams = skel.cameras();
    let mut out = Refinement::default();
    for c in set.constraints() {
        let edges = match c.view {
            View::Front => edges_front,
            View::Side => edges_side,
        };
        let cam = cams.camera(c.view);
        let (ix, iy) = cam.image_axes();
        let scale = cam.project_direction(&ix).norm();
        let mut refined = c.clone();
        let mut snapped = 0;
        for p in refined.points.iter_mut() {
            let q = cams.project(c.view, p);
            let center = cams.project(c.view, &skel.point(skel.closest_param_in_view(c.view, &q)));
            let before = sample_objective(edges, &q, &center, regularizer);
            out.objective_before += before;
            let mut after = before;
            if let Ok((e, d)) = edges.nearest_edge(&q) {
                if d > 0.0 && d <= snap_radius {
                    let candidate = sample_objective(edges, &e, &center, regularizer);
                    if candidate <= before {
                        let delta = e - q;
                        *p += (ix * delta.x + iy * delta.y) / scale;
                        after = candidate;
                        snapped += 1;
                    }
                }
            }
            out.objective_after += after;
        }
        out.constraints.push(RefinedConstraint {
            constraint: refined,
            snapped,
        });
    }
    out
}
