use super::skeleton::Skeleton;
use crate::edges::EdgeMap;
use crate::geometry::{Point2, Vector2, Vector3};
use crate::refine::ellipse::SectionPoles;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An axis whose image is shorter than this fraction of the camera scale
/// is treated as pointing into the view and cannot be measured there.
pub const MIN_AXIS_VISIBILITY: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Half-angle in radians of the candidate cone around each ray.
    pub angular_tolerance: f64,
    /// Largest distance of a candidate from the ray line, in world units.
    pub lateral_tolerance: f64,
    /// Weight of the offset-length term.
    pub regularizer: f64,
    /// Neighbourhood radius for the sub-pixel line fit around the winning
    /// edge point; zero disables it.
    pub subpixel_radius: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            angular_tolerance: 5f64.to_radians(),
            lateral_tolerance: 0.5,
            regularizer: 1.0,
            subpixel_radius: 2.5,
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchFailure {
    #[error("no edge point inside the search cone")]
    NoEdgeInCone,
    #[error("frame axis is not visible in this view")]
    AxisHidden,
}

/// Winning candidate on one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Index of the candidate edge point.
    pub edge: usize,
    /// Offset length along the ray, in world units of the image plane.
    pub offset: f64,
    pub cost: f64,
    /// Offset to where the ray crosses the line fitted through the edge
    /// points around the winner; equals `offset` when no fit applies.
    pub refined: f64,
}

/// Minimize `dist(c + b, E) + w |b|` over offsets `b = λ u`, one candidate
/// per edge point on the ray, projected onto it. An edge point is on the
/// ray when it lies inside the cone around `u` and within the lateral
/// tolerance of the ray line. Ties go to the shorter offset, then to the
/// lower edge index.
pub fn search_ray(
    edges: &EdgeMap,
    center: &Point2,
    dir: &Vector2,
    params: &SearchParams,
) -> Result<RayHit, SearchFailure> {
    let u = dir.try_normalize(1e-15).ok_or(SearchFailure::AxisHidden)?;
    let cos_tol = params.angular_tolerance.cos();
    let w = params.regularizer;
    let mut best: Option<RayHit> = None;
    for (i, dist) in edges.ray_hits(center, &u, params.angular_tolerance) {
        if let Some(b) = &best {
            // every later candidate has offset >= dist·cos_tol
            if w * (dist * cos_tol) > b.cost {
                break;
            }
        }
        let v = edges.points()[i] - center;
        let lambda = v.dot(&u);
        if !is_lateral(&v, lambda, params.lateral_tolerance) {
            continue;
        }
        let probe = center + u * lambda;
        let (_, d) = edges.nearest(&probe).expect("map has candidates");
        let cost = d + w * lambda;
        let hit = RayHit {
            edge: i,
            offset: lambda,
            cost,
            refined: lambda,
        };
        if best.as_ref().is_none_or(|b| better(&hit, b)) {
            best = Some(hit);
        }
    }
    let mut best = best.ok_or(SearchFailure::NoEdgeInCone)?;
    if params.subpixel_radius > 0.0 {
        if let Some(r) = subpixel_offset(edges, center, &u, &best, params) {
            best.refined = r;
        }
    }
    Ok(best)
}

/// Intersect the ray with the principal line of the edge points near the
/// winner. Skipped when the fit is ill-conditioned, nearly parallel to the
/// ray, or moves the offset by more than the neighbourhood radius.
fn subpixel_offset(
    edges: &EdgeMap,
    center: &Point2,
    u: &Vector2,
    hit: &RayHit,
    params: &SearchParams,
) -> Option<f64> {
    let e = edges.points()[hit.edge];
    let near = edges.within(&e, params.subpixel_radius);
    if near.len() < 3 {
        return None;
    }
    let n = near.len() as f64;
    let mean = near
        .iter()
        .fold(Vector2::zeros(), |acc, &i| acc + edges.points()[i].coords)
        / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &i in &near {
        let d = edges.points()[i].coords - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let eig = nalgebra::Matrix2::new(sxx, sxy, sxy, syy).symmetric_eigen();
    let (small, large) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    if eig.eigenvalues[large] <= 4.0 * eig.eigenvalues[small] {
        return None;
    }
    let normal: Vector2 = eig.eigenvectors.column(small).into();
    let un = u.dot(&normal);
    if un.abs() < 0.3 {
        return None;
    }
    let lambda = (mean - center.coords).dot(&normal) / un;
    ((lambda - hit.offset).abs() <= params.subpixel_radius && lambda > 0.0).then_some(lambda)
}

/// Distance test of `v` from the ray line, given its projection `lambda`.
pub fn is_lateral(v: &Vector2, lambda: f64, tol: f64) -> bool {
    v.norm_squared() - lambda * lambda <= tol * tol
}

fn better(a: &RayHit, b: &RayHit) -> bool {
    (a.cost, a.offset, a.edge) < (b.cost, b.offset, b.edge)
}

/// Both rays of one view at one skeleton parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewOffsets {
    pub center: Point2,
    /// Unit image direction of the positive frame axis.
    pub direction: Vector2,
    /// Image length of the unit frame axis.
    pub axis_scale: f64,
    pub positive: Result<RayHit, SearchFailure>,
    pub negative: Result<RayHit, SearchFailure>,
}

impl ViewOffsets {
    /// Offsets converted to distances along the 3D frame axis.
    pub fn poles(&self) -> (Option<f64>, Option<f64>) {
        let conv = |r: &Result<RayHit, SearchFailure>| r.ok().map(|h| h.refined / self.axis_scale);
        (conv(&self.positive), conv(&self.negative))
    }

    pub fn failures(&self) -> usize {
        self.positive.is_err() as usize + self.negative.is_err() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOffsets {
    pub t: f64,
    /// Rays along `±normal` in the front view.
    pub front: ViewOffsets,
    /// Rays along `±binormal` in the side view.
    pub side: ViewOffsets,
}

impl BoundaryOffsets {
    pub fn poles(&self) -> SectionPoles {
        let (np, nn) = self.front.poles();
        let (bp, bn) = self.side.poles();
        SectionPoles {
            normal_pos: np,
            normal_neg: nn,
            binormal_pos: bp,
            binormal_neg: bn,
        }
    }
}

/// Eq. 3 search at skeleton parameter `t` in both views.
pub fn boundary_search(
    edges_front: &EdgeMap,
    edges_side: &EdgeMap,
    skeleton: &Skeleton,
    t: f64,
    params: &SearchParams,
) -> BoundaryOffsets {
    let s = skeleton.sample(t);
    let cams = skeleton.cameras();
    let view = |edges: &EdgeMap, cam: &crate::geometry::Camera, axis: &Vector3| {
        let center = cam.project(&s.point).expect("fixed-depth projection");
        let (ix, _) = cam.image_axes();
        let unit_scale = cam.project_direction(&ix).norm();
        let proj = cam.project_direction(axis);
        let axis_scale = proj.norm();
        if axis_scale < MIN_AXIS_VISIBILITY * unit_scale {
            let hidden = Err(SearchFailure::AxisHidden);
            return ViewOffsets {
                center,
                direction: Vector2::zeros(),
                axis_scale,
                positive: hidden,
                negative: hidden,
            };
        }
        let u = proj / axis_scale;
        ViewOffsets {
            center,
            direction: u,
            axis_scale,
            positive: search_ray(edges, &center, &u, params),
            negative: search_ray(edges, &center, &-u, params),
        }
    };
    BoundaryOffsets {
        t,
        front: view(edges_front, cams.front(), &s.frame.normal),
        side: view(edges_side, cams.side(), &s.frame.binormal),
    }
}
