use super::BaseMeshError;
use crate::annotations::StrokePair;
use crate::geometry::{
    parallel_transport_frames, transport_frame, CameraPair, Frame, HermiteCurve, Point2, Point3,
    Vector3,
};
use crate::View;

/// Resolution of the precomputed frame table.
const DENSE_SAMPLES: usize = 512;

/// Skeleton point and frame at one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonSample {
    pub t: f64,
    pub point: Point3,
    pub frame: Frame,
}

/// Part center line `s(t)`, `t ∈ [0, 1]`, with rotation-minimizing frames.
///
/// The first normal is the front-view direction perpendicular to the
/// skeleton, so normals are seen by the front camera and binormals by the
/// side camera.
#[derive(Debug, Clone)]
pub struct Skeleton {
    cameras: CameraPair,
    curve: HermiteCurve<3>,
    dense_t: Vec<f64>,
    dense_points: Vec<Point3>,
    dense_frames: Vec<Frame>,
    length: f64,
}

impl Skeleton {
    pub fn new(cameras: CameraPair, key_points: Vec<Point3>) -> Result<Self, BaseMeshError> {
        let curve = HermiteCurve::new(key_points)?;
        let dense_t: Vec<f64> = (0..DENSE_SAMPLES)
            .map(|i| i as f64 / (DENSE_SAMPLES - 1) as f64)
            .collect();
        let dense_points: Vec<Point3> = dense_t
            .iter()
            .map(|&t| curve.eval(t))
            .collect::<Result<_, _>>()?;
        let length: f64 = dense_points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if length.is_nan() || length <= 1e-9 {
            return Err(BaseMeshError::DegenerateSkeleton);
        }
        let mut skel = Self {
            cameras,
            curve,
            dense_t,
            dense_points,
            dense_frames: Vec::new(),
            length,
        };
        let tangents: Vec<Vector3> = skel.dense_t.iter().map(|&t| skel.tangent(t)).collect();
        let hint = tangents[0].cross(&cameras.front().view_direction());
        skel.dense_frames = parallel_transport_frames(&skel.dense_points, &tangents, hint);
        Ok(skel)
    }

    /// Skeleton through the triangulated key points of an alignment pair.
    pub fn from_alignment(
        cameras: CameraPair,
        pair: &StrokePair,
        tol: f64,
    ) -> Result<Self, BaseMeshError> {
        Self::new(cameras, pair.triangulate(&cameras, tol)?)
    }

    pub fn cameras(&self) -> &CameraPair {
        &self.cameras
    }

    pub fn key_points(&self) -> &[Point3] {
        self.curve.points()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn point(&self, t: f64) -> Point3 {
        self.curve
            .eval(t.clamp(0.0, 1.0))
            .expect("clamped parameter")
    }

    /// Unit tangent. Where the curve stalls, the chord of the neighbouring
    /// dense samples is used instead.
    pub fn tangent(&self, t: f64) -> Vector3 {
        let t = t.clamp(0.0, 1.0);
        let d = self.curve.derivative(t).expect("clamped parameter");
        if let Some(u) = d.try_normalize(1e-12) {
            return u;
        }
        let h = 1.0 / (DENSE_SAMPLES - 1) as f64;
        let mut span = h;
        while span <= 1.0 {
            let chord = self.point((t + span).min(1.0)) - self.point((t - span).max(0.0));
            if let Some(u) = chord.try_normalize(1e-12) {
                return u;
            }
            span *= 2.0;
        }
        Vector3::y()
    }

    pub fn frame_at(&self, t: f64) -> Frame {
        let t = t.clamp(0.0, 1.0);
        let x = t * (DENSE_SAMPLES - 1) as f64;
        let i = (x.floor() as usize).min(DENSE_SAMPLES - 1);
        if self.dense_t[i] == t {
            return self.dense_frames[i];
        }
        transport_frame(
            &self.dense_frames[i],
            &self.dense_points[i],
            &self.point(t),
            &self.tangent(t),
        )
    }

    pub fn sample(&self, t: f64) -> SkeletonSample {
        SkeletonSample {
            t,
            point: self.point(t),
            frame: self.frame_at(t),
        }
    }

    /// Parameter of the skeleton point closest to `p`.
    pub fn closest_param(&self, p: &Point3) -> f64 {
        closest(&self.dense_t, |t| (self.point(t) - p).norm_squared())
    }

    /// Parameter whose projection in `view` is closest to `q`.
    pub fn closest_param_in_view(&self, view: View, q: &Point2) -> f64 {
        closest(&self.dense_t, |t| {
            (self.cameras.project(view, &self.point(t)) - q).norm_squared()
        })
    }
}

/// Dense scan followed by golden-section refinement around the best sample.
fn closest(grid: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let (mut best, mut best_d) = (0, f64::INFINITY);
    for (i, &t) in grid.iter().enumerate() {
        let d = f(t);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    let (mut lo, mut hi) = (
        grid[best.saturating_sub(1)],
        grid[(best + 1).min(grid.len() - 1)],
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let mid = 0.5 * (lo + hi);
    if f(mid) <= best_d {
        mid
    } else {
        grid[best]
    }
}
