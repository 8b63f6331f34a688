use super::{Point3, Vector3};

/// Orthonormal frame attached to a curve point; `binormal = tangent × normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub tangent: Vector3,
    pub normal: Vector3,
    pub binormal: Vector3,
}

impl Frame {
    /// Frame with the given tangent whose normal is `hint` made orthogonal
    /// to it. Falls back to an arbitrary perpendicular when `hint` is
    /// (nearly) parallel to the tangent.
    pub fn from_tangent_and_hint(tangent: Vector3, hint: Vector3) -> Self {
        let tangent = tangent.try_normalize(1e-15).unwrap_or_else(Vector3::y);
        let projected = hint - tangent * hint.dot(&tangent);
        let normal = projected
            .try_normalize(1e-9)
            .unwrap_or_else(|| perpendicular(&tangent));
        let binormal = tangent.cross(&normal);
        Self {
            tangent,
            normal,
            binormal,
        }
    }

    /// Unit direction at angle `theta` in the cross-section plane, measured
    /// from the normal towards the binormal.
    pub fn radial(&self, theta: f64) -> Vector3 {
        self.normal * theta.cos() + self.binormal * theta.sin()
    }

    pub fn orthonormality_error(&self) -> f64 {
        let (t, n, b) = (&self.tangent, &self.normal, &self.binormal);
        [
            t.dot(n).abs(),
            t.dot(b).abs(),
            n.dot(b).abs(),
            (t.norm() - 1.0).abs(),
            (n.norm() - 1.0).abs(),
            (b.norm() - 1.0).abs(),
            (t.cross(n) - b).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn perpendicular(v: &Vector3) -> Vector3 {
    let axis = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vector3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    v.cross(&axis).normalize()
}

/// Carry `frame` from `from` to `to`, arriving with tangent `tangent`, by
/// the double-reflection rotation-minimizing rule.
pub fn transport_frame(frame: &Frame, from: &Point3, to: &Point3, tangent: &Vector3) -> Frame {
    let tangent = tangent.try_normalize(1e-15).unwrap_or(frame.tangent);
    let v1 = to - from;
    let c1 = v1.dot(&v1);
    let (r_l, t_l) = if c1 > 1e-24 {
        let r = frame.normal - v1 * (2.0 / c1 * v1.dot(&frame.normal));
        let t = frame.tangent - v1 * (2.0 / c1 * v1.dot(&frame.tangent));
        (r, t)
    } else {
        (frame.normal, frame.tangent)
    };
    let v2 = tangent - t_l;
    let c2 = v2.dot(&v2);
    let normal = if c2 > 1e-24 {
        r_l - v2 * (2.0 / c2 * v2.dot(&r_l))
    } else {
        r_l
    };
    Frame::from_tangent_and_hint(tangent, normal)
}

/// Rotation-minimizing frames along sampled curve points, starting from a
/// normal close to `initial_normal`.
pub fn parallel_transport_frames(
    points: &[Point3],
    tangents: &[Vector3],
    initial_normal: Vector3,
) -> Vec<Frame> {
    let mut frames = Vec::with_capacity(points.len());
    if points.is_empty() {
        return frames;
    }
    frames.push(Frame::from_tangent_and_hint(tangents[0], initial_normal));
    for i in 1..points.len() {
        let next = transport_frame(&frames[i - 1], &points[i - 1], &points[i], &tangents[i]);
        frames.push(next);
    }
    frames
}
