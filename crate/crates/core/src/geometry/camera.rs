use super::{GeometryError, Matrix3, Point2, Point3, Vector3, ROTATION_TOLERANCE};
use serde::{Deserialize, Serialize};

/// How the depth denominator of the pinhole equation is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Projection {
    /// Standard pinhole: divide by `R2·p + Tz`.
    Perspective,
    /// Pinhole evaluated at a fixed reference depth, i.e. a scaled
    /// orthographic camera. This is what orthographic character sheets are.
    FixedDepth { depth: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    rotation: Matrix3,
    translation: Vector3,
    focal: f64,
    projection: Projection,
}

impl Camera {
    pub fn new(
        rotation: Matrix3,
        translation: Vector3,
        focal: f64,
        projection: Projection,
    ) -> Result<Self, GeometryError> {
        if !(focal.is_finite() && focal > 0.0) {
            return Err(GeometryError::InvalidCamera(format!(
                "focal length {focal} must be positive"
            )));
        }
        if rotation
            .iter()
            .chain(translation.iter())
            .any(|c| !c.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        let deviation = (rotation * rotation.transpose() - Matrix3::identity()).amax();
        if deviation > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidCamera(format!(
                "rotation is not orthonormal (deviation {deviation:e})"
            )));
        }
        if (rotation.determinant() - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidCamera(
                "rotation determinant is not 1".into(),
            ));
        }
        if let Projection::FixedDepth { depth } = projection {
            if !(depth.is_finite() && depth > 0.0) {
                return Err(GeometryError::InvalidCamera(format!(
                    "fixed depth {depth} must be positive"
                )));
            }
        }
        Ok(Self {
            rotation,
            translation,
            focal,
            projection,
        })
    }

    pub fn rotation(&self) -> &Matrix3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3 {
        &self.translation
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    /// World direction the camera looks along (third rotation row).
    pub fn view_direction(&self) -> Vector3 {
        self.rotation.row(2).transpose()
    }

    /// Image-plane x and y axes expressed in world coordinates.
    pub fn image_axes(&self) -> (Vector3, Vector3) {
        (
            self.rotation.row(0).transpose(),
            self.rotation.row(1).transpose(),
        )
    }

    /// Pinhole projection `f·(R0·p + Tx, R1·p + Ty) / (R2·p + Tz)`.
    ///
    /// The x numerator uses `Tx`; printed variants of this formula that put
    /// `Ty` in both numerators are treated as a typo.
    pub fn project(&self, p: &Point3) -> Result<Point2, GeometryError> {
        let v = p.coords;
        let r = &self.rotation;
        let t = &self.translation;
        let depth = match self.projection {
            Projection::Perspective => r.row(2).dot(&v.transpose()) + t.z,
            Projection::FixedDepth { depth } => depth,
        };
        if depth.abs() < 1e-12 {
            return Err(GeometryError::DegenerateDepth { depth });
        }
        let s = self.focal / depth;
        Ok(Point2::new(
            s * (r.row(0).dot(&v.transpose()) + t.x),
            s * (r.row(1).dot(&v.transpose()) + t.y),
        ))
    }

    /// Linear part of the projection applied to a direction. Only meaningful
    /// for fixed-depth cameras, where projection is affine.
    pub fn project_direction(&self, d: &Vector3) -> nalgebra::Vector2<f64> {
        let s = match self.projection {
            Projection::FixedDepth { depth } => self.focal / depth,
            Projection::Perspective => self.focal,
        };
        let (ax, ay) = self.image_axes();
        nalgebra::Vector2::new(s * ax.dot(d), s * ay.dot(d))
    }
}

/// True when two corresponding image points share a row within `tol`.
pub fn epipolar_ok(q1: &Point2, q2: &Point2, tol: f64) -> bool {
    (q1.y - q2.y).abs() <= tol
}

/// The front/side camera rig.
///
/// Both cameras are fixed-depth with equal focal length, zero `Tz`, equal
/// `Ty`, the same image y axis, and view directions orthogonal to each other
/// and to y. Under those conditions corresponding points share their y
/// coordinate and triangulation is closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPair {
    front: Camera,
    side: Camera,
}

impl CameraPair {
    pub fn new(front: Camera, side: Camera) -> Result<Self, GeometryError> {
        let bad = |msg: &str| Err(GeometryError::InvalidCameraPair(msg.to_string()));
        let scale = |c: &Camera| match c.projection {
            Projection::FixedDepth { depth } => Some(c.focal / depth),
            Projection::Perspective => None,
        };
        let (Some(sf), Some(ss)) = (scale(&front), scale(&side)) else {
            return bad("both cameras must use a fixed-depth projection");
        };
        if (front.focal - side.focal).abs() > 1e-12 || (sf - ss).abs() > 1e-12 {
            return bad("focal lengths differ");
        }
        if front.translation.z.abs() > 1e-12 || side.translation.z.abs() > 1e-12 {
            return bad("Tz must be zero for both views");
        }
        if (front.translation.y - side.translation.y).abs() > 1e-12 {
            return bad("Ty must be shared by both views");
        }
        let y = Vector3::y();
        let (_, fy) = front.image_axes();
        let (_, sy) = side.image_axes();
        if (fy - y).amax() > ROTATION_TOLERANCE || (sy - y).amax() > ROTATION_TOLERANCE {
            return bad("both image y axes must be the world y axis");
        }
        let (df, ds) = (front.view_direction(), side.view_direction());
        if df.dot(&ds).abs() > ROTATION_TOLERANCE {
            return bad("view directions are not orthogonal");
        }
        if df.dot(&y).abs() > ROTATION_TOLERANCE || ds.dot(&y).abs() > ROTATION_TOLERANCE {
            return bad("view directions must be orthogonal to the y axis");
        }
        Ok(Self { front, side })
    }

    /// Front camera looking down +z, side camera looking down +x, unit scale.
    /// A world point `p` lands at `(p.x, p.y)` in the front view and at
    /// `(-p.z, p.y)` in the side view.
    pub fn canonical() -> Self {
        let front = Camera::new(
            Matrix3::identity(),
            Vector3::zeros(),
            1.0,
            Projection::FixedDepth { depth: 1.0 },
        )
        .expect("identity camera is valid");
        #[rustfmt::skip]
        let side_rotation = Matrix3::new(
            0.0, 0.0, -1.0,
            0.0, 1.0, 0.0,
            1.0, 0.0, 0.0,
        );
        let side = Camera::new(
            side_rotation,
            Vector3::zeros(),
            1.0,
            Projection::FixedDepth { depth: 1.0 },
        )
        .expect("canonical side camera is valid");
        Self { front, side }
    }

    pub fn front(&self) -> &Camera {
        &self.front
    }

    pub fn side(&self) -> &Camera {
        &self.side
    }

    pub fn camera(&self, view: crate::View) -> &Camera {
        match view {
            crate::View::Front => &self.front,
            crate::View::Side => &self.side,
        }
    }

    pub fn project_front(&self, p: &Point3) -> Point2 {
        self.front
            .project(p)
            .expect("fixed-depth projection never degenerates")
    }

    pub fn project_side(&self, p: &Point3) -> Point2 {
        self.side
            .project(p)
            .expect("fixed-depth projection never degenerates")
    }

    pub fn project(&self, view: crate::View, p: &Point3) -> Point2 {
        match view {
            crate::View::Front => self.project_front(p),
            crate::View::Side => self.project_side(p),
        }
    }

    /// Recover the world point seen at `q1` (front) and `q2` (side).
    ///
    /// For the canonical rig this is `(q1.x, ȳ, -q2.x)` where `ȳ` is the mean
    /// of the two rows, so sub-tolerance disagreement is absorbed.
    pub fn triangulate(&self, q1: &Point2, q2: &Point2, tol: f64) -> Result<Point3, GeometryError> {
        if !(q1
            .coords
            .iter()
            .chain(q2.coords.iter())
            .all(|c| c.is_finite()))
        {
            return Err(GeometryError::NonFinite);
        }
        if !epipolar_ok(q1, q2, tol) {
            return Err(GeometryError::EpipolarViolation {
                y_front: q1.y,
                y_side: q2.y,
                tolerance: tol,
            });
        }
        let s = self.front.focal
            / match self.front.projection {
                Projection::FixedDepth { depth } => depth,
                Projection::Perspective => unreachable!("validated at construction"),
            };
        let tf = &self.front.translation;
        let ts = &self.side.translation;
        let (fx, _) = self.front.image_axes();
        let (sx, _) = self.side.image_axes();
        let a = q1.x / s - tf.x;
        let c = q2.x / s - ts.x;
        let y = 0.5 * (q1.y + q2.y) / s - tf.y;
        // fx, y and sx form an orthonormal basis for a valid pair.
        Ok(Point3::from(fx * a + Vector3::y() * y + sx * c))
    }
}
