//! Cross-section fitting from up to four axis poles.

use crate::geometry::Point2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Poles must be at least this far from the skeleton point.
pub const MIN_POLE_DISTANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipseError {
    #[error("cross-section needs at least one pole")]
    NoPoles,
    #[error("pole at distance {0:e} from the skeleton gives a zero-radius section")]
    ZeroRadius(f64),
    #[error("pole ({0}, {1}) does not lie on a frame axis")]
    OffAxis(f64, f64),
    #[error("more than one pole on the {0} side of an axis")]
    DuplicatePole(&'static str),
}

/// Distances from the skeleton point to the boundary along `+normal`,
/// `-normal`, `+binormal` and `-binormal`. Missing entries are unknown.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SectionPoles {
    pub normal_pos: Option<f64>,
    pub normal_neg: Option<f64>,
    pub binormal_pos: Option<f64>,
    pub binormal_neg: Option<f64>,
}

impl SectionPoles {
    pub fn slots(&self) -> [Option<f64>; 4] {
        [
            self.normal_pos,
            self.normal_neg,
            self.binormal_pos,
            self.binormal_neg,
        ]
    }

    pub fn from_slots(s: [Option<f64>; 4]) -> Self {
        Self {
            normal_pos: s[0],
            normal_neg: s[1],
            binormal_pos: s[2],
            binormal_neg: s[3],
        }
    }

    pub fn count(&self) -> usize {
        self.slots().iter().flatten().count()
    }

    /// Classify in-plane points (normal, binormal coordinates) onto the
    /// four axis directions. A single point may lie anywhere.
    pub fn from_points(points: &[Point2]) -> Result<Self, EllipseError> {
        let mut poles = Self::default();
        for p in points {
            let (x, y) = (p.x, p.y);
            let r = x.hypot(y);
            if r < MIN_POLE_DISTANCE {
                return Err(EllipseError::ZeroRadius(r));
            }
            let slot = if y.abs() <= 1e-9 * r {
                if x > 0.0 {
                    (&mut poles.normal_pos, "+normal")
                } else {
                    (&mut poles.normal_neg, "-normal")
                }
            } else if x.abs() <= 1e-9 * r {
                if y > 0.0 {
                    (&mut poles.binormal_pos, "+binormal")
                } else {
                    (&mut poles.binormal_neg, "-binormal")
                }
            } else if points.len() == 1 {
                (&mut poles.normal_pos, "+normal")
            } else {
                return Err(EllipseError::OffAxis(x, y));
            };
            if slot.0.is_some() {
                return Err(EllipseError::DuplicatePole(slot.1));
            }
            *slot.0 = Some(r);
        }
        Ok(poles)
    }
}

/// Axis-aligned ellipse in the cross-section frame:
/// `((x - cx)/a)^2 + ((y - cy)/b)^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub semi_normal: f64,
    pub semi_binormal: f64,
}

impl Ellipse {
    pub fn circle(radius: f64) -> Self {
        Self {
            center: [0.0, 0.0],
            semi_normal: radius,
            semi_binormal: radius,
        }
    }

    /// Implicit equation minus one; zero on the curve.
    pub fn implicit(&self, p: &Point2) -> f64 {
        let dx = (p.x - self.center[0]) / self.semi_normal;
        let dy = (p.y - self.center[1]) / self.semi_binormal;
        dx * dx + dy * dy - 1.0
    }

    /// Distance from the skeleton point (frame origin) to the curve along
    /// direction `theta`. The origin is always inside a fitted ellipse.
    pub fn radial(&self, theta: f64) -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        let (a, b) = (self.semi_normal, self.semi_binormal);
        let (cx, cy) = (self.center[0], self.center[1]);
        // (rc - cx)^2/a^2 + (rs - cy)^2/b^2 = 1, positive root in r
        let qa = c * c / (a * a) + s * s / (b * b);
        let qb = -2.0 * (c * cx / (a * a) + s * cy / (b * b));
        let qc = cx * cx / (a * a) + cy * cy / (b * b) - 1.0;
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
        (-qb + disc.sqrt()) / (2.0 * qa)
    }
}

/// Fit the section curve through the poles.
///
/// One pole gives a circle of that radius. Otherwise each axis is centred
/// on the midpoint of its pole pair (a lone pole is mirrored, an empty axis
/// borrows the other axis' half-span) and the semi-axes are solved so every
/// given pole lies on the curve.
pub fn fit_cross_section(poles: &SectionPoles) -> Result<Ellipse, EllipseError> {
    for v in poles.slots().iter().flatten() {
        if !(v.is_finite() && *v >= MIN_POLE_DISTANCE) {
            return Err(EllipseError::ZeroRadius(*v));
        }
    }
    match poles.count() {
        0 => return Err(EllipseError::NoPoles),
        1 => {
            let r = poles.slots().into_iter().flatten().next().unwrap();
            return Ok(Ellipse::circle(r));
        }
        _ => {}
    }
    let axis = |pos: Option<f64>, neg: Option<f64>| match (pos, neg) {
        (Some(p), Some(q)) => Some(((p - q) / 2.0, (p + q) / 2.0)),
        (Some(p), None) | (None, Some(p)) => Some((0.0, p)),
        (None, None) => None,
    };
    let n = axis(poles.normal_pos, poles.normal_neg);
    let b = axis(poles.binormal_pos, poles.binormal_neg);
    let ((cx, h), (cy, k)) = match (n, b) {
        (Some(n), Some(b)) => (n, b),
        (Some(n), None) => (n, (0.0, n.1)),
        (None, Some(b)) => ((0.0, b.1), b),
        (None, None) => unreachable!("at least two poles"),
    };
    // Poles (cx ± h, 0) and (0, cy ± k) on the curve give
    //   h²/a² + cy²/b² = 1,  cx²/a² + k²/b² = 1.
    let det = h * h * k * k - cx * cx * cy * cy;
    let inv_a2 = (k * k - cy * cy) / det;
    let inv_b2 = (h * h - cx * cx) / det;
    Ok(Ellipse {
        center: [cx, cy],
        semi_normal: inv_a2.sqrt().recip(),
        semi_binormal: inv_b2.sqrt().recip(),
    })
}
