use super::{all_finite, GeometryError};
use nalgebra::{Point, SVector};

/// Piecewise cubic Hermite curve through ordered key points with
/// Catmull-Rom tangents (one-sided at the ends) and uniform knots
/// `t_i = i / (n - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteCurve<const D: usize> {
    points: Vec<Point<f64, D>>,
    tangents: Vec<SVector<f64, D>>,
}

impl<const D: usize> HermiteCurve<D> {
    pub fn new(points: Vec<Point<f64, D>>) -> Result<Self, GeometryError> {
        let n = points.len();
        if n < 2 {
            return Err(GeometryError::TooFewPoints { needed: 2, got: n });
        }
        if points.iter().any(|p| !all_finite(&p.coords)) {
            return Err(GeometryError::NonFinite);
        }
        let tangents = (0..n)
            .map(|i| match i {
                0 => points[1] - points[0],
                i if i == n - 1 => points[n - 1] - points[n - 2],
                i => (points[i + 1] - points[i - 1]) * 0.5,
            })
            .collect();
        Ok(Self { points, tangents })
    }

    pub fn points(&self) -> &[Point<f64, D>] {
        &self.points
    }

    pub fn knot(&self, i: usize) -> f64 {
        i as f64 / (self.points.len() - 1) as f64
    }

    fn locate(&self, t: f64) -> Result<(usize, f64), GeometryError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(GeometryError::ParameterOutOfDomain(t));
        }
        let segments = self.points.len() - 1;
        let x = t * segments as f64;
        let i = (x.floor() as usize).min(segments - 1);
        Ok((i, x - i as f64))
    }

    pub fn eval(&self, t: f64) -> Result<Point<f64, D>, GeometryError> {
        let (i, u) = self.locate(t)?;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let c = self.points[i].coords * h00
            + self.tangents[i] * h10
            + self.points[i + 1].coords * h01
            + self.tangents[i + 1] * h11;
        Ok(Point::from(c))
    }

    /// Derivative with respect to the global parameter `t`.
    pub fn derivative(&self, t: f64) -> Result<SVector<f64, D>, GeometryError> {
        let (i, u) = self.locate(t)?;
        let u2 = u * u;
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        let du = self.points[i].coords * d00
            + self.tangents[i] * d10
            + self.points[i + 1].coords * d01
            + self.tangents[i + 1] * d11;
        Ok(du * (self.points.len() - 1) as f64)
    }
}
