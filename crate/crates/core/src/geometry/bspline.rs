use super::{all_finite, GeometryError};
use nalgebra::{DMatrix, SVector};

const DEGREE: usize = 3;

/// Interpolating cubic B-spline with a clamped knot vector whose interior
/// knots sit at the interpolation parameters, and natural end conditions
/// (zero second derivative at both ends).
#[derive(Debug, Clone, PartialEq)]
pub struct CubicBSpline<const D: usize> {
    knots: Vec<f64>,
    control: Vec<SVector<f64, D>>,
}

impl<const D: usize> CubicBSpline<D> {
    /// Build the spline passing through `values[i]` at `params[i]`.
    pub fn interpolate(values: &[SVector<f64, D>], params: &[f64]) -> Result<Self, GeometryError> {
        let n = values.len();
        if n < 2 {
            return Err(GeometryError::TooFewPoints { needed: 2, got: n });
        }
        if params.len() != n {
            return Err(GeometryError::TooFewPoints {
                needed: n,
                got: params.len(),
            });
        }
        if values.iter().any(|v| !all_finite(v)) || params.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeometryError::SingularSystem);
        }

        let mut knots = Vec::with_capacity(n + 2 * DEGREE);
        knots.extend(std::iter::repeat_n(params[0], DEGREE + 1));
        knots.extend_from_slice(&params[1..n - 1]);
        knots.extend(std::iter::repeat_n(params[n - 1], DEGREE + 1));
        let count = n + 2;

        let mut a = DMatrix::<f64>::zeros(count, count);
        let mut rhs = DMatrix::<f64>::zeros(count, D);
        for (i, &u) in params.iter().enumerate() {
            let span = find_span(&knots, count, u);
            let ders = basis_derivatives(&knots, span, u);
            for j in 0..=DEGREE {
                a[(i, span - DEGREE + j)] = ders[0][j];
            }
            for d in 0..D {
                rhs[(i, d)] = values[i][d];
            }
        }
        for (row, u) in [(n, params[0]), (n + 1, params[n - 1])] {
            let span = find_span(&knots, count, u);
            let ders = basis_derivatives(&knots, span, u);
            for j in 0..=DEGREE {
                a[(row, span - DEGREE + j)] = ders[2][j];
            }
        }

        let solution = a.lu().solve(&rhs).ok_or(GeometryError::SingularSystem)?;
        if solution.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::SingularSystem);
        }
        let control = (0..count)
            .map(|i| SVector::<f64, D>::from_fn(|d, _| solution[(i, d)]))
            .collect();
        Ok(Self { knots, control })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn eval(&self, u: f64) -> Result<SVector<f64, D>, GeometryError> {
        Ok(self.eval_derivatives(u)?[0])
    }

    /// Value, first and second derivative at `u`.
    pub fn eval_derivatives(&self, u: f64) -> Result<[SVector<f64, D>; 3], GeometryError> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&u) {
            return Err(GeometryError::ParameterOutOfDomain(u));
        }
        let span = find_span(&self.knots, self.control.len(), u);
        let ders = basis_derivatives(&self.knots, span, u);
        let mut out = [SVector::<f64, D>::zeros(); 3];
        for (k, o) in out.iter_mut().enumerate() {
            for (c, w) in self.control[span - DEGREE..=span].iter().zip(&ders[k]) {
                *o += c * *w;
            }
        }
        Ok(out)
    }
}

impl CubicBSpline<1> {
    pub fn interpolate_scalar(values: &[f64], params: &[f64]) -> Result<Self, GeometryError> {
        let v: Vec<SVector<f64, 1>> = values.iter().map(|&x| SVector::<f64, 1>::new(x)).collect();
        Self::interpolate(&v, params)
    }

    pub fn eval_scalar(&self, u: f64) -> Result<f64, GeometryError> {
        Ok(self.eval(u)?[0])
    }
}

/// Cumulative chord-length parameters normalised to `[0, 1]`.
pub fn chord_length_params<const D: usize>(points: &[SVector<f64, D>]) -> Vec<f64> {
    let mut acc = vec![0.0; points.len()];
    for i in 1..points.len() {
        acc[i] = acc[i - 1] + (points[i] - points[i - 1]).norm();
    }
    let total = acc.last().copied().unwrap_or(0.0);
    if total > 0.0 {
        acc.iter_mut().for_each(|a| *a /= total);
    }
    acc
}

fn find_span(knots: &[f64], count: usize, u: f64) -> usize {
    let last = count - 1;
    if u >= knots[last + 1] {
        return last;
    }
    let (mut low, mut high) = (DEGREE, last + 1);
    while high - low > 1 {
        let mid = (low + high) / 2;
        if u < knots[mid] {
            high = mid;
        } else {
            low = mid;
        }
    }
    low
}

/// Non-zero basis functions of degree 3 and their first two derivatives at
/// `u`, following the triangular-table construction.
fn basis_derivatives(knots: &[f64], span: usize, u: f64) -> [[f64; DEGREE + 1]; 3] {
    let p = DEGREE;
    let mut ndu = [[0.0; DEGREE + 1]; DEGREE + 1];
    let mut left = [0.0; DEGREE + 1];
    let mut right = [0.0; DEGREE + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = [[0.0; DEGREE + 1]; 3];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = [[0.0; DEGREE + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=2usize {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize {
                k - 1
            } else {
                p - r
            };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for (k, row) in ders.iter_mut().enumerate().skip(1) {
        row.iter_mut().for_each(|d| *d *= factor);
        factor *= (p - k) as f64;
    }
    ders
}
