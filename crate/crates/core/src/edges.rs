//! Drawing images, edge extraction and nearest-edge queries.
//!
//! Pixel `(col, row)` has its centre at world position
//! `origin + ((col + 0.5 - w/2)·s, (h/2 - row - 0.5)·s)`: the image centre
//! sits on the view-plane origin and y points up.

use crate::geometry::{Point2, Vector2};
use crate::View;
use image::{DynamicImage, GrayImage, Luma};
use imageproc::filter::gaussian_blur_f32;
use imageproc::gradients::{horizontal_sobel, vertical_sobel};
use std::path::Path;
use thiserror::Error;

pub const MIN_IMAGE_SIZE: u32 = 8;
/// Grid cell edge length in pixels.
pub const GRID_CELL_PIXELS: f64 = 4.0;
const CANNY_SIGMA: f32 = 1.4;

#[derive(Debug, Error)]
pub enum EdgeError {
    #[error("unsupported image: {0}")]
    UnsupportedFormat(String),
    #[error("image {width}x{height} is smaller than the {MIN_IMAGE_SIZE}px minimum")]
    TooSmall { width: u32, height: u32 },
    #[error("pixel scale {0} must be positive")]
    InvalidScale(f64),
    #[error("thresholds must satisfy 0 <= lo < hi (got {lo}, {hi})")]
    InvalidThresholds { lo: f64, hi: f64 },
    #[error("edge map is empty")]
    Empty,
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewImage {
    view: View,
    gray: GrayImage,
    scale: f64,
    origin: Vector2,
}

impl ViewImage {
    pub fn from_gray(
        view: View,
        gray: GrayImage,
        scale: f64,
        origin: Vector2,
    ) -> Result<Self, EdgeError> {
        let (width, height) = gray.dimensions();
        if width < MIN_IMAGE_SIZE || height < MIN_IMAGE_SIZE {
            return Err(EdgeError::TooSmall { width, height });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(EdgeError::InvalidScale(scale));
        }
        Ok(Self {
            view,
            gray,
            scale,
            origin,
        })
    }

    /// Decode an 8-bit grayscale or RGBA PNG. Transparent pixels are
    /// composited over white.
    pub fn from_png_bytes(
        view: View,
        bytes: &[u8],
        scale: f64,
        origin: Vector2,
    ) -> Result<Self, EdgeError> {
        let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
            .map_err(|e| EdgeError::UnsupportedFormat(e.to_string()))?;
        let gray = match decoded {
            DynamicImage::ImageLuma8(g) => g,
            DynamicImage::ImageLumaA8(la) => GrayImage::from_fn(la.width(), la.height(), |x, y| {
                let p = la.get_pixel(x, y).0;
                Luma([composite(p[0], p[1])])
            }),
            DynamicImage::ImageRgb8(rgb) => DynamicImage::ImageRgb8(rgb).to_luma8(),
            DynamicImage::ImageRgba8(rgba) => {
                let (w, h) = rgba.dimensions();
                GrayImage::from_fn(w, h, |x, y| {
                    let [r, g, b, a] = rgba.get_pixel(x, y).0;
                    let l = (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8;
                    Luma([composite(l, a)])
                })
            }
            other => {
                return Err(EdgeError::UnsupportedFormat(format!(
                    "only 8-bit grayscale or RGBA PNG is supported, got {:?}",
                    other.color()
                )))
            }
        };
        Self::from_gray(view, gray, scale, origin)
    }

    pub fn open(view: View, path: &Path, scale: f64, origin: Vector2) -> Result<Self, EdgeError> {
        let bytes = std::fs::read(path).map_err(|source| EdgeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_png_bytes(view, &bytes, scale, origin)
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn width(&self) -> u32 {
        self.gray.width()
    }

    pub fn height(&self) -> u32 {
        self.gray.height()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn origin(&self) -> Vector2 {
        self.origin
    }

    pub fn gray(&self) -> &GrayImage {
        &self.gray
    }

    pub fn geometry(&self) -> PixelGeometry {
        PixelGeometry {
            width: self.width(),
            height: self.height(),
            scale: self.scale,
            origin: self.origin,
        }
    }
}

fn composite(luma: u8, alpha: u8) -> u8 {
    let a = alpha as f64 / 255.0;
    (luma as f64 * a + 255.0 * (1.0 - a)).round() as u8
}

/// Mapping between pixel indices and view-plane world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelGeometry {
    pub width: u32,
    pub height: u32,
    pub scale: f64,
    pub origin: Vector2,
}

impl PixelGeometry {
    pub fn pixel_center(&self, col: u32, row: u32) -> Point2 {
        self.pixel_to_world(col as f64 + 0.5, row as f64 + 0.5)
    }

    /// Continuous pixel coordinates (x right, y down) to world.
    pub fn pixel_to_world(&self, px: f64, py: f64) -> Point2 {
        Point2::new(
            self.origin.x + (px - self.width as f64 / 2.0) * self.scale,
            self.origin.y + (self.height as f64 / 2.0 - py) * self.scale,
        )
    }

    pub fn world_to_pixel(&self, p: &Point2) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.scale + self.width as f64 / 2.0,
            self.height as f64 / 2.0 - (p.y - self.origin.y) / self.scale,
        )
    }

    /// Pixel containing `p`, if inside the image.
    pub fn pixel_of(&self, p: &Point2) -> Option<(u32, u32)> {
        let (x, y) = self.world_to_pixel(p);
        if x < 0.0 || y < 0.0 || x >= self.width as f64 || y >= self.height as f64 {
            return None;
        }
        Some((x.floor() as u32, y.floor() as u32))
    }

    pub fn contains(&self, p: &Point2) -> bool {
        let (x, y) = self.world_to_pixel(p);
        (0.0..=self.width as f64).contains(&x) && (0.0..=self.height as f64).contains(&y)
    }
}

/// Edge points of one view in world coordinates with a uniform-grid index.
#[derive(Debug, Clone)]
pub struct EdgeMap {
    view: View,
    points: Vec<Point2>,
    pixels: Vec<(u32, u32)>,
    grid: Grid,
}

impl EdgeMap {
    pub fn from_points(view: View, points: Vec<Point2>, cell_size: f64) -> Self {
        let grid = Grid::build(&points, cell_size);
        Self {
            view,
            points,
            pixels: Vec::new(),
            grid,
        }
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    /// Source pixel of each point; empty for maps built from raw points.
    pub fn pixels(&self) -> &[(u32, u32)] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Exact nearest edge point; ties go to the lowest index.
    pub fn nearest(&self, q: &Point2) -> Result<(usize, f64), EdgeError> {
        if self.points.is_empty() {
            return Err(EdgeError::Empty);
        }
        let g = &self.grid;
        let (cx, cy) = g.clamped_cell(q);
        let mut best: Option<(f64, usize)> = None;
        let max_ring = g.nx.max(g.ny);
        for r in 0..=max_ring {
            let r = r as isize;
            let (cx, cy) = (cx as isize, cy as isize);
            for y in (cy - r)..=(cy + r) {
                if y < 0 || y >= g.ny as isize {
                    continue;
                }
                let on_edge_row = y == cy - r || y == cy + r;
                let step = if on_edge_row {
                    1
                } else {
                    (2 * r).max(1) as usize
                };
                let mut x = cx - r;
                while x <= cx + r {
                    if x >= 0 && x < g.nx as isize {
                        for &i in &g.cells[y as usize * g.nx + x as usize] {
                            let d2 = (self.points[i as usize] - q).norm_squared();
                            let cand = (d2, i as usize);
                            if best.is_none_or(|b| cand < b) {
                                best = Some(cand);
                            }
                        }
                    }
                    x += step as isize;
                }
            }
            if let Some((d2, _)) = best {
                let reach = r as f64 * g.cell;
                if d2 <= reach * reach {
                    break;
                }
            }
        }
        let (d2, i) = best.expect("non-empty map always yields a candidate");
        Ok((i, d2.sqrt()))
    }

    pub fn nearest_edge(&self, q: &Point2) -> Result<(Point2, f64), EdgeError> {
        self.nearest(q).map(|(i, d)| (self.points[i], d))
    }

    /// Edge points inside the cone of half-angle `angular_tol` around `dir`
    /// from `origin`, ordered by distance (ties by index). Points at the
    /// origin itself have no direction and are skipped.
    pub fn ray_hits(&self, origin: &Point2, dir: &Vector2, angular_tol: f64) -> Vec<(usize, f64)> {
        let cos_tol = angular_tol.cos();
        let half_diag = self.grid.cell * std::f64::consts::FRAC_1_SQRT_2;
        let mut hits = Vec::new();
        for &cell in &self.grid.occupied {
            let c = self.grid.cell_center(cell);
            let v = c - origin;
            let d = v.norm();
            if d > half_diag {
                let ang = (v.dot(dir) / d).clamp(-1.0, 1.0).acos();
                if ang > angular_tol + (half_diag / d).asin() + 1e-9 {
                    continue;
                }
            }
            for &i in &self.grid.cells[cell] {
                let v = self.points[i as usize] - origin;
                let n = v.norm();
                if n > 0.0 && in_cone(&v, n, dir, cos_tol) {
                    hits.push((i as usize, n));
                }
            }
        }
        hits.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        hits
    }

    pub fn ray_edge_intersections(
        &self,
        origin: &Point2,
        dir: &Vector2,
        angular_tol: f64,
    ) -> Vec<Point2> {
        self.ray_hits(origin, dir, angular_tol)
            .into_iter()
            .map(|(i, _)| self.points[i])
            .collect()
    }

    /// Indices of edge points within `radius` of `q`, ascending.
    pub fn within(&self, q: &Point2, radius: f64) -> Vec<usize> {
        let g = &self.grid;
        if self.points.is_empty() || radius.is_nan() || radius < 0.0 {
            return Vec::new();
        }
        let lo = g.clamped_cell(&Point2::new(q.x - radius, q.y - radius));
        let hi = g.clamped_cell(&Point2::new(q.x + radius, q.y + radius));
        let mut out = Vec::new();
        for y in lo.1..=hi.1 {
            for x in lo.0..=hi.0 {
                for &i in &g.cells[y * g.nx + x] {
                    if (self.points[i as usize] - q).norm_squared() <= radius * radius {
                        out.push(i as usize);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Cone membership used by every ray query: `v·dir >= |v| cos(tol)`.
pub fn in_cone(v: &Vector2, norm: f64, dir: &Vector2, cos_tol: f64) -> bool {
    v.dot(dir) >= norm * cos_tol
}

#[derive(Debug, Clone)]
struct Grid {
    min: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    occupied: Vec<usize>,
}

impl Grid {
    fn build(points: &[Point2], cell: f64) -> Self {
        let cell = if cell.is_finite() && cell > 0.0 {
            cell
        } else {
            1.0
        };
        if points.is_empty() {
            return Self {
                min: Point2::origin(),
                cell,
                nx: 1,
                ny: 1,
                cells: vec![Vec::new()],
                occupied: Vec::new(),
            };
        }
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let nx = (((hi.x - lo.x) / cell).floor() as usize + 1).max(1);
        let ny = (((hi.y - lo.y) / cell).floor() as usize + 1).max(1);
        let mut grid = Self {
            min: lo,
            cell,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
            occupied: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let (x, y) = grid.clamped_cell(p);
            grid.cells[y * nx + x].push(i as u32);
        }
        grid.occupied = (0..nx * ny)
            .filter(|&c| !grid.cells[c].is_empty())
            .collect();
        grid
    }

    fn clamped_cell(&self, p: &Point2) -> (usize, usize) {
        let fx = ((p.x - self.min.x) / self.cell).floor();
        let fy = ((p.y - self.min.y) / self.cell).floor();
        let x = if fx.is_nan() {
            0.0
        } else {
            fx.clamp(0.0, (self.nx - 1) as f64)
        };
        let y = if fy.is_nan() {
            0.0
        } else {
            fy.clamp(0.0, (self.ny - 1) as f64)
        };
        (x as usize, y as usize)
    }

    fn cell_center(&self, cell: usize) -> Point2 {
        let (x, y) = (cell % self.nx, cell / self.nx);
        Point2::new(
            self.min.x + (x as f64 + 0.5) * self.cell,
            self.min.y + (y as f64 + 0.5) * self.cell,
        )
    }
}

/// Canny-style extraction. Thresholds are fractions of the maximum
/// gradient magnitude of the blurred image.
pub fn extract_edges(
    img: &ViewImage,
    threshold_lo: f64,
    threshold_hi: f64,
) -> Result<EdgeMap, EdgeError> {
    if !(threshold_lo >= 0.0 && threshold_lo < threshold_hi) {
        return Err(EdgeError::InvalidThresholds {
            lo: threshold_lo,
            hi: threshold_hi,
        });
    }
    let geometry = img.geometry();
    let blurred = gaussian_blur_f32(img.gray(), CANNY_SIGMA);
    let gx = horizontal_sobel(&blurred);
    let gy = vertical_sobel(&blurred);
    let max_gradient = gx
        .iter()
        .zip(gy.iter())
        .map(|(h, v)| (*h as f32).hypot(*v as f32))
        .fold(0.0f32, f32::max);

    let mut points = Vec::new();
    let mut pixels = Vec::new();
    if max_gradient > 0.0 {
        let lo = threshold_lo as f32 * max_gradient;
        let hi = threshold_hi as f32 * max_gradient;
        let edges = imageproc::edges::canny(img.gray(), lo, hi);
        for (x, y, p) in edges.enumerate_pixels() {
            if p.0[0] > 0 {
                pixels.push((x, y));
                points.push(geometry.pixel_center(x, y));
            }
        }
    }
    let grid = Grid::build(&points, GRID_CELL_PIXELS * img.scale());
    Ok(EdgeMap {
        view: img.view(),
        points,
        pixels,
        grid,
    })
}
