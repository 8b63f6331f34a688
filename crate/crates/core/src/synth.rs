//! Synthetic drawings and annotated projects with known geometry, for
//! tests, benchmarks and demos.

use crate::annotations::{AnnotationLabel, ImageRef, PartId, Project, StrokeId, ViewImages};
use crate::edges::{PixelGeometry, ViewImage};
use crate::geometry::{Point2, Vector2};
use crate::View;
use image::{GrayImage, Luma};
use std::io::Cursor;
use std::path::Path;

/// Subsamples per pixel axis when rendering.
const SUPERSAMPLE: u32 = 4;

/// Dark shape on white, anti-aliased by supersampling `inside`.
pub fn render(width: u32, height: u32, scale: f64, inside: impl Fn(&Point2) -> bool) -> GrayImage {
    let geo = PixelGeometry {
        width,
        height,
        scale,
        origin: Vector2::zeros(),
    };
    let n = SUPERSAMPLE;
    GrayImage::from_fn(width, height, |c, r| {
        let mut hits = 0;
        for sy in 0..n {
            for sx in 0..n {
                let px = c as f64 + (sx as f64 + 0.5) / n as f64;
                let py = r as f64 + (sy as f64 + 0.5) / n as f64;
                if inside(&geo.pixel_to_world(px, py)) {
                    hits += 1;
                }
            }
        }
        let cover = hits as f64 / (n * n) as f64;
        Luma([(255.0 * (1.0 - cover)).round() as u8])
    })
}

pub fn png_bytes(img: &GrayImage) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .expect("in-memory PNG encoding");
    out.into_inner()
}

/// Annotated project together with its in-memory drawings.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub project: Project,
    pub front: ViewImage,
    pub side: ViewImage,
    pub part: PartId,
    pub alignment: StrokeId,
}

impl Fixture {
    /// Square drawings of `size` pixels at `scale` world units per pixel
    /// with one part whose alignment stroke runs through `front_axis` and
    /// `side_axis` (equal rows required).
    pub fn new(
        size: u32,
        scale: f64,
        front_inside: impl Fn(&Point2) -> bool,
        side_inside: impl Fn(&Point2) -> bool,
        front_axis: &[Point2],
        side_axis: &[Point2],
    ) -> Self {
        let front = render(size, size, scale, front_inside);
        let side = render(size, size, scale, side_inside);
        let image_ref = |path: &str| ImageRef {
            path: path.into(),
            width: size,
            height: size,
            scale,
            origin: [0.0, 0.0],
        };
        let mut project = Project::new();
        project
            .set_images(ViewImages {
                front: image_ref("front.png"),
                side: image_ref("side.png"),
            })
            .expect("fixture images");
        let part = project.add_part("part").expect("fresh part");
        let alignment = project
            .add_stroke_pair(
                View::Front,
                front_axis,
                side_axis,
                AnnotationLabel::Alignment,
                part,
                None,
            )
            .expect("fixture alignment inside the drawing")
            .id;
        let front = ViewImage::from_gray(View::Front, front, scale, Vector2::zeros())
            .expect("fixture size");
        let side =
            ViewImage::from_gray(View::Side, side, scale, Vector2::zeros()).expect("fixture size");
        Self {
            project,
            front,
            side,
            part,
            alignment,
        }
    }

    /// Sphere of `radius` world units centred on the origin, drawn in
    /// 512×512 views at unit scale, aligned pole to pole.
    pub fn sphere(radius: f64) -> Self {
        let disc = move |p: &Point2| p.coords.norm() <= radius;
        let axis = vertical_axis(radius, -radius, 5);
        Self::new(512, 1.0, disc, disc, &axis, &axis)
    }

    /// Truncated cone along y with radius `r_bottom` at `y = -height/2`
    /// and `r_top` at `y = height/2`. The alignment stops `inset` short
    /// of both ends.
    pub fn tapered_cylinder(r_bottom: f64, r_top: f64, height: f64, inset: f64) -> Self {
        let h = height / 2.0;
        let shape = move |p: &Point2| {
            let s = (p.y + h) / height;
            (0.0..=1.0).contains(&s) && p.x.abs() <= r_bottom + (r_top - r_bottom) * s
        };
        let axis = vertical_axis(h - inset, -(h - inset), 5);
        Self::new(512, 1.0, shape, shape, &axis, &axis)
    }

    /// Exact radius of [`Fixture::tapered_cylinder`] at height `y`.
    pub fn taper_radius(r_bottom: f64, r_top: f64, height: f64, y: f64) -> f64 {
        r_bottom + (r_top - r_bottom) * (y + height / 2.0) / height
    }

    /// Write `front.png`, `side.png` and `project.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<std::path::PathBuf> {
        std::fs::write(dir.join("front.png"), png_bytes(self.front.gray()))?;
        std::fs::write(dir.join("side.png"), png_bytes(self.side.gray()))?;
        let path = dir.join("project.json");
        std::fs::write(&path, crate::annotations::save_project(&self.project))?;
        Ok(path)
    }
}

/// `n` evenly spaced key points on the line `x = 0` from `top` to `bottom`.
pub fn vertical_axis(top: f64, bottom: f64, n: usize) -> Vec<Point2> {
    (0..n)
        .map(|i| Point2::new(0.0, top + (bottom - top) * i as f64 / (n - 1) as f64))
        .collect()
}
