//! Mesh silhouettes rendered back into a view and compared with edges.

use crate::edges::{EdgeMap, PixelGeometry};
use crate::geometry::CameraPair;
use crate::mesh::PartMesh;
use crate::View;

/// Coverage mask of the meshes projected into `view`, row-major: a pixel
/// is covered when its centre lies in some projected triangle.
pub fn coverage_mask(meshes: &[PartMesh], cameras: &CameraPair, view: View, geo: &PixelGeometry) -> Vec<bool> {
    let (w, h) = (geo.width as usize, geo.height as usize);
    let mut mask = vec![false; w * h];
    for m in meshes {
        let px: Vec<(f64, f64)> = m.vertices.iter().map(|v| geo.world_to_pixel(&cameras.project(view, v))).collect();
        for tri in &m.triangles {
            let [a, b, c] = tri.map(|i| px[i as usize]);
            let area = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
            if area == 0.0 {
                continue;
            }
            let lo_x = a.0.min(b.0).min(c.0).floor().max(0.0) as usize;
            let hi_x = (a.0.max(b.0).max(c.0).ceil().max(0.0) as usize).min(w);
            let lo_y = a.1.min(b.1).min(c.1).floor().max(0.0) as usize;
            let hi_y = (a.1.max(b.1).max(c.1).ceil().max(0.0) as usize).min(h);
            for row in lo_y..hi_y {
                for col in lo_x..hi_x {
                    let p = (col as f64 + 0.5, row as f64 + 0.5);
                    let e = |u: (f64, f64), v: (f64, f64)| ((v.0 - u.0) * (p.1 - u.1) - (v.1 - u.1) * (p.0 - u.0)) * area.signum();
                    if e(a, b) >= 0.0 && e(b, c) >= 0.0 && e(c, a) >= 0.0 {
                        mask[row * w + col] = true;
                    }
                }
            }
        }
    }
    mask
}

/// Covered pixels with at least one uncovered 4-neighbour (or on the image
/// border), as `(col, row)`.
pub fn mask_boundary(mask: &[bool], width: u32, height: u32) -> Vec<(u32, u32)> {
    let (w, h) = (width as usize, height as usize);
    let at = |c: isize, r: isize| c >= 0 && r >= 0 && (c as usize) < w && (r as usize) < h && mask[r as usize * w + c as usize];
    let mut out = Vec::new();
    for r in 0..h as isize {
        for c in 0..w as isize {
            if at(c, r) && !(at(c - 1, r) && at(c + 1, r) && at(c, r - 1) && at(c, r + 1)) {
                out.push((c as u32, r as u32));
            }
        }
    }
    out
}

/// Distance from each silhouette pixel of the projected meshes to the
/// nearest detected edge point, in world units.
pub fn reprojection_errors(
    meshes: &[PartMesh],
    cameras: &CameraPair,
    view: View,
    geo: &PixelGeometry,
    edges: &EdgeMap,
) -> Vec<f64> {
    let mask = coverage_mask(meshes, cameras, view, geo);
    mask_boundary(&mask, geo.width, geo.height)
        .into_iter()
        .filter_map(|(c, r)| edges.nearest(&geo.pixel_center(c, r)).ok().map(|(_, d)| d))
        .collect()
}
