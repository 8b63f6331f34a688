//! End-to-end reconstruction of every part of a project.

use crate::annotations::{load_project, AnnotationError, DocumentError, Part, PartId, Project};
use crate::base_mesh::{
    build_generalized_cylinder, tessellate_with, BoundaryKind, CylinderParams, GeneralizedCylinder,
    SearchParams,
};
use crate::edges::{extract_edges, EdgeError, EdgeMap, ViewImage};
use crate::geometry::{CameraPair, Vector2};
use crate::mesh::{validate, PartMesh, Provenance, Scene, ValidationReport};
use crate::refine::{
    apply_profiles, contour_section, ingest_annotations, interpolate_sections, laplacian_endcap,
    minimize_objective, IngestParams, Ingested, Refinement,
};
use crate::View;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Tunable parameters. Lengths ending in `_px` are in pixels of the
/// drawings and converted with the image scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub samples: usize,
    pub angular_samples: usize,
    pub edge_low: f64,
    pub edge_high: f64,
    pub snap_radius_px: f64,
    pub epipolar_tolerance_px: f64,
    pub regularizer: f64,
    pub angular_tolerance_deg: f64,
    pub lateral_tolerance_px: f64,
    pub subpixel_radius_px: f64,
    pub adaptive_tolerance_px: f64,
    pub max_subdivision: u32,
    pub cap_rings: usize,
    pub contour_band_deg: f64,
    pub tube_factor: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            samples: 32,
            angular_samples: 32,
            edge_low: 0.1,
            edge_high: 0.3,
            snap_radius_px: 3.0,
            epipolar_tolerance_px: 0.5,
            regularizer: 1.0,
            angular_tolerance_deg: 5.0,
            lateral_tolerance_px: 0.5,
            subpixel_radius_px: 2.5,
            adaptive_tolerance_px: 0.5,
            max_subdivision: 6,
            cap_rings: 6,
            contour_band_deg: 15.0,
            tube_factor: 3.0,
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<(), PipelineError> {
        let bad = |what: &str| Err(PipelineError::InvalidConfig(what.to_string()));
        if self.samples < 2 {
            return bad("samples must be at least 2");
        }
        if self.angular_samples < 8 {
            return bad("angular_samples must be at least 8");
        }
        if self.cap_rings < 1 {
            return bad("cap_rings must be at least 1");
        }
        if !(0.0 <= self.edge_low && self.edge_low < self.edge_high && self.edge_high <= 1.0) {
            return bad("edge thresholds must satisfy 0 <= edge_low < edge_high <= 1");
        }
        let positive = [
            ("snap_radius_px", self.snap_radius_px),
            ("epipolar_tolerance_px", self.epipolar_tolerance_px),
            ("lateral_tolerance_px", self.lateral_tolerance_px),
            ("adaptive_tolerance_px", self.adaptive_tolerance_px),
            ("tube_factor", self.tube_factor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        let non_negative = [
            ("regularizer", self.regularizer),
            ("subpixel_radius_px", self.subpixel_radius_px),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must not be negative"));
            }
        }
        if !(self.angular_tolerance_deg > 0.0 && self.angular_tolerance_deg < 90.0) {
            return bad("angular_tolerance_deg must be in (0, 90)");
        }
        if !(self.contour_band_deg > 0.0 && self.contour_band_deg < 90.0) {
            return bad("contour_band_deg must be in (0, 90)");
        }
        Ok(())
    }

    fn cylinder(&self, px: f64) -> CylinderParams {
        CylinderParams {
            samples: self.samples,
            angular_samples: self.angular_samples,
            search: SearchParams {
                angular_tolerance: self.angular_tolerance_deg.to_radians(),
                lateral_tolerance: self.lateral_tolerance_px * px,
                regularizer: self.regularizer,
                subpixel_radius: self.subpixel_radius_px * px,
            },
            adaptive_tolerance: self.adaptive_tolerance_px * px,
            max_subdivision: self.max_subdivision,
            epipolar_tolerance: self.epipolar_tolerance_px * px,
        }
    }

    fn ingest(&self, px: f64) -> IngestParams {
        IngestParams {
            contour_band: self.contour_band_deg.to_radians(),
            tube_factor: self.tube_factor,
            epipolar_tolerance: self.epipolar_tolerance_px * px,
            ..IngestParams::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("project has no images")]
    NoImages,
    #[error("project has no parts")]
    NoParts,
    #[error("{view} image is {got_w}x{got_h} but the project expects {want_w}x{want_h}")]
    ImageMismatch {
        view: View,
        want_w: u32,
        want_h: u32,
        got_w: u32,
        got_h: u32,
    },
    #[error("{view} image: {source}")]
    Image { view: View, source: EdgeError },
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Document(#[from] DocumentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartDiagnostics {
    pub id: PartId,
    pub name: String,
    pub status: PartStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub objective_before: f64,
    pub objective_after: f64,
    pub sections: usize,
    pub failed_rays: usize,
    pub constraints: usize,
    pub erosions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laplacian_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
}

impl PartDiagnostics {
    fn failed(part: &Part, error: String) -> Self {
        Self {
            id: part.id,
            name: part.name.clone(),
            status: PartStatus::Failed,
            error: Some(error),
            objective_before: 0.0,
            objective_after: 0.0,
            sections: 0,
            failed_rays: 0,
            constraints: 0,
            erosions: 0,
            laplacian_residual: None,
            validation: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Meshes of the parts that built, in project order.
    pub scene: Scene,
    /// One entry per project part, in project order.
    pub diagnostics: Vec<PartDiagnostics>,
}

impl Reconstruction {
    pub fn all_ok(&self) -> bool {
        self.diagnostics.iter().all(|d| d.status == PartStatus::Ok)
    }
}

/// Edge maps of both drawings.
#[derive(Debug, Clone)]
pub struct Edges {
    pub front: EdgeMap,
    pub side: EdgeMap,
    /// World units per pixel used for pixel-denominated settings.
    pub pixel: f64,
}

impl Edges {
    pub fn extract(
        front: &ViewImage,
        side: &ViewImage,
        config: &PipelineConfig,
    ) -> Result<Self, PipelineError> {
        config.check()?;
        let (f, s) = rayon::join(
            || extract_edges(front, config.edge_low, config.edge_high),
            || extract_edges(side, config.edge_low, config.edge_high),
        );
        Ok(Self {
            front: f.map_err(|source| PipelineError::Image {
                view: View::Front,
                source,
            })?,
            side: s.map_err(|source| PipelineError::Image {
                view: View::Side,
                source,
            })?,
            pixel: front.scale().min(side.scale()),
        })
    }
}

/// Load both drawings named by the project, resolving relative paths
/// against `base`.
pub fn load_images(
    project: &Project,
    base: &Path,
) -> Result<(ViewImage, ViewImage), PipelineError> {
    let images = project.images().ok_or(PipelineError::NoImages)?;
    let load = |view: View| {
        let r = images.get(view);
        let path = base.join(&r.path);
        let img = ViewImage::open(view, &path, r.scale, Vector2::new(r.origin[0], r.origin[1]))
            .map_err(|source| PipelineError::Image { view, source })?;
        if (img.width(), img.height()) != (r.width, r.height) {
            return Err(PipelineError::ImageMismatch {
                view,
                want_w: r.width,
                want_h: r.height,
                got_w: img.width(),
                got_h: img.height(),
            });
        }
        Ok(img)
    };
    Ok((load(View::Front)?, load(View::Side)?))
}

/// Read a project document and reconstruct it, resolving image paths
/// against the document's directory.
pub fn reconstruct_project_file(path: &Path, config: &PipelineConfig) -> Result<Reconstruction, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
    let project = load_project(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let (front, side) = load_images(&project, base)?;
    reconstruct(&project, &front, &side, config)
}

pub fn reconstruct(
    project: &Project,
    front: &ViewImage,
    side: &ViewImage,
    config: &PipelineConfig,
) -> Result<Reconstruction, PipelineError> {
    let edges = Edges::extract(front, side, config)?;
    reconstruct_with_edges(project, &edges, config)
}

/// Build every part in parallel. A part that fails is reported and left
/// out of the scene; the others still build.
pub fn reconstruct_with_edges(
    project: &Project,
    edges: &Edges,
    config: &PipelineConfig,
) -> Result<Reconstruction, PipelineError> {
    config.check()?;
    if project.parts().is_empty() {
        return Err(PipelineError::NoParts);
    }
    let results: Vec<(Option<PartMesh>, PartDiagnostics)> = project
        .parts()
        .par_iter()
        .map(|p| match build_part(p, edges, config) {
            Ok((mesh, diag)) => (Some(mesh), diag),
            Err(e) => (None, PartDiagnostics::failed(p, e)),
        })
        .collect();
    let mut meshes = Vec::new();
    let mut diagnostics = Vec::new();
    for (m, d) in results {
        meshes.extend(m);
        diagnostics.push(d);
    }
    let scene = Scene::new(meshes).expect("project part ids are unique");
    Ok(Reconstruction { scene, diagnostics })
}

/// A part's cylinder after local refinement, before tessellation.
#[derive(Debug, Clone)]
pub struct RefinedPart {
    pub base: GeneralizedCylinder,
    pub refined: GeneralizedCylinder,
    pub ingested: Ingested,
    pub refinement: Refinement,
}

/// Base cylinder, annotation ingest, objective minimisation and
/// cross-section rebuild for one part.
pub fn refine_part(part: &Part, edges: &Edges, config: &PipelineConfig) -> Result<RefinedPart, String> {
    let px = edges.pixel;
    let cameras = CameraPair::canonical();
    let alignment = part
        .alignment()
        .ok_or_else(|| AnnotationError::NoAlignment(part.id).to_string())?;
    let gc = build_generalized_cylinder(
        &cameras,
        &edges.front,
        &edges.side,
        alignment,
        &config.cylinder(px),
    )
    .map_err(|e| e.to_string())?;
    let ingested = ingest_annotations(part, alignment.id, &gc, &config.ingest(px))
        .map_err(|e| e.to_string())?;
    let refinement = minimize_objective(
        &edges.front,
        &edges.side,
        &ingested.boundaries,
        &gc,
        config.snap_radius_px * px,
        config.regularizer,
    );
    let (contours, profiles): (Vec<_>, Vec<_>) = refinement
        .constraints
        .iter()
        .map(|r| r.constraint.clone())
        .partition(|c| c.kind == BoundaryKind::Contour);
    let mut refined = apply_profiles(&gc, &profiles).map_err(|e| e.to_string())?;
    let k0 = contours
        .iter()
        .map(|c| contour_section(&refined, c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    refined = interpolate_sections(&k0, &refined).map_err(|e| e.to_string())?;
    refined.tags = ingested
        .boundaries
        .constraints()
        .iter()
        .map(|c| crate::base_mesh::ConstraintTag {
            kind: c.kind,
            source: c.source,
        })
        .collect();
    Ok(RefinedPart {
        base: gc,
        refined,
        ingested,
        refinement,
    })
}

/// Build one part; errors are rendered to text for the diagnostics.
pub fn build_part(
    part: &Part,
    edges: &Edges,
    config: &PipelineConfig,
) -> Result<(PartMesh, PartDiagnostics), String> {
    let RefinedPart {
        base: gc,
        refined,
        ingested,
        refinement,
    } = refine_part(part, edges, config)?;
    let mut mesh = tessellate_with(&refined, config.cap_rings).map_err(|e| e.to_string())?;
    let mut laplacian_residual = None;
    for edit in &ingested.erosions {
        let res = laplacian_endcap(&mesh, edit).map_err(|e| e.to_string())?;
        laplacian_residual = Some(laplacian_residual.unwrap_or(0.0f64).max(res.residual));
        mesh = res.mesh;
    }
    if !ingested.boundaries.is_empty() || !ingested.erosions.is_empty() {
        mesh.provenance = Provenance::Refined;
    }
    let report = validate(&mesh);
    if !report.passed {
        return Err(format!("mesh failed validation: {report:?}"));
    }
    let diag = PartDiagnostics {
        id: part.id,
        name: part.name.clone(),
        status: PartStatus::Ok,
        error: None,
        objective_before: refinement.objective_before,
        objective_after: refinement.objective_after,
        sections: refined.sections.len(),
        failed_rays: gc.failed_rays,
        constraints: ingested.boundaries.len(),
        erosions: ingested.erosions.len(),
        laplacian_residual,
        validation: Some(report),
    };
    Ok((mesh, diag))
}
