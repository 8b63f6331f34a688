//! One editing session: a project, its decoded drawings and the meshes
//! built from it so far.

use crate::error::ServiceError;
use base64::Engine;
use orthomodel_core::annotations::{
    load_project, save_project, AnnotationLabel, ImageRef, PartId, Project, StrokeDoc, StrokeId,
    ViewImages,
};
use orthomodel_core::edges::ViewImage;
use orthomodel_core::geometry::{Point2, Vector2};
use orthomodel_core::mesh::{export_obj, PartMesh, Scene};
use orthomodel_core::pipeline::{load_images, Edges, PartDiagnostics, PipelineConfig};
use orthomodel_core::View;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

/// Drawings of both views with their edge maps, shared with builds in
/// flight.
#[derive(Debug)]
pub struct Drawings {
    pub front: ViewImage,
    pub side: ViewImage,
    pub edges: Edges,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageUpload {
    /// PNG file to read.
    pub path: Option<String>,
    /// PNG bytes, base64 encoded.
    pub png_base64: Option<String>,
    /// Path recorded in the project; defaults to `path`, or to
    /// `front.png` / `side.png` for inline uploads.
    pub name: Option<String>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub origin: [f64; 2],
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewStroke {
    pub part: u64,
    pub view: View,
    pub label: AnnotationLabel,
    pub points: Vec<[f64; 2]>,
    /// Counterpart key points in the other view; x = 0 when omitted.
    pub counterpart: Option<Vec<[f64; 2]>>,
    pub attach_id: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshPayload {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl From<&PartMesh> for MeshPayload {
    fn from(m: &PartMesh) -> Self {
        Self {
            vertices: m.vertices.iter().map(|p| [p.x, p.y, p.z]).collect(),
            triangles: m.triangles.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltPart {
    /// Session revision the mesh was built from.
    pub revision: u64,
    pub mesh: PartMesh,
    pub diagnostics: PartDiagnostics,
}

#[derive(Debug)]
pub struct Session {
    project: Project,
    config: PipelineConfig,
    revision: u64,
    locked: bool,
    /// Decoded drawings keyed by the image references that name them, so
    /// undoing an upload finds the earlier drawings again.
    drawings: Vec<(ViewImages, Arc<Drawings>)>,
    built: BTreeMap<PartId, BuiltPart>,
}

fn points(v: &[[f64; 2]]) -> Vec<Point2> {
    v.iter().map(|&[x, y]| Point2::new(x, y)).collect()
}

impl Session {
    pub fn new(config: PipelineConfig) -> Result<Self, ServiceError> {
        config.check()?;
        Ok(Self {
            project: Project::new(),
            config,
            revision: 0,
            locked: false,
            drawings: Vec::new(),
            built: BTreeMap::new(),
        })
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn locked(&self) -> bool {
        self.locked
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Reject a write made against an older revision.
    pub fn expect_revision(&self, expected: Option<u64>) -> Result<(), ServiceError> {
        match expected {
            Some(e) if e != self.revision => Err(ServiceError::Stale {
                expected: e,
                current: self.revision,
            }),
            _ => Ok(()),
        }
    }

    fn bump(&mut self) -> u64 {
        self.revision += 1;
        self.revision
    }

    fn stroke_doc(&self, id: StrokeId) -> Result<StrokeDoc, ServiceError> {
        self.project
            .stroke(id)
            .map(StrokeDoc::from)
            .ok_or_else(|| ServiceError::Internal(format!("{id} vanished")))
    }

    /// Drawings matching the project's current image references.
    pub fn drawings(&self) -> Option<Arc<Drawings>> {
        let images = self.project.images()?;
        self.drawings
            .iter()
            .rev()
            .find(|(k, _)| k == images)
            .map(|(_, d)| d.clone())
    }

    fn prepare(&self, front: ViewImage, side: ViewImage) -> Result<Arc<Drawings>, ServiceError> {
        let edges = Edges::extract(&front, &side, &self.config)?;
        Ok(Arc::new(Drawings { front, side, edges }))
    }

    fn remember(&mut self, images: ViewImages, drawings: Arc<Drawings>) {
        self.drawings.retain(|(k, _)| *k != images);
        self.drawings.push((images, drawings));
    }

    pub fn upload_images(&mut self, front: &ImageUpload, side: &ImageUpload) -> Result<u64, ServiceError> {
        let (fi, fr) = decode(View::Front, front)?;
        let (si, sr) = decode(View::Side, side)?;
        let images = ViewImages { front: fr, side: sr };
        let drawings = self.prepare(fi, si)?;
        self.project.set_images(images.clone())?;
        self.remember(images, drawings);
        Ok(self.bump())
    }

    pub fn add_part(&mut self, name: &str) -> Result<(u64, PartId), ServiceError> {
        let id = self.project.add_part(name)?;
        Ok((self.bump(), id))
    }

    pub fn add_stroke(&mut self, s: &NewStroke) -> Result<(u64, StrokeDoc), ServiceError> {
        let key = points(&s.points);
        let part = PartId(s.part);
        let attach = s.attach_id.map(StrokeId);
        let pair = match &s.counterpart {
            Some(c) => self.project.add_stroke_pair(s.view, &key, &points(c), s.label, part, attach)?,
            None => self.project.add_stroke(s.view, &key, s.label, part, attach)?,
        };
        Ok((self.bump(), StrokeDoc::from(&pair)))
    }

    pub fn move_key_point(
        &mut self,
        stroke: StrokeId,
        view: View,
        index: usize,
        to: [f64; 2],
        locked: Option<bool>,
    ) -> Result<(u64, StrokeDoc), ServiceError> {
        let locked = locked.unwrap_or(self.locked);
        let pair = self.project.move_key_point(stroke, view, index, Point2::new(to[0], to[1]), locked)?;
        Ok((self.bump(), StrokeDoc::from(&pair)))
    }

    /// Delete a stroke pair; returns it together with the ids of the
    /// attached strokes removed with it.
    pub fn delete_stroke(&mut self, stroke: StrokeId) -> Result<(u64, StrokeDoc, Vec<u64>), ServiceError> {
        let doc = self
            .project
            .stroke(stroke)
            .map(StrokeDoc::from)
            .ok_or(orthomodel_core::annotations::AnnotationError::UnknownStroke(stroke))?;
        let attached: Vec<u64> = self
            .project
            .parts()
            .iter()
            .flat_map(|p| p.strokes.iter())
            .filter(|s| s.attach == Some(stroke))
            .map(|s| s.id.0)
            .collect();
        self.project.delete_stroke(stroke)?;
        Ok((self.bump(), doc, attached))
    }

    pub fn relocate_stroke(&mut self, stroke: StrokeId) -> Result<(u64, StrokeDoc), ServiceError> {
        self.project.relocate_stroke(stroke)?;
        let doc = self.stroke_doc(stroke)?;
        Ok((self.bump(), doc))
    }

    /// Undo the last project edit. Returns `None` when there was nothing
    /// to undo; the revision is left alone then.
    pub fn undo(&mut self) -> Option<u64> {
        self.project.undo().then(|| self.bump())
    }

    pub fn set_lock(&mut self, locked: bool) -> u64 {
        self.locked = locked;
        self.bump()
    }

    pub fn save(&self) -> String {
        save_project(&self.project)
    }

    /// Replace the project with a saved document. With `base_dir`, the
    /// drawings it names are read from disk; otherwise drawings already
    /// uploaded under the same references are reused.
    pub fn load(&mut self, document: &str, base_dir: Option<&Path>) -> Result<u64, ServiceError> {
        let project = load_project(document)?;
        let loaded = match (base_dir, project.images()) {
            (Some(dir), Some(images)) => {
                let (front, side) = load_images(&project, dir)?;
                Some((images.clone(), self.prepare(front, side)?))
            }
            _ => None,
        };
        if let Some((images, drawings)) = loaded {
            self.remember(images, drawings);
        }
        self.project = project;
        self.built.clear();
        Ok(self.bump())
    }

    /// Everything a part build needs, detached from the session.
    pub fn build_inputs(&self, part: PartId) -> Result<(orthomodel_core::annotations::Part, Arc<Drawings>), ServiceError> {
        let p = self
            .project
            .part(part)
            .cloned()
            .ok_or(orthomodel_core::annotations::AnnotationError::UnknownPart(part))?;
        let d = self
            .drawings()
            .ok_or_else(|| ServiceError::Invalid("no drawings uploaded for the current images".into()))?;
        Ok((p, d))
    }

    pub fn store(&mut self, part: BuiltPart) {
        self.built.insert(part.mesh.part, part);
    }

    /// Latest builds of the parts that still exist, in project order.
    pub fn scene_parts(&self) -> Vec<&BuiltPart> {
        self.project
            .parts()
            .iter()
            .filter_map(|p| self.built.get(&p.id))
            .collect()
    }

    pub fn scene_obj(&self) -> String {
        let meshes = self.scene_parts().into_iter().map(|b| b.mesh.clone()).collect();
        export_obj(&Scene::new(meshes).expect("part ids are unique"))
    }
}

fn decode(view: View, up: &ImageUpload) -> Result<(ViewImage, ImageRef), ServiceError> {
    let origin = Vector2::new(up.origin[0], up.origin[1]);
    let invalid = |e: String| ServiceError::Invalid(format!("{view} image: {e}"));
    let (img, default_name) = match (&up.path, &up.png_base64) {
        (Some(path), None) => (
            ViewImage::open(view, Path::new(path), up.scale, origin).map_err(|e| invalid(e.to_string()))?,
            path.clone(),
        ),
        (None, Some(data)) => {
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(data.trim())
                .map_err(|e| invalid(e.to_string()))?;
            (
                ViewImage::from_png_bytes(view, &bytes, up.scale, origin).map_err(|e| invalid(e.to_string()))?,
                format!("{view}.png"),
            )
        }
        _ => return Err(invalid("give exactly one of `path` and `png_base64`".into())),
    };
    let image_ref = ImageRef {
        path: up.name.clone().unwrap_or(default_name),
        width: img.width(),
        height: img.height(),
        scale: up.scale,
        origin: up.origin,
    };
    Ok((img, image_ref))
}
