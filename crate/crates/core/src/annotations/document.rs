//! JSON project documents.

use super::{
    AnnotationError, AnnotationLabel, Part, PartId, Project, Stroke, StrokeId, StrokePair,
    ViewImages,
};
use crate::geometry::Point2;
use crate::View;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROJECT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed project document at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported project version {0} (expected {PROJECT_VERSION})")]
    Version(u32),
    #[error("invalid project: {0}")]
    Invalid(#[from] AnnotationError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectDoc {
    version: u32,
    images: Option<ViewImages>,
    parts: Vec<PartDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartDoc {
    id: u64,
    name: String,
    strokes: Vec<StrokeDoc>,
}

/// A stroke pair as stored in project documents; `view` is the primary
/// stroke's view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrokeDoc {
    pub id: u64,
    pub view: View,
    pub label: AnnotationLabel,
    pub attach_id: Option<u64>,
    #[serde(default)]
    pub marking: bool,
    pub points: Vec<[f64; 2]>,
    pub counterpart: Vec<[f64; 2]>,
}

impl From<&StrokePair> for StrokeDoc {
    fn from(s: &StrokePair) -> Self {
        Self {
            id: s.id.0,
            view: s.primary.view,
            label: s.label,
            attach_id: s.attach.map(|a| a.0),
            marking: s.marking,
            points: from_points(&s.primary.points),
            counterpart: from_points(&s.counterpart.points),
        }
    }
}

fn to_points(v: &[[f64; 2]]) -> Vec<Point2> {
    v.iter().map(|&[x, y]| Point2::new(x, y)).collect()
}

fn from_points(v: &[Point2]) -> Vec<[f64; 2]> {
    v.iter().map(|p| [p.x, p.y]).collect()
}

/// Serialise a project (without its undo history) as pretty JSON.
pub fn save_project(project: &Project) -> String {
    let doc = ProjectDoc {
        version: PROJECT_VERSION,
        images: project.images.clone(),
        parts: project
            .parts
            .iter()
            .map(|p| PartDoc {
                id: p.id.0,
                name: p.name.clone(),
                strokes: p.strokes.iter().map(StrokeDoc::from).collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("project documents always serialise");
    out.push('\n');
    out
}

pub fn load_project(document: &str) -> Result<Project, DocumentError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: ProjectDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        DocumentError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    if doc.version != PROJECT_VERSION {
        return Err(DocumentError::Version(doc.version));
    }
    let parts = doc
        .parts
        .into_iter()
        .map(|p| Part {
            id: PartId(p.id),
            name: p.name,
            strokes: p
                .strokes
                .into_iter()
                .map(|s| StrokePair {
                    id: StrokeId(s.id),
                    label: s.label,
                    part: PartId(p.id),
                    attach: s.attach_id.map(StrokeId),
                    marking: s.marking,
                    primary: Stroke {
                        view: s.view,
                        points: to_points(&s.points),
                    },
                    counterpart: Stroke {
                        view: s.view.other(),
                        points: to_points(&s.counterpart),
                    },
                })
                .collect(),
        })
        .collect();
    Ok(Project::from_parts(doc.images, parts)?)
}
