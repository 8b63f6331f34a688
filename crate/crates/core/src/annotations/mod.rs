//! Labeled strokes drawn on the two views, their cross-view counterparts,
//! and the undoable edits applied to them.

mod document;

pub use document::{load_project, save_project, DocumentError, StrokeDoc, PROJECT_VERSION};

use crate::edges::PixelGeometry;
use crate::geometry::{CameraPair, GeometryError, Point2, Point3, Vector2};
use crate::View;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed row disagreement between paired key points, in pixels.
pub const EPIPOLAR_TOLERANCE_PX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrokeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartId(pub u64);

impl std::fmt::Display for StrokeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stroke {}", self.0)
    }
}

impl std::fmt::Display for PartId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "part {}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationLabel {
    Alignment,
    Addition,
    Erosion,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotationError {
    #[error("unknown {0}")]
    UnknownStroke(StrokeId),
    #[error("unknown {0}")]
    UnknownPart(PartId),
    #[error("{stroke} has no key point {index}")]
    UnknownKeyPoint { stroke: StrokeId, index: usize },
    #[error("key point ({x}, {y}) lies outside the {view} image")]
    OutOfBounds { view: View, x: f64, y: f64 },
    #[error("a stroke needs at least 2 key points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite key point")]
    NonFinite,
    #[error("{0} has no alignment stroke to attach to")]
    NoAlignment(PartId),
    #[error("invalid attachment: {0}")]
    InvalidAttachment(String),
    #[error("images have not been set")]
    NoImages,
    #[error("{stroke}: key point {index} breaks the epipolar pairing")]
    EpipolarMismatch { stroke: StrokeId, index: usize },
    #[error("duplicate id {0}")]
    DuplicateId(u64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Key points of a stroke in one view.
#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    pub view: View,
    pub points: Vec<Point2>,
}

/// A stroke and its auto-generated counterpart in the other view; key
/// points correspond by index and share their y coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct StrokePair {
    pub id: StrokeId,
    pub label: AnnotationLabel,
    pub part: PartId,
    /// Alignment stroke an addition or erosion stroke refines.
    pub attach: Option<StrokeId>,
    /// Edge/background marking tag. Carried through persistence only.
    pub marking: bool,
    pub primary: Stroke,
    pub counterpart: Stroke,
}

impl StrokePair {
    pub fn stroke(&self, view: View) -> &Stroke {
        if self.primary.view == view {
            &self.primary
        } else {
            &self.counterpart
        }
    }

    fn stroke_mut(&mut self, view: View) -> &mut Stroke {
        if self.primary.view == view {
            &mut self.primary
        } else {
            &mut self.counterpart
        }
    }

    pub fn front(&self) -> &Stroke {
        self.stroke(View::Front)
    }

    pub fn side(&self) -> &Stroke {
        self.stroke(View::Side)
    }

    pub fn len(&self) -> usize {
        self.primary.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primary.points.is_empty()
    }

    /// World positions of the key points.
    pub fn triangulate(
        &self,
        cameras: &CameraPair,
        tol: f64,
    ) -> Result<Vec<Point3>, GeometryError> {
        let (f, s) = (self.front(), self.side());
        f.points
            .iter()
            .zip(&s.points)
            .map(|(q1, q2)| cameras.triangulate(q1, q2, tol))
            .collect()
    }

    /// Largest row disagreement over all key-point pairs.
    pub fn epipolar_error(&self) -> f64 {
        self.primary
            .points
            .iter()
            .zip(&self.counterpart.points)
            .map(|(a, b)| (a.y - b.y).abs())
            .fold(0.0, f64::max)
    }
}

/// Reference to a drawing on disk plus its pixel-to-world mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRef {
    pub path: String,
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub origin: [f64; 2],
}

fn default_scale() -> f64 {
    1.0
}

impl ImageRef {
    pub fn geometry(&self) -> PixelGeometry {
        PixelGeometry {
            width: self.width,
            height: self.height,
            scale: self.scale,
            origin: Vector2::new(self.origin[0], self.origin[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewImages {
    pub front: ImageRef,
    pub side: ImageRef,
}

impl ViewImages {
    pub fn get(&self, view: View) -> &ImageRef {
        match view {
            View::Front => &self.front,
            View::Side => &self.side,
        }
    }

    /// Epipolar tolerance in world units.
    pub fn epipolar_tolerance(&self) -> f64 {
        EPIPOLAR_TOLERANCE_PX * self.front.scale.min(self.side.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub id: PartId,
    pub name: String,
    pub strokes: Vec<StrokePair>,
}

impl Part {
    /// The alignment stroke the part's cylinder is built from.
    pub fn alignment(&self) -> Option<&StrokePair> {
        self.strokes
            .iter()
            .find(|s| s.label == AnnotationLabel::Alignment)
    }

    /// Addition and erosion strokes attached to `alignment`.
    pub fn attached(&self, alignment: StrokeId) -> impl Iterator<Item = &StrokePair> {
        self.strokes
            .iter()
            .filter(move |s| s.attach == Some(alignment))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Snapshot {
    images: Option<ViewImages>,
    parts: Vec<Part>,
    next_id: u64,
}

/// Annotation state of one modeling session with snapshot undo.
#[derive(Debug, Clone, Default)]
pub struct Project {
    images: Option<ViewImages>,
    parts: Vec<Part>,
    next_id: u64,
    undo: Vec<Snapshot>,
}

/// Projects compare by content; the undo history is not part of identity.
impl PartialEq for Project {
    fn eq(&self, other: &Self) -> bool {
        self.images == other.images && self.parts == other.parts
    }
}

impl Project {
    pub fn new() -> Self {
        Self {
            next_id: 1,
            ..Default::default()
        }
    }

    pub(crate) fn from_parts(
        images: Option<ViewImages>,
        parts: Vec<Part>,
    ) -> Result<Self, AnnotationError> {
        let next_id = parts
            .iter()
            .flat_map(|p| std::iter::once(p.id.0).chain(p.strokes.iter().map(|s| s.id.0)))
            .max()
            .unwrap_or(0)
            + 1;
        let project = Self {
            images,
            parts,
            next_id,
            undo: Vec::new(),
        };
        project.check_integrity()?;
        Ok(project)
    }

    pub fn images(&self) -> Option<&ViewImages> {
        self.images.as_ref()
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn part(&self, id: PartId) -> Option<&Part> {
        self.parts.iter().find(|p| p.id == id)
    }

    pub fn stroke(&self, id: StrokeId) -> Option<&StrokePair> {
        self.parts
            .iter()
            .flat_map(|p| p.strokes.iter())
            .find(|s| s.id == id)
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    pub fn epipolar_tolerance(&self) -> f64 {
        self.images
            .as_ref()
            .map_or(EPIPOLAR_TOLERANCE_PX, ViewImages::epipolar_tolerance)
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            images: self.images.clone(),
            parts: self.parts.clone(),
            next_id: self.next_id,
        }
    }

    /// Run `edit` on a scratch copy and commit it, with an undo entry, only
    /// if it succeeds.
    fn transact<T>(
        &mut self,
        edit: impl FnOnce(&mut Self) -> Result<T, AnnotationError>,
    ) -> Result<T, AnnotationError> {
        let before = self.snapshot();
        let mut scratch = self.clone();
        let out = edit(&mut scratch)?;
        scratch.check_integrity()?;
        *self = scratch;
        self.undo.push(before);
        Ok(out)
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn part_mut(&mut self, id: PartId) -> Result<&mut Part, AnnotationError> {
        self.parts
            .iter_mut()
            .find(|p| p.id == id)
            .ok_or(AnnotationError::UnknownPart(id))
    }

    fn locate(&self, id: StrokeId) -> Result<(usize, usize), AnnotationError> {
        for (pi, part) in self.parts.iter().enumerate() {
            if let Some(si) = part.strokes.iter().position(|s| s.id == id) {
                return Ok((pi, si));
            }
        }
        Err(AnnotationError::UnknownStroke(id))
    }

    fn check_point(&self, view: View, p: &Point2) -> Result<(), AnnotationError> {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(AnnotationError::NonFinite);
        }
        let images = self.images.as_ref().ok_or(AnnotationError::NoImages)?;
        if images.get(view).geometry().contains(p) {
            Ok(())
        } else {
            Err(AnnotationError::OutOfBounds {
                view,
                x: p.x,
                y: p.y,
            })
        }
    }

    pub fn set_images(&mut self, images: ViewImages) -> Result<(), AnnotationError> {
        self.transact(|p| {
            p.images = Some(images);
            Ok(())
        })
    }

    pub fn add_part(&mut self, name: &str) -> Result<PartId, AnnotationError> {
        self.transact(|p| {
            let id = PartId(p.fresh_id());
            p.parts.push(Part {
                id,
                name: name.to_string(),
                strokes: Vec::new(),
            });
            Ok(id)
        })
    }

    /// Store a new stroke drawn in `view` and generate its counterpart in
    /// the other view: same rows, depth 0 until edited.
    ///
    /// Addition and erosion strokes attach to `attach`, or to the part's
    /// first alignment stroke when `attach` is `None`.
    pub fn add_stroke(
        &mut self,
        view: View,
        key_points: &[Point2],
        label: AnnotationLabel,
        part: PartId,
        attach: Option<StrokeId>,
    ) -> Result<StrokePair, AnnotationError> {
        let counterpart: Vec<Point2> = key_points.iter().map(|q| Point2::new(0.0, q.y)).collect();
        self.add_stroke_pair(view, key_points, &counterpart, label, part, attach)
    }

    /// Like [`Project::add_stroke`] with explicit counterpart key points,
    /// which must share rows with `key_points`.
    pub fn add_stroke_pair(
        &mut self,
        view: View,
        key_points: &[Point2],
        counterpart: &[Point2],
        label: AnnotationLabel,
        part: PartId,
        attach: Option<StrokeId>,
    ) -> Result<StrokePair, AnnotationError> {
        self.transact(|p| {
            if key_points.len() < 2 {
                return Err(AnnotationError::TooFewPoints(key_points.len()));
            }
            for q in key_points {
                p.check_point(view, q)?;
            }
            let counterpart = counterpart.to_vec();
            for q in &counterpart {
                p.check_point(view.other(), q)?;
            }
            let target = p.part(part).ok_or(AnnotationError::UnknownPart(part))?;
            let attach = match label {
                AnnotationLabel::Alignment => {
                    if attach.is_some() {
                        return Err(AnnotationError::InvalidAttachment(
                            "alignment strokes do not attach to other strokes".into(),
                        ));
                    }
                    None
                }
                AnnotationLabel::Addition | AnnotationLabel::Erosion => match attach {
                    Some(id) => Some(id),
                    None => Some(
                        target
                            .alignment()
                            .ok_or(AnnotationError::NoAlignment(part))?
                            .id,
                    ),
                },
            };
            let pair = StrokePair {
                id: StrokeId(p.fresh_id()),
                label,
                part,
                attach,
                marking: false,
                primary: Stroke {
                    view,
                    points: key_points.to_vec(),
                },
                counterpart: Stroke {
                    view: view.other(),
                    points: counterpart,
                },
            };
            p.part_mut(part)?.strokes.push(pair.clone());
            Ok(pair)
        })
    }

    /// Move key point `index` of the stroke seen in `view`.
    ///
    /// Locked moves only change x: y stays on the counterpart's row. Free
    /// moves carry the new row over to the counterpart.
    pub fn move_key_point(
        &mut self,
        stroke: StrokeId,
        view: View,
        index: usize,
        new_pos: Point2,
        epipolar_locked: bool,
    ) -> Result<StrokePair, AnnotationError> {
        self.transact(|p| {
            let (pi, si) = p.locate(stroke)?;
            let pair = &p.parts[pi].strokes[si];
            if index >= pair.len() {
                return Err(AnnotationError::UnknownKeyPoint { stroke, index });
            }
            let other_y = pair.stroke(view.other()).points[index].y;
            let target = if epipolar_locked {
                Point2::new(new_pos.x, other_y)
            } else {
                new_pos
            };
            p.check_point(view, &target)?;
            let other_x = pair.stroke(view.other()).points[index].x;
            p.check_point(view.other(), &Point2::new(other_x, target.y))?;
            let pair = &mut p.parts[pi].strokes[si];
            pair.stroke_mut(view).points[index] = target;
            pair.stroke_mut(view.other()).points[index].y = target.y;
            Ok(pair.clone())
        })
    }

    pub fn set_marking(
        &mut self,
        stroke: StrokeId,
        marking: bool,
    ) -> Result<StrokePair, AnnotationError> {
        self.transact(|p| {
            let (pi, si) = p.locate(stroke)?;
            let pair = &mut p.parts[pi].strokes[si];
            pair.marking = marking;
            Ok(pair.clone())
        })
    }

    /// Remove a stroke pair. Deleting an alignment stroke also removes the
    /// strokes attached to it.
    pub fn delete_stroke(&mut self, stroke: StrokeId) -> Result<(), AnnotationError> {
        self.transact(|p| {
            let (pi, _) = p.locate(stroke)?;
            p.parts[pi]
                .strokes
                .retain(|s| s.id != stroke && s.attach != Some(stroke));
            Ok(())
        })
    }

    /// Move the primary stroke to the other view and regenerate its
    /// counterpart in the original view.
    pub fn relocate_stroke(&mut self, stroke: StrokeId) -> Result<StrokePair, AnnotationError> {
        self.transact(|p| {
            let (pi, si) = p.locate(stroke)?;
            let pair = &p.parts[pi].strokes[si];
            let from = pair.primary.view;
            let points = pair.primary.points.clone();
            for q in &points {
                p.check_point(from.other(), q)?;
            }
            let counterpart: Vec<Point2> = points.iter().map(|q| Point2::new(0.0, q.y)).collect();
            let pair = &mut p.parts[pi].strokes[si];
            pair.primary = Stroke {
                view: from.other(),
                points,
            };
            pair.counterpart = Stroke {
                view: from,
                points: counterpart,
            };
            Ok(pair.clone())
        })
    }

    /// Revert the last mutating operation. Returns false when there was
    /// nothing to undo.
    pub fn undo(&mut self) -> bool {
        match self.undo.pop() {
            Some(s) => {
                self.images = s.images;
                self.parts = s.parts;
                self.next_id = s.next_id;
                true
            }
            None => false,
        }
    }

    /// Referential integrity and pairing invariants.
    pub fn check_integrity(&self) -> Result<(), AnnotationError> {
        let tol = self.epipolar_tolerance();
        let mut seen = std::collections::HashSet::new();
        for part in &self.parts {
            if !seen.insert(part.id.0) {
                return Err(AnnotationError::DuplicateId(part.id.0));
            }
            for s in &part.strokes {
                if !seen.insert(s.id.0) {
                    return Err(AnnotationError::DuplicateId(s.id.0));
                }
                if s.part != part.id {
                    return Err(AnnotationError::InvalidAttachment(format!(
                        "{} is filed under the wrong part",
                        s.id
                    )));
                }
                if s.primary.view == s.counterpart.view {
                    return Err(AnnotationError::InvalidAttachment(format!(
                        "{} has both strokes in one view",
                        s.id
                    )));
                }
                if s.primary.points.len() < 2 {
                    return Err(AnnotationError::TooFewPoints(s.primary.points.len()));
                }
                if s.primary.points.len() != s.counterpart.points.len() {
                    return Err(AnnotationError::EpipolarMismatch {
                        stroke: s.id,
                        index: s.counterpart.points.len(),
                    });
                }
                for (i, (a, b)) in s
                    .primary
                    .points
                    .iter()
                    .zip(&s.counterpart.points)
                    .enumerate()
                {
                    if !(a.x.is_finite() && a.y.is_finite() && b.x.is_finite() && b.y.is_finite()) {
                        return Err(AnnotationError::NonFinite);
                    }
                    if (a.y - b.y).abs() > tol {
                        return Err(AnnotationError::EpipolarMismatch {
                            stroke: s.id,
                            index: i,
                        });
                    }
                }
                match (s.label, s.attach) {
                    (AnnotationLabel::Alignment, None) => {}
                    (AnnotationLabel::Alignment, Some(_)) => {
                        return Err(AnnotationError::InvalidAttachment(format!(
                            "alignment {} is attached",
                            s.id
                        )))
                    }
                    (_, None) => return Err(AnnotationError::NoAlignment(part.id)),
                    (_, Some(target)) => {
                        let ok = part
                            .strokes
                            .iter()
                            .any(|t| t.id == target && t.label == AnnotationLabel::Alignment);
                        if !ok {
                            return Err(AnnotationError::InvalidAttachment(format!(
                                "{} must attach to an alignment stroke of the same part, not {}",
                                s.id, target
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
