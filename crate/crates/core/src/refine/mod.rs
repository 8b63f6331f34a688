//! Local refinement from addition and erosion annotations.
//!
//! Addition strokes become typed boundary constraints: closed contours
//! around the skeleton (k = 0) or open profiles seen in the front (k = 1)
//! or side (k = 2) view. Profiles are snapped toward nearby drawing edges
//! and override the matching cross-section poles; contours replace whole
//! sections, with the sections between them blended by cubic B-splines.
//! Erosion strokes reshape an end-cap through a Laplacian solve.

pub mod ellipse;
mod ingest;
mod interpolate;
mod laplacian;
mod objective;

pub use ellipse::{fit_cross_section, Ellipse, EllipseError, SectionPoles};
pub use ingest::{ingest_annotations, IngestParams, Ingested};
pub use interpolate::{apply_profiles, contour_section, insert_sections, interpolate_sections};
pub use laplacian::{
    cap_laplacian, deform_cap, laplacian_endcap, match_erosion_profile, EndCapResult,
    CG_TOLERANCE,
};
pub use objective::{minimize_objective, sample_objective, RefinedConstraint, Refinement};

use crate::annotations::StrokeId;
use crate::base_mesh::{BaseMeshError, BoundaryKind};
use crate::geometry::{GeometryError, Point3, Vector3};
use crate::View;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("{0} is not attached to this part's alignment stroke")]
    Unattached(StrokeId),
    #[error("{stroke} is {distance:.3} from the skeleton, beyond {limit:.3}")]
    OutsideTube {
        stroke: StrokeId,
        distance: f64,
        limit: f64,
    },
    #[error("second contour constraint at t = {t:.6} from {stroke}")]
    DuplicateContour { stroke: StrokeId, t: f64 },
    #[error("contour {0} passes through the skeleton")]
    NotStarShaped(StrokeId),
    #[error("{0} has no cap region to edit")]
    NoCap(String),
    #[error("singular Laplacian system: {0}")]
    SingularSystem(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    BaseMesh(#[from] BaseMeshError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConstraint {
    pub kind: BoundaryKind,
    /// Skeleton parameter of the constraint centroid.
    pub t: f64,
    /// 3D samples along the stroke; a closed loop for contours.
    pub points: Vec<Point3>,
    /// View whose image plane the constraint is measured in.
    pub view: View,
    pub source: StrokeId,
}

/// Accepted constraints of one part.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundarySet {
    constraints: Vec<BoundaryConstraint>,
}

/// Contours closer than this in `t` count as the same parameter.
pub const CONTOUR_T_EPS: f64 = 1e-6;

impl BoundarySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: BoundaryConstraint) -> Result<(), RefineError> {
        if c.kind == BoundaryKind::Contour
            && self
                .constraints
                .iter()
                .any(|o| o.kind == BoundaryKind::Contour && (o.t - c.t).abs() < CONTOUR_T_EPS)
        {
            return Err(RefineError::DuplicateContour {
                stroke: c.source,
                t: c.t,
            });
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn constraints(&self) -> &[BoundaryConstraint] {
        &self.constraints
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapEnd {
    Start,
    End,
}

impl CapEnd {
    pub fn index(self) -> usize {
        match self {
            CapEnd::Start => 0,
            CapEnd::End => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndCapEdit {
    pub source: StrokeId,
    pub end: CapEnd,
    /// Target profile, densely sampled.
    pub profile: Vec<Point3>,
    /// Solved per-vertex displacements, filled in by the solve.
    pub displacements: Vec<(u32, Vector3)>,
}
