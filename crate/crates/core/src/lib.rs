//! Character-part reconstruction from a front and a side orthographic
//! drawing, steered by alignment, addition and erosion strokes.
//!
//! The flow per part is: edges of both drawings, a generalized cylinder
//! swept along the triangulated alignment stroke, refinement from the
//! addition strokes, end-cap editing from the erosion strokes, and a
//! validated triangle mesh. [`pipeline::reconstruct`] runs all of it.

pub mod annotations;
pub mod base_mesh;
pub mod edges;
pub mod geometry;
pub mod mesh;
pub mod pipeline;
pub mod refine;
pub mod silhouette;
pub mod synth;

use serde::{Deserialize, Serialize};

/// One of the two drawings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Front,
    Side,
}

impl View {
    pub fn other(self) -> Self {
        match self {
            View::Front => View::Side,
            View::Side => View::Front,
        }
    }
}

impl std::fmt::Display for View {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            View::Front => "front",
            View::Side => "side",
        })
    }
}
