//! Generalized-cylinder base meshes built from alignment annotations.

mod search;
mod skeleton;
mod tessellate;

pub use search::{
    boundary_search, is_lateral, search_ray, BoundaryOffsets, RayHit, SearchFailure, SearchParams,
    ViewOffsets, MIN_AXIS_VISIBILITY,
};
pub use skeleton::{Skeleton, SkeletonSample};
pub use tessellate::{tessellate, tessellate_with, TessellateError, MIN_RADIUS};

use crate::annotations::{PartId, StrokeId, StrokePair};
use crate::edges::EdgeMap;
use crate::geometry::{CameraPair, Frame, GeometryError, Point3};
use crate::refine::ellipse::{fit_cross_section, Ellipse, EllipseError, SectionPoles};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaseMeshError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("skeleton has zero length")]
    DegenerateSkeleton,
    #[error("need at least {needed} {what}, got {got}")]
    TooFewSamples {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("boundary search failed at every sample")]
    AllSamplesFailed,
    #[error("cross-section at t = {t}: {source}")]
    Section { t: f64, source: EllipseError },
}

/// Boundary-type tag: cross-section contour, front profile, side profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Contour,
    FrontProfile,
    SideProfile,
}

impl BoundaryKind {
    pub fn k(self) -> u8 {
        match self {
            Self::Contour => 0,
            Self::FrontProfile => 1,
            Self::SideProfile => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintTag {
    pub kind: BoundaryKind,
    pub source: StrokeId,
}

/// Angle of angular sample `k` out of `a`, measured from the normal.
pub fn sample_angle(k: usize, a: usize) -> f64 {
    TAU * k as f64 / a as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub t: f64,
    pub center: Point3,
    pub frame: Frame,
    /// Poles the section was fitted through, after gap filling.
    pub poles: SectionPoles,
    /// Boundary distance from `center` at each angular sample.
    pub radii: Vec<f64>,
}

impl CrossSection {
    pub fn from_ellipse(
        sample: &SkeletonSample,
        poles: SectionPoles,
        ellipse: &Ellipse,
        a: usize,
    ) -> Self {
        let radii = (0..a).map(|k| ellipse.radial(sample_angle(k, a))).collect();
        Self {
            t: sample.t,
            center: sample.point,
            frame: sample.frame,
            poles,
            radii,
        }
    }

    pub fn from_poles(
        sample: &SkeletonSample,
        poles: SectionPoles,
        a: usize,
    ) -> Result<Self, BaseMeshError> {
        let e = fit_cross_section(&poles).map_err(|source| BaseMeshError::Section {
            t: sample.t,
            source,
        })?;
        Ok(Self::from_ellipse(sample, poles, &e, a))
    }

    pub fn angular_samples(&self) -> usize {
        self.radii.len()
    }

    pub fn boundary_point(&self, k: usize) -> Point3 {
        self.center + self.frame.radial(sample_angle(k, self.radii.len())) * self.radii[k]
    }

    pub fn boundary(&self) -> Vec<Point3> {
        (0..self.radii.len())
            .map(|k| self.boundary_point(k))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GeneralizedCylinder {
    pub part: PartId,
    pub skeleton: Skeleton,
    /// Ordered by strictly increasing `t`, first at 0 and last at 1.
    pub sections: Vec<CrossSection>,
    pub tags: Vec<ConstraintTag>,
    /// Rays whose search failed and were filled from neighbours.
    pub failed_rays: usize,
}

impl GeneralizedCylinder {
    pub fn angular_samples(&self) -> usize {
        self.sections.first().map_or(0, |s| s.radii.len())
    }

    /// Smallest dot product of consecutive section normals; positive when
    /// no frame flips.
    pub fn min_normal_alignment(&self) -> f64 {
        self.sections
            .windows(2)
            .map(|w| w[0].frame.normal.dot(&w[1].frame.normal))
            .fold(1.0, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderParams {
    /// Uniform skeleton samples `m`.
    pub samples: usize,
    /// Angular samples `a` per cross-section.
    pub angular_samples: usize,
    pub search: SearchParams,
    /// Extra sections are inserted where a midpoint search differs from
    /// the linear prediction by more than this (world units).
    pub adaptive_tolerance: f64,
    pub max_subdivision: u32,
    /// Row disagreement allowed when triangulating the alignment pair.
    pub epipolar_tolerance: f64,
}

impl Default for CylinderParams {
    fn default() -> Self {
        Self {
            samples: 32,
            angular_samples: 32,
            search: SearchParams::default(),
            adaptive_tolerance: 0.5,
            max_subdivision: 6,
            epipolar_tolerance: 0.5,
        }
    }
}

pub fn build_generalized_cylinder(
    cameras: &CameraPair,
    edges_front: &EdgeMap,
    edges_side: &EdgeMap,
    alignment: &StrokePair,
    params: &CylinderParams,
) -> Result<GeneralizedCylinder, BaseMeshError> {
    let skeleton = Skeleton::from_alignment(*cameras, alignment, params.epipolar_tolerance)?;
    build_on_skeleton(alignment.part, skeleton, edges_front, edges_side, params)
}

type Slots = [Option<f64>; 4];

pub fn build_on_skeleton(
    part: PartId,
    skeleton: Skeleton,
    edges_front: &EdgeMap,
    edges_side: &EdgeMap,
    params: &CylinderParams,
) -> Result<GeneralizedCylinder, BaseMeshError> {
    let m = params.samples;
    if m < 2 {
        return Err(BaseMeshError::TooFewSamples {
            what: "skeleton samples",
            needed: 2,
            got: m,
        });
    }
    if params.angular_samples < 8 {
        return Err(BaseMeshError::TooFewSamples {
            what: "angular samples",
            needed: 8,
            got: params.angular_samples,
        });
    }
    let search = |t: f64| boundary_search(edges_front, edges_side, &skeleton, t, &params.search);

    let mut ts: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let mut raw: Vec<Slots> = Vec::with_capacity(m);
    let mut failed = 0;
    for &t in &ts {
        let o = search(t);
        failed += o.front.failures() + o.side.failures();
        raw.push(o.poles().slots());
    }
    if raw.iter().all(|s| s.iter().all(Option::is_none)) {
        return Err(BaseMeshError::AllSamplesFailed);
    }
    let mut filled = fill_gaps(&ts, &raw);

    if params.max_subdivision > 0 {
        let (mut out_t, mut out_s) = (vec![ts[0]], vec![filled[0]]);
        for i in 0..m - 1 {
            let mut refine = Refiner {
                search: &search,
                tol: params.adaptive_tolerance,
                t: &mut out_t,
                s: &mut out_s,
            };
            refine.subdivide(
                (ts[i], filled[i]),
                (ts[i + 1], filled[i + 1]),
                params.max_subdivision,
            );
            out_t.push(ts[i + 1]);
            out_s.push(filled[i + 1]);
        }
        ts = out_t;
        filled = out_s;
    }

    let sections = ts
        .iter()
        .zip(&filled)
        .map(|(&t, s)| {
            CrossSection::from_poles(
                &skeleton.sample(t),
                SectionPoles::from_slots(*s),
                params.angular_samples,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GeneralizedCylinder {
        part,
        skeleton,
        sections,
        tags: Vec::new(),
        failed_rays: failed,
    })
}

struct Refiner<'a, F> {
    search: &'a F,
    tol: f64,
    t: &'a mut Vec<f64>,
    s: &'a mut Vec<Slots>,
}

impl<F: Fn(f64) -> BoundaryOffsets> Refiner<'_, F> {
    /// Insert midpoint sections between `a` and `b` (exclusive) wherever
    /// the searched boundary departs from linear interpolation.
    fn subdivide(&mut self, a: (f64, Slots), b: (f64, Slots), depth: u32) {
        if depth == 0 {
            return;
        }
        let tm = 0.5 * (a.0 + b.0);
        let found = (self.search)(tm).poles().slots();
        let mut mid = [None; 4];
        let mut deviation: f64 = 0.0;
        for j in 0..4 {
            let predicted = match (a.1[j], b.1[j]) {
                (Some(x), Some(y)) => Some(0.5 * (x + y)),
                (x, y) => x.or(y),
            };
            mid[j] = found[j].or(predicted);
            if let (Some(f), Some(p)) = (found[j], predicted) {
                deviation = deviation.max((f - p).abs());
            }
        }
        if deviation > self.tol {
            self.subdivide(a, (tm, mid), depth - 1);
            self.t.push(tm);
            self.s.push(mid);
            self.subdivide((tm, mid), b, depth - 1);
        }
    }
}

/// Fill missing pole slots by linear interpolation in `t` between the
/// nearest successful samples, or by copying the only one available.
pub fn fill_gaps(ts: &[f64], raw: &[Slots]) -> Vec<Slots> {
    let mut out = raw.to_vec();
    for j in 0..4 {
        for i in 0..raw.len() {
            if raw[i][j].is_some() {
                continue;
            }
            let lo = (0..i).rev().find(|&k| raw[k][j].is_some());
            let hi = (i + 1..raw.len()).find(|&k| raw[k][j].is_some());
            out[i][j] = match (lo, hi) {
                (Some(l), Some(h)) => {
                    let (a, b) = (raw[l][j].unwrap(), raw[h][j].unwrap());
                    let s = (ts[i] - ts[l]) / (ts[h] - ts[l]);
                    Some(a + (b - a) * s)
                }
                (Some(k), None) | (None, Some(k)) => raw[k][j],
                (None, None) => None,
            };
        }
    }
    out
}
