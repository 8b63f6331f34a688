use super::{BoundaryConstraint, BoundarySet, CapEnd, EndCapEdit, RefineError};
use crate::annotations::{AnnotationLabel, Part, StrokeId, StrokePair};
use crate::base_mesh::{BoundaryKind, GeneralizedCylinder};
use crate::geometry::{HermiteCurve, Point3};
use crate::View;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestParams {
    /// Largest angle (radians) between a key point's offset from the
    /// skeleton and the cross-section plane for the stroke to count as a
    /// contour.
    pub contour_band: f64,
    /// Key points must lie within this multiple of the local mean radius.
    pub tube_factor: f64,
    pub epipolar_tolerance: f64,
    /// Dense samples per key-point segment.
    pub samples_per_segment: usize,
    /// Dense samples of an erosion profile.
    pub erosion_samples: usize,
}

impl Default for IngestParams {
    fn default() -> Self {
        Self {
            contour_band: 15f64.to_radians(),
            tube_factor: 3.0,
            epipolar_tolerance: 0.5,
            samples_per_segment: 8,
            erosion_samples: 64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub boundaries: BoundarySet,
    pub erosions: Vec<EndCapEdit>,
}

/// Turn the addition and erosion strokes attached to `alignment` into
/// boundary constraints and end-cap edits.
pub fn ingest_annotations(
    part: &Part,
    alignment: StrokeId,
    gc: &GeneralizedCylinder,
    params: &IngestParams,
) -> Result<Ingested, RefineError> {
    let mut out = Ingested::default();
    for s in &part.strokes {
        if s.label == AnnotationLabel::Alignment {
            continue;
        }
        if s.attach != Some(alignment) {
            return Err(RefineError::Unattached(s.id));
        }
        let key = s.triangulate(gc.skeleton.cameras(), params.epipolar_tolerance)?;
        check_tube(s.id, &key, gc, params.tube_factor)?;
        match s.label {
            AnnotationLabel::Erosion => out.erosions.push(erosion(s, &key, gc, params)?),
            _ => out.boundaries.insert(addition(s, key, gc, params)?)?,
        }
    }
    Ok(out)
}

fn addition(
    s: &StrokePair,
    key: Vec<Point3>,
    gc: &GeneralizedCylinder,
    params: &IngestParams,
) -> Result<BoundaryConstraint, RefineError> {
    let skel = &gc.skeleton;
    let centroid = centroid(&key);
    let t = skel.closest_param(&centroid);
    let (center, tangent) = (skel.point(t), skel.tangent(t));
    let sin_band = params.contour_band.sin();
    let planar = key.iter().all(|p| {
        let v = p - center;
        let n = v.norm();
        n > 0.0 && v.dot(&tangent).abs() <= n * sin_band
    });
    if planar && key.len() >= 3 {
        let mut closed = key.clone();
        closed.push(key[0]);
        let points = densify(closed, params.samples_per_segment)?;
        let points = points[..points.len() - 1].to_vec();
        return Ok(BoundaryConstraint {
            kind: BoundaryKind::Contour,
            t,
            points,
            view: s.primary.view,
            source: s.id,
        });
    }
    let kind = match s.primary.view {
        View::Front => BoundaryKind::FrontProfile,
        View::Side => BoundaryKind::SideProfile,
    };
    let points = densify(key, params.samples_per_segment)?;
    Ok(BoundaryConstraint {
        kind,
        t,
        points,
        view: s.primary.view,
        source: s.id,
    })
}

fn erosion(
    s: &StrokePair,
    key: &[Point3],
    gc: &GeneralizedCylinder,
    params: &IngestParams,
) -> Result<EndCapEdit, RefineError> {
    let t = gc.skeleton.closest_param(&centroid(key));
    let end = if t < 0.5 { CapEnd::Start } else { CapEnd::End };
    let curve = HermiteCurve::new(key.to_vec())?;
    let n = params.erosion_samples.max(2);
    let profile = (0..n)
        .map(|i| curve.eval(i as f64 / (n - 1) as f64))
        .collect::<Result<_, _>>()?;
    Ok(EndCapEdit {
        source: s.id,
        end,
        profile,
        displacements: Vec::new(),
    })
}

fn check_tube(
    id: StrokeId,
    key: &[Point3],
    gc: &GeneralizedCylinder,
    factor: f64,
) -> Result<(), RefineError> {
    let skel = &gc.skeleton;
    for p in key {
        let t = skel.closest_param(p);
        let distance = (p - skel.point(t)).norm();
        let limit = factor * local_mean_radius(gc, t);
        if distance > limit {
            return Err(RefineError::OutsideTube {
                stroke: id,
                distance,
                limit,
            });
        }
    }
    Ok(())
}

/// Mean radius of the section nearest to `t`.
pub(crate) fn local_mean_radius(gc: &GeneralizedCylinder, t: f64) -> f64 {
    let s = gc
        .sections
        .iter()
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
        .expect("cylinder has sections");
    s.radii.iter().sum::<f64>() / s.radii.len() as f64
}

fn centroid(points: &[Point3]) -> Point3 {
    let sum = points
        .iter()
        .fold(nalgebra::Vector3::zeros(), |acc, p| acc + p.coords);
    Point3::from(sum / points.len() as f64)
}

/// Hermite samples through `key`, `per_segment` per key-point gap, ends
/// included.
pub(crate) fn densify(key: Vec<Point3>, per_segment: usize) -> Result<Vec<Point3>, RefineError> {
    let segments = key.len() - 1;
    let curve = HermiteCurve::new(key)?;
    let n = segments * per_segment.max(1);
    Ok((0..=n)
        .map(|i| curve.eval(i as f64 / n as f64))
        .collect::<Result<_, _>>()?)
}
