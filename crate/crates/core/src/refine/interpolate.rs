use super::ellipse::SectionPoles;
use super::{BoundaryConstraint, RefineError};
use crate::base_mesh::{sample_angle, BoundaryKind, CrossSection, GeneralizedCylinder, MIN_RADIUS};
use crate::geometry::CubicBSpline;
use crate::View;
use std::f64::consts::TAU;

/// Sections closer than this in `t` are the same section.
const SAME_T: f64 = 1e-9;

/// Add sections at the given parameters, with poles interpolated linearly
/// between the neighbouring sections. Existing sections are kept as is.
pub fn insert_sections(
    gc: &GeneralizedCylinder,
    ts: &[f64],
) -> Result<GeneralizedCylinder, RefineError> {
    let a = gc.angular_samples();
    let mut sections = gc.sections.clone();
    for &t in ts {
        let t = t.clamp(0.0, 1.0);
        let i = sections.partition_point(|s| s.t < t);
        if sections.get(i).is_some_and(|s| (s.t - t).abs() <= SAME_T)
            || (i > 0 && (t - sections[i - 1].t).abs() <= SAME_T)
        {
            continue;
        }
        let (lo, hi) = (&sections[i - 1], &sections[i]);
        let w = (t - lo.t) / (hi.t - lo.t);
        let (pa, pb) = (lo.poles.slots(), hi.poles.slots());
        let mut slots = [None; 4];
        for j in 0..4 {
            slots[j] = match (pa[j], pb[j]) {
                (Some(x), Some(y)) => Some(x + (y - x) * w),
                (x, y) => x.or(y),
            };
        }
        let sec =
            CrossSection::from_poles(&gc.skeleton.sample(t), SectionPoles::from_slots(slots), a)?;
        sections.insert(i, sec);
    }
    Ok(GeneralizedCylinder {
        sections,
        ..gc.clone()
    })
}

/// Override cross-section poles with front (k = 1) and side (k = 2)
/// profiles. Each profile sample adds a section at its parameter; within a
/// profile's parameter range the pole on the sample's side follows the
/// profile linearly. Later profiles win.
pub fn apply_profiles(
    gc: &GeneralizedCylinder,
    profiles: &[BoundaryConstraint],
) -> Result<GeneralizedCylinder, RefineError> {
    let skel = &gc.skeleton;
    let cams = skel.cameras();
    // (slot, samples sorted by t)
    let mut tracks: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    let mut new_ts = Vec::new();
    for c in profiles {
        let (view, axis_slot) = match c.kind {
            BoundaryKind::FrontProfile => (View::Front, 0),
            BoundaryKind::SideProfile => (View::Side, 2),
            BoundaryKind::Contour => continue,
        };
        let cam = cams.camera(view);
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for p in &c.points {
            let q = cams.project(view, p);
            let t = skel.closest_param_in_view(view, &q);
            let s = skel.sample(t);
            let axis = if view == View::Front {
                s.frame.normal
            } else {
                s.frame.binormal
            };
            let proj = cam.project_direction(&axis);
            let (ix, _) = cam.image_axes();
            if proj.norm()
                < crate::base_mesh::MIN_AXIS_VISIBILITY * cam.project_direction(&ix).norm()
            {
                continue;
            }
            let mu = (q - cams.project(view, &s.point)).dot(&proj) / proj.norm_squared();
            if mu > 0.0 {
                pos.push((t, mu));
            } else if mu < 0.0 {
                neg.push((t, -mu));
            }
            new_ts.push(t);
        }
        for (slot, mut track) in [(axis_slot, pos), (axis_slot + 1, neg)] {
            if track.is_empty() {
                continue;
            }
            track.sort_by(|a, b| a.0.total_cmp(&b.0));
            track.dedup_by(|b, a| (b.0 - a.0).abs() <= SAME_T);
            tracks.push((slot, track));
        }
    }
    if tracks.is_empty() {
        return Ok(gc.clone());
    }
    let mut out = insert_sections(gc, &new_ts)?;
    let a = out.angular_samples();
    for sec in out.sections.iter_mut() {
        let mut slots = sec.poles.slots();
        let mut touched = false;
        for (slot, track) in &tracks {
            if let Some(v) = piecewise_linear(track, sec.t) {
                slots[*slot] = Some(v);
                touched = true;
            }
        }
        if touched {
            let sample = crate::base_mesh::SkeletonSample {
                t: sec.t,
                point: sec.center,
                frame: sec.frame,
            };
            *sec = CrossSection::from_poles(&sample, SectionPoles::from_slots(slots), a)?;
        }
    }
    Ok(out)
}

/// Linear interpolation inside the track's range; `None` outside it.
fn piecewise_linear(track: &[(f64, f64)], t: f64) -> Option<f64> {
    let (first, last) = (track[0], track[track.len() - 1]);
    if t < first.0 - SAME_T || t > last.0 + SAME_T {
        return None;
    }
    if track.len() == 1 {
        return Some(first.1);
    }
    let i = track
        .partition_point(|p| p.0 <= t)
        .clamp(1, track.len() - 1);
    let (p, q) = (track[i - 1], track[i]);
    let w = ((t - p.0) / (q.0 - p.0)).clamp(0.0, 1.0);
    Some(p.1 + (q.1 - p.1) * w)
}

/// Cross-section at a contour constraint's parameter whose radial function
/// is the loop's polar profile around the skeleton point, interpolated
/// linearly in angle.
pub fn contour_section(
    gc: &GeneralizedCylinder,
    c: &BoundaryConstraint,
) -> Result<CrossSection, RefineError> {
    if c.points.len() < 3 {
        return Err(RefineError::NotStarShaped(c.source));
    }
    let s = gc.skeleton.sample(c.t);
    let mut polar: Vec<(f64, f64)> = Vec::with_capacity(c.points.len());
    for p in &c.points {
        let v = p - s.point;
        let (x, y) = (v.dot(&s.frame.normal), v.dot(&s.frame.binormal));
        let r = x.hypot(y);
        if r < 1e-9 {
            return Err(RefineError::NotStarShaped(c.source));
        }
        polar.push((y.atan2(x).rem_euclid(TAU), r));
    }
    polar.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (first, last) = (polar[0], polar[polar.len() - 1]);
    let mut ring = Vec::with_capacity(polar.len() + 2);
    ring.push((last.0 - TAU, last.1));
    ring.extend_from_slice(&polar);
    ring.push((first.0 + TAU, first.1));
    let radial = |theta: f64| {
        let i = ring
            .partition_point(|p| p.0 <= theta)
            .clamp(1, ring.len() - 1);
        let (lo, hi) = (ring[i - 1], ring[i]);
        if hi.0 <= lo.0 {
            return lo.1;
        }
        lo.1 + (hi.1 - lo.1) * (theta - lo.0) / (hi.0 - lo.0)
    };
    let a = gc.angular_samples();
    let radii: Vec<f64> = (0..a).map(|k| radial(sample_angle(k, a))).collect();
    let q = std::f64::consts::FRAC_PI_2;
    let poles = SectionPoles {
        normal_pos: Some(radial(0.0)),
        binormal_pos: Some(radial(q)),
        normal_neg: Some(radial(2.0 * q)),
        binormal_neg: Some(radial(3.0 * q)),
    };
    Ok(CrossSection {
        t: c.t,
        center: s.point,
        frame: s.frame,
        poles,
        radii,
    })
}

/// Replace the sections at the constraints' parameters and blend the rest.
///
/// For each angular sample the offset `r_constraint - r_base` is carried
/// through a natural cubic B-spline in `t` that also passes through zero at
/// `t = 0` and `t = 1` (unless a constraint sits there); every section adds
/// the spline's value to its base radius.
pub fn interpolate_sections(
    k0: &[CrossSection],
    gc: &GeneralizedCylinder,
) -> Result<GeneralizedCylinder, RefineError> {
    if k0.is_empty() {
        return Ok(gc.clone());
    }
    let ts: Vec<f64> = k0.iter().map(|s| s.t).collect();
    let base = insert_sections(gc, &ts)?;
    let a = base.angular_samples();
    let mut constraints: Vec<&CrossSection> = k0.iter().collect();
    constraints.sort_by(|x, y| x.t.total_cmp(&y.t));

    let base_at = |t: f64| {
        base.sections
            .iter()
            .min_by(|x, y| (x.t - t).abs().total_cmp(&(y.t - t).abs()))
            .expect("inserted section")
    };
    let mut params = Vec::new();
    let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); a];
    let mut push = |t: f64, d: &dyn Fn(usize) -> f64| {
        params.push(t);
        for (k, col) in deltas.iter_mut().enumerate() {
            col.push(d(k));
        }
    };
    if constraints[0].t > SAME_T {
        push(0.0, &|_| 0.0);
    }
    for c in &constraints {
        let b = base_at(c.t);
        push(c.t, &|k| c.radii[k] - b.radii[k]);
    }
    if constraints[constraints.len() - 1].t < 1.0 - SAME_T {
        push(1.0, &|_| 0.0);
    }
    let splines: Vec<CubicBSpline<1>> = deltas
        .iter()
        .map(|d| CubicBSpline::interpolate_scalar(d, &params))
        .collect::<Result<_, _>>()?;

    let mut out = base.clone();
    for sec in out.sections.iter_mut() {
        if let Some(c) = constraints.iter().find(|c| (c.t - sec.t).abs() <= SAME_T) {
            sec.radii.clone_from(&c.radii);
            sec.poles = c.poles;
            continue;
        }
        for (k, r) in sec.radii.iter_mut().enumerate() {
            let d = splines[k].eval_scalar(sec.t)?;
            *r = (*r + d).max(MIN_RADIUS);
        }
    }
    Ok(out)
}
