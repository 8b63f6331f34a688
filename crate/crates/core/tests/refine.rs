mod common;

use common::{cap_graph, cap_system_residual, dense_cap_solve, natural_spline, profile_stroke, random_annotations, ring_stroke, seeded};
use orthomodel_core::annotations::AnnotationLabel;
use orthomodel_core::base_mesh::*;
use orthomodel_core::edges::EdgeMap;
use orthomodel_core::geometry::{CameraPair, Point2, Point3};
use orthomodel_core::mesh::{validate, PartMesh};
use orthomodel_core::pipeline::{build_part, refine_part, Edges, PipelineConfig};
use orthomodel_core::refine::*;
use orthomodel_core::synth::{vertical_axis, Fixture};
use orthomodel_core::View;
use rand::Rng;
use std::f64::consts::TAU;

const TAPER: (f64, f64, f64) = (40.0, 80.0, 300.0);

fn taper() -> (Fixture, Edges) {
    let f = Fixture::tapered_cylinder(TAPER.0, TAPER.1, TAPER.2, 10.0);
    let e = Edges::extract(&f.front, &f.side, &PipelineConfig::default()).unwrap();
    (f, e)
}

fn taper_radius(y: f64) -> f64 {
    Fixture::taper_radius(TAPER.0, TAPER.1, TAPER.2, y)
}

fn part_of(f: &Fixture) -> &orthomodel_core::annotations::Part {
    f.project.part(f.part).unwrap()
}

/// Constant-radius cylinder along y with exact circular sections.
fn circle_cylinder(radius: f64, samples: usize, a: usize) -> GeneralizedCylinder {
    let skel = Skeleton::new(CameraPair::canonical(), vec![Point3::new(0.0, 100.0, 0.0), Point3::new(0.0, -100.0, 0.0)]).unwrap();
    let poles = SectionPoles::from_slots([Some(radius); 4]);
    let sections = (0..samples)
        .map(|i| {
            let s = skel.sample(i as f64 / (samples - 1) as f64);
            CrossSection::from_ellipse(&s, poles, &Ellipse::circle(radius), a)
        })
        .collect();
    GeneralizedCylinder { part: orthomodel_core::annotations::PartId(1), skeleton: skel, sections, tags: Vec::new(), failed_rays: 0 }
}

fn circle_at(gc: &GeneralizedCylinder, t: f64, r: f64) -> CrossSection {
    let poles = SectionPoles::from_slots([Some(r); 4]);
    CrossSection::from_ellipse(&gc.skeleton.sample(t), poles, &Ellipse::circle(r), gc.angular_samples())
}

#[test]
fn ring_stroke_becomes_mid_height_contour() {
    let (mut f, e) = taper();
    ring_stroke(&mut f.project, f.part, 0.0, 60.0, 6);
    let gc = refine_part(part_of(&f), &e, &PipelineConfig::default()).unwrap().base;
    let ing = ingest_annotations(part_of(&f), f.alignment, &gc, &IngestParams::default()).unwrap();
    let c = &ing.boundaries.constraints()[0];
    assert_eq!(c.kind, BoundaryKind::Contour);
    assert!((c.t - 0.5).abs() < 0.01, "t = {}", c.t);
}

#[test]
fn profiles_and_erosions_are_routed() {
    let (mut f, e) = taper();
    profile_stroke(&mut f.project, f.part, View::Front, 62.0, &[-20.0, 0.0, 20.0]);
    profile_stroke(&mut f.project, f.part, View::Side, -62.0, &[-20.0, 0.0, 20.0]);
    let top = [Point2::new(-50.0, 150.0), Point2::new(0.0, 130.0), Point2::new(50.0, 150.0)];
    f.project.add_stroke(View::Front, &top, AnnotationLabel::Erosion, f.part, None).unwrap();
    let gc = refine_part(part_of(&f), &e, &PipelineConfig::default()).unwrap().base;
    let ing = ingest_annotations(part_of(&f), f.alignment, &gc, &IngestParams::default()).unwrap();
    let kinds: Vec<_> = ing.boundaries.constraints().iter().map(|c| c.kind).collect();
    assert_eq!(kinds, [BoundaryKind::FrontProfile, BoundaryKind::SideProfile]);
    assert_eq!(ing.erosions.len(), 1);
    // the alignment runs top to bottom, so the top is the start cap
    assert_eq!(ing.erosions[0].end, CapEnd::Start);
}

/// Independent evaluation of one sample's term for a vertical skeleton
/// on x = 0, with `c_y` the row of the skeleton point the sample belongs to.
fn brute_d(edges: &EdgeMap, q: &Point2, c_y: f64, w: f64) -> f64 {
    let d = edges.points().iter().map(|e| (e - q).norm()).fold(f64::INFINITY, f64::min);
    d + w * (q - Point2::new(0.0, c_y)).norm()
}

#[test]
fn offset_profile_snaps_onto_edge() {
    let half = 35.0;
    let rect = move |p: &Point2| p.x.abs() <= half && p.y.abs() <= 150.0;
    let axis = vertical_axis(140.0, -140.0, 3);
    let mut f = Fixture::new(512, 1.0, rect, rect, &axis, &axis);
    let e = Edges::extract(&f.front, &f.side, &PipelineConfig::default()).unwrap();
    // right silhouette edge pixels sit at x = 34.5 or 35.5
    let edge_x = e.front.nearest_edge(&Point2::new(36.0, 0.0)).unwrap().0.x;
    profile_stroke(&mut f.project, f.part, View::Front, edge_x + 1.0, &[-60.0, 0.0, 60.0]);
    let r = refine_part(part_of(&f), &e, &PipelineConfig::default()).unwrap();
    let before: Vec<Point3> = r.ingested.boundaries.constraints()[0].points.clone();
    let want: f64 = before.iter().map(|p| brute_d(&e.front, &Point2::new(p.x, p.y), p.y, 1.0)).sum();
    assert!((r.refinement.objective_before - want).abs() <= 1e-6 * want, "{} vs {want}", r.refinement.objective_before);
    let rc = &r.refinement.constraints[0];
    assert_eq!(rc.snapped, before.len());
    for p in &rc.constraint.points {
        let (_, d) = e.front.nearest(&Point2::new(p.x, p.y)).unwrap();
        assert!(d < 1e-9);
    }
    let after: f64 = rc.constraint.points.iter().zip(&before).map(|(p, b)| brute_d(&e.front, &Point2::new(p.x, p.y), b.y, 1.0)).sum();
    assert!((r.refinement.objective_after - after).abs() <= 1e-6 * want);
    assert!(r.refinement.objective_after < r.refinement.objective_before);
}

#[test]
fn annotation_away_from_edges_is_kept() {
    let (mut f, e) = taper();
    // 20 px outside the silhouette, beyond the 3 px snap radius
    profile_stroke(&mut f.project, f.part, View::Front, 80.0, &[-30.0, 0.0, 30.0]);
    let r = refine_part(part_of(&f), &e, &PipelineConfig::default()).unwrap();
    let rc = &r.refinement.constraints[0];
    assert_eq!(rc.snapped, 0);
    assert_eq!(rc.constraint.points, r.ingested.boundaries.constraints()[0].points);
    assert_eq!(r.refinement.objective_after, r.refinement.objective_before);
}

#[test]
fn empty_boundary_set_keeps_base() {
    let (f, e) = taper();
    let r = refine_part(part_of(&f), &e, &PipelineConfig::default()).unwrap();
    assert!(r.refinement.constraints.is_empty());
    assert_eq!(r.refinement.objective_before, 0.0);
    assert_eq!(r.refined.sections, r.base.sections);
}

#[test]
fn objective_never_increases() {
    let (f, e) = taper();
    let mut rng = seeded(5);
    for run in 0..50 {
        let mut project = f.project.clone();
        random_annotations(&mut rng, &mut project, f.part, (-130.0, 130.0), taper_radius);
        let config = PipelineConfig { regularizer: rng.random_range(0.0..2.0), ..Default::default() };
        let r = refine_part(project.part(f.part).unwrap(), &e, &config).unwrap();
        let (b, a) = (r.refinement.objective_before, r.refinement.objective_after);
        assert!(a <= b, "run {run}: {a} > {b}");
    }
}

/// Implicit ellipse equation written out from the fitted parameters.
fn implicit_residual(e: &Ellipse, x: f64, y: f64) -> f64 {
    let (u, v) = (x - e.center[0], y - e.center[1]);
    ((u / e.semi_normal).powi(2) + (v / e.semi_binormal).powi(2) - 1.0).abs()
}

#[test]
fn ellipse_rule_passes_through_poles() {
    let e = fit_cross_section(&SectionPoles::from_points(&[Point2::new(2.0, 0.0), Point2::new(-2.0, 0.0), Point2::new(0.0, 4.0)]).unwrap()).unwrap();
    assert!((e.semi_normal - 2.0).abs() < 1e-12 && (e.semi_binormal - 4.0).abs() < 1e-12);
    let one = fit_cross_section(&SectionPoles::from_points(&[Point2::new(0.0, -3.0)]).unwrap()).unwrap();
    assert_eq!(one, Ellipse::circle(3.0));

    let mut rng = seeded(8);
    for _ in 0..1000 {
        let mut slots = [None; 4];
        while slots.iter().all(Option::is_none) || slots.iter().flatten().count() < 2 {
            slots = std::array::from_fn(|_| rng.random_bool(0.6).then(|| rng.random_range(0.1..50.0)));
        }
        let poles = SectionPoles::from_slots(slots);
        let e = fit_cross_section(&poles).unwrap();
        let pts = [(slots[0], 1.0, 0.0), (slots[1], -1.0, 0.0), (slots[2], 0.0, 1.0), (slots[3], 0.0, -1.0)];
        for (r, dx, dy) in pts {
            if let Some(r) = r {
                let res = implicit_residual(&e, r * dx, r * dy);
                assert!(res <= 1e-6, "{slots:?} residual {res}");
            }
        }
    }
}

#[test]
fn identity_constraint_leaves_base_unchanged() {
    let (f, e) = taper();
    let gc = refine_part(part_of(&f), &e, &PipelineConfig::default()).unwrap().base;
    let k0 = vec![gc.sections[gc.sections.len() / 2].clone()];
    let out = interpolate_sections(&k0, &gc).unwrap();
    assert_eq!(out.sections.len(), gc.sections.len());
    for (a, b) in out.sections.iter().zip(&gc.sections) {
        for (x, y) in a.radii.iter().zip(&b.radii) {
            assert!((x - y).abs() <= 1e-9);
        }
    }
}

#[test]
fn two_circles_blend_monotonically() {
    let gc = insert_sections(&circle_cylinder(2.0, 9, 16), &(0..=200).map(|i| i as f64 / 200.0).collect::<Vec<_>>()).unwrap();
    let k0 = [circle_at(&gc, 0.25, 1.0), circle_at(&gc, 0.75, 3.0)];
    let out = interpolate_sections(&k0, &gc).unwrap();
    let (xs, ys) = ([0.0, 0.25, 0.75, 1.0], [0.0, -1.0, 1.0, 0.0]);
    let mut prev = f64::NEG_INFINITY;
    for s in &out.sections {
        for &r in &s.radii {
            let want = 2.0 + natural_spline(&xs, &ys, s.t);
            assert!((r - want).abs() <= 1e-9, "t {} r {r} want {want}", s.t);
        }
        if (0.25..=0.75).contains(&s.t) {
            assert!(s.radii[0] >= prev - 1e-12);
            prev = s.radii[0];
        }
        if (s.t - 0.25).abs() < 1e-12 {
            assert!(s.radii.iter().all(|r| (r - 1.0).abs() <= 1e-9));
        }
        if (s.t - 0.75).abs() < 1e-12 {
            assert!(s.radii.iter().all(|r| (r - 3.0).abs() <= 1e-9));
        }
    }
}

#[test]
fn star_section_blends_with_c2_continuity() {
    let n = 400;
    let gc = insert_sections(&circle_cylinder(2.0, 5, 16), &(0..=n).map(|i| i as f64 / n as f64).collect::<Vec<_>>()).unwrap();
    let t = 0.4;
    let s = gc.skeleton.sample(t);
    let star: Vec<Point3> = (0..10)
        .map(|i| {
            let a = TAU * i as f64 / 10.0;
            let r = if i % 2 == 0 { 3.0 } else { 1.5 };
            s.point + s.frame.radial(a) * r
        })
        .collect();
    let c = BoundaryConstraint { kind: BoundaryKind::Contour, t, points: star, view: View::Front, source: orthomodel_core::annotations::StrokeId(9) };
    let k0 = contour_section(&gc, &c).unwrap();
    let out = interpolate_sections(std::slice::from_ref(&k0), &gc).unwrap();
    let at = out.sections.iter().find(|x| (x.t - t).abs() < 1e-12).unwrap();
    assert_eq!(at.radii, k0.radii);
    let h = 1.0 / n as f64;
    for k in 0..16 {
        let r: Vec<f64> = out.sections.iter().map(|x| x.radii[k]).collect();
        let d2: Vec<f64> = r.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]) / (h * h)).collect();
        let jump = d2.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        let scale = d2.iter().map(|d| d.abs()).fold(1.0, f64::max);
        // a kink in the second derivative would show up as a jump of order
        // `scale`; a C² blend changes by O(h) per step
        assert!(jump <= 20.0 * h * scale, "angle {k}: jump {jump} scale {scale}");
    }
}

#[test]
fn contour_reproduced_in_final_mesh() {
    let (mut f, e) = taper();
    ring_stroke(&mut f.project, f.part, 20.0, 64.0, 8);
    let config = PipelineConfig::default();
    let r = refine_part(part_of(&f), &e, &config).unwrap();
    let c = &r.refinement.constraints[0].constraint;
    let j = r.refined.sections.iter().position(|s| (s.t - c.t).abs() < 1e-12).unwrap();
    let k0 = contour_section(&r.refined, c).unwrap();
    let (mesh, _) = build_part(part_of(&f), &e, &config).unwrap();
    let a = r.refined.angular_samples();
    for k in 0..a {
        let v = mesh.vertices[j * a + k];
        assert!((v - k0.boundary_point(k)).norm() <= 1e-6);
    }
}

#[test]
fn refined_profile_reprojects_within_one_pixel() {
    let (mut f, e) = taper();
    // trace the right front silhouette 2 px outside it
    let ys: Vec<f64> = (0..7).map(|i| -60.0 + 20.0 * i as f64).collect();
    let pts: Vec<Point2> = ys.iter().map(|&y| Point2::new(taper_radius(y) + 2.0, y)).collect();
    f.project.add_stroke(View::Front, &pts, AnnotationLabel::Addition, f.part, None).unwrap();
    let r = refine_part(part_of(&f), &e, &PipelineConfig::default()).unwrap();
    let mut checked = 0;
    for s in &r.refined.sections {
        if !(-60.0..=60.0).contains(&s.center.y) {
            continue;
        }
        let pole = s.center + s.frame.normal * s.poles.normal_pos.unwrap();
        let x = if s.frame.normal.x > 0.0 { pole.x } else { (s.center - s.frame.normal * s.poles.normal_neg.unwrap()).x };
        let edge = e.front.nearest_edge(&Point2::new(x, s.center.y)).unwrap().1;
        assert!(edge <= 1.0, "t {} off by {edge}", s.t);
        checked += 1;
    }
    assert!(checked >= 7);
}

fn capped_taper_mesh() -> PartMesh {
    let (f, e) = taper();
    let gc = refine_part(part_of(&f), &e, &PipelineConfig::default()).unwrap().base;
    tessellate_with(&gc, 4).unwrap()
}

#[test]
fn pulled_vertex_matches_dense_solve() {
    let mesh = capped_taper_mesh();
    for end in 0..2 {
        let cap = &mesh.caps.as_ref().unwrap()[end];
        let v = cap.interior[cap.interior.len() / 3];
        let target = mesh.vertices[v as usize] - cap.axis * 5.0;
        let res = deform_cap(&mesh, end, &[(v, target)]).unwrap();
        assert!((res.mesh.vertices[v as usize] - target).norm() <= 1e-8);
        for &rv in &cap.rim {
            assert_eq!(res.mesh.vertices[rv as usize], mesh.vertices[rv as usize]);
        }
        let (ids, edges) = cap_graph(&mesh, cap);
        let positions: Vec<Point3> = ids.iter().map(|&i| mesh.vertices[i as usize]).collect();
        let mut fixed: Vec<(usize, Point3)> = (0..cap.rim.len()).map(|i| (i, positions[i])).collect();
        fixed.push((ids.iter().position(|&x| x == v).unwrap(), target));
        let want = dense_cap_solve(&positions, &edges, &fixed);
        for (i, &id) in ids.iter().enumerate() {
            let d = (res.mesh.vertices[id as usize] - want[i]).norm();
            assert!(d <= 1e-8, "vertex {id} off by {d}");
        }
        assert!(res.residual <= 1e-8 && res.constraint_residual <= 1e-8);
        assert!(validate(&res.mesh).passed);
    }
}

#[test]
fn laplacian_residual_checked_directly() {
    let mesh = capped_taper_mesh();
    let cap = &mesh.caps.as_ref().unwrap()[1];
    let targets: Vec<(u32, Point3)> = cap.interior.iter().step_by(7).map(|&v| (v, mesh.vertices[v as usize] - cap.axis * 3.0)).collect();
    let res = deform_cap(&mesh, 1, &targets).unwrap();
    let fixed: Vec<u32> = cap.rim.iter().copied().chain(targets.iter().map(|(v, _)| *v)).collect();
    let worst = cap_system_residual(&mesh, &res.mesh, cap, &fixed);
    assert!(worst <= 1e-8, "‖Ax − b‖∞ = {worst}");
    for (v, p) in &targets {
        assert!((res.mesh.vertices[*v as usize] - p).norm() <= 1e-8);
    }
}

#[test]
fn zero_edit_is_identity() {
    let mesh = capped_taper_mesh();
    let cap = &mesh.caps.as_ref().unwrap()[0];
    let targets: Vec<(u32, Point3)> = cap.interior.iter().step_by(3).map(|&v| (v, mesh.vertices[v as usize])).collect();
    let res = deform_cap(&mesh, 0, &targets).unwrap();
    for (a, b) in res.mesh.vertices.iter().zip(&mesh.vertices) {
        assert!((a - b).norm() <= 1e-10);
    }
}

fn cap_flatness(mesh: &PartMesh, end: usize) -> f64 {
    let cap = &mesh.caps.as_ref().unwrap()[end];
    cap.rim.iter().chain(&cap.interior).map(|&v| (mesh.vertices[v as usize] - cap.center).dot(&cap.axis).abs()).fold(0.0, f64::max)
}

#[test]
fn caps_stay_planar_without_erosion() {
    let (f, e) = taper();
    let (mesh, diag) = build_part(part_of(&f), &e, &PipelineConfig::default()).unwrap();
    assert!(diag.laplacian_residual.is_none());
    for end in 0..2 {
        assert!(cap_flatness(&mesh, end) <= 1e-9);
    }
}

#[test]
fn erosion_deforms_end_cap() {
    let (mut f, e) = taper();
    // dip into the top cap, drawn in the front view
    let top = [Point2::new(-60.0, 140.0), Point2::new(0.0, 120.0), Point2::new(60.0, 140.0)];
    f.project.add_stroke(View::Front, &top, AnnotationLabel::Erosion, f.part, None).unwrap();
    let (mesh, diag) = build_part(part_of(&f), &e, &PipelineConfig::default()).unwrap();
    assert!(diag.laplacian_residual.unwrap() <= 1e-8);
    assert!(diag.validation.unwrap().passed);
    assert!(cap_flatness(&mesh, 0) > 5.0);
    assert!(cap_flatness(&mesh, 1) <= 1e-9);
}
