//! Admissibility checks for a workspace: pairwise obstacle relations,
//! surfaces meeting three at a time, and placement of the target.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::{Implicit, Obstacle};
use crate::math::{cos, line_line_distance, segment_segment_distance, sin, sqrt, Vec3};
use crate::scene::{Body, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairClass {
    Disjoint,
    AllowedIntersecting,
    Tangent,
    Forbidden,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairClassification {
    pub i: usize,
    pub j: usize,
    pub class: PairClass,
    /// Signed clearance between the two surfaces along their cores; negative
    /// when they overlap. For merged bodies, the smallest over member pairs.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    /// Pairs with `|gap|` below this times the workspace radius are tangent.
    pub tangent_tol: f64,
    /// Pairs with `|gap|` below this times the workspace radius get a warning.
    pub near_tangent_warn: f64,
    /// Tolerance, relative to the workspace radius, for the axis tests on
    /// intersecting cylinders (equal radii, meeting axes) and for
    /// perpendicularity (absolute, on the cosine).
    pub axis_tol: f64,
    /// Grid points around each surface for the three-surface search.
    pub curve_samples: usize,
    /// Subdivision of a grid cell that straddles two other surfaces.
    pub refine: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            tangent_tol: 1e-9,
            near_tangent_warn: 1e-6,
            axis_tol: 1e-6,
            curve_samples: 720,
            refine: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub pairs: Vec<PairClassification>,
    pub triple_intersection_found: bool,
    /// Body triples whose three surfaces meet.
    pub triples: Vec<(usize, usize, usize)>,
    pub target_free: bool,
    /// Reasons the workspace is rejected.
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn class_of(&self, i: usize, j: usize) -> Option<PairClass> {
        let (i, j) = (i.min(j), i.max(j));
        self.pairs.iter().find(|p| p.i == i && p.j == j).map(|p| p.class)
    }

    /// Body pairs whose interiors overlap.
    pub fn overlapping_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs
            .iter()
            .filter(|p| p.gap < 0.0 && p.class != PairClass::Tangent)
            .map(|p| (p.i, p.j))
            .collect()
    }
}

/// A primitive seen as a swept ball: the segment `a + t w`, `t in [0, len]`,
/// thickened by `radius`, with or without rounded ends.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Swept {
    a: Vec3,
    w: Vec3,
    len: f64,
    radius: f64,
    caps: bool,
}

impl Swept {
    /// Full cylinders are clipped to the chord of the ball of radius
    /// `r0 + r`, outside of which they cannot touch the workspace.
    pub(crate) fn of(o: &Obstacle, r0: f64) -> Option<Swept> {
        match o {
            Obstacle::WorkspaceBoundary { .. } => None,
            Obstacle::Sphere(s) => Some(Swept {
                a: s.center(),
                w: Vec3::Z,
                len: 0.0,
                radius: s.radius(),
                caps: true,
            }),
            Obstacle::CappedCylinder(c) => Some(Swept {
                a: c.p1(),
                w: c.axis(),
                len: c.length(),
                radius: c.radius(),
                caps: true,
            }),
            Obstacle::FullCylinder(c) => {
                let reach = r0 + c.radius();
                let foot = c.point() - c.axis() * c.axis().dot(c.point());
                let half = sqrt((reach * reach - foot.norm_squared()).max(0.0));
                Some(Swept {
                    a: foot - c.axis() * half,
                    w: c.axis(),
                    len: 2.0 * half,
                    radius: c.radius(),
                    caps: false,
                })
            }
        }
    }

    fn b(&self) -> Vec3 {
        self.a + self.w * self.len
    }

    /// The same core swept by a ball of another radius.
    pub(crate) fn with_radius(self, radius: f64) -> Swept {
        Swept { radius, ..self }
    }

    /// Two unit vectors completing the core direction to a right-handed frame.
    pub(crate) fn frame(&self) -> (Vec3, Vec3) {
        let e1 = self.w.any_orthogonal();
        (e1, self.w.cross(e1))
    }

    /// Meridian length of the surface, caps included.
    fn meridian(&self) -> f64 {
        let caps = if self.caps {
            core::f64::consts::PI * self.radius
        } else {
            0.0
        };
        self.len + caps
    }

    /// Surface point at angle fraction `u` and meridian fraction `v`.
    pub(crate) fn surface_point(&self, e1: Vec3, e2: Vec3, u: f64, v: f64) -> Vec3 {
        let angle = 2.0 * core::f64::consts::PI * u;
        let radial = e1 * cos(angle) + e2 * sin(angle);
        let r = self.radius;
        let quarter = if self.caps {
            core::f64::consts::FRAC_PI_2 * r
        } else {
            0.0
        };
        let s = v * self.meridian();
        if s < quarter {
            let alpha = s / r; // 0 at the pole behind `a`
            self.a + self.w * (-r * cos(alpha)) + radial * (r * sin(alpha))
        } else if s <= quarter + self.len {
            self.a + self.w * (s - quarter) + radial * r
        } else {
            let alpha = (s - quarter - self.len) / r; // 0 at the rim
            self.b() + self.w * (r * sin(alpha)) + radial * (r * cos(alpha))
        }
    }
}

/// Signed surface clearance of two primitives; `None` for the wall.
pub fn surface_gap(p: &Obstacle, q: &Obstacle, r0: f64) -> Option<f64> {
    Some(primitive_gap(&Swept::of(p, r0)?, &Swept::of(q, r0)?))
}

/// Smallest signed clearance between any members of two bodies.
pub(crate) fn body_gap(a: &Body, b: &Body, r0: f64) -> f64 {
    let mut gap = f64::INFINITY;
    for p in a.primitives() {
        for q in b.primitives() {
            if let Some(g) = surface_gap(p, q, r0) {
                gap = gap.min(g);
            }
        }
    }
    gap
}

fn primitive_gap(a: &Swept, b: &Swept) -> f64 {
    let (d, _, _) = segment_segment_distance(a.a, a.b(), b.a, b.b());
    d - a.radius - b.radius
}

fn classify_primitives(
    p: &Obstacle,
    q: &Obstacle,
    r0: f64,
    cfg: &ValidationConfig,
) -> (PairClass, f64) {
    let (Some(sp), Some(sq)) = (Swept::of(p, r0), Swept::of(q, r0)) else {
        return (PairClass::Disjoint, f64::INFINITY);
    };
    let gap = primitive_gap(&sp, &sq);
    if gap.abs() <= cfg.tangent_tol * r0 {
        return (PairClass::Tangent, gap);
    }
    if gap > 0.0 {
        return (PairClass::Disjoint, gap);
    }
    let (Some(u), Some(v)) = (p.axis(), q.axis()) else {
        return (PairClass::AllowedIntersecting, gap);
    };
    let equal_radii = (p.radius() - q.radius()).abs() <= cfg.axis_tol * r0;
    let perpendicular = u.dot(v).abs() <= cfg.axis_tol;
    let meeting = line_line_distance(sp.a, u, sq.a, v) <= cfg.axis_tol * r0;
    if equal_radii && perpendicular && meeting {
        (PairClass::AllowedIntersecting, gap)
    } else {
        (PairClass::Forbidden, gap)
    }
}

fn classify_bodies(a: &Body, b: &Body, r0: f64, cfg: &ValidationConfig) -> (PairClass, f64) {
    let mut class = PairClass::Disjoint;
    let mut gap = f64::INFINITY;
    let rank = |c: PairClass| match c {
        PairClass::Disjoint => 0,
        PairClass::AllowedIntersecting => 1,
        PairClass::Tangent => 2,
        PairClass::Forbidden => 3,
    };
    for p in a.primitives() {
        for q in b.primitives() {
            let (c, g) = classify_primitives(p, q, r0, cfg);
            gap = gap.min(g);
            if rank(c) > rank(class) {
                class = c;
            }
        }
    }
    (class, gap)
}

fn describe(i: usize, b: &Body) -> String {
    let kind = match b {
        Body::Primitive(Obstacle::Sphere(_)) => "sphere",
        Body::Primitive(Obstacle::FullCylinder(_)) => "full cylinder",
        Body::Primitive(Obstacle::CappedCylinder(_)) => "capped cylinder",
        Body::Primitive(Obstacle::WorkspaceBoundary { .. }) => "boundary",
        Body::Merged(_) => "merged obstacle",
    };
    format!("obstacle {i} ({kind})")
}

/// A point where the surface of `base` meets the surfaces of `j` and `k`, if
/// the grid search finds one.
fn three_surface_point(
    base: &Obstacle,
    j: &Obstacle,
    k: &Obstacle,
    r0: f64,
    cfg: &ValidationConfig,
    buried: &dyn Fn(Vec3) -> bool,
) -> Option<Vec3> {
    let s = Swept::of(base, r0)?;
    let (e1, e2) = s.frame();
    let nu = cfg.curve_samples.max(8);
    let step = 2.0 * core::f64::consts::PI * s.radius / nu as f64;
    let nv = ((s.meridian() / step) as usize).clamp(nu / 4, 8 * nu);
    let at = |u: f64, v: f64| s.surface_point(e1, e2, u, v);
    let row = nv + 1;
    let mut vals = Vec::with_capacity((nu + 1) * row);
    for iu in 0..=nu {
        for iv in 0..=nv {
            let x = at(iu as f64 / nu as f64, iv as f64 / nv as f64);
            vals.push((j.value(x), k.value(x)));
        }
    }
    let straddles = |c: [(f64, f64); 4]| {
        let (mut lo_j, mut hi_j, mut lo_k, mut hi_k) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (bj, bk) in c {
            lo_j = lo_j.min(bj);
            hi_j = hi_j.max(bj);
            lo_k = lo_k.min(bk);
            hi_k = hi_k.max(bk);
        }
        lo_j <= 0.0 && hi_j >= 0.0 && lo_k <= 0.0 && hi_k >= 0.0
    };
    let m = cfg.refine.max(1);
    for iu in 0..nu {
        for iv in 0..nv {
            let corners = [
                vals[iu * row + iv],
                vals[iu * row + iv + 1],
                vals[(iu + 1) * row + iv],
                vals[(iu + 1) * row + iv + 1],
            ];
            if !straddles(corners) {
                continue;
            }
            // refine the cell; a triple point survives subdivision
            let (u0, v0) = (iu as f64 / nu as f64, iv as f64 / nv as f64);
            let (du, dv) = (1.0 / (nu * m) as f64, 1.0 / (nv * m) as f64);
            let pt = |a: usize, b: usize| {
                let x = at(u0 + a as f64 * du, v0 + b as f64 * dv);
                (j.value(x), k.value(x))
            };
            for a in 0..m {
                for b in 0..m {
                    let c = [pt(a, b), pt(a, b + 1), pt(a + 1, b), pt(a + 1, b + 1)];
                    if straddles(c) {
                        let x = at(u0 + (a as f64 + 0.5) * du, v0 + (b as f64 + 0.5) * dv);
                        if !buried(x) {
                            return Some(x);
                        }
                    }
                }
            }
        }
    }
    None
}

/// Checks a workspace and target against the admissibility rules:
///
/// * obstacles must reach into the workspace and must not swallow it;
/// * no two obstacles may be tangent;
/// * intersecting cylinders must have equal radii and perpendicular axes
///   that meet;
/// * no three obstacle surfaces may meet in a free point;
/// * the target must lie strictly in free space.
///
/// Members of a merged obstacle are not checked against each other.
pub fn validate(ws: &Workspace, target: Vec3) -> ValidationReport {
    validate_with(ws, target, &ValidationConfig::default())
}

pub fn validate_with(ws: &Workspace, target: Vec3, cfg: &ValidationConfig) -> ValidationReport {
    let r0 = ws.outer_radius();
    let bodies = ws.bodies();
    let mut report = ValidationReport::default();

    for (i, b) in bodies.iter().enumerate() {
        for p in b.primitives() {
            if p.core_distance(Vec3::ZERO) >= r0 {
                report
                    .errors
                    .push(format!("{} lies outside the workspace", describe(i, b)));
            }
            if p.core_distance(Vec3::ZERO) + r0 <= p.radius() {
                report
                    .errors
                    .push(format!("{} contains the whole workspace", describe(i, b)));
            }
        }
    }

    for i in 0..bodies.len() {
        for j in i + 1..bodies.len() {
            let (class, gap) = classify_bodies(&bodies[i], &bodies[j], r0, cfg);
            match class {
                PairClass::Tangent => report.errors.push(format!(
                    "{} and {} are tangent (gap {gap:e})",
                    describe(i, &bodies[i]),
                    describe(j, &bodies[j])
                )),
                PairClass::Forbidden => report.errors.push(format!(
                    "{} and {} intersect but are not equal-radius cylinders with perpendicular meeting axes",
                    describe(i, &bodies[i]),
                    describe(j, &bodies[j])
                )),
                _ => {
                    if gap.abs() <= cfg.near_tangent_warn * r0 {
                        report.warnings.push(format!(
                            "{} and {} are nearly tangent (gap {gap:e})",
                            describe(i, &bodies[i]),
                            describe(j, &bodies[j])
                        ));
                    }
                }
            }
            report.pairs.push(PairClassification { i, j, class, gap });
        }
    }

    let overlapping: Vec<(usize, usize)> = report.overlapping_pairs();
    let overlaps = |a: usize, b: usize| overlapping.contains(&(a.min(b), a.max(b)));
    for &(i, j) in &overlapping {
        for k in j + 1..bodies.len() {
            if !(overlaps(i, k) && overlaps(j, k)) {
                continue;
            }
            // meeting points hidden inside a fourth obstacle are harmless
            let buried = |x: Vec3| {
                bodies
                    .iter()
                    .enumerate()
                    .any(|(m, b)| m != i && m != j && m != k && b.value(x) < 0.0)
            };
            let found = bodies[i].primitives().iter().find_map(|base| {
                bodies[j].primitives().iter().find_map(|pj| {
                    bodies[k]
                        .primitives()
                        .iter()
                        .find_map(|pk| three_surface_point(base, pj, pk, r0, cfg, &buried))
                })
            });
            if let Some(x) = found {
                report.triple_intersection_found = true;
                report.triples.push((i, j, k));
                report.errors.push(format!(
                    "triple intersection: surfaces of obstacles {i}, {j} and {k} meet near ({:.6}, {:.6}, {:.6})",
                    x.x, x.y, x.z
                ));
            }
        }
    }

    report.target_free = true;
    for f in 0..ws.factor_count() {
        let b = ws.factor_value(f, target);
        if b <= 0.0 {
            report.target_free = false;
            if f == 0 {
                report.errors.push(String::from("target is not inside the workspace"));
            } else {
                report.errors.push(format!(
                    "target lies inside or on {}",
                    describe(f - 1, &bodies[f - 1])
                ));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn ws(bodies: Vec<Obstacle>) -> Workspace {
        Workspace::new(5.0, bodies.into_iter().map(Body::from).collect()).unwrap()
    }

    fn far_target() -> Vec3 {
        v(0.0, 0.0, 4.0)
    }

    #[test]
    fn sphere_pairs() {
        let w = ws(vec![
            Obstacle::sphere(v(-1.5, 0.0, 0.0), 1.0).unwrap(),
            Obstacle::sphere(v(1.5, 0.0, 0.0), 1.0).unwrap(),
        ]);
        let r = validate(&w, far_target());
        assert_eq!(r.class_of(0, 1), Some(PairClass::Disjoint));
        assert!(r.is_valid());

        let w = ws(vec![
            Obstacle::sphere(v(-1.0, 0.0, 0.0), 1.0).unwrap(),
            Obstacle::sphere(v(1.0, 0.0, 0.0), 1.0).unwrap(),
        ]);
        let r = validate(&w, far_target());
        assert_eq!(r.class_of(0, 1), Some(PairClass::Tangent));
        assert!(!r.is_valid());
        assert!(r.errors[0].contains("obstacle 0") && r.errors[0].contains("obstacle 1"));
    }

    #[test]
    fn cylinder_pairs() {
        let perpendicular = ws(vec![
            Obstacle::capped_cylinder(v(-2.0, 0.0, 0.0), v(2.0, 0.0, 0.0), 0.3).unwrap(),
            Obstacle::capped_cylinder(v(0.0, -2.0, 0.0), v(0.0, 2.0, 0.0), 0.3).unwrap(),
        ]);
        let r = validate(&perpendicular, far_target());
        assert_eq!(r.class_of(0, 1), Some(PairClass::AllowedIntersecting));
        assert!(r.is_valid(), "{:?}", r.errors);

        let unequal = ws(vec![
            Obstacle::capped_cylinder(v(-2.0, 0.0, 0.0), v(2.0, 0.0, 0.0), 0.3).unwrap(),
            Obstacle::capped_cylinder(v(0.0, -2.0, 0.0), v(0.0, 2.0, 0.0), 0.4).unwrap(),
        ]);
        assert_eq!(validate(&unequal, far_target()).class_of(0, 1), Some(PairClass::Forbidden));

        let oblique = ws(vec![
            Obstacle::capped_cylinder(v(-2.0, 0.0, 0.0), v(2.0, 0.0, 0.0), 0.3).unwrap(),
            Obstacle::capped_cylinder(v(-1.0, -2.0, 0.0), v(1.0, 2.0, 0.0), 0.3).unwrap(),
        ]);
        assert_eq!(validate(&oblique, far_target()).class_of(0, 1), Some(PairClass::Forbidden));

        let skew = ws(vec![
            Obstacle::capped_cylinder(v(-2.0, 0.0, 0.0), v(2.0, 0.0, 0.0), 0.3).unwrap(),
            Obstacle::capped_cylinder(v(0.0, -2.0, 0.2), v(0.0, 2.0, 0.2), 0.3).unwrap(),
        ]);
        assert_eq!(validate(&skew, far_target()).class_of(0, 1), Some(PairClass::Forbidden));

        let full = ws(vec![
            Obstacle::full_cylinder(Vec3::ZERO, Vec3::X, 0.5).unwrap(),
            Obstacle::full_cylinder(Vec3::ZERO, Vec3::Y, 0.5).unwrap(),
        ]);
        let r = validate(&full, far_target());
        assert_eq!(r.class_of(0, 1), Some(PairClass::AllowedIntersecting));
    }

    #[test]
    fn three_overlapping_spheres_are_flagged() {
        let h = 3f64.sqrt() / 2.0;
        let w = ws(vec![
            Obstacle::sphere(v(0.0, 0.0, 0.0), 1.0).unwrap(),
            Obstacle::sphere(v(1.0, 0.0, 0.0), 1.0).unwrap(),
            Obstacle::sphere(v(0.5, h, 0.0), 1.0).unwrap(),
        ]);
        // brute-force witness of a common interior point
        assert!(w.bodies().iter().all(|b| b.value(v(0.5, h / 3.0, 0.0)) < 0.0));
        let r = validate(&w, far_target());
        assert!(r.triple_intersection_found);
        assert_eq!(r.triples, vec![(0, 1, 2)]);
        assert!(!r.is_valid());
    }

    #[test]
    fn separated_pairwise_overlaps_are_not_flagged() {
        // a chain: 0 overlaps 1, 1 overlaps 2, 0 and 2 apart
        let w = ws(vec![
            Obstacle::sphere(v(-1.4, 0.0, 0.0), 0.8).unwrap(),
            Obstacle::sphere(v(0.0, 0.0, 0.0), 0.8).unwrap(),
            Obstacle::sphere(v(1.4, 0.0, 0.0), 0.8).unwrap(),
        ]);
        let r = validate(&w, far_target());
        assert!(!r.triple_intersection_found);
        assert!(r.is_valid(), "{:?}", r.errors);

        // all three pairs overlap, but the pairwise lenses stay apart
        let w = ws(vec![
            Obstacle::sphere(v(0.0, 0.0, 0.0), 1.0).unwrap(),
            Obstacle::sphere(v(1.8, 0.0, 0.0), 1.0).unwrap(),
            Obstacle::sphere(v(0.9, 1.8, 0.0), 1.2).unwrap(),
        ]);
        let r = validate(&w, far_target());
        assert_eq!(r.overlapping_pairs().len(), 3);
        assert!(!r.triple_intersection_found, "{:?}", r.errors);
    }

    #[test]
    fn triple_detection_on_cylinders_and_sphere() {
        // a sphere sitting on the crossing of two perpendicular cylinders
        let w = ws(vec![
            Obstacle::capped_cylinder(v(-2.0, 0.0, 0.0), v(2.0, 0.0, 0.0), 0.3).unwrap(),
            Obstacle::capped_cylinder(v(0.0, -2.0, 0.0), v(0.0, 2.0, 0.0), 0.3).unwrap(),
            Obstacle::sphere(v(0.3, 0.3, 0.3), 0.3).unwrap(),
        ]);
        assert!(validate(&w, far_target()).triple_intersection_found);
    }

    #[test]
    fn meeting_points_inside_a_joint_are_ignored() {
        let c = v(1.0, 1.0, 1.0);
        let w = ws(vec![
            Obstacle::sphere(c, 0.5).unwrap(),
            Obstacle::capped_cylinder(c - v(0.2, 0.0, 0.0), v(-1.0, 1.0, 1.0), 0.2).unwrap(),
            Obstacle::capped_cylinder(c - v(0.0, 0.2, 0.0), v(1.0, -1.0, 1.0), 0.2).unwrap(),
            Obstacle::capped_cylinder(c - v(0.0, 0.0, 0.2), v(1.0, 1.0, -1.0), 0.2).unwrap(),
        ]);
        let r = validate(&w, far_target());
        assert!(!r.triples.contains(&(1, 2, 3)), "{:?}", r.triples);
        let bare = ws(w.bodies()[1..].iter().map(|b| *b.as_primitive().unwrap()).collect());
        assert_eq!(validate(&bare, far_target()).triples, vec![(0, 1, 2)]);
    }

    #[test]
    fn target_and_containment_checks() {
        let w = ws(vec![Obstacle::sphere(v(0.0, 0.0, 4.0), 0.5).unwrap()]);
        let r = validate(&w, far_target());
        assert!(!r.target_free);
        assert!(!r.is_valid());

        let w = ws(vec![Obstacle::sphere(v(0.0, 0.0, 7.0), 0.5).unwrap()]);
        assert!(!validate(&w, Vec3::ZERO).is_valid());

        let w = ws(vec![Obstacle::sphere(v(0.0, 0.0, 0.5), 6.0).unwrap()]);
        let r = validate(&w, v(0.0, 0.0, 4.9));
        assert!(r.errors.iter().any(|e| e.contains("whole workspace")));
    }

    #[test]
    fn classification_is_invariant_under_rigid_motion() {
        let a = Obstacle::capped_cylinder(v(-2.0, 0.0, 0.0), v(2.0, 0.0, 0.0), 0.3).unwrap();
        let b = Obstacle::capped_cylinder(v(0.0, -2.0, 0.0), v(0.0, 2.0, 0.0), 0.3).unwrap();
        let c = Obstacle::sphere(v(0.0, 0.0, 1.5), 1.0).unwrap();
        let base = validate(&ws(vec![a, b, c]), v(0.0, 3.0, 3.0));
        // rotate 90 degrees about z, then shift
        let rot = |p: Vec3| v(-p.y, p.x, p.z) + v(0.2, -0.1, 0.3);
        let moved = ws(vec![
            Obstacle::capped_cylinder(rot(v(-2.0, 0.0, 0.0)), rot(v(2.0, 0.0, 0.0)), 0.3).unwrap(),
            Obstacle::capped_cylinder(rot(v(0.0, -2.0, 0.0)), rot(v(0.0, 2.0, 0.0)), 0.3).unwrap(),
            Obstacle::sphere(rot(v(0.0, 0.0, 1.5)), 1.0).unwrap(),
        ]);
        let r = validate(&moved, rot(v(0.0, 3.0, 3.0)));
        let classes = |r: &ValidationReport| r.pairs.iter().map(|p| p.class).collect::<Vec<_>>();
        assert_eq!(classes(&base), classes(&r));
        assert_eq!(base.triple_intersection_found, r.triple_intersection_found);
    }
}
