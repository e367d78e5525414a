//! Reduction of a spherical robot of radius `R` to a point robot by growing
//! every obstacle by `R` and shrinking the workspace, with the extra growth
//! ball joints need to keep covering the intersections of their members.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::TransformError;
use crate::geometry::{Implicit, Obstacle};
use crate::math::{asin, atan2, cos, sin, sqrt, Vec3};
use crate::merge::MergedObstacle;
use crate::sampling::{ball_point, unit_direction, Halton};
use crate::scene::{Body, JointDecl, Workspace};
use crate::validate::{body_gap, validate, ValidationReport};

const PI: f64 = core::f64::consts::PI;

/// How far a ball joint grows beyond its base radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpansionMode {
    /// The joint encloses the whole expanded intersection region.
    FullEnclosure,
    /// The joint covers the region up to where the evolute of the
    /// intersection ellipse meets the ellipse.
    MinimalEvolute,
}

impl ExpansionMode {
    pub fn name(self) -> &'static str {
        match self {
            ExpansionMode::FullEnclosure => "full",
            ExpansionMode::MinimalEvolute => "minimal",
        }
    }
}

/// A declared ball joint, resolved against its workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct BallJoint {
    /// Body index of the joint sphere.
    pub body: usize,
    pub center: Vec3,
    pub base_radius: f64,
    pub members: Vec<usize>,
    /// Smallest angle between member axes, each pointing away from the
    /// joint, in radians.
    pub theta: f64,
}

impl BallJoint {
    /// Checks a joint declaration: the body must be a sphere, and there must
    /// be at least two member cylinders of equal radius whose axes pass
    /// through the sphere center.
    pub fn resolve(ws: &Workspace, index: usize, decl: &JointDecl) -> Result<Self, TransformError> {
        let bad = |why| TransformError::BadJoint(index, why);
        let r0 = ws.outer_radius();
        let tol = 1e-6 * r0;
        let sphere = match ws.bodies().get(decl.body) {
            Some(Body::Primitive(Obstacle::Sphere(s))) => *s,
            Some(_) => return Err(bad("joint body is not a sphere")),
            None => return Err(bad("joint body index out of range")),
        };
        if decl.members.len() < 2 {
            return Err(bad("needs at least two members"));
        }
        let c = sphere.center();
        let mut dirs = Vec::with_capacity(decl.members.len());
        let mut radius = None;
        for &m in &decl.members {
            let o = match ws.bodies().get(m) {
                Some(Body::Primitive(o)) if o.is_cylinder() => o,
                Some(_) => return Err(bad("member is not a cylinder")),
                None => return Err(bad("member index out of range")),
            };
            let r = o.radius();
            if (*radius.get_or_insert(r) - r).abs() > tol {
                return Err(bad("member radii differ"));
            }
            let (dir, line_point) = match o {
                Obstacle::CappedCylinder(cc) => {
                    let far = if (cc.p1() - c).norm() >= (cc.p2() - c).norm() {
                        cc.p1()
                    } else {
                        cc.p2()
                    };
                    let a = if far == cc.p1() { cc.p2() } else { cc.p1() };
                    ((far - a) / cc.length(), a)
                }
                Obstacle::FullCylinder(fc) => (fc.axis(), fc.point()),
                _ => unreachable!(),
            };
            let off = (c - line_point) - dir * dir.dot(c - line_point);
            if off.norm() > tol {
                return Err(bad("member axis misses the joint center"));
            }
            dirs.push((dir, matches!(o, Obstacle::FullCylinder(_))));
        }
        let mut theta = PI;
        for (i, &(u, full_u)) in dirs.iter().enumerate() {
            for &(v, full_v) in &dirs[i + 1..] {
                let cross = u.cross(v).norm();
                let dot = u.dot(v);
                // an infinite axis has no outward sense; take the acute angle
                let dot = if full_u || full_v { dot.abs() } else { dot };
                theta = theta.min(atan2(cross, dot));
            }
        }
        if theta <= 0.0 {
            return Err(bad("member axes are parallel"));
        }
        Ok(Self {
            body: decl.body,
            center: c,
            base_radius: sphere.radius(),
            members: decl.members.clone(),
            theta,
        })
    }

    /// Whether body `i` is this joint's sphere or one of its members.
    fn group_contains(&self, i: usize) -> bool {
        i == self.body || self.members.contains(&i)
    }
}

fn check_angle(theta: f64) -> Result<f64, TransformError> {
    if theta.is_finite() && theta > 0.0 && theta <= PI {
        Ok(theta)
    } else {
        Err(TransformError::BadAngle(theta))
    }
}

/// Multiplier on `R` added to a joint's radius.
///
/// `FullEnclosure` gives `1/sin(theta/2)`; `MinimalEvolute` gives
/// `h' = sqrt((s^4 - s^2 + 1) / (s^2 (1 + s^2)))` with `s = sin(theta/2)`.
pub fn joint_expansion_factor(theta: f64, mode: ExpansionMode) -> Result<f64, TransformError> {
    let s = sin(check_angle(theta)? / 2.0);
    Ok(match mode {
        ExpansionMode::FullEnclosure => 1.0 / s,
        ExpansionMode::MinimalEvolute => {
            let s2 = s * s;
            sqrt((s2 * s2 - s2 + 1.0) / (s2 * (1.0 + s2)))
        }
    })
}

/// Root `x = sin^2(phi)` of the evolute cubic for the ellipse with aspect
/// ratio `h = 1/sin(theta/2)`. Values above one mean the evolute lies
/// inside the ellipse everywhere.
pub fn evolute_root(theta: f64) -> Result<f64, TransformError> {
    let s2 = {
        let s = sin(check_angle(theta)? / 2.0);
        s * s
    };
    if s2 >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(s2 * (2.0 - s2) / (1.0 - s2 * s2))
}

/// `(h^4 - 1) x^3 + 3 x^2 - 3 x + 1 - h^4 / (h^2 - 1)^2`.
pub fn evolute_cubic(h: f64, x: f64) -> f64 {
    let h2 = h * h;
    let h4 = h2 * h2;
    (h4 - 1.0) * x * x * x + 3.0 * x * x - 3.0 * x + 1.0 - h4 / ((h2 - 1.0) * (h2 - 1.0))
}

/// Ellipse parameter at which the evolute meets the ellipse.
///
/// Returns 0 for `theta = pi` (the ellipse is a circle and its evolute a
/// point) and `pi/2` once the evolute stays inside the ellipse, which
/// happens for `theta >= pi/2`.
pub fn evolute_containment_angle(theta: f64) -> Result<f64, TransformError> {
    let x = evolute_root(theta)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(asin(sqrt(x.min(1.0))))
}

/// Point of the ellipse `(a cos phi, b sin phi)`.
pub fn ellipse_point(a: f64, b: f64, phi: f64) -> (f64, f64) {
    (a * cos(phi), b * sin(phi))
}

/// Center of curvature of the ellipse at parameter `phi`.
pub fn curvature_center(a: f64, b: f64, phi: f64) -> (f64, f64) {
    let (c, s) = (cos(phi), sin(phi));
    ((a * a - b * b) * c * c * c / a, (b * b - a * a) * s * s * s / b)
}

/// Distance from the joint center to where the evolute of the intersection
/// ellipse meets it, for expanded member radius `b`.
pub fn evolute_meeting_radius(theta: f64, b: f64) -> Result<f64, TransformError> {
    let h = 1.0 / sin(check_angle(theta)? / 2.0);
    let (x, y) = ellipse_point(h * b, b, evolute_containment_angle(theta)?);
    Ok(sqrt(x * x + y * y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformConfig {
    /// Quasi-random samples for each of the area and volume estimates.
    pub samples: usize,
    pub seed: u64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransformResult {
    /// Workspace for the point robot.
    pub workspace: Workspace,
    /// Same, but with joint spheres grown by `R` only.
    pub standard_workspace: Workspace,
    pub mode: ExpansionMode,
    pub robot_radius: f64,
    pub joints: Vec<BallJoint>,
    /// Expanded joint radii, parallel to `joints`.
    pub joint_radii: Vec<f64>,
    pub validation: ValidationReport,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    pub p_fail_surface: f64,
    pub p_fail_volume: f64,
}

impl TransformResult {
    /// Starts that are free under plain expansion but fall inside the extra
    /// growth of a joint sphere, paired with that joint's index.
    pub fn joint_shell_starts(&self, starts: &[Vec3]) -> Vec<(usize, usize)> {
        let mut hits = Vec::new();
        for (s, &x) in starts.iter().enumerate() {
            if !self.standard_workspace.is_free(x) {
                continue;
            }
            if let Some(j) = self
                .joints
                .iter()
                .zip(&self.joint_radii)
                .position(|(j, &r)| (x - j.center).norm() <= r)
            {
                hits.push((s, j));
            }
        }
        hits
    }
}

fn grow(b: &Body, by: f64) -> Body {
    let g = |o: &Obstacle| o.with_radius(o.radius() + by).expect("growing keeps the radius valid");
    match b {
        Body::Primitive(o) => Body::Primitive(g(o)),
        Body::Merged(m) => Body::Merged(
            MergedObstacle::new(m.members().iter().map(g).collect(), m.exponent())
                .expect("growing keeps a merged body valid"),
        ),
    }
}

fn clearance_check(ws: &Workspace, joints: &[BallJoint], radius: f64) -> Result<(), TransformError> {
    let r0 = ws.outer_radius();
    let bodies = ws.bodies();
    let n = bodies.len();
    let limit = 2.0 * radius - 1e-9;
    let mut gap = alloc::vec![f64::INFINITY; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let g = body_gap(&bodies[i], &bodies[j], r0);
            gap[i * n + j] = g;
            gap[j * n + i] = g;
        }
    }
    let cylinder = |i: usize| bodies[i].as_primitive().is_some_and(Obstacle::is_cylinder);
    let joined = |set: &[usize]| joints.iter().any(|jt| set.iter().all(|&i| jt.group_contains(i)));
    for i in 0..n {
        for j in i + 1..n {
            let g = gap[i * n + j];
            if cylinder(i) && cylinder(j) && g >= 0.0 && g < limit && !joined(&[i, j]) {
                return Err(TransformError::CloseCylinders(i, j));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if gap[i * n + j] >= limit {
                continue;
            }
            for k in j + 1..n {
                if gap[i * n + k] < limit && gap[j * n + k] < limit && !joined(&[i, j, k]) {
                    return Err(TransformError::Cluster(i, j, k));
                }
            }
        }
    }
    Ok(())
}

/// Grows every obstacle by `radius`, shrinks the workspace by the same
/// amount and grows each declared ball joint by its expansion factor
/// times `radius`.
///
/// Fails when the radius is out of range, a joint declaration is
/// malformed, or the clearance rules are broken: two cylinders closer
/// than `2 radius` must share a joint, and no three obstacles may be
/// pairwise that close outside a single joint. The output workspace is
/// validated against `target` and its findings are reported as warnings.
pub fn transform(
    ws: &Workspace,
    target: Vec3,
    radius: f64,
    mode: ExpansionMode,
    cfg: &TransformConfig,
) -> Result<TransformResult, TransformError> {
    let r0 = ws.outer_radius();
    if !(radius.is_finite() && radius >= 0.0 && radius < r0) {
        return Err(TransformError::BadRadius { radius, outer: r0 });
    }
    let joints = ws
        .joints()
        .iter()
        .enumerate()
        .map(|(i, d)| BallJoint::resolve(ws, i, d))
        .collect::<Result<Vec<_>, _>>()?;
    if radius > 0.0 {
        clearance_check(ws, &joints, radius)?;
    }

    let mut notes = Vec::new();
    let mut joint_radii = Vec::with_capacity(joints.len());
    for (i, j) in joints.iter().enumerate() {
        let f = joint_expansion_factor(j.theta, mode)?;
        if f < 1.0 && radius > 0.0 {
            notes.push(format!(
                "ball joint {i} (obstacle {}) grows by {f:.4} R, less than its members; it is likely redundant",
                j.body
            ));
        }
        joint_radii.push(j.base_radius + f * radius);
    }

    let standard: Vec<Body> = ws.bodies().iter().map(|b| grow(b, radius)).collect();
    let mut expanded = standard.clone();
    for (j, &r) in joints.iter().zip(&joint_radii) {
        expanded[j.body] = Body::Primitive(
            Obstacle::sphere(j.center, r).expect("joint radius stays positive"),
        );
    }
    let shrink = |bodies| {
        Workspace::new(r0 - radius, bodies)
            .expect("radius checked above")
            .with_joints(ws.joints().to_vec())
    };
    let workspace = shrink(expanded);
    let standard_workspace = shrink(standard);

    let validation = validate(&workspace, target);
    let warnings = validation.errors.clone();
    let mut result = TransformResult {
        workspace,
        standard_workspace,
        mode,
        robot_radius: radius,
        joints,
        joint_radii,
        validation,
        warnings,
        notes,
        p_fail_surface: 0.0,
        p_fail_volume: 0.0,
    };
    let (ps, pv) = failure_probabilities(&result, cfg);
    result.p_fail_surface = ps;
    result.p_fail_volume = pv;
    Ok(result)
}

fn free_of_bodies(ws: &Workspace, x: Vec3) -> bool {
    ws.bodies().iter().all(|b| b.value(x) > 0.0)
}

/// Upper bounds on the chance that a start or a point of free space is lost
/// to joint growth.
///
/// The surface bound divides the total joint sphere area by the area `S` of
/// the shrunken workspace wall left uncovered by expanded obstacles. The
/// volume bound divides the extra joint volume beyond plain expansion by the
/// free volume `V` of the plainly expanded workspace. `S` and `V` are
/// estimated with shifted Halton points; both bounds are clamped to
/// `[0, 1]`.
pub fn failure_probabilities(result: &TransformResult, cfg: &TransformConfig) -> (f64, f64) {
    if result.joints.is_empty() || result.robot_radius == 0.0 {
        return (0.0, 0.0);
    }
    let n = cfg.samples.max(1);
    let r = result.workspace.outer_radius();

    let halton = Halton::new(cfg.seed);
    let on_wall = halton
        .clone()
        .take(n)
        .filter(|u| free_of_bodies(&result.workspace, unit_direction(u[0], u[1]) * r))
        .count();
    let area = 4.0 * PI * r * r * on_wall as f64 / n as f64;
    let joint_area: f64 = result.joint_radii.iter().map(|&rj| 4.0 * PI * rj * rj).sum();

    let inside = halton
        .take(n)
        .filter(|&u| result.standard_workspace.is_free(ball_point(u, Vec3::ZERO, r)))
        .count();
    let volume = 4.0 / 3.0 * PI * r * r * r * inside as f64 / n as f64;
    let extra: f64 = result
        .joints
        .iter()
        .zip(&result.joint_radii)
        .map(|(j, &rj)| {
            let plain = j.base_radius + result.robot_radius;
            4.0 / 3.0 * PI * (rj * rj * rj - plain * plain * plain)
        })
        .sum();

    let bound = |num: f64, den: f64| {
        if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            1.0
        }
    };
    (bound(joint_area, area), bound(extra, volume))
}
