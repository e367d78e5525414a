//! Implicit obstacle functions.
//!
//! Every primitive is encoded by a quadratic-in-position function `beta`
//! that is positive in free space, zero on the obstacle surface and negative
//! inside. The workspace boundary uses the opposite orientation
//! (`r0^2 - |x|^2`) so that its interior is the free side.

use crate::error::GeometryError;
use crate::math::{Mat3, Vec3};

/// Endpoint separation below which a capped cylinder is rejected.
pub const MIN_CYLINDER_LENGTH: f64 = 1e-9;
/// Tolerance on the norm of a supplied axis direction.
pub const AXIS_UNIT_TOL: f64 = 1e-12;

/// Value, gradient and Hessian of an implicit function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vec3,
    pub hessian: Mat3,
}

/// Anything with an implicit-surface encoding.
pub trait Implicit {
    fn value(&self, x: Vec3) -> f64;
    fn gradient(&self, x: Vec3) -> Vec3;
    fn hessian(&self, x: Vec3) -> Mat3;

    /// Value and gradient together; implementors override when sharing work
    /// is cheaper.
    fn value_gradient(&self, x: Vec3) -> (f64, Vec3) {
        (self.value(x), self.gradient(x))
    }

    fn jet(&self, x: Vec3) -> Jet {
        let (value, gradient) = self.value_gradient(x);
        Jet {
            value,
            gradient,
            hessian: self.hessian(x),
        }
    }
}

fn check_radius(r: f64) -> Result<f64, GeometryError> {
    if r.is_finite() && r > 0.0 {
        Ok(r)
    } else {
        Err(GeometryError::BadRadius(r))
    }
}

fn check_point(p: Vec3) -> Result<Vec3, GeometryError> {
    if p.is_finite() {
        Ok(p)
    } else {
        Err(GeometryError::NonFinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    center: Vec3,
    radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Result<Self, GeometryError> {
        Ok(Self {
            center: check_point(center)?,
            radius: check_radius(radius)?,
        })
    }
    pub fn center(&self) -> Vec3 {
        self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Infinite cylinder through `point` along the unit direction `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullCylinder {
    point: Vec3,
    axis: Vec3,
    radius: f64,
}

impl FullCylinder {
    /// `axis` must already be a unit vector.
    pub fn new(point: Vec3, axis: Vec3, radius: f64) -> Result<Self, GeometryError> {
        check_point(axis)?;
        let n = axis.norm();
        if (n - 1.0).abs() > AXIS_UNIT_TOL {
            return Err(GeometryError::AxisNotUnit(n));
        }
        Ok(Self {
            point: check_point(point)?,
            axis,
            radius: check_radius(radius)?,
        })
    }

    /// Normalizes `axis` first; the flag reports whether it was off-unit.
    pub fn with_normalized_axis(
        point: Vec3,
        axis: Vec3,
        radius: f64,
    ) -> Result<(Self, bool), GeometryError> {
        check_point(axis)?;
        let n = axis.norm();
        let unit = axis.normalized().ok_or(GeometryError::AxisNotUnit(n))?;
        let changed = (n - 1.0).abs() > AXIS_UNIT_TOL;
        Ok((Self::new(point, unit, radius)?, changed))
    }

    pub fn point(&self) -> Vec3 {
        self.point
    }
    pub fn axis(&self) -> Vec3 {
        self.axis
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Segment `[p1, p2]` swept by a ball of `radius`: a finite cylinder closed by
/// hemispherical caps. Half- and finite cylinders differ only in where the
/// caps sit relative to the workspace wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CappedCylinder {
    p1: Vec3,
    p2: Vec3,
    axis: Vec3,
    length: f64,
    radius: f64,
}

/// Which piece of the capped-cylinder encoding applies at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapsuleRegion {
    /// Behind `p1` (`v.(x - p1) <= 0`).
    Cap1,
    /// Strictly between the two end planes.
    Tube,
    /// Beyond `p2` (`v.(x - p2) >= 0`).
    Cap2,
}

impl CappedCylinder {
    pub fn new(p1: Vec3, p2: Vec3, radius: f64) -> Result<Self, GeometryError> {
        let p1 = check_point(p1)?;
        let p2 = check_point(p2)?;
        let d = p2 - p1;
        let length = d.norm();
        if length < MIN_CYLINDER_LENGTH {
            return Err(GeometryError::DegenerateCylinder(length));
        }
        Ok(Self {
            p1,
            p2,
            axis: d / length,
            length,
            radius: check_radius(radius)?,
        })
    }

    pub fn p1(&self) -> Vec3 {
        self.p1
    }
    pub fn p2(&self) -> Vec3 {
        self.p2
    }
    pub fn axis(&self) -> Vec3 {
        self.axis
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn midpoint(&self) -> Vec3 {
        (self.p1 + self.p2) * 0.5
    }

    /// Cap branches own the end planes, so ties resolve deterministically.
    pub fn region(&self, x: Vec3) -> CapsuleRegion {
        let s1 = self.axis.dot(x - self.p1);
        let s2 = self.axis.dot(x - self.p2);
        if s1 <= 0.0 && s2 <= 0.0 {
            CapsuleRegion::Cap1
        } else if s1 >= 0.0 && s2 >= 0.0 {
            CapsuleRegion::Cap2
        } else {
            CapsuleRegion::Tube
        }
    }

    /// Closest point on the axis segment.
    pub fn closest_axis_point(&self, x: Vec3) -> Vec3 {
        let t = self.axis.dot(x - self.p1).clamp(0.0, self.length);
        self.p1 + self.axis * t
    }

    fn branch_value_gradient(&self, region: CapsuleRegion, x: Vec3) -> (f64, Vec3) {
        let r2 = self.radius * self.radius;
        match region {
            CapsuleRegion::Cap1 => {
                let w = x - self.p1;
                (w.norm_squared() - r2, w * 2.0)
            }
            CapsuleRegion::Cap2 => {
                let w = x - self.p2;
                (w.norm_squared() - r2, w * 2.0)
            }
            CapsuleRegion::Tube => tube_value_gradient(self.p1, self.axis, self.radius, x),
        }
    }

    /// Evaluates one named branch regardless of where `x` lies.
    pub fn branch_gradient(&self, region: CapsuleRegion, x: Vec3) -> Vec3 {
        self.branch_value_gradient(region, x).1
    }
}

fn tube_value_gradient(p: Vec3, axis: Vec3, radius: f64, x: Vec3) -> (f64, Vec3) {
    let w = x - p;
    let along = axis.dot(w);
    let radial = w - axis * along;
    (radial.norm_squared() - radius * radius, radial * 2.0)
}

fn tube_hessian(axis: Vec3) -> Mat3 {
    (Mat3::IDENTITY - axis.outer(axis)) * 2.0
}

/// A primitive of the obstacle catalog, or the spherical workspace wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    /// Wall of the workspace ball of the given radius, centered at the origin.
    WorkspaceBoundary { radius: f64 },
    Sphere(Sphere),
    FullCylinder(FullCylinder),
    CappedCylinder(CappedCylinder),
}

impl Obstacle {
    pub fn boundary(radius: f64) -> Result<Self, GeometryError> {
        Ok(Obstacle::WorkspaceBoundary {
            radius: check_radius(radius)?,
        })
    }

    pub fn sphere(center: Vec3, radius: f64) -> Result<Self, GeometryError> {
        Sphere::new(center, radius).map(Obstacle::Sphere)
    }

    pub fn full_cylinder(point: Vec3, axis: Vec3, radius: f64) -> Result<Self, GeometryError> {
        FullCylinder::new(point, axis, radius).map(Obstacle::FullCylinder)
    }

    pub fn capped_cylinder(p1: Vec3, p2: Vec3, radius: f64) -> Result<Self, GeometryError> {
        CappedCylinder::new(p1, p2, radius).map(Obstacle::CappedCylinder)
    }

    pub fn radius(&self) -> f64 {
        match self {
            Obstacle::WorkspaceBoundary { radius } => *radius,
            Obstacle::Sphere(s) => s.radius,
            Obstacle::FullCylinder(c) => c.radius,
            Obstacle::CappedCylinder(c) => c.radius,
        }
    }

    pub fn is_cylinder(&self) -> bool {
        matches!(self, Obstacle::FullCylinder(_) | Obstacle::CappedCylinder(_))
    }

    /// Cylinder axis direction, if any.
    pub fn axis(&self) -> Option<Vec3> {
        match self {
            Obstacle::FullCylinder(c) => Some(c.axis),
            Obstacle::CappedCylinder(c) => Some(c.axis),
            _ => None,
        }
    }

    /// A point strictly inside the obstacle: sphere center, axis point, or
    /// axis midpoint. The workspace boundary reports the origin.
    pub fn interior_witness(&self) -> Vec3 {
        match self {
            Obstacle::WorkspaceBoundary { .. } => Vec3::ZERO,
            Obstacle::Sphere(s) => s.center,
            Obstacle::FullCylinder(c) => c.point,
            Obstacle::CappedCylinder(c) => c.midpoint(),
        }
    }

    /// Same obstacle with a different radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self, GeometryError> {
        match self {
            Obstacle::WorkspaceBoundary { .. } => Obstacle::boundary(radius),
            Obstacle::Sphere(s) => Obstacle::sphere(s.center, radius),
            Obstacle::FullCylinder(c) => Obstacle::full_cylinder(c.point, c.axis, radius),
            Obstacle::CappedCylinder(c) => Obstacle::capped_cylinder(c.p1, c.p2, radius),
        }
    }

    /// Euclidean distance from `x` to the obstacle's core (center, axis line
    /// or axis segment). `beta = dist^2 - r^2` for every non-boundary kind.
    pub fn core_distance(&self, x: Vec3) -> f64 {
        match self {
            Obstacle::WorkspaceBoundary { .. } => x.norm(),
            Obstacle::Sphere(s) => (x - s.center).norm(),
            Obstacle::FullCylinder(c) => {
                let w = x - c.point;
                (w - c.axis * c.axis.dot(w)).norm()
            }
            Obstacle::CappedCylinder(c) => (x - c.closest_axis_point(x)).norm(),
        }
    }
}

impl Implicit for Obstacle {
    fn value(&self, x: Vec3) -> f64 {
        self.value_gradient(x).0
    }

    fn gradient(&self, x: Vec3) -> Vec3 {
        self.value_gradient(x).1
    }

    fn value_gradient(&self, x: Vec3) -> (f64, Vec3) {
        match self {
            Obstacle::WorkspaceBoundary { radius } => (radius * radius - x.norm_squared(), x * -2.0),
            Obstacle::Sphere(s) => {
                let w = x - s.center;
                (w.norm_squared() - s.radius * s.radius, w * 2.0)
            }
            Obstacle::FullCylinder(c) => tube_value_gradient(c.point, c.axis, c.radius, x),
            Obstacle::CappedCylinder(c) => c.branch_value_gradient(c.region(x), x),
        }
    }

    fn hessian(&self, x: Vec3) -> Mat3 {
        match self {
            Obstacle::WorkspaceBoundary { .. } => Mat3::scaled_identity(-2.0),
            Obstacle::Sphere(_) => Mat3::scaled_identity(2.0),
            Obstacle::FullCylinder(c) => tube_hessian(c.axis),
            Obstacle::CappedCylinder(c) => match c.region(x) {
                CapsuleRegion::Tube => tube_hessian(c.axis),
                _ => Mat3::scaled_identity(2.0),
            },
        }
    }
}
