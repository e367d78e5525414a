//! Workspace model: the outer ball, its obstacles and declared ball joints.

use alloc::vec::Vec;

use crate::error::GeometryError;
use crate::geometry::{Implicit, Jet, Obstacle};
use crate::math::{Mat3, Vec3};
use crate::merge::MergedObstacle;

/// One obstacle of a workspace: a catalog primitive or a smooth union.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Primitive(Obstacle),
    Merged(MergedObstacle),
}

impl Body {
    /// Upper bound of `|grad beta|` over free points of the workspace ball of
    /// radius `r0`.
    ///
    /// For a merged body this is the sum of its members' bounds: where every
    /// member is non-negative the Rvachev weights lie in `[0, 1]`, so each
    /// fold step adds at most the new member's gradient norm.
    pub fn gradient_bound(&self, r0: f64) -> f64 {
        match self {
            Body::Primitive(o) => primitive_gradient_bound(o, r0),
            Body::Merged(m) => m.members().iter().map(|o| primitive_gradient_bound(o, r0)).sum(),
        }
    }

    /// Primitives making up this body.
    pub fn primitives(&self) -> &[Obstacle] {
        match self {
            Body::Primitive(o) => core::slice::from_ref(o),
            Body::Merged(m) => m.members(),
        }
    }

    pub fn as_primitive(&self) -> Option<&Obstacle> {
        match self {
            Body::Primitive(o) => Some(o),
            Body::Merged(_) => None,
        }
    }
}

fn primitive_gradient_bound(o: &Obstacle, r0: f64) -> f64 {
    match o {
        Obstacle::WorkspaceBoundary { radius } => 2.0 * radius,
        Obstacle::Sphere(s) => 2.0 * (r0 + s.center().norm()),
        Obstacle::FullCylinder(c) => {
            let p = c.point();
            let off_axis = p - c.axis() * c.axis().dot(p);
            2.0 * (r0 + off_axis.norm())
        }
        Obstacle::CappedCylinder(c) => 2.0 * (r0 + c.p1().norm().max(c.p2().norm())),
    }
}

impl From<Obstacle> for Body {
    fn from(o: Obstacle) -> Self {
        Body::Primitive(o)
    }
}

impl From<MergedObstacle> for Body {
    fn from(m: MergedObstacle) -> Self {
        Body::Merged(m)
    }
}

impl Implicit for Body {
    fn value(&self, x: Vec3) -> f64 {
        match self {
            Body::Primitive(o) => o.value(x),
            Body::Merged(m) => m.value(x),
        }
    }
    fn gradient(&self, x: Vec3) -> Vec3 {
        match self {
            Body::Primitive(o) => o.gradient(x),
            Body::Merged(m) => m.gradient(x),
        }
    }
    fn hessian(&self, x: Vec3) -> Mat3 {
        match self {
            Body::Primitive(o) => o.hessian(x),
            Body::Merged(m) => m.hessian(x),
        }
    }
    fn value_gradient(&self, x: Vec3) -> (f64, Vec3) {
        match self {
            Body::Primitive(o) => o.value_gradient(x),
            Body::Merged(m) => m.value_gradient(x),
        }
    }
    fn jet(&self, x: Vec3) -> Jet {
        match self {
            Body::Primitive(o) => o.jet(x),
            Body::Merged(m) => m.jet(x),
        }
    }
}

/// A spherical body declared as the ball joint of some capped cylinders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDecl {
    /// Index of the joint's sphere among the workspace bodies.
    pub body: usize,
    /// Indices of the member cylinders.
    pub members: Vec<usize>,
}

/// Ball of radius `r0` about the origin with obstacles inside it.
///
/// Field code indexes the repulsion factors with the wall first: factor 0 is
/// the boundary and factor `i + 1` is body `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    wall: Obstacle,
    bodies: Vec<Body>,
    joints: Vec<JointDecl>,
}

impl Workspace {
    pub fn new(outer_radius: f64, bodies: Vec<Body>) -> Result<Self, GeometryError> {
        Ok(Self {
            wall: Obstacle::boundary(outer_radius)?,
            bodies,
            joints: Vec::new(),
        })
    }

    pub fn with_joints(mut self, joints: Vec<JointDecl>) -> Self {
        self.joints = joints;
        self
    }

    pub fn outer_radius(&self) -> f64 {
        self.wall.radius()
    }

    pub fn wall(&self) -> &Obstacle {
        &self.wall
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn joints(&self) -> &[JointDecl] {
        &self.joints
    }

    /// Number of repulsion factors, wall included.
    pub fn factor_count(&self) -> usize {
        self.bodies.len() + 1
    }

    pub fn factor_value_gradient(&self, i: usize, x: Vec3) -> (f64, Vec3) {
        if i == 0 {
            self.wall.value_gradient(x)
        } else {
            self.bodies[i - 1].value_gradient(x)
        }
    }

    pub fn factor_jet(&self, i: usize, x: Vec3) -> Jet {
        if i == 0 {
            self.wall.jet(x)
        } else {
            self.bodies[i - 1].jet(x)
        }
    }

    pub fn factor_value(&self, i: usize, x: Vec3) -> f64 {
        self.factor_value_gradient(i, x).0
    }

    /// Smallest repulsion factor at `x` and its index.
    pub fn min_factor(&self, x: Vec3) -> (usize, f64) {
        (0..self.factor_count())
            .map(|i| (i, self.factor_value(i, x)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    /// Strictly inside the ball and outside every obstacle.
    pub fn is_free(&self, x: Vec3) -> bool {
        (0..self.factor_count()).all(|i| self.factor_value(i, x) > 0.0)
    }

    /// Sum of the per-factor gradient bounds over the workspace, wall
    /// included.
    pub fn gradient_bound_sum(&self) -> f64 {
        let r0 = self.outer_radius();
        2.0 * r0 + self.bodies.iter().map(|b| b.gradient_bound(r0)).sum::<f64>()
    }

    /// Same workspace with every intersecting group of primitive bodies fused
    /// into one merged body. Groups are connected components of the overlap
    /// graph; members keep their original relative order.
    pub fn merge_intersecting(&self, p: f64, overlaps: &[(usize, usize)]) -> Workspace {
        let n = self.bodies.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(a, b) in overlaps {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut bodies = Vec::new();
        for root in 0..n {
            if find(&mut parent, root) != root {
                continue;
            }
            let group: Vec<usize> = (0..n).filter(|&i| find(&mut parent, i) == root).collect();
            if group.len() == 1 {
                bodies.push(self.bodies[root].clone());
                continue;
            }
            let members: Vec<Obstacle> = group
                .iter()
                .flat_map(|&i| self.bodies[i].primitives().iter().copied())
                .collect();
            match MergedObstacle::new(members, p) {
                Ok(m) => bodies.push(Body::Merged(m)),
                Err(_) => bodies.extend(group.iter().map(|&i| self.bodies[i].clone())),
            }
        }
        Workspace {
            wall: self.wall,
            bodies,
            joints: Vec::new(),
        }
    }
}
