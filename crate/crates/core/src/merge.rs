//! Smooth union of obstacles with the p-Rvachev function
//! `R_p(a, b) = a + b - (|a|^p + |b|^p)^(1/p)`.
//!
//! The zero set of `R_p` is the boundary of the union of the two obstacles,
//! it is positive only where both arguments are positive and negative
//! wherever either one is. Powers act on magnitudes, so for the default
//! `p = 2` this is the classic `a + b - sqrt(a^2 + b^2)`.
//!
//! More than two members are combined by a left fold in declaration order.
//! `R_p` is not associative, so that order is part of the obstacle's
//! definition.

use alloc::vec::Vec;

use crate::error::MergeError;
use crate::geometry::{Implicit, Jet, Obstacle};
use crate::math::{powf, Mat3, Vec3};

pub const DEFAULT_EXPONENT: f64 = 2.0;

fn check_exponent(p: f64) -> Result<(), MergeError> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(MergeError::BadExponent(p))
    }
}

/// `(|a|^p + |b|^p)^(1/p)`.
fn p_norm(a: f64, b: f64, p: f64) -> f64 {
    if p == 2.0 {
        return libm::hypot(a, b);
    }
    let (a, b) = (a.abs(), b.abs());
    let m = a.max(b);
    if m == 0.0 {
        return 0.0;
    }
    m * powf(powf(a / m, p) + powf(b / m, p), 1.0 / p)
}

/// `sgn(t) |t|^e`.
fn signed_pow(t: f64, e: f64) -> f64 {
    if e == 1.0 {
        t
    } else {
        t.signum() * powf(t.abs(), e)
    }
}

pub fn rvachev_union(a: f64, b: f64, p: f64) -> Result<f64, MergeError> {
    check_exponent(p)?;
    Ok(union_value(a, b, p))
}

fn union_value(a: f64, b: f64, p: f64) -> f64 {
    a + b - p_norm(a, b, p)
}

/// Gradient of `R_p(beta_i, beta_k)`. Where both arguments vanish the limit
/// `grad_i + grad_k` is returned directly.
pub fn rvachev_grad(
    b_i: f64,
    grad_i: Vec3,
    b_k: f64,
    grad_k: Vec3,
    p: f64,
) -> Result<Vec3, MergeError> {
    check_exponent(p)?;
    Ok(union_gradient(b_i, grad_i, b_k, grad_k, p))
}

fn union_gradient(a: f64, ga: Vec3, b: f64, gb: Vec3, p: f64) -> Vec3 {
    let t = p_norm(a, b, p);
    if t == 0.0 {
        return ga + gb;
    }
    let wa = signed_pow(a / t, p - 1.0);
    let wb = signed_pow(b / t, p - 1.0);
    ga + gb - (ga * wa + gb * wb)
}

/// Value, gradient and Hessian of `R_p` composed with two jets.
pub fn union_jet(a: &Jet, b: &Jet, p: f64) -> Jet {
    let t = p_norm(a.value, b.value, p);
    let value = a.value + b.value - t;
    if t == 0.0 {
        return Jet {
            value,
            gradient: a.gradient + b.gradient,
            hessian: a.hessian + b.hessian,
        };
    }
    let ra = a.value / t;
    let rb = b.value / t;
    let wa = signed_pow(ra, p - 1.0);
    let wb = signed_pow(rb, p - 1.0);
    let grad_t = a.gradient * wa + b.gradient * wb;
    let curv = |r: f64| {
        if p == 2.0 {
            1.0
        } else {
            powf(r.abs(), p - 2.0)
        }
    };
    let hess_t = (a.gradient.outer(a.gradient) * curv(ra) + b.gradient.outer(b.gradient) * curv(rb)
        - grad_t.outer(grad_t))
        * ((p - 1.0) / t)
        + a.hessian * wa
        + b.hessian * wb;
    Jet {
        value,
        gradient: a.gradient + b.gradient - grad_t,
        hessian: a.hessian + b.hessian - hess_t,
    }
}

/// Several catalog obstacles fused into one implicit function.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedObstacle {
    members: Vec<Obstacle>,
    p: f64,
}

impl MergedObstacle {
    /// Members are folded in the given order. The workspace wall cannot be a
    /// member.
    pub fn new(members: Vec<Obstacle>, p: f64) -> Result<Self, MergeError> {
        check_exponent(p)?;
        if members.is_empty() {
            return Err(MergeError::NoMembers);
        }
        if members
            .iter()
            .any(|m| matches!(m, Obstacle::WorkspaceBoundary { .. }))
        {
            return Err(MergeError::NoMembers);
        }
        Ok(Self { members, p })
    }

    pub fn members(&self) -> &[Obstacle] {
        &self.members
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// Gradient by central differences of the analytic gradient; test
    /// cross-check for the analytic Hessian.
    pub fn hessian_fd(&self, x: Vec3, h: f64) -> Mat3 {
        let mut cols = [Vec3::ZERO; 3];
        for (i, col) in cols.iter_mut().enumerate() {
            let mut e = Vec3::ZERO;
            e[i] = h;
            *col = (self.gradient(x + e) - self.gradient(x - e)) / (2.0 * h);
        }
        Mat3::from_columns(cols).symmetrized()
    }
}

impl Implicit for MergedObstacle {
    fn value(&self, x: Vec3) -> f64 {
        let mut it = self.members.iter();
        let first = it.next().map(|m| m.value(x)).unwrap_or(f64::INFINITY);
        it.fold(first, |acc, m| union_value(acc, m.value(x), self.p))
    }

    fn gradient(&self, x: Vec3) -> Vec3 {
        self.value_gradient(x).1
    }

    fn value_gradient(&self, x: Vec3) -> (f64, Vec3) {
        let mut it = self.members.iter();
        let first = it.next().map(|m| m.value_gradient(x)).unwrap_or((f64::INFINITY, Vec3::ZERO));
        it.fold(first, |(av, ag), m| {
            let (bv, bg) = m.value_gradient(x);
            (union_value(av, bv, self.p), union_gradient(av, ag, bv, bg, self.p))
        })
    }

    fn hessian(&self, x: Vec3) -> Mat3 {
        self.jet(x).hessian
    }

    fn jet(&self, x: Vec3) -> Jet {
        let mut it = self.members.iter();
        let first = it.next().map(|m| m.jet(x)).unwrap_or(Jet {
            value: f64::INFINITY,
            gradient: Vec3::ZERO,
            hessian: Mat3::ZERO,
        });
        it.fold(first, |acc, m| union_jet(&acc, &m.jet(x), self.p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn union_examples() {
        assert_eq!(rvachev_union(0.0, 4.0, 2.0).unwrap(), 0.0);
        assert_eq!(rvachev_union(3.0, 4.0, 2.0).unwrap(), 2.0);
        let r = rvachev_union(1.0, 1.0, 2.0).unwrap();
        assert!((r - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!((r - 0.5857864).abs() < 1e-7);
        assert_eq!(rvachev_union(1.0, 1.0, 1.0), Err(MergeError::BadExponent(1.0)));
        assert!(rvachev_union(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn union_sign_structure() {
        for p in [1.5, 2.0, 3.0, 4.5] {
            // on the boundary of one member, outside the other
            assert!(union_value(0.0, 2.0, p).abs() < 1e-12);
            // on the boundary of one member, inside the other: interior of the union
            assert!(union_value(0.0, -2.0, p) < 0.0);
            assert!(union_value(-1.0, 3.0, p) < 0.0);
            assert!(union_value(-1.0, -3.0, p) < 0.0);
            assert!(union_value(1.0, 3.0, p) > 0.0);
        }
    }

    #[test]
    fn gradient_examples() {
        let g = rvachev_grad(0.0, Vec3::X, 2.0, Vec3::Y, 2.0).unwrap();
        assert_eq!(g, Vec3::X);
        let g = rvachev_grad(0.0, Vec3::X, 0.0, Vec3::Y, 2.0).unwrap();
        assert_eq!(g, Vec3::new(1.0, 1.0, 0.0));
        let gv = Vec3::new(0.3, -1.0, 2.0);
        let g = rvachev_grad(3.0, gv, 3.0, gv, 2.0).unwrap();
        let expected = gv * (2.0 * (1.0 - 3.0 / 18f64.sqrt()));
        assert!((g - expected).norm() < 1e-14);
        assert!((expected.norm() / gv.norm() - 0.58579).abs() < 1e-5);
        assert!(rvachev_grad(1.0, gv, 1.0, gv, 1.0).is_err());
    }

    fn two_spheres() -> (Obstacle, Obstacle) {
        (
            Obstacle::sphere(Vec3::new(-0.5, 0.0, 0.0), 1.0).unwrap(),
            Obstacle::sphere(Vec3::new(0.5, 0.0, 0.0), 1.0).unwrap(),
        )
    }

    #[test]
    fn merged_examples() {
        let (a, b) = two_spheres();
        let single = MergedObstacle::new(vec![a], 2.0).unwrap();
        for x in [Vec3::ZERO, Vec3::new(3.0, 1.0, -2.0), Vec3::new(-0.5, 0.9, 0.0)] {
            assert_eq!(single.value(x), a.value(x));
            assert_eq!(single.gradient(x), a.gradient(x));
        }
        let m = MergedObstacle::new(vec![a, b], 2.0).unwrap();
        let x = Vec3::ZERO;
        assert_eq!(m.value(x), rvachev_union(a.value(x), b.value(x), 2.0).unwrap());
        let far_apart = MergedObstacle::new(
            vec![a, Obstacle::sphere(Vec3::new(4.0, 0.0, 0.0), 1.0).unwrap()],
            2.0,
        )
        .unwrap();
        assert!(far_apart.value(Vec3::new(-0.5, 0.1, 0.0)) < 0.0);
        assert!(MergedObstacle::new(vec![], 2.0).is_err());
        assert!(MergedObstacle::new(vec![a], 1.0).is_err());
    }

    #[test]
    fn nonvanishing_gradient_on_intersection_circle() {
        let (a, b) = two_spheres();
        // the two unit spheres meet on the circle x = 0, radius sqrt(3)/2
        let rc = (0.75f64).sqrt();
        for i in 0..64 {
            let t = i as f64 * core::f64::consts::TAU / 64.0;
            let x = Vec3::new(0.0, rc * libm::cos(t), rc * libm::sin(t));
            let (va, ga) = a.value_gradient(x);
            let (vb, gb) = b.value_gradient(x);
            assert!(va.abs() < 1e-12 && vb.abs() < 1e-12);
            let g = rvachev_grad(va, ga, vb, gb, 2.0).unwrap();
            assert!(g.norm() > 0.1);
        }
    }

    fn arb_sphere_pair() -> impl Strategy<Value = (Obstacle, Obstacle)> {
        (
            -1.0..1.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            0.3..1.2f64,
            0.3..1.2f64,
            0.3..2.0f64,
        )
            .prop_map(|(x, y, z, r1, r2, d)| {
                let c = Vec3::new(x, y, z);
                (
                    Obstacle::sphere(c, r1).unwrap(),
                    Obstacle::capped_cylinder(c + Vec3::new(d, 0.0, 0.0), c + Vec3::new(d, 1.0, 0.5), r2)
                        .unwrap(),
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn zero_set_is_union_boundary((a, b) in arb_sphere_pair(), th in 0.0..core::f64::consts::PI, ph in 0.0..core::f64::consts::TAU, p in 1.5..4.0f64) {
            let m = MergedObstacle::new(vec![a, b], p).unwrap();
            let c = match a { Obstacle::Sphere(s) => s, _ => unreachable!() };
            let dir = Vec3::new(libm::sin(th) * libm::cos(ph), libm::sin(th) * libm::sin(ph), libm::cos(th));
            let x = c.center() + dir * c.radius();
            prop_assume!(b.value(x) > 1e-6);
            prop_assert!(m.value(x).abs() <= 1e-9);
        }

        #[test]
        fn merged_derivatives_match_differences((a, b) in arb_sphere_pair(), x in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64), p in 1.5..4.0f64) {
            let x = Vec3::new(x.0, x.1, x.2);
            let m = MergedObstacle::new(vec![a, b], p).unwrap();
            prop_assume!(m.value(x).abs() > 1e-2 && a.value(x).abs() > 1e-2 && b.value(x).abs() > 1e-2);
            if let Obstacle::CappedCylinder(c) = b {
                let s1 = c.axis().dot(x - c.p1());
                let s2 = c.axis().dot(x - c.p2());
                prop_assume!(s1.abs() > 1e-3 && s2.abs() > 1e-3);
            }
            let h = 1e-6;
            let g = m.gradient(x);
            let mut fd = Vec3::ZERO;
            for i in 0..3 {
                let mut e = Vec3::ZERO;
                e[i] = h;
                fd[i] = (m.value(x + e) - m.value(x - e)) / (2.0 * h);
            }
            prop_assert!((fd - g).norm() <= 1e-5 * g.norm().max(1.0));
            let hs = m.hessian(x);
            let hfd = m.hessian_fd(x, 1e-5);
            prop_assert!((hs - hfd).max_abs() <= 1e-4 * hs.max_abs().max(1.0), "{:?} vs {:?}", hs, hfd);
        }
    }
}
