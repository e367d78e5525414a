//! Navigation potentials built from the attractive term
//! `gamma = |x - p_d|^2` and the repulsion product `beta = prod beta_i`.
//!
//! * `Fhat`: `gamma^k / beta`
//! * `Phi`: `gamma / (gamma^k + beta)^(1/k)`
//! * `Psi`: `gamma / (gamma + beta^(1/k))`
//!
//! All three share their critical points. For meter-scale scenes and `k`
//! around 40 both `gamma^k` and `beta` leave the range of `f64`, so every
//! evaluation works with `ln gamma` and `ln beta = sum ln beta_i` and only
//! exponentiates bounded combinations. The gradients are all multiples of
//! the common vector `grad gamma - (gamma / k) grad(ln beta)`.

use alloc::vec::Vec;

use crate::error::FieldError;
use crate::math::{exp, ln, log_add_exp, Mat3, Vec3};
use crate::scene::Workspace;

/// Below this value `beta` is treated as zero when forming `beta^(1/k)`.
pub const BETA_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Potential {
    Fhat,
    Phi,
    Psi,
}

impl Potential {
    pub fn name(self) -> &'static str {
        match self {
            Potential::Fhat => "fhat",
            Potential::Phi => "phi",
            Potential::Psi => "psi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavSpec {
    pub potential: Potential,
    pub k: u32,
    pub target: Vec3,
}

impl NavSpec {
    pub fn new(potential: Potential, k: u32, target: Vec3) -> Result<Self, FieldError> {
        if k == 0 {
            return Err(FieldError::BadK);
        }
        Ok(Self {
            potential,
            k,
            target,
        })
    }

    pub fn with_potential(self, potential: Potential) -> Self {
        Self { potential, ..self }
    }

    pub fn with_k(self, k: u32) -> Result<Self, FieldError> {
        Self::new(self.potential, k, self.target)
    }

    pub fn gamma(&self, x: Vec3) -> f64 {
        (x - self.target).norm_squared()
    }

    pub fn gamma_grad(&self, x: Vec3) -> Vec3 {
        (x - self.target) * 2.0
    }
}

/// Default tolerance on the potential's gradient norm for declaring a point
/// critical.
pub fn default_grad_tol(ws: &Workspace) -> f64 {
    1e-8 * (1.0 + ws.outer_radius())
}

/// Everything `eval` computes at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEval {
    pub value: f64,
    pub gradient: Vec3,
    pub gamma: f64,
    /// `beta` itself; underflows to zero far from the target at large scale.
    pub beta_total: f64,
    pub ln_beta: f64,
    /// Repulsion factors, wall first.
    pub per_obstacle_beta: Vec<f64>,
}

/// `beta` and its factors, wall first, by direct multiplication.
pub fn beta_product(ws: &Workspace, x: Vec3) -> (f64, Vec<f64>) {
    let factors: Vec<f64> = (0..ws.factor_count()).map(|i| ws.factor_value(i, x)).collect();
    (factors.iter().product(), factors)
}

/// `grad beta = sum_i grad beta_i * prod_{j != i} beta_j`, with the omitted
/// products taken from prefix and suffix products so that a zero factor
/// never needs a division.
pub fn beta_product_grad(ws: &Workspace, x: Vec3) -> Vec3 {
    let n = ws.factor_count();
    let vg: Vec<(f64, Vec3)> = (0..n).map(|i| ws.factor_value_gradient(i, x)).collect();
    let mut suffix = alloc::vec![1.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * vg[i].0;
    }
    let mut prefix = 1.0;
    let mut grad = Vec3::ZERO;
    for (i, &(b, g)) in vg.iter().enumerate() {
        grad += g * (prefix * suffix[i + 1]);
        prefix *= b;
    }
    grad
}

/// `ln beta` and `grad beta / beta`, or the data needed on the zero set.
#[derive(Debug, Clone, Copy)]
struct Repulsion {
    ln_beta: f64,
    /// `grad(ln beta)`; meaningful only when `beta > 0`.
    g: Vec3,
    zeros: usize,
    /// `ln prod_{i != j} beta_i` and `grad beta_j` for the single zero factor.
    ln_rest: f64,
    zero_grad: Vec3,
    min_factor: f64,
}

impl Repulsion {
    fn at(ws: &Workspace, x: Vec3) -> Result<Self, FieldError> {
        let mut r = Repulsion {
            ln_beta: 0.0,
            g: Vec3::ZERO,
            zeros: 0,
            ln_rest: 0.0,
            zero_grad: Vec3::ZERO,
            min_factor: f64::INFINITY,
        };
        for i in 0..ws.factor_count() {
            let (b, gb) = ws.factor_value_gradient(i, x);
            r.min_factor = r.min_factor.min(b);
            if b > 0.0 {
                r.ln_rest += ln(b);
                r.g += gb / b;
            } else if b == 0.0 {
                r.zeros += 1;
                r.zero_grad = gb;
            } else {
                return Err(FieldError::InsideObstacle { index: i, value: b });
            }
        }
        if r.zeros == 0 {
            r.ln_beta = r.ln_rest;
        } else {
            r.ln_beta = f64::NEG_INFINITY;
        }
        Ok(r)
    }

    /// `grad beta / b` for a positive stand-in `b = exp(ln_b) >= beta`.
    fn grad_over(&self, ln_b: f64) -> Vec3 {
        match self.zeros {
            0 => self.g * exp(self.ln_beta - ln_b),
            1 => self.zero_grad * exp(self.ln_rest - ln_b),
            _ => Vec3::ZERO,
        }
    }
}

/// `e * ln_gamma`, with `0 * ln 0` taken as 0.
fn scaled_ln(e: f64, ln_gamma: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e * ln_gamma
    }
}

fn value_gradient_from(
    spec: &NavSpec,
    rep: &Repulsion,
    x: Vec3,
) -> Result<(f64, Vec3), FieldError> {
    let k = f64::from(spec.k);
    let gamma = spec.gamma(x);
    let grad_gamma = spec.gamma_grad(x);
    let ln_gamma = ln(gamma);
    match spec.potential {
        Potential::Psi => {
            let ln_b = rep.ln_beta.max(ln(BETA_FLOOR));
            let q = exp(ln_b / k);
            let delta = gamma + q;
            let value = if rep.ln_beta <= ln(BETA_FLOOR) {
                1.0
            } else {
                gamma / delta
            };
            let bracket = grad_gamma - rep.grad_over(ln_b) * (gamma / k);
            Ok((value, bracket * (q / (delta * delta))))
        }
        Potential::Phi => {
            if rep.zeros > 0 {
                // d = gamma on the zero set, where grad phi = -grad beta / (k gamma^k)
                let grad = match rep.zeros {
                    1 => rep.zero_grad * (-exp(rep.ln_rest - k * ln_gamma) / k),
                    _ => Vec3::ZERO,
                };
                return Ok((1.0, grad));
            }
            let ln_d = log_add_exp(k * ln_gamma, rep.ln_beta) / k;
            let value = exp(ln_gamma - ln_d).min(1.0);
            let bracket = grad_gamma - rep.g * (gamma / k);
            Ok((value, bracket * exp(rep.ln_beta - (k + 1.0) * ln_d)))
        }
        Potential::Fhat => {
            if rep.zeros > 0 {
                return Err(FieldError::BoundarySingularity);
            }
            let value = exp(k * ln_gamma - rep.ln_beta);
            let bracket = grad_gamma * k - rep.g * gamma;
            Ok((value, bracket * exp(scaled_ln(k - 1.0, ln_gamma) - rep.ln_beta)))
        }
    }
}

/// Value and gradient of the selected potential without allocating.
pub fn value_gradient(spec: &NavSpec, ws: &Workspace, x: Vec3) -> Result<(f64, Vec3), FieldError> {
    let rep = Repulsion::at(ws, x)?;
    value_gradient_from(spec, &rep, x)
}

/// Value, gradient and the smallest repulsion factor at `x`.
pub fn value_gradient_clearance(
    spec: &NavSpec,
    ws: &Workspace,
    x: Vec3,
) -> Result<(f64, Vec3, f64), FieldError> {
    let rep = Repulsion::at(ws, x)?;
    let (v, g) = value_gradient_from(spec, &rep, x)?;
    Ok((v, g, rep.min_factor))
}

pub fn value(spec: &NavSpec, ws: &Workspace, x: Vec3) -> Result<f64, FieldError> {
    value_gradient(spec, ws, x).map(|(v, _)| v)
}

pub fn eval(spec: &NavSpec, ws: &Workspace, x: Vec3) -> Result<FieldEval, FieldError> {
    let rep = Repulsion::at(ws, x)?;
    let (value, gradient) = value_gradient_from(spec, &rep, x)?;
    let per_obstacle_beta: Vec<f64> = (0..ws.factor_count()).map(|i| ws.factor_value(i, x)).collect();
    Ok(FieldEval {
        value,
        gradient,
        gamma: spec.gamma(x),
        beta_total: exp(rep.ln_beta),
        ln_beta: rep.ln_beta,
        per_obstacle_beta,
    })
}

/// Second-order data of `ln beta` at a point of free space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBetaJet {
    pub ln_beta: f64,
    /// `grad beta / beta`.
    pub gradient: Vec3,
    /// `sum_i (D^2 beta_i / beta_i - a_i a_i^T)` with `a_i = grad beta_i / beta_i`.
    pub hessian: Mat3,
}

pub fn log_beta_jet(ws: &Workspace, x: Vec3) -> Result<LogBetaJet, FieldError> {
    let mut jet = LogBetaJet {
        ln_beta: 0.0,
        gradient: Vec3::ZERO,
        hessian: Mat3::ZERO,
    };
    for i in 0..ws.factor_count() {
        let f = ws.factor_jet(i, x);
        if f.value < 0.0 {
            return Err(FieldError::InsideObstacle {
                index: i,
                value: f.value,
            });
        }
        if f.value == 0.0 {
            return Err(FieldError::BoundarySingularity);
        }
        let a = f.gradient / f.value;
        jet.ln_beta += ln(f.value);
        jet.gradient += a;
        jet.hessian += f.hessian * (1.0 / f.value) - a.outer(a);
    }
    Ok(jet)
}

/// Hessian of the potential at a critical point,
/// `D^2 (nu / delta) = (delta D^2 nu - nu D^2 delta) / delta^2`.
///
/// Fails with `NotCritical` when the gradient norm at `x` exceeds `grad_tol`.
pub fn hessian_at_critical(
    spec: &NavSpec,
    ws: &Workspace,
    x: Vec3,
    grad_tol: f64,
) -> Result<Mat3, FieldError> {
    let (_, grad) = value_gradient(spec, ws, x)?;
    let norm = grad.norm();
    if !(norm <= grad_tol) {
        return Err(FieldError::NotCritical { norm, tol: grad_tol });
    }
    let lb = log_beta_jet(ws, x)?;
    Ok(critical_hessian(spec, &lb, x))
}

/// The critical-point Hessian formula without the gradient check.
pub fn critical_hessian(spec: &NavSpec, lb: &LogBetaJet, x: Vec3) -> Mat3 {
    let k = f64::from(spec.k);
    let gamma = spec.gamma(x);
    let ln_gamma = ln(gamma);
    let gg = spec.gamma_grad(x);
    let g = lb.gradient;
    // D^2 beta / beta
    let hess_beta_rel = lb.hessian + g.outer(g);
    let two_i = Mat3::scaled_identity(2.0);
    match spec.potential {
        Potential::Psi => {
            let q = exp(lb.ln_beta / k);
            let delta = gamma + q;
            let hess_q = (lb.hessian * (1.0 / k) + g.outer(g) * (1.0 / (k * k))) * q;
            let hess_delta = two_i + hess_q;
            (two_i * delta - hess_delta * gamma) * (1.0 / (delta * delta))
        }
        Potential::Phi => {
            // u = gamma^k + beta, d = u^(1/k); all ratios are taken relative to u
            let ln_u = log_add_exp(k * ln_gamma, lb.ln_beta);
            let a = exp(scaled_ln(k - 1.0, ln_gamma) - ln_u); // gamma^(k-1) / u
            let b = exp(lb.ln_beta - ln_u); // beta / u
            let grad_u_rel = gg * (k * a) + g * b;
            let mut hess_u_rel = two_i * (k * a) + hess_beta_rel * b;
            if spec.k >= 2 {
                let c = exp(scaled_ln(k - 2.0, ln_gamma) - ln_u);
                hess_u_rel += gg.outer(gg) * (k * (k - 1.0) * c);
            }
            let hess_d_rel =
                (hess_u_rel + grad_u_rel.outer(grad_u_rel) * (1.0 / k - 1.0)) * (1.0 / k);
            let d = exp(ln_u / k);
            (two_i - hess_d_rel * gamma) * (1.0 / d)
        }
        Potential::Fhat => {
            // D^2 (gamma^k) / beta - fhat * D^2 beta / beta
            let mut hess_nu_rel = two_i * (k * exp(scaled_ln(k - 1.0, ln_gamma) - lb.ln_beta));
            if spec.k >= 2 {
                let c = exp(scaled_ln(k - 2.0, ln_gamma) - lb.ln_beta);
                hess_nu_rel += gg.outer(gg) * (k * (k - 1.0) * c);
            }
            let fhat = exp(k * ln_gamma - lb.ln_beta);
            hess_nu_rel - hess_beta_rel * fhat
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Implicit, Obstacle};
    use crate::merge::MergedObstacle;
    use crate::scene::Body;
    use alloc::vec;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn sample_scene() -> Workspace {
        let bodies = vec![
            Body::from(Obstacle::sphere(v(1.5, 0.5, 0.0), 0.6).unwrap()),
            Body::from(Obstacle::capped_cylinder(v(-2.0, -1.0, -1.0), v(-1.0, 1.5, 0.5), 0.3).unwrap()),
            Body::from(Obstacle::full_cylinder(v(0.0, 0.0, 2.5), Vec3::X, 0.4).unwrap()),
            Body::from(
                MergedObstacle::new(
                    vec![
                        Obstacle::sphere(v(0.0, -2.0, -1.0), 0.5).unwrap(),
                        Obstacle::capped_cylinder(v(-0.5, -2.0, -1.0), v(0.5, -2.0, -1.0), 0.3).unwrap(),
                    ],
                    2.0,
                )
                .unwrap(),
            ),
        ];
        Workspace::new(4.0, bodies).unwrap()
    }

    fn spec(p: Potential, k: u32) -> NavSpec {
        NavSpec::new(p, k, v(0.2, -0.3, 0.1)).unwrap()
    }

    fn fd_gradient(f: impl Fn(Vec3) -> f64, x: Vec3, h: f64) -> Vec3 {
        let mut g = Vec3::ZERO;
        for i in 0..3 {
            let mut e = Vec3::ZERO;
            e[i] = h;
            // fourth-order stencil: the potentials are steep near obstacles
            g[i] = (8.0 * (f(x + e) - f(x - e)) - (f(x + e * 2.0) - f(x - e * 2.0))) / (12.0 * h);
        }
        g
    }

    #[test]
    fn gamma_examples() {
        let s = NavSpec::new(Potential::Psi, 2, Vec3::ZERO).unwrap();
        assert_eq!(s.gamma(Vec3::ZERO), 0.0);
        assert_eq!(s.gamma_grad(Vec3::ZERO), Vec3::ZERO);
        assert_eq!(s.gamma(v(1.0, 2.0, 2.0)), 9.0);
        assert_eq!(s.gamma_grad(v(1.0, 2.0, 2.0)), v(2.0, 4.0, 4.0));
        assert_eq!(NavSpec::new(Potential::Psi, 0, Vec3::ZERO), Err(FieldError::BadK));
    }

    #[test]
    fn beta_product_examples() {
        let ws = Workspace::new(5.0, vec![]).unwrap();
        let (b, f) = beta_product(&ws, Vec3::ZERO);
        assert_eq!(b, 25.0);
        assert_eq!(f, vec![25.0]);

        let ws = sample_scene();
        let x = v(1.5, 0.5, 0.6); // top of the sphere
        assert_eq!(beta_product(&ws, x).0, 0.0);
        let (_, factors) = beta_product(&ws, x);
        let omitted: f64 = factors.iter().enumerate().filter(|(i, _)| *i != 1).map(|(_, b)| b).product();
        let expected = ws.bodies()[0].gradient(x) * omitted;
        assert!((beta_product_grad(&ws, x) - expected).norm() <= 1e-12 * expected.norm());
    }

    #[test]
    fn beta_product_grad_matches_differences() {
        let ws = sample_scene();
        for x in [v(0.1, 0.2, 0.3), v(-1.0, 2.0, -0.5), v(2.0, -1.0, 1.0)] {
            let fd = fd_gradient(|y| beta_product(&ws, y).0, x, 1e-6);
            let g = beta_product_grad(&ws, x);
            assert!((fd - g).norm() <= 1e-6 * g.norm(), "{fd:?} {g:?}");
        }
    }

    #[test]
    fn symmetric_pair_cancels_on_mid_plane() {
        let bodies = vec![
            Body::from(Obstacle::sphere(v(-1.0, 0.0, 0.0), 0.4).unwrap()),
            Body::from(Obstacle::sphere(v(1.0, 0.0, 0.0), 0.4).unwrap()),
        ];
        let ws = Workspace::new(5.0, bodies).unwrap();
        let g = beta_product_grad(&ws, v(0.0, 1.3, -0.7));
        assert!(g.x.abs() < 1e-12);
    }

    #[test]
    fn values_at_target_and_boundary() {
        let ws = sample_scene();
        for p in [Potential::Psi, Potential::Phi, Potential::Fhat] {
            let s = spec(p, 3);
            let e = eval(&s, &ws, s.target).unwrap();
            assert_eq!(e.value, 0.0);
            assert_eq!(e.gradient, Vec3::ZERO);
        }
        let surface = v(1.5, 0.5, 0.6);
        assert_eq!(ws.bodies()[0].value(surface), 0.0);
        for k in [1, 4, 40] {
            assert_eq!(value(&spec(Potential::Psi, k), &ws, surface).unwrap(), 1.0);
            assert_eq!(value(&spec(Potential::Phi, k), &ws, surface).unwrap(), 1.0);
        }
        assert_eq!(
            value(&spec(Potential::Fhat, 2), &ws, surface),
            Err(FieldError::BoundarySingularity)
        );
        assert!(matches!(
            value(&spec(Potential::Psi, 2), &ws, v(1.5, 0.5, 0.0)),
            Err(FieldError::InsideObstacle { index: 1, .. })
        ));
    }

    #[test]
    fn large_k_limits() {
        let ws = sample_scene();
        let x = v(-2.5, 1.0, -1.5);
        let psi = spec(Potential::Psi, 200);
        let g = psi.gamma(x);
        assert!(g > 1.0);
        assert!((value(&psi, &ws, x).unwrap() - g / (g + 1.0)).abs() < 1e-2);
        let phi = spec(Potential::Phi, 200);
        assert!((value(&phi, &ws, x).unwrap() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn eval_reports_factors() {
        let ws = sample_scene();
        let x = v(0.5, 1.0, -0.5);
        let e = eval(&spec(Potential::Psi, 2), &ws, x).unwrap();
        assert_eq!(e.per_obstacle_beta.len(), 5);
        assert_eq!(e.per_obstacle_beta[0], ws.wall().value(x));
        for (i, b) in ws.bodies().iter().enumerate() {
            assert_eq!(e.per_obstacle_beta[i + 1], b.value(x));
        }
        let prod: f64 = e.per_obstacle_beta.iter().product();
        assert!((e.beta_total - prod).abs() <= 1e-12 * prod);
    }

    #[test]
    fn hessian_at_target_is_positive_definite() {
        let ws = sample_scene();
        for p in [Potential::Psi, Potential::Phi, Potential::Fhat] {
            for k in [1, 2, 5] {
                let s = spec(p, k);
                let h = hessian_at_critical(&s, &ws, s.target, 1e-12).unwrap();
                let ev = h.symmetric_eigenvalues();
                if p == Potential::Fhat && k >= 2 {
                    // gamma^k has a flat minimum of order 2k
                    assert!(ev.iter().all(|&l| l.abs() < 1e-12));
                } else {
                    assert!(ev[0] > 0.0, "{p:?} k={k}: {ev:?}");
                }
            }
        }
    }

    #[test]
    fn empty_workspace_hessian_is_isotropic() {
        let ws = Workspace::new(5.0, vec![]).unwrap();
        for p in [Potential::Psi, Potential::Phi] {
            let s = NavSpec::new(p, 3, Vec3::ZERO).unwrap();
            let h = hessian_at_critical(&s, &ws, Vec3::ZERO, 1e-12).unwrap();
            assert!(h[(0, 0)] > 0.0);
            assert!((h - Mat3::scaled_identity(h[(0, 0)])).max_abs() < 1e-15);
        }
    }

    #[test]
    fn hessian_requires_critical_point() {
        let ws = sample_scene();
        assert!(matches!(
            hessian_at_critical(&spec(Potential::Psi, 2), &ws, v(1.0, 1.0, 1.0), 1e-8),
            Err(FieldError::NotCritical { .. })
        ));
    }

    #[test]
    fn critical_hessian_matches_differences_at_target() {
        let ws = sample_scene();
        for p in [Potential::Psi, Potential::Phi] {
            let s = spec(p, 2);
            let h = hessian_at_critical(&s, &ws, s.target, 1e-12).unwrap();
            let step = 1e-5;
            let mut cols = [Vec3::ZERO; 3];
            for (i, c) in cols.iter_mut().enumerate() {
                let mut e = Vec3::ZERO;
                e[i] = step;
                let gp = value_gradient(&s, &ws, s.target + e).unwrap().1;
                let gm = value_gradient(&s, &ws, s.target - e).unwrap().1;
                *c = (gp - gm) / (2.0 * step);
            }
            let fd = Mat3::from_columns(cols);
            assert!((fd - h).max_abs() <= 1e-3 * h.max_abs(), "{p:?}");
        }
    }

    #[test]
    fn huge_k_stays_finite() {
        let ws = sample_scene();
        let x = v(-3.0, 1.0, 1.0);
        for p in [Potential::Psi, Potential::Phi] {
            let (val, g) = value_gradient(&spec(p, 60), &ws, x).unwrap();
            assert!(val.is_finite() && g.is_finite());
            assert!((0.0..=1.0).contains(&val));
        }
    }

    fn arb_free_point(ws: Workspace) -> impl Strategy<Value = Vec3> {
        (-4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64)
            .prop_map(|(x, y, z)| v(x, y, z))
            .prop_filter("free point", move |&x| {
                (0..ws.factor_count()).all(|i| ws.factor_value(i, x) > 1e-3)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn gradients_match_differences(x in arb_free_point(sample_scene()), k in 1u32..8, which in 0usize..3) {
            let ws = sample_scene();
            let p = [Potential::Psi, Potential::Phi, Potential::Fhat][which];
            let s = spec(p, k);
            let h = 1e-6 * (1.0 + x.max_abs());
            let fd = fd_gradient(|y| value(&s, &ws, y).unwrap(), x, h);
            let g = value_gradient(&s, &ws, x).unwrap().1;
            let scale = g.norm().max(1e-6 * value(&s, &ws, x).unwrap().abs()).max(1e-300);
            prop_assert!((fd - g).norm() <= 1e-5 * scale + 1e-10, "{:?} {:?} {:?}", p, fd, g);
        }

        #[test]
        fn psi_and_phi_stay_in_unit_range(x in arb_free_point(sample_scene()), k in 1u32..50) {
            let ws = sample_scene();
            for p in [Potential::Psi, Potential::Phi] {
                let val = value(&spec(p, k), &ws, x).unwrap();
                prop_assert!((0.0..=1.0).contains(&val));
            }
        }
    }
}
