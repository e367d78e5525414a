//! Critical points of the navigation potentials and the parameter bounds
//! that rule out spurious minima.
//!
//! Critical points are found by Levenberg-Marquardt on
//! `G(x) = grad gamma - (gamma / k) grad(ln beta)`. Every potential's
//! gradient is a positive multiple of `G` on free space, so `G` has the same
//! zeros while staying well scaled for large `k`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{AnalysisError, FieldError};
use crate::field::{self, critical_hessian, log_beta_jet, NavSpec};
use crate::geometry::{Implicit, Obstacle};
use crate::math::{ceil, sqrt, Mat3, Vec3};
use crate::sampling::{ball_point, Halton};
use crate::scene::Workspace;
use crate::validate::Swept;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriticalClass {
    Minimum,
    Saddle,
    Maximum,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Target,
    /// Close to body `i` (an index into `Workspace::bodies`).
    NearObstacle(usize),
    NearBoundary,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub x: Vec3,
    /// Gradient norm of the potential selected in the spec.
    pub grad_norm: f64,
    /// Ascending.
    pub eigenvalues: [f64; 3],
    pub class: CriticalClass,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CriticalPointReport {
    pub points: Vec<CriticalPoint>,
    pub starts: usize,
    pub unconverged: usize,
    pub messages: Vec<String>,
}

impl CriticalPointReport {
    /// Minima other than the target.
    pub fn spurious_minima(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.class == CriticalClass::Minimum && p.region != Region::Target)
            .count()
    }

    pub fn count(&self, class: CriticalClass) -> usize {
        self.points.iter().filter(|p| p.class == class).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub n_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on `|G|`, relative to the workspace radius.
    pub residual_tol: f64,
    /// Duplicate radius, relative to the workspace radius.
    pub merge_radius: f64,
    /// Eigenvalues below this fraction of the largest magnitude count as zero.
    pub eig_tol: f64,
    /// A point is near a surface when its estimated distance is below this
    /// fraction of the workspace radius.
    pub near_fraction: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_starts: 500,
            seed: 0,
            max_iter: 200,
            residual_tol: 1e-10,
            merge_radius: 1e-5,
            eig_tol: 1e-7,
            near_fraction: 0.1,
        }
    }
}

/// `G(x)` and its Jacobian.
fn residual(spec: &NavSpec, ws: &Workspace, x: Vec3) -> Result<(Vec3, Mat3), FieldError> {
    let k = f64::from(spec.k);
    let lb = log_beta_jet(ws, x)?;
    let gamma = spec.gamma(x);
    let gg = spec.gamma_grad(x);
    let g = gg - lb.gradient * (gamma / k);
    let jac = Mat3::scaled_identity(2.0) - (lb.gradient.outer(gg) + lb.hessian * gamma) * (1.0 / k);
    Ok((g, jac))
}

/// Levenberg-Marquardt from `x0`; `None` if it stalls before `|G|` drops
/// below tolerance. Steps leaving free space are rejected.
pub fn refine_critical_point(
    spec: &NavSpec,
    ws: &Workspace,
    x0: Vec3,
    cfg: &SearchConfig,
) -> Option<Vec3> {
    let r0 = ws.outer_radius();
    let tol = cfg.residual_tol * r0;
    let mut x = x0;
    let (mut g, mut jac) = residual(spec, ws, x).ok()?;
    let mut mu = 1e-3;
    for _ in 0..cfg.max_iter {
        let norm = g.norm();
        if norm <= tol {
            return Some(x);
        }
        let jt = jac.transpose();
        let jtj = jt.mat_mul(&jac);
        let rhs = -jt.mul_vec(g);
        let scale = jtj.trace() / 3.0;
        let mut accepted = false;
        for _ in 0..30 {
            let a = jtj + Mat3::scaled_identity(mu * scale.max(1e-300));
            let Some(mut step) = a.solve(rhs) else {
                mu *= 10.0;
                continue;
            };
            let len = step.norm();
            if len > 0.25 * r0 {
                step *= 0.25 * r0 / len;
            }
            let trial = x + step;
            if ws.is_free(trial) {
                if let Ok((gt, jt)) = residual(spec, ws, trial) {
                    if gt.norm() < norm {
                        x = trial;
                        g = gt;
                        jac = jt;
                        mu = (mu / 3.0).max(1e-12);
                        accepted = true;
                        break;
                    }
                }
            }
            mu *= 4.0;
            if step.norm() <= 1e-16 * (1.0 + x.norm()) {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    (g.norm() <= tol).then_some(x)
}

/// Quasi-random free points of the workspace.
pub fn free_seeds(ws: &Workspace, n: usize, seed: u64) -> Vec<Vec3> {
    let r0 = ws.outer_radius();
    Halton::new(seed)
        .take(n.saturating_mul(64).max(64))
        .map(|u| ball_point(u, Vec3::ZERO, r0))
        .filter(|&x| ws.is_free(x))
        .take(n)
        .collect()
}

pub fn classify(eigenvalues: [f64; 3], eig_tol: f64) -> CriticalClass {
    let scale = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let tol = eig_tol * scale;
    if scale == 0.0 || eigenvalues.iter().any(|l| l.abs() <= tol) {
        CriticalClass::Degenerate
    } else if eigenvalues.iter().all(|&l| l > 0.0) {
        CriticalClass::Minimum
    } else if eigenvalues.iter().all(|&l| l < 0.0) {
        CriticalClass::Maximum
    } else {
        CriticalClass::Saddle
    }
}

fn region_of(spec: &NavSpec, ws: &Workspace, x: Vec3, cfg: &SearchConfig) -> Region {
    let r0 = ws.outer_radius();
    if (x - spec.target).norm() <= cfg.merge_radius * r0 {
        return Region::Target;
    }
    let mut best = (usize::MAX, f64::INFINITY);
    for i in 0..ws.factor_count() {
        let (b, gb) = ws.factor_value_gradient(i, x);
        let dist = b / gb.norm().max(1e-300);
        if dist < best.1 {
            best = (i, dist);
        }
    }
    if best.1 > cfg.near_fraction * r0 {
        Region::Interior
    } else if best.0 == 0 {
        Region::NearBoundary
    } else {
        Region::NearObstacle(best.0 - 1)
    }
}

/// Classifies a critical point of the potential.
pub fn describe_critical_point(
    spec: &NavSpec,
    ws: &Workspace,
    x: Vec3,
    cfg: &SearchConfig,
) -> Result<CriticalPoint, FieldError> {
    let (_, grad) = field::value_gradient(spec, ws, x)?;
    let lb = log_beta_jet(ws, x)?;
    let eigenvalues = critical_hessian(spec, &lb, x).symmetrized().symmetric_eigenvalues();
    Ok(CriticalPoint {
        x,
        grad_norm: grad.norm(),
        eigenvalues,
        class: classify(eigenvalues, cfg.eig_tol),
        region: region_of(spec, ws, x, cfg),
    })
}

/// Collects refined points into a report, dropping duplicates.
pub fn assemble_report(
    spec: &NavSpec,
    ws: &Workspace,
    found: impl IntoIterator<Item = Option<Vec3>>,
    cfg: &SearchConfig,
) -> CriticalPointReport {
    let r0 = ws.outer_radius();
    let mut report = CriticalPointReport::default();
    let mut xs: Vec<Vec3> = Vec::new();
    if ws.is_free(spec.target) {
        xs.push(spec.target);
    }
    for f in found {
        report.starts += 1;
        match f {
            Some(x) => {
                if xs.iter().all(|y| (*y - x).norm() > cfg.merge_radius * r0) {
                    xs.push(x);
                }
            }
            None => report.unconverged += 1,
        }
    }
    if report.unconverged > 0 {
        report.messages.push(format!(
            "{} of {} starts did not converge to a critical point",
            report.unconverged, report.starts
        ));
    }
    for x in xs {
        match describe_critical_point(spec, ws, x, cfg) {
            Ok(p) => report.points.push(p),
            Err(e) => report
                .messages
                .push(format!("dropped point ({}, {}, {}): {e}", x.x, x.y, x.z)),
        }
    }
    report
}

/// Multi-start search for the critical points of the potential.
pub fn find_critical_points(spec: &NavSpec, ws: &Workspace, cfg: &SearchConfig) -> CriticalPointReport {
    let seeds = free_seeds(ws, cfg.n_starts, cfg.seed);
    let found = seeds
        .into_iter()
        .map(|x0| refine_critical_point(spec, ws, x0, cfg));
    assemble_report(spec, ws, found, cfg)
}

/// One row of a tuning-parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepRow {
    pub k: u32,
    pub spurious_minima: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Smallest `k` in the range with no spurious minima.
    pub threshold: Option<u32>,
}

pub fn no_local_minima_sweep(
    spec: &NavSpec,
    ws: &Workspace,
    ks: impl IntoIterator<Item = u32>,
    cfg: &SearchConfig,
) -> Sweep {
    let seeds = free_seeds(ws, cfg.n_starts, cfg.seed);
    let mut rows = Vec::new();
    for k in ks {
        let Ok(s) = spec.with_k(k) else { continue };
        let found = seeds.iter().map(|&x0| refine_critical_point(&s, ws, x0, cfg));
        let report = assemble_report(&s, ws, found, cfg);
        rows.push(SweepRow {
            k,
            spurious_minima: report.spurious_minima(),
        });
    }
    let threshold = rows.iter().find(|r| r.spurious_minima == 0).map(|r| r.k);
    Sweep { rows, threshold }
}

/// `Q_i = grad gamma . grad beta_i / 4 - gamma`.
pub fn q_i(spec: &NavSpec, obstacle: &impl Implicit, x: Vec3) -> f64 {
    0.25 * spec.gamma_grad(x).dot(obstacle.gradient(x)) - spec.gamma(x)
}

/// Upper bound of `Q_i` over the shell `0 < beta_i <= eps`:
/// `D (sqrt(eps + r^2) - D)` with `D` the distance from the target to the
/// obstacle's core (center, axis or axis segment).
///
/// For spheres and full cylinders it is the exact maximum for every `eps`;
/// for capped cylinders it is an upper bound whenever `eps <= beta_i(p_d)`.
pub fn q_i_max_bound(spec: &NavSpec, obstacle: &Obstacle, eps: f64) -> Result<f64, AnalysisError> {
    if obstacle.value(spec.target) <= 0.0 {
        return Err(AnalysisError::TargetInsideObstacle);
    }
    if !(eps > 0.0) {
        return Err(AnalysisError::BadThickness(eps));
    }
    let d = obstacle.core_distance(spec.target);
    let r = obstacle.radius();
    Ok(d * (sqrt(eps + r * r) - d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleEpsilon {
    pub body: usize,
    pub eps0_prime: f64,
    pub eps0_doubleprime: f64,
    pub samples: usize,
    /// Samples dropped because the ratio's denominator was negligible.
    pub excluded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEpsilon {
    pub i: usize,
    pub j: usize,
    pub eps0l_prime: f64,
    pub eps0l_doubleprime: f64,
    pub samples: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonBounds {
    pub per_obstacle: Vec<ObstacleEpsilon>,
    pub per_pair: Vec<PairEpsilon>,
    pub eps0: f64,
    /// `N` evaluated at `eps0 / 2`.
    pub n_of_eps: u64,
    /// True when some estimate excluded more than 1% of its samples.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for ShellConfig {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 0,
        }
    }
}

/// `N(eps) = ceil((r0 + |p_d|) * sum_i max |grad beta_i| / (2 eps))`,
/// saturating at `u64::MAX`.
pub fn n_of_eps(ws: &Workspace, target: Vec3, eps: f64) -> u64 {
    let n = ceil((ws.outer_radius() + target.norm()) * ws.gradient_bound_sum() / (2.0 * eps));
    if n.is_nan() || n >= u64::MAX as f64 {
        u64::MAX
    } else {
        (n as u64).max(1)
    }
}

/// Quasi-random free points with `0 < beta_body <= eps`.
pub fn shell_points(ws: &Workspace, body: usize, eps: f64, n: usize, seed: u64) -> Vec<Vec3> {
    let r0 = ws.outer_radius();
    let b = &ws.bodies()[body];
    let prims = b.primitives();
    let per = n.div_ceil(prims.len().max(1));
    let mut out = Vec::with_capacity(n);
    for (m, prim) in prims.iter().enumerate() {
        let Some(s) = Swept::of(prim, r0) else { continue };
        let (e1, e2) = s.frame();
        let r = prim.radius();
        for u in Halton::new(seed.wrapping_add(m as u64)).take(per) {
            let t = 1.0 - u[2]; // in (0, 1]
            let x = s
                .with_radius(sqrt(r * r + t * eps))
                .surface_point(e1, e2, u[0], u[1]);
            let v = b.value(x);
            if v > 0.0 && v <= eps && ws.is_free(x) {
                out.push(x);
            }
        }
    }
    out
}

/// Jets of all repulsion factors at `x`, wall first.
struct Factors {
    vals: Vec<f64>,
    grads: Vec<Vec3>,
    hess: Vec<Mat3>,
}

impl Factors {
    fn at(ws: &Workspace, x: Vec3) -> Self {
        let n = ws.factor_count();
        let mut f = Factors {
            vals: Vec::with_capacity(n),
            grads: Vec::with_capacity(n),
            hess: Vec::with_capacity(n),
        };
        for i in 0..n {
            let j = ws.factor_jet(i, x);
            f.vals.push(j.value);
            f.grads.push(j.gradient);
            f.hess.push(j.hessian);
        }
        f
    }

    /// `ln bar`, `grad bar / bar` and `D^2 bar / bar` for the product of all
    /// factors except those in `skip`.
    fn omitted(&self, skip: &[usize]) -> (f64, Vec3, Mat3) {
        let mut ln_b = 0.0;
        let mut g = Vec3::ZERO;
        let mut h = Mat3::ZERO;
        for i in 0..self.vals.len() {
            if skip.contains(&i) {
                continue;
            }
            let a = self.grads[i] / self.vals[i];
            ln_b += crate::math::ln(self.vals[i]);
            g += a;
            h += self.hess[i] * (1.0 / self.vals[i]) - a.outer(a);
        }
        (ln_b, g, h + g.outer(g))
    }
}

/// Running extremes for the ratio estimate, kept in log form because the
/// omitted products over- and underflow.
struct RatioEstimate {
    ln_min_num: f64,
    ln_max_den: f64,
    samples: usize,
    excluded: usize,
}

impl RatioEstimate {
    fn new() -> Self {
        Self {
            ln_min_num: f64::INFINITY,
            ln_max_den: f64::NEG_INFINITY,
            samples: 0,
            excluded: 0,
        }
    }

    /// `num = 2 |Q| bar^2`, `den = bar^2 * den_rel`.
    fn add(&mut self, ln_bar: f64, num_rel: f64, den_rel: f64) {
        self.samples += 1;
        let ln_num = crate::math::ln(num_rel) + 2.0 * ln_bar;
        self.ln_min_num = self.ln_min_num.min(ln_num);
        if den_rel.abs() < 1e-12 {
            self.excluded += 1;
        } else if den_rel > 0.0 {
            self.ln_max_den = self.ln_max_den.max(crate::math::ln(den_rel) + 2.0 * ln_bar);
        }
    }

    /// With no positive denominator the constraint is void.
    fn value(&self) -> f64 {
        if self.ln_max_den == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            crate::math::exp(self.ln_min_num - self.ln_max_den)
        }
    }
}

/// Denominator of the second bound divided by `bar^2`:
/// `grad bar . grad gamma / (2 bar) + gamma u^T [(1 - 1/k) ab ab^T - D^2 bar / bar] u`.
fn denominator_rel(spec: &NavSpec, x: Vec3, g_rel: Vec3, h_rel: Mat3, u: Vec3) -> f64 {
    let k = f64::from(spec.k);
    let gamma = spec.gamma(x);
    let ug = u.dot(g_rel);
    0.5 * g_rel.dot(spec.gamma_grad(x)) + gamma * ((1.0 - 1.0 / k) * ug * ug - h_rel.quadratic_form(u))
}

fn test_direction(grad: Vec3, axis: Option<Vec3>) -> Vec3 {
    axis.and_then(|v| grad.cross(v).normalized())
        .unwrap_or_else(|| grad.any_orthogonal())
}

/// Estimates the thickness bounds for every obstacle and intersecting pair,
/// their minimum `eps0`, and `N(eps0 / 2)`.
///
/// `eps'` is closed form. `eps''` is a ratio of a minimum and a maximum
/// over a shell, estimated from samples; since `Q_i` vanishes on the outer
/// rim of the shell the true minimum is zero, so the sampled value is an
/// optimistic estimate that shrinks with sampling density.
pub fn epsilon_bounds(
    spec: &NavSpec,
    ws: &Workspace,
    overlapping: &[(usize, usize)],
    cfg: &ShellConfig,
) -> Result<EpsilonBounds, AnalysisError> {
    let target = spec.target;
    let bodies = ws.bodies();
    let mut per_obstacle = Vec::with_capacity(bodies.len());
    for (i, b) in bodies.iter().enumerate() {
        let eps_p = b.value(target);
        if eps_p <= 0.0 {
            return Err(AnalysisError::TargetNotFree(i));
        }
        let pts = shell_points(ws, i, eps_p, cfg.samples, cfg.seed);
        if pts.is_empty() {
            return Err(AnalysisError::EmptyShell(i));
        }
        let axis = b.as_primitive().and_then(|o| o.axis());
        let mut est = RatioEstimate::new();
        for x in pts {
            let f = Factors::at(ws, x);
            let (ln_bar, g_rel, h_rel) = f.omitted(&[i + 1]);
            let u = test_direction(f.grads[i + 1], axis);
            let q = q_i(spec, b, x);
            est.add(ln_bar, 2.0 * q.abs(), denominator_rel(spec, x, g_rel, h_rel, u));
        }
        per_obstacle.push(ObstacleEpsilon {
            body: i,
            eps0_prime: eps_p,
            eps0_doubleprime: est.value(),
            samples: est.samples,
            excluded: est.excluded,
        });
    }

    let mut per_pair = Vec::new();
    for &(i, j) in overlapping {
        let (bi, bj) = (&bodies[i], &bodies[j]);
        let eps_p = bi.value(target).min(bj.value(target));
        let mut pts = shell_points(ws, i, eps_p, cfg.samples, cfg.seed);
        pts.extend(shell_points(ws, j, eps_p, cfg.samples, cfg.seed ^ 0x9e37));
        pts.retain(|&x| {
            let (a, b) = (bi.value(x), bj.value(x));
            a > 0.0 && a <= eps_p && b > 0.0 && b <= eps_p
        });
        if pts.is_empty() {
            return Err(AnalysisError::EmptyShell(i));
        }
        let axes = (
            bi.as_primitive().and_then(|o| o.axis()),
            bj.as_primitive().and_then(|o| o.axis()),
        );
        let mut est = RatioEstimate::new();
        for x in pts {
            let f = Factors::at(ws, x);
            let (ln_bar, g_rel, h_rel) = f.omitted(&[i + 1, j + 1]);
            let (gi, gj) = (f.grads[i + 1], f.grads[j + 1]);
            let u = gi
                .cross(gj)
                .normalized()
                .or_else(|| match axes {
                    (Some(a), Some(b)) => (a + b).normalized(),
                    _ => None,
                })
                .unwrap_or_else(|| gi.any_orthogonal());
            let num = 2.0 * (q_i(spec, bi, x).abs() * f.vals[j + 1] + q_i(spec, bj, x).abs() * f.vals[i + 1]);
            est.add(ln_bar, num, denominator_rel(spec, x, g_rel, h_rel, u));
        }
        per_pair.push(PairEpsilon {
            i,
            j,
            eps0l_prime: eps_p,
            eps0l_doubleprime: est.value(),
            samples: est.samples,
            excluded: est.excluded,
        });
    }

    let eps0 = per_obstacle
        .iter()
        .flat_map(|o| [o.eps0_prime, o.eps0_doubleprime])
        .chain(per_pair.iter().flat_map(|p| [p.eps0l_prime, p.eps0l_doubleprime]))
        .fold(f64::INFINITY, f64::min);
    let low_confidence = per_obstacle
        .iter()
        .map(|o| (o.excluded, o.samples))
        .chain(per_pair.iter().map(|p| (p.excluded, p.samples)))
        .any(|(e, s)| e * 100 > s);
    let n_of_eps = if eps0.is_finite() {
        n_of_eps(ws, target, eps0 / 2.0)
    } else {
        // no obstacles: only the wall term remains, with no thickness limit
        1
    };
    Ok(EpsilonBounds {
        per_obstacle,
        per_pair,
        eps0,
        n_of_eps,
        low_confidence,
    })
}
