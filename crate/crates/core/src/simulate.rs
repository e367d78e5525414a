//! Damped point-mass dynamics `x'' = -grad(lambda)(x) - c x'` started at
//! rest, with convergence, stagnation and collision monitoring.

use alloc::vec::Vec;

use crate::analysis::{describe_critical_point, refine_critical_point, CriticalClass, Region, SearchConfig};
use crate::error::{FieldError, SimError};
use crate::field::{value_gradient_clearance, NavSpec};
use crate::math::{ceil, Vec3};
use crate::scene::Workspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrator {
    SemiImplicitEuler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub damping_c: f64,
    pub dt: f64,
    pub t_max: f64,
    pub conv_pos_tol: f64,
    pub conv_speed_tol: f64,
    /// Gradient norm below which a slow robot away from the target counts
    /// as stuck.
    pub grad_tol: f64,
    /// Consecutive stuck steps before the robot's position is checked for a
    /// nearby spurious minimum; a confirmed one ends the run.
    pub stall_steps: usize,
    /// Record every this many steps; the first and last states are always
    /// recorded.
    pub sample_stride: usize,
    pub integrator: Integrator,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            damping_c: 0.6,
            dt: 1e-3,
            t_max: 600.0,
            conv_pos_tol: 1e-3,
            conv_speed_tol: 1e-3,
            grad_tol: 1e-4,
            stall_steps: 1000,
            sample_stride: 10,
            integrator: Integrator::SemiImplicitEuler,
        }
    }
}

impl SimConfig {
    fn check(&self) -> Result<(), SimError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.damping_c) {
            return Err(SimError::BadConfig("damping must be positive"));
        }
        if !positive(self.dt) || !positive(self.t_max) || self.dt > self.t_max {
            return Err(SimError::BadConfig("need 0 < dt <= t_max"));
        }
        if !positive(self.conv_pos_tol) || !positive(self.conv_speed_tol) || !(self.grad_tol >= 0.0) {
            return Err(SimError::BadConfig("tolerances must be positive"));
        }
        if self.sample_stride == 0 {
            return Err(SimError::BadConfig("sample stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Converged,
    LocalMinimum,
    Timeout,
    /// A step landed on or inside an obstacle; the step size is too large.
    CollisionNumerical,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::LocalMinimum => "local_minimum",
            Outcome::Timeout => "timeout",
            Outcome::CollisionNumerical => "collision",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
    pub a: Vec3,
    pub field_value: f64,
}

impl Sample {
    /// `|v|^2 / 2 + lambda(x)`.
    pub fn energy(&self) -> f64 {
        0.5 * self.v.norm_squared() + self.field_value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: Vec3,
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
    /// Time at which the run ended.
    pub end_time: f64,
    pub steps: usize,
    /// Largest speed and acceleration over every step, not just samples.
    pub max_speed: f64,
    pub max_accel: f64,
    /// Smallest repulsion factor met along the run.
    pub min_factor: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &Sample {
        self.samples.last().expect("a trajectory always has a sample")
    }

    pub fn time_to_converge(&self) -> Option<f64> {
        (self.outcome == Outcome::Converged).then_some(self.end_time)
    }
}

struct Dynamics<'a> {
    spec: &'a NavSpec,
    ws: &'a Workspace,
    c: f64,
}

#[derive(Clone, Copy)]
struct State {
    x: Vec3,
    v: Vec3,
    value: f64,
    grad: Vec3,
    min_factor: f64,
}

enum StepError {
    Collision,
    Field(FieldError),
}

impl Dynamics<'_> {
    fn at(&self, x: Vec3, v: Vec3) -> Result<State, StepError> {
        match value_gradient_clearance(self.spec, self.ws, x) {
            Ok((value, grad, m)) if m > 0.0 => Ok(State {
                x,
                v,
                value,
                grad,
                min_factor: m,
            }),
            Ok(_) | Err(FieldError::InsideObstacle { .. }) | Err(FieldError::BoundarySingularity) => {
                Err(StepError::Collision)
            }
            Err(e) => Err(StepError::Field(e)),
        }
    }

    fn accel(&self, s: &State) -> Vec3 {
        -s.grad - s.v * self.c
    }

    fn step(&self, s: &State, dt: f64, integrator: Integrator) -> Result<State, StepError> {
        match integrator {
            Integrator::SemiImplicitEuler => {
                let v = s.v + self.accel(s) * dt;
                self.at(s.x + v * dt, v)
            }
            Integrator::Rk4 => {
                let k1 = (s.v, self.accel(s));
                let s2 = self.at(s.x + k1.0 * (dt / 2.0), s.v + k1.1 * (dt / 2.0))?;
                let k2 = (s2.v, self.accel(&s2));
                let s3 = self.at(s.x + k2.0 * (dt / 2.0), s.v + k2.1 * (dt / 2.0))?;
                let k3 = (s3.v, self.accel(&s3));
                let s4 = self.at(s.x + k3.0 * dt, s.v + k3.1 * dt)?;
                let k4 = (s4.v, self.accel(&s4));
                let x = s.x + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (dt / 6.0);
                let v = s.v + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (dt / 6.0);
                self.at(x, v)
            }
        }
    }
}

/// A stalled robot is only declared stuck when a Newton-type search from its
/// position ends on a minimum other than the target. Without this check a
/// start on a nearly flat slope, which has not yet picked up speed, would be
/// reported as a local minimum.
fn settles_away_from_target(spec: &NavSpec, ws: &Workspace, x: Vec3) -> bool {
    let cfg = SearchConfig::default();
    refine_critical_point(spec, ws, x, &cfg)
        .and_then(|c| describe_critical_point(spec, ws, c, &cfg).ok())
        .is_some_and(|p| p.class == CriticalClass::Minimum && p.region != Region::Target)
}

/// Integrates from `start` at rest until the robot settles at the target,
/// gets stuck elsewhere, hits an obstacle numerically or runs out of time.
pub fn simulate(spec: &NavSpec, ws: &Workspace, cfg: &SimConfig, start: Vec3) -> Result<Trajectory, SimError> {
    cfg.check()?;
    let dyns = Dynamics {
        spec,
        ws,
        c: cfg.damping_c,
    };
    let (index, value) = ws.min_factor(start);
    if !(value > 0.0) {
        return Err(SimError::StartNotFree { index, value });
    }
    let mut s = match dyns.at(start, Vec3::ZERO) {
        Ok(s) => s,
        Err(StepError::Field(e)) => return Err(e.into()),
        Err(StepError::Collision) => return Err(SimError::StartNotFree { index, value }),
    };

    let sample = |s: &State, t: f64| Sample {
        t,
        x: s.x,
        v: s.v,
        a: dyns.accel(s),
        field_value: s.value,
    };
    let mut traj = Trajectory {
        start,
        samples: alloc::vec![sample(&s, 0.0)],
        outcome: Outcome::Timeout,
        end_time: 0.0,
        steps: 0,
        max_speed: 0.0,
        max_accel: dyns.accel(&s).norm(),
        min_factor: s.min_factor,
    };
    let converged = |s: &State| {
        (s.x - spec.target).norm() <= cfg.conv_pos_tol && s.v.norm() <= cfg.conv_speed_tol
    };
    if converged(&s) {
        traj.outcome = Outcome::Converged;
        return Ok(traj);
    }

    let max_steps = ceil(cfg.t_max / cfg.dt) as usize;
    let mut stalled = 0usize;
    for step in 1..=max_steps {
        let t = step as f64 * cfg.dt;
        let next = match dyns.step(&s, cfg.dt, cfg.integrator) {
            Ok(n) => n,
            Err(StepError::Collision) => {
                traj.outcome = Outcome::CollisionNumerical;
                traj.end_time = t;
                traj.steps = step;
                traj.min_factor = traj.min_factor.min(0.0);
                return Ok(traj);
            }
            Err(StepError::Field(e)) => return Err(e.into()),
        };
        s = next;
        traj.max_speed = traj.max_speed.max(s.v.norm());
        traj.max_accel = traj.max_accel.max(dyns.accel(&s).norm());
        traj.min_factor = traj.min_factor.min(s.min_factor);

        let done = if converged(&s) {
            Some(Outcome::Converged)
        } else {
            let stuck = s.v.norm() <= cfg.conv_speed_tol && s.grad.norm() <= cfg.grad_tol;
            stalled = if stuck { stalled + 1 } else { 0 };
            if stalled >= cfg.stall_steps && settles_away_from_target(spec, ws, s.x) {
                Some(Outcome::LocalMinimum)
            } else {
                if stalled >= cfg.stall_steps {
                    stalled = 0;
                }
                None
            }
        };
        if done.is_some() || step == max_steps || step % cfg.sample_stride == 0 {
            traj.samples.push(sample(&s, t));
        }
        if let Some(outcome) = done {
            traj.outcome = outcome;
            traj.end_time = t;
            traj.steps = step;
            return Ok(traj);
        }
    }
    traj.end_time = max_steps as f64 * cfg.dt;
    traj.steps = max_steps;
    Ok(traj)
}

/// Per-outcome counts and extremes over a batch of runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchSummary {
    pub total: usize,
    pub converged: usize,
    pub local_minimum: usize,
    pub timeout: usize,
    pub collision: usize,
    /// Starts rejected before integration.
    pub invalid_start: usize,
    pub max_speed: f64,
    pub max_accel: f64,
    /// Time to converge per start, `None` when the run did not converge.
    pub times: Vec<Option<f64>>,
}

impl BatchSummary {
    pub fn from_results(results: &[Result<Trajectory, SimError>]) -> Self {
        let mut s = BatchSummary {
            total: results.len(),
            ..Default::default()
        };
        for r in results {
            match r {
                Ok(t) => {
                    match t.outcome {
                        Outcome::Converged => s.converged += 1,
                        Outcome::LocalMinimum => s.local_minimum += 1,
                        Outcome::Timeout => s.timeout += 1,
                        Outcome::CollisionNumerical => s.collision += 1,
                    }
                    s.max_speed = s.max_speed.max(t.max_speed);
                    s.max_accel = s.max_accel.max(t.max_accel);
                    s.times.push(t.time_to_converge());
                }
                Err(_) => {
                    s.invalid_start += 1;
                    s.times.push(None);
                }
            }
        }
        s
    }

    pub fn all_converged(&self) -> bool {
        self.converged == self.total
    }
}

/// Runs every start in turn. Errors stay attached to their start.
pub fn simulate_batch(
    spec: &NavSpec,
    ws: &Workspace,
    cfg: &SimConfig,
    starts: &[Vec3],
) -> (Vec<Result<Trajectory, SimError>>, BatchSummary) {
    let results: Vec<_> = starts.iter().map(|&x| simulate(spec, ws, cfg, x)).collect();
    let summary = BatchSummary::from_results(&results);
    (results, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Potential;
    use crate::geometry::Obstacle;
    use alloc::vec;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn empty(r0: f64) -> Workspace {
        Workspace::new(r0, Vec::new()).unwrap()
    }

    fn one_sphere() -> Workspace {
        Workspace::new(5.0, vec![Obstacle::sphere(v(1.5, 0.0, 0.0), 0.6).unwrap().into()]).unwrap()
    }

    #[test]
    fn start_at_target_converges_immediately() {
        let spec = NavSpec::new(Potential::Psi, 2, v(1.0, 0.0, 0.0)).unwrap();
        let t = simulate(&spec, &empty(5.0), &SimConfig::default(), spec.target).unwrap();
        assert_eq!(t.outcome, Outcome::Converged);
        assert_eq!(t.end_time, 0.0);
        assert_eq!(t.samples.len(), 1);
    }

    #[test]
    fn empty_workspace_moves_in_a_straight_line() {
        let spec = NavSpec::new(Potential::Psi, 2, Vec3::ZERO).unwrap();
        let start = v(2.0, -1.0, 2.5);
        let t = simulate(&spec, &empty(5.0), &SimConfig::default(), start).unwrap();
        assert_eq!(t.outcome, Outcome::Converged);
        let dir = start.normalized().unwrap();
        for s in &t.samples {
            assert!(s.x.cross(dir).norm() < 1e-9, "{:?}", s.x);
        }
        assert!(t.final_state().x.norm() <= 1e-3);
    }

    #[test]
    fn start_inside_obstacle_is_rejected() {
        let spec = NavSpec::new(Potential::Psi, 2, Vec3::ZERO).unwrap();
        let err = simulate(&spec, &one_sphere(), &SimConfig::default(), v(1.5, 0.1, 0.0)).unwrap_err();
        assert!(matches!(err, SimError::StartNotFree { index: 1, .. }));
        let err = simulate(&spec, &one_sphere(), &SimConfig::default(), v(0.0, 0.0, 6.0)).unwrap_err();
        assert!(matches!(err, SimError::StartNotFree { index: 0, .. }));
    }

    #[test]
    fn bad_settings_are_rejected() {
        let spec = NavSpec::new(Potential::Psi, 2, Vec3::ZERO).unwrap();
        for cfg in [
            SimConfig { dt: 0.0, ..Default::default() },
            SimConfig { damping_c: -1.0, ..Default::default() },
            SimConfig { dt: 2.0, t_max: 1.0, ..Default::default() },
            SimConfig { sample_stride: 0, ..Default::default() },
        ] {
            assert!(matches!(
                simulate(&spec, &empty(5.0), &cfg, v(1.0, 0.0, 0.0)),
                Err(SimError::BadConfig(_))
            ));
        }
    }

    #[test]
    fn energy_does_not_grow_under_rk4() {
        let spec = NavSpec::new(Potential::Psi, 4, Vec3::ZERO).unwrap();
        let cfg = SimConfig {
            integrator: Integrator::Rk4,
            sample_stride: 1,
            t_max: 100.0,
            ..Default::default()
        };
        let t = simulate(&spec, &one_sphere(), &cfg, v(3.5, 0.4, -0.3)).unwrap();
        assert_eq!(t.outcome, Outcome::Converged);
        let e0 = t.samples[0].energy();
        for w in t.samples.windows(2) {
            assert!(w[1].energy() <= w[0].energy() + 1e-6 * e0);
        }
        assert!(t.min_factor > 0.0);
    }

    #[test]
    fn halving_the_step_keeps_the_end_point() {
        let spec = NavSpec::new(Potential::Psi, 4, Vec3::ZERO).unwrap();
        let cfg = SimConfig::default();
        let fine = SimConfig { dt: cfg.dt / 2.0, ..cfg };
        let start = v(3.5, 0.4, -0.3);
        let a = simulate(&spec, &one_sphere(), &cfg, start).unwrap();
        let b = simulate(&spec, &one_sphere(), &fine, start).unwrap();
        assert_eq!((a.outcome, b.outcome), (Outcome::Converged, Outcome::Converged));
        assert!((a.final_state().x - b.final_state().x).norm() <= cfg.conv_pos_tol);
    }

    #[test]
    fn huge_steps_collide() {
        let spec = NavSpec::new(Potential::Psi, 2, Vec3::ZERO).unwrap();
        let cfg = SimConfig { dt: 4.0, ..Default::default() };
        let t = simulate(&spec, &one_sphere(), &cfg, v(4.9, 0.5, 0.3)).unwrap();
        assert_eq!(t.outcome, Outcome::CollisionNumerical);
    }

    #[test]
    fn stuck_runs_end_as_local_minima() {
        // a sphere shields a target near the wall; k = 1 leaves a minimum
        let ws = Workspace::new(5.0, vec![Obstacle::sphere(v(2.5, 0.0, 0.0), 1.0).unwrap().into()]).unwrap();
        let spec = NavSpec::new(Potential::Psi, 1, v(4.0, 0.0, 0.0)).unwrap();
        let t = simulate(&spec, &ws, &SimConfig::default(), v(-1.0, 0.3, 0.2)).unwrap();
        assert_eq!(t.outcome, Outcome::LocalMinimum);
        assert!((t.final_state().x - spec.target).norm() > 1.0);
    }

    #[test]
    fn batch_matches_single_runs() {
        let spec = NavSpec::new(Potential::Psi, 3, Vec3::ZERO).unwrap();
        let cfg = SimConfig::default();
        let starts = [v(3.0, 1.0, 0.0), v(1.5, 0.0, 0.0), v(-2.0, 2.0, 1.0)];
        let (runs, summary) = simulate_batch(&spec, &one_sphere(), &cfg, &starts);
        assert_eq!(runs[0], simulate(&spec, &one_sphere(), &cfg, starts[0]));
        assert!(runs[1].is_err());
        assert_eq!(summary.total, 3);
        assert_eq!(summary.invalid_start, 1);
        assert_eq!(summary.converged, 2);
        let max_speed = runs.iter().flatten().map(|t| t.max_speed).fold(0.0, f64::max);
        assert_eq!(summary.max_speed, max_speed);
        assert_eq!(summary.times[1], None);
    }
}
