//! JSON scene format.
//!
//! A scene lists the workspace radius, the target, field settings, the
//! obstacles and the start positions. Obstacle indices are positions in the
//! `obstacles` array; ball joints refer to their member cylinders by index.

use std::path::Path;

use navfield_core::field::{NavSpec, Potential};
use navfield_core::sampling::{unit_direction, Halton};
use navfield_core::simulate::{Integrator, SimConfig};
use navfield_core::{Body, GeometryError, JointDecl, MergeError, MergedObstacle, Obstacle, Vec3, Workspace};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scene at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported scene version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("obstacle {index}: {source}")]
    Geometry { index: usize, source: GeometryError },
    #[error("obstacle {index}: {source}")]
    Merge { index: usize, source: MergeError },
    #[error("obstacle {index}: {message}")]
    Joint { index: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialName {
    Fhat,
    Phi,
    Psi,
}

impl From<PotentialName> for Potential {
    fn from(p: PotentialName) -> Self {
        match p {
            PotentialName::Fhat => Potential::Fhat,
            PotentialName::Phi => Potential::Phi,
            PotentialName::Psi => Potential::Psi,
        }
    }
}

impl From<Potential> for PotentialName {
    fn from(p: Potential) -> Self {
        match p {
            Potential::Fhat => PotentialName::Fhat,
            Potential::Phi => PotentialName::Phi,
            Potential::Psi => PotentialName::Psi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrimitiveSpec {
    Sphere { center: [f64; 3], radius: f64 },
    FullCylinder { point: [f64; 3], axis: [f64; 3], radius: f64 },
    CappedCylinder { p1: [f64; 3], p2: [f64; 3], radius: f64 },
}

impl PrimitiveSpec {
    pub fn build(&self) -> Result<Obstacle, GeometryError> {
        let v = Vec3::from_array;
        match *self {
            PrimitiveSpec::Sphere { center, radius } => Obstacle::sphere(v(center), radius),
            PrimitiveSpec::FullCylinder { point, axis, radius } => {
                Obstacle::full_cylinder(v(point), v(axis), radius)
            }
            PrimitiveSpec::CappedCylinder { p1, p2, radius } => {
                Obstacle::capped_cylinder(v(p1), v(p2), radius)
            }
        }
    }

    pub fn from_obstacle(o: &Obstacle) -> Option<Self> {
        Some(match o {
            Obstacle::Sphere(s) => PrimitiveSpec::Sphere {
                center: s.center().to_array(),
                radius: s.radius(),
            },
            Obstacle::FullCylinder(c) => PrimitiveSpec::FullCylinder {
                point: c.point().to_array(),
                axis: c.axis().to_array(),
                radius: c.radius(),
            },
            Obstacle::CappedCylinder(c) => PrimitiveSpec::CappedCylinder {
                p1: c.p1().to_array(),
                p2: c.p2().to_array(),
                radius: c.radius(),
            },
            Obstacle::WorkspaceBoundary { .. } => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleSpec {
    Sphere { center: [f64; 3], radius: f64 },
    FullCylinder { point: [f64; 3], axis: [f64; 3], radius: f64 },
    CappedCylinder { p1: [f64; 3], p2: [f64; 3], radius: f64 },
    /// A sphere enclosing the crossing of the listed cylinders.
    BallJoint { center: [f64; 3], radius: f64, members: Vec<usize> },
    /// Smooth union of primitives with Rvachev exponent `p`.
    Merged { p: f64, members: Vec<PrimitiveSpec> },
}

impl From<PrimitiveSpec> for ObstacleSpec {
    fn from(p: PrimitiveSpec) -> Self {
        match p {
            PrimitiveSpec::Sphere { center, radius } => ObstacleSpec::Sphere { center, radius },
            PrimitiveSpec::FullCylinder { point, axis, radius } => {
                ObstacleSpec::FullCylinder { point, axis, radius }
            }
            PrimitiveSpec::CappedCylinder { p1, p2, radius } => {
                ObstacleSpec::CappedCylinder { p1, p2, radius }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Points on the sphere of radius `radius_fraction * outer_radius`.
    Shell,
}

/// Deterministic generation of start positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSampling {
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    pub mode: SamplingMode,
    pub radius_fraction: f64,
    /// Required repulsion-factor margin: a candidate is kept only if every
    /// obstacle's beta exceeds this value there.
    #[serde(default)]
    pub min_beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorName {
    Euler,
    Rk4,
}

/// Simulation settings stored with a scene; missing fields take the
/// library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_pos_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_speed_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorName>,
}

impl SimSettings {
    pub fn apply(&self, damping_c: f64) -> SimConfig {
        let d = SimConfig::default();
        SimConfig {
            damping_c,
            dt: self.dt.unwrap_or(d.dt),
            t_max: self.t_max.unwrap_or(d.t_max),
            conv_pos_tol: self.conv_pos_tol.unwrap_or(d.conv_pos_tol),
            conv_speed_tol: self.conv_speed_tol.unwrap_or(d.conv_speed_tol),
            grad_tol: self.grad_tol.unwrap_or(d.grad_tol),
            stall_steps: self.stall_steps.unwrap_or(d.stall_steps),
            sample_stride: self.sample_stride.unwrap_or(d.sample_stride),
            integrator: match self.integrator {
                Some(IntegratorName::Rk4) => Integrator::Rk4,
                Some(IntegratorName::Euler) => Integrator::SemiImplicitEuler,
                None => d.integrator,
            },
        }
    }
}

fn default_damping() -> f64 {
    0.6
}

fn default_potential() -> PotentialName {
    PotentialName::Psi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub outer_radius: f64,
    pub target: [f64; 3],
    #[serde(default = "default_potential")]
    pub potential: PotentialName,
    pub k: u32,
    #[serde(default = "default_damping")]
    pub damping_c: f64,
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub starts: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_sampling: Option<StartSampling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSettings>,
}

/// A scene resolved into library types.
#[derive(Debug, Clone)]
pub struct Scene {
    pub workspace: Workspace,
    pub spec: NavSpec,
    pub sim: SimConfig,
    pub starts: Vec<Vec3>,
}

impl SceneFile {
    pub fn new(outer_radius: f64, target: Vec3, k: u32) -> Self {
        Self {
            version: FORMAT_VERSION,
            name: None,
            outer_radius,
            target: target.to_array(),
            potential: PotentialName::Psi,
            k,
            damping_c: default_damping(),
            obstacles: Vec::new(),
            starts: Vec::new(),
            start_sampling: None,
            sim: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: SceneFile = serde_path_to_error::deserialize(de).map_err(|e| SceneError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        if file.version != FORMAT_VERSION {
            return Err(SceneError::Version(file.version));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialization cannot fail") + "\n"
    }

    pub fn workspace(&self) -> Result<Workspace, SceneError> {
        let mut bodies = Vec::with_capacity(self.obstacles.len());
        let mut joints = Vec::new();
        let v = Vec3::from_array;
        for (index, o) in self.obstacles.iter().enumerate() {
            let geom = |r: Result<Obstacle, GeometryError>| r.map_err(|source| SceneError::Geometry { index, source });
            let body: Body = match o {
                ObstacleSpec::Sphere { center, radius } => geom(Obstacle::sphere(v(*center), *radius))?.into(),
                ObstacleSpec::FullCylinder { point, axis, radius } => {
                    geom(Obstacle::full_cylinder(v(*point), v(*axis), *radius))?.into()
                }
                ObstacleSpec::CappedCylinder { p1, p2, radius } => {
                    geom(Obstacle::capped_cylinder(v(*p1), v(*p2), *radius))?.into()
                }
                ObstacleSpec::BallJoint { center, radius, members } => {
                    for &m in members {
                        if m >= self.obstacles.len() || m == index {
                            return Err(SceneError::Joint {
                                index,
                                message: format!("member index {m} is not another obstacle"),
                            });
                        }
                    }
                    joints.push(JointDecl {
                        body: index,
                        members: members.clone(),
                    });
                    geom(Obstacle::sphere(v(*center), *radius))?.into()
                }
                ObstacleSpec::Merged { p, members } => {
                    let prims = members.iter().map(|m| geom(m.build())).collect::<Result<Vec<_>, _>>()?;
                    MergedObstacle::new(prims, *p)
                        .map_err(|source| SceneError::Merge { index, source })?
                        .into()
                }
            };
            bodies.push(body);
        }
        let ws = Workspace::new(self.outer_radius, bodies).map_err(|source| SceneError::Geometry {
            index: usize::MAX,
            source,
        })?;
        Ok(ws.with_joints(joints))
    }

    pub fn nav_spec(&self) -> Result<NavSpec, SceneError> {
        let t = Vec3::from_array(self.target);
        if !t.is_finite() {
            return Err(SceneError::Invalid("target is not finite".into()));
        }
        NavSpec::new(self.potential.into(), self.k, t).map_err(|e| SceneError::Invalid(e.to_string()))
    }

    /// Explicit starts followed by any sampled ones.
    pub fn start_points(&self, ws: &Workspace) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = self.starts.iter().copied().map(Vec3::from_array).collect();
        if let Some(s) = &self.start_sampling {
            out.extend(sample_starts(ws, s));
        }
        out
    }

    pub fn resolve(&self) -> Result<Scene, SceneError> {
        if !(self.damping_c.is_finite() && self.damping_c > 0.0) {
            return Err(SceneError::Invalid(format!("damping_c must be positive, got {}", self.damping_c)));
        }
        let workspace = self.workspace()?;
        let spec = self.nav_spec()?;
        let starts = self.start_points(&workspace);
        let sim = self.sim.clone().unwrap_or_default().apply(self.damping_c);
        Ok(Scene {
            workspace,
            spec,
            sim,
            starts,
        })
    }

    /// Replaces the obstacle list with the bodies of `ws`, writing declared
    /// joints back as ball joints.
    pub fn set_workspace(&mut self, ws: &Workspace) {
        self.outer_radius = ws.outer_radius();
        self.obstacles = ws
            .bodies()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let joint = ws.joints().iter().find(|j| j.body == i);
                match (b, joint) {
                    (Body::Primitive(Obstacle::Sphere(s)), Some(j)) => ObstacleSpec::BallJoint {
                        center: s.center().to_array(),
                        radius: s.radius(),
                        members: j.members.clone(),
                    },
                    (Body::Primitive(o), _) => PrimitiveSpec::from_obstacle(o)
                        .expect("bodies are never the workspace wall")
                        .into(),
                    (Body::Merged(m), _) => ObstacleSpec::Merged {
                        p: m.exponent(),
                        members: m
                            .members()
                            .iter()
                            .map(|o| PrimitiveSpec::from_obstacle(o).expect("members are primitives"))
                            .collect(),
                    },
                }
            })
            .collect();
    }
}

/// Start positions spread over a sphere concentric with the workspace,
/// skipping points that are not clear of every obstacle by `min_beta`.
pub fn sample_starts(ws: &Workspace, s: &StartSampling) -> Vec<Vec3> {
    let radius = s.radius_fraction * ws.outer_radius();
    let clear = |x: Vec3| (0..ws.factor_count()).all(|i| ws.factor_value(i, x) > s.min_beta);
    match s.mode {
        SamplingMode::Shell => Halton::new(s.seed)
            .take(s.count.saturating_mul(1000).max(1000))
            .map(|u| unit_direction(u[0], u[1]) * radius)
            .filter(|&x| clear(x))
            .take(s.count)
            .collect(),
    }
}

/// Reads whitespace- or comma-separated `x y z` rows; `#` starts a comment.
pub fn parse_points(text: &str) -> Result<Vec<Vec3>, SceneError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| SceneError::Parse {
                path: format!("line {}", n + 1),
                message: format!("{e}"),
            })?;
        match vals[..] {
            [x, y, z] if x.is_finite() && y.is_finite() && z.is_finite() => out.push(Vec3::new(x, y, z)),
            _ => {
                return Err(SceneError::Parse {
                    path: format!("line {}", n + 1),
                    message: "expected three finite numbers".into(),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "version": 1,
        "outer_radius": 5.0,
        "target": [0.0, 0.0, 0.0],
        "k": 4,
        "obstacles": [
            {"type": "sphere", "center": [2.0, 0.0, 0.0], "radius": 0.5},
            {"type": "capped_cylinder", "p1": [-1.0, 2.0, 0.0], "p2": [1.0, 2.0, 0.0], "radius": 0.2},
            {"type": "merged", "p": 2.0, "members": [
                {"type": "sphere", "center": [0.0, -2.0, 0.0], "radius": 0.4},
                {"type": "sphere", "center": [0.0, -2.5, 0.0], "radius": 0.4}
            ]}
        ],
        "starts": [[4.0, 0.1, 0.0]]
    }"#;

    #[test]
    fn parses_and_resolves() {
        let f = SceneFile::from_json(SMALL).unwrap();
        assert_eq!(f.potential, PotentialName::Psi);
        assert_eq!(f.damping_c, 0.6);
        let s = f.resolve().unwrap();
        assert_eq!(s.workspace.bodies().len(), 3);
        assert!(matches!(s.workspace.bodies()[2], Body::Merged(_)));
        assert_eq!(s.starts, vec![Vec3::new(4.0, 0.1, 0.0)]);
    }

    #[test]
    fn errors_name_the_offending_field() {
        let bad = SMALL.replace("\"radius\": 0.5", "\"radius\": \"big\"");
        match SceneFile::from_json(&bad) {
            Err(SceneError::Parse { path, message }) => {
                assert_eq!(path, "obstacles[0]");
                assert!(message.contains("invalid type"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let unknown = SMALL.replace("\"k\": 4", "\"k\": 4, \"colour\": 1");
        assert!(matches!(SceneFile::from_json(&unknown), Err(SceneError::Parse { .. })));
        let negative = SMALL.replace("\"radius\": 0.5", "\"radius\": -0.5");
        let err = SceneFile::from_json(&negative).unwrap().resolve().unwrap_err();
        assert!(matches!(err, SceneError::Geometry { index: 0, .. }));
        let version = SMALL.replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(SceneFile::from_json(&version), Err(SceneError::Version(7))));
    }

    #[test]
    fn workspace_round_trip() {
        let f = SceneFile::from_json(SMALL).unwrap();
        let ws = f.workspace().unwrap();
        let mut g = f.clone();
        g.set_workspace(&ws);
        assert_eq!(g, f);
        let back = SceneFile::from_json(&g.to_json()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn sampled_starts_are_clear_and_deterministic() {
        let mut f = SceneFile::from_json(SMALL).unwrap();
        f.start_sampling = Some(StartSampling {
            count: 50,
            seed: 3,
            mode: SamplingMode::Shell,
            radius_fraction: 0.9,
            min_beta: 0.1,
        });
        let a = f.resolve().unwrap();
        let b = f.resolve().unwrap();
        assert_eq!(a.starts, b.starts);
        assert_eq!(a.starts.len(), 51);
        for x in &a.starts[1..] {
            assert!((x.norm() - 4.5).abs() < 1e-12);
        }
    }

    #[test]
    fn point_lists() {
        let pts = parse_points("# header\n1 2 3\n4,5,6  # trailing\n\n").unwrap();
        assert_eq!(pts, vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)]);
        assert!(parse_points("1 2\n").is_err());
        assert!(parse_points("1 2 x\n").is_err());
    }

    proptest::proptest! {
        #[test]
        fn points_survive_a_text_round_trip(
            pts in proptest::collection::vec(proptest::array::uniform3(-1e6f64..1e6), 0..20),
            comma in proptest::bool::ANY,
        ) {
            let sep = if comma { ", " } else { " \t" };
            let text: String = pts
                .iter()
                .map(|p| format!("{}{sep}{}{sep}{}  # c\n", p[0], p[1], p[2]))
                .collect();
            let back = parse_points(&text).unwrap();
            let want: Vec<Vec3> = pts.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
            proptest::prop_assert_eq!(back, want);
        }

        #[test]
        fn sphere_scenes_survive_a_json_round_trip(
            spheres in proptest::collection::vec(
                (proptest::array::uniform3(-4.0f64..4.0), 0.01f64..1.0), 0..6),
            k in 1u32..60,
        ) {
            let mut f = SceneFile::new(5.0, Vec3::ZERO, k);
            for (c, r) in spheres {
                f.obstacles.push(ObstacleSpec::Sphere { center: c, radius: r });
            }
            proptest::prop_assert_eq!(SceneFile::from_json(&f.to_json()).unwrap(), f);
        }
    }
}
