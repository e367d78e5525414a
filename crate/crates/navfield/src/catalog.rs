//! Built-in scenes: the truss, the joint-free cylinder arrangements, small
//! diagnostic scenes and seeded random scenes.

use navfield_core::sampling::Halton;
use navfield_core::validate::surface_gap;
use navfield_core::{validate, Body, Obstacle, Vec3, Workspace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scene_file::{ObstacleSpec, PotentialName, PrimitiveSpec, SamplingMode, SceneFile, StartSampling};

fn arr(x: f64, y: f64, z: f64) -> [f64; 3] {
    [x, y, z]
}

fn shell_starts(count: usize, seed: u64, radius_fraction: f64, min_beta: f64) -> StartSampling {
    StartSampling {
        count,
        seed,
        mode: SamplingMode::Shell,
        radius_fraction,
        min_beta,
    }
}

/// Dimensions of the truss scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrussParams {
    pub outer_radius: f64,
    pub half_width: f64,
    /// Heights of the three corner layers, bottom first.
    pub layers: [f64; 3],
    pub joint_radius: f64,
    pub bar_radius: f64,
    /// Bars stop this far short of the joint centers.
    pub setback: f64,
    /// Starts lie on a sphere of this fraction of the workspace radius.
    pub start_radius_fraction: f64,
}

impl Default for TrussParams {
    fn default() -> Self {
        Self {
            outer_radius: 5.0,
            half_width: 1.75,
            layers: [-3.75, -1.25, 1.5],
            joint_radius: 0.25,
            bar_radius: 0.1,
            setback: 0.22,
            start_radius_fraction: 0.9,
        }
    }
}

/// Two stacked open boxes standing on four legs: 12 corner joints, 20 bars
/// and 4 legs running out through the floor of the workspace, 36
/// obstacles in all. The target is the origin, inside the upper box.
pub fn truss() -> SceneFile {
    truss_with(&TrussParams::default())
}

pub fn truss_with(p: &TrussParams) -> SceneFile {
    let w = p.half_width;
    let square = [(-w, -w), (w, -w), (w, w), (-w, w)];
    let corners: Vec<Vec3> = p
        .layers
        .iter()
        .flat_map(|&z| square.iter().map(move |&(x, y)| Vec3::new(x, y, z)))
        .collect();
    let bar = |a: Vec3, b: Vec3| {
        let d = (b - a).normalized().expect("distinct corners");
        ((a + d * p.setback).to_array(), (b - d * p.setback).to_array())
    };
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for layer in 0..3 {
        for i in 0..4 {
            pairs.push((4 * layer + i, 4 * layer + (i + 1) % 4));
        }
    }
    for layer in 0..2 {
        for i in 0..4 {
            pairs.push((4 * layer + i, 4 * (layer + 1) + i));
        }
    }
    let first_bar = corners.len();
    let first_leg = first_bar + pairs.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); corners.len()];
    for (n, &(a, b)) in pairs.iter().enumerate() {
        members[a].push(first_bar + n);
        members[b].push(first_bar + n);
    }
    for (i, m) in members.iter_mut().take(4).enumerate() {
        m.push(first_leg + i);
    }

    let mut f = SceneFile::new(p.outer_radius, Vec3::ZERO, 40);
    f.name = Some("truss".into());
    for (c, m) in corners.iter().zip(members) {
        f.obstacles.push(ObstacleSpec::BallJoint {
            center: c.to_array(),
            radius: p.joint_radius,
            members: m,
        });
    }
    for &(a, b) in &pairs {
        let (p1, p2) = bar(corners[a], corners[b]);
        f.obstacles.push(ObstacleSpec::CappedCylinder {
            p1,
            p2,
            radius: p.bar_radius,
        });
    }
    for c in &corners[..4] {
        let top = *c - Vec3::Z * p.setback;
        f.obstacles.push(ObstacleSpec::CappedCylinder {
            p1: top.to_array(),
            p2: arr(c.x, c.y, -2.0 * p.outer_radius),
            radius: p.bar_radius,
        });
    }
    f.damping_c = 0.6;
    f.start_sampling = Some(shell_starts(100, 1, p.start_radius_fraction, 0.0));
    f
}

/// The truss with all 36 obstacles fused into one smooth union.
pub fn merged_truss(k: u32) -> SceneFile {
    let mut f = truss();
    let members = f
        .obstacles
        .iter()
        .map(|o| match o {
            ObstacleSpec::BallJoint { center, radius, .. } => PrimitiveSpec::Sphere {
                center: *center,
                radius: *radius,
            },
            ObstacleSpec::CappedCylinder { p1, p2, radius } => PrimitiveSpec::CappedCylinder {
                p1: *p1,
                p2: *p2,
                radius: *radius,
            },
            _ => unreachable!("the truss has only joints and bars"),
        })
        .collect();
    f.name = Some("merged_truss".into());
    f.obstacles = vec![ObstacleSpec::Merged { p: 2.0, members }];
    f.k = k;
    f
}

/// Four legs from a common hub along the directions of a regular
/// tetrahedron, pairwise about 109.47 degrees apart, reaching out through
/// the wall. No joint sphere covers the hub.
pub fn tetrahedral() -> SceneFile {
    let r0 = 5.0;
    let hub = Vec3::new(0.0, 0.0, 0.0);
    let dirs = [
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, -1.0, -1.0),
        Vec3::new(-1.0, 1.0, -1.0),
        Vec3::new(-1.0, -1.0, 1.0),
    ];
    let mut f = SceneFile::new(r0, Vec3::new(1.5, 0.0, 0.0), 5);
    f.name = Some("tetrahedral".into());
    for d in dirs {
        let d = d.normalized().unwrap();
        f.obstacles.push(ObstacleSpec::CappedCylinder {
            p1: hub.to_array(),
            p2: (hub + d * (2.0 * r0)).to_array(),
            radius: 0.3,
        });
    }
    f.start_sampling = Some(shell_starts(100, 2, 0.9, 0.0));
    f
}

/// Three mutually perpendicular full cylinders crossing at the origin.
pub fn perpendicular_cylinders() -> SceneFile {
    let mut f = SceneFile::new(5.0, Vec3::new(1.5, 0.0, 1.5), 5);
    f.name = Some("perpendicular_cylinders".into());
    for axis in [Vec3::X, Vec3::Y, Vec3::Z] {
        f.obstacles.push(ObstacleSpec::FullCylinder {
            point: arr(0.0, 0.0, 0.0),
            axis: axis.to_array(),
            radius: 0.3,
        });
    }
    f.start_sampling = Some(shell_starts(100, 3, 0.9, 0.0));
    f
}

/// No obstacles at all.
pub fn empty() -> SceneFile {
    let mut f = SceneFile::new(5.0, Vec3::ZERO, 2);
    f.name = Some("empty".into());
    f.starts = vec![arr(3.0, 1.0, -2.0), arr(-4.0, 0.5, 0.5)];
    f
}

/// One sphere between the target and the far side of the workspace; the
/// field has a saddle behind the sphere.
pub fn sphere_between() -> SceneFile {
    let mut f = SceneFile::new(5.0, Vec3::ZERO, 4);
    f.name = Some("sphere_between".into());
    f.obstacles.push(ObstacleSpec::Sphere {
        center: arr(2.0, 0.0, 0.0),
        radius: 0.6,
    });
    f.starts = vec![arr(4.0, 0.5, 0.0), arr(-3.0, 1.0, 1.0)];
    f
}

/// Two spheres touching at one point.
pub fn tangent_spheres() -> SceneFile {
    let mut f = SceneFile::new(5.0, Vec3::new(0.0, 0.0, 3.0), 4);
    f.name = Some("tangent_spheres".into());
    f.obstacles.push(ObstacleSpec::Sphere {
        center: arr(-1.0, 0.0, 0.0),
        radius: 1.0,
    });
    f.obstacles.push(ObstacleSpec::Sphere {
        center: arr(1.0, 0.0, 0.0),
        radius: 1.0,
    });
    f
}

/// Three spheres overlapping about a common point.
pub fn triple_overlap() -> SceneFile {
    let mut f = SceneFile::new(5.0, Vec3::new(0.0, 0.0, 3.5), 4);
    f.name = Some("triple_overlap".into());
    for c in [arr(0.6, 0.0, 0.0), arr(-0.3, 0.52, 0.0), arr(-0.3, -0.52, 0.0)] {
        f.obstacles.push(ObstacleSpec::Sphere { center: c, radius: 0.8 });
    }
    f
}

/// Two parallel bars 0.3 apart without a joint.
pub fn close_cylinders() -> SceneFile {
    let mut f = SceneFile::new(5.0, Vec3::new(0.0, 0.0, 3.0), 4);
    f.name = Some("close_cylinders".into());
    f.obstacles.push(ObstacleSpec::CappedCylinder {
        p1: arr(-2.0, -0.25, 0.0),
        p2: arr(2.0, -0.25, 0.0),
        radius: 0.1,
    });
    f.obstacles.push(ObstacleSpec::CappedCylinder {
        p1: arr(-2.0, 0.25, 0.0),
        p2: arr(2.0, 0.25, 0.0),
        radius: 0.1,
    });
    f.starts = vec![arr(0.0, 0.0, -3.0)];
    f
}

/// A target deep in a wide workspace with starts near the wall, where
/// `phi` is nearly flat.
pub fn plateau() -> SceneFile {
    let mut f = SceneFile::new(5.0, Vec3::ZERO, 40);
    f.name = Some("plateau".into());
    for (c, r) in [(arr(2.5, 0.0, 0.0), 0.6), (arr(-1.5, 2.0, 0.5), 0.5), (arr(0.0, -2.0, -1.5), 0.7)] {
        f.obstacles.push(ObstacleSpec::Sphere { center: c, radius: r });
    }
    f.start_sampling = Some(shell_starts(20, 4, 0.8, 0.0));
    f
}

/// Settings for [`random_scene`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSceneConfig {
    pub outer_radius: f64,
    pub spheres: usize,
    pub capsules: usize,
    /// Number of deliberately overlapping sphere pairs.
    pub overlapping_pairs: usize,
    pub k: u32,
}

impl Default for RandomSceneConfig {
    fn default() -> Self {
        Self {
            outer_radius: 5.0,
            spheres: 4,
            capsules: 3,
            overlapping_pairs: 0,
            k: 6,
        }
    }
}

fn min_gap(ws: &Workspace, candidates: &[Obstacle]) -> f64 {
    let r0 = ws.outer_radius();
    ws.bodies()
        .iter()
        .flat_map(|b| b.primitives())
        .flat_map(|p| candidates.iter().filter_map(move |c| surface_gap(p, c, r0)))
        .fold(f64::INFINITY, f64::min)
}

fn extent(o: &Obstacle) -> f64 {
    match o {
        Obstacle::CappedCylinder(c) => c.length() / 2.0,
        _ => 0.0,
    }
}

fn ball(rng: &mut ChaCha8Rng, reach: f64) -> Vec3 {
    loop {
        let p = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if p.norm() <= 1.0 {
            return p * reach;
        }
    }
}

/// A seeded scene of spheres and bars that passes validation, with the
/// target and the given number of overlapping sphere pairs.
pub fn random_scene(seed: u64, cfg: &RandomSceneConfig) -> SceneFile {
    let r0 = cfg.outer_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clearance = 0.15 * r0 / 5.0;
    'attempt: loop {
        let target = ball(&mut rng, 0.5 * r0);
        let mut ws = Workspace::new(r0, Vec::new()).unwrap();
        let mut bodies: Vec<Body> = Vec::new();
        let try_add = |ws: &mut Workspace, bodies: &mut Vec<Body>, group: Vec<Obstacle>| {
            let inside = group
                .iter()
                .all(|o| o.core_distance(Vec3::ZERO) + o.radius() + extent(o) < 0.9 * r0);
            let off_target = group
                .iter()
                .all(|o| o.core_distance(target) > o.radius() + 0.1 * r0);
            if inside && off_target && min_gap(ws, &group) > clearance {
                bodies.extend(group.into_iter().map(Body::from));
                *ws = Workspace::new(r0, bodies.clone()).unwrap();
                true
            } else {
                false
            }
        };
        let scale = r0 / 5.0;
        let mut tries = 0;
        let mut placed = 0;
        while placed < cfg.overlapping_pairs {
            tries += 1;
            if tries > 10_000 {
                continue 'attempt;
            }
            let c = ball(&mut rng, 0.6 * r0);
            let (ra, rb) = (rng.random_range(0.4..0.7) * scale, rng.random_range(0.4..0.7) * scale);
            let d = rng.random_range(0.4..0.8) * (ra + rb);
            let u = ball(&mut rng, 1.0).normalized().unwrap_or(Vec3::X);
            let pair = vec![
                Obstacle::sphere(c, ra).unwrap(),
                Obstacle::sphere(c + u * d, rb).unwrap(),
            ];
            if try_add(&mut ws, &mut bodies, pair) {
                placed += 1;
            }
        }
        let mut placed = 0;
        while placed < cfg.spheres {
            tries += 1;
            if tries > 10_000 {
                continue 'attempt;
            }
            let s = Obstacle::sphere(ball(&mut rng, 0.7 * r0), rng.random_range(0.3..0.8) * scale).unwrap();
            if try_add(&mut ws, &mut bodies, vec![s]) {
                placed += 1;
            }
        }
        let mut placed = 0;
        while placed < cfg.capsules {
            tries += 1;
            if tries > 10_000 {
                continue 'attempt;
            }
            let a = ball(&mut rng, 0.6 * r0);
            let u = ball(&mut rng, 1.0).normalized().unwrap_or(Vec3::Z);
            let len = rng.random_range(1.0..2.5) * scale;
            let c = Obstacle::capped_cylinder(a, a + u * len, rng.random_range(0.1..0.3) * scale).unwrap();
            if try_add(&mut ws, &mut bodies, vec![c]) {
                placed += 1;
            }
        }
        if !validate(&ws, target).is_valid() {
            continue;
        }
        let mut f = SceneFile::new(r0, target, cfg.k);
        f.name = Some(format!("random_{seed}"));
        f.set_workspace(&ws);
        f.start_sampling = Some(shell_starts(20, seed, 0.9, 0.0));
        return f;
    }
}

/// `n` free points spread through the workspace of `f`, for field checks.
pub fn free_points(ws: &Workspace, n: usize, seed: u64) -> Vec<Vec3> {
    let r0 = ws.outer_radius();
    Halton::new(seed)
        .map(|u| navfield_core::sampling::ball_point(u, Vec3::ZERO, r0))
        .filter(|&x| ws.is_free(x))
        .take(n)
        .collect()
}

/// Every named scene, for the committed `scenes/` directory.
pub fn named_scenes() -> Vec<(&'static str, SceneFile)> {
    let mut plateau_phi = plateau();
    plateau_phi.potential = PotentialName::Phi;
    plateau_phi.name = Some("plateau_phi".into());
    vec![
        ("truss", truss()),
        ("merged_truss", merged_truss(10)),
        ("tetrahedral", tetrahedral()),
        ("perpendicular_cylinders", perpendicular_cylinders()),
        ("empty", empty()),
        ("sphere_between", sphere_between()),
        ("tangent_spheres", tangent_spheres()),
        ("triple_overlap", triple_overlap()),
        ("close_cylinders", close_cylinders()),
        ("plateau", plateau()),
        ("plateau_phi", plateau_phi),
    ]
}
