use navfield_core::analysis::{find_critical_points, SearchConfig};
use navfield_core::field::{value, value_gradient};
use navfield_core::transform::TransformConfig;
use navfield_core::{
    simulate, transform, validate, Body, CriticalClass, ExpansionMode, NavSpec, Obstacle, Outcome, Potential,
    SimConfig, Vec3, Workspace,
};
use proptest::prelude::*;

fn spheres(list: &[([f64; 3], f64)]) -> Workspace {
    let bodies = list
        .iter()
        .map(|&(c, r)| Body::from(Obstacle::sphere(Vec3::new(c[0], c[1], c[2]), r).unwrap()))
        .collect();
    Workspace::new(5.0, bodies).unwrap()
}

fn one_sphere() -> (Workspace, NavSpec) {
    (spheres(&[([2.0, 0.0, 0.0], 0.6)]), NavSpec::new(Potential::Psi, 4, Vec3::ZERO).unwrap())
}

#[test]
fn validated_scene_has_one_minimum_and_a_saddle_behind_the_sphere() {
    let (ws, spec) = one_sphere();
    assert!(validate(&ws, spec.target).is_valid());
    let cfg = SearchConfig { n_starts: 200, ..SearchConfig::default() };
    let rep = find_critical_points(&spec, &ws, &cfg);
    let minima: Vec<_> = rep.points.iter().filter(|p| p.class == CriticalClass::Minimum).collect();
    assert_eq!(minima.len(), 1);
    assert!(minima[0].x.norm() < 1e-6);
    let saddle = rep.points.iter().find(|p| p.class == CriticalClass::Saddle).expect("saddle");
    // by symmetry the saddle sits on the ray through the sphere, past it
    assert!(saddle.x.x > 2.6 && saddle.x.y.abs() < 1e-6 && saddle.x.z.abs() < 1e-6, "{:?}", saddle.x);
}

#[test]
fn robot_reaches_the_target_around_the_sphere() {
    let (ws, spec) = one_sphere();
    let t = simulate(&spec, &ws, &SimConfig::default(), Vec3::new(4.0, 0.3, 0.0)).unwrap();
    assert_eq!(t.outcome, Outcome::Converged);
    assert!(t.min_factor > 0.0);
    assert!(t.final_state().x.norm() <= 1e-3);
}

#[test]
fn zero_radius_transform_keeps_the_field() {
    let (ws, spec) = one_sphere();
    let out = transform(&ws, spec.target, 0.0, ExpansionMode::MinimalEvolute, &TransformConfig::default()).unwrap();
    for x in [Vec3::new(1.0, 1.0, 1.0), Vec3::new(-3.0, 0.5, 2.0), Vec3::new(3.5, -0.2, 0.1)] {
        assert_eq!(value(&spec, &out.workspace, x).unwrap(), value(&spec, &ws, x).unwrap());
    }
}

#[test]
fn growing_the_robot_shrinks_free_space() {
    let (ws, spec) = one_sphere();
    let out = transform(&ws, spec.target, 0.3, ExpansionMode::FullEnclosure, &TransformConfig::default()).unwrap();
    assert!(ws.is_free(Vec3::new(2.0, 0.75, 0.0)));
    assert!(!out.workspace.is_free(Vec3::new(2.0, 0.75, 0.0)));
    assert!(!out.workspace.is_free(Vec3::new(0.0, 0.0, 4.8)));
}

fn scene() -> impl Strategy<Value = Vec<([f64; 3], f64)>> {
    // spheres on separate slots along a circle cannot overlap each other
    // or the target at the origin
    proptest::collection::vec((0.2f64..0.5, -0.5f64..0.5), 1..6).prop_map(|v| {
        v.iter()
            .enumerate()
            .map(|(i, &(r, z))| {
                let a = i as f64 * std::f64::consts::TAU / 6.0;
                ([2.5 * a.cos(), 2.5 * a.sin(), z], r)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn potentials_stay_in_the_unit_interval(
        list in scene(),
        p in proptest::array::uniform3(-4.9f64..4.9),
        k in 1u32..30,
    ) {
        let ws = spheres(&list);
        let x = Vec3::new(p[0], p[1], p[2]);
        prop_assume!(x.norm() < 4.9 && ws.is_free(x));
        for pot in [Potential::Psi, Potential::Phi] {
            let spec = NavSpec::new(pot, k, Vec3::ZERO).unwrap();
            let (v, g) = value_gradient(&spec, &ws, x).unwrap();
            prop_assert!((0.0..=1.0).contains(&v), "{pot:?} {v}");
            prop_assert!(g.x.is_finite() && g.y.is_finite() && g.z.is_finite());
        }
    }

    #[test]
    fn gradient_predicts_small_steps(
        list in scene(),
        p in proptest::array::uniform3(-4.0f64..4.0),
        d in proptest::array::uniform3(-1.0f64..1.0),
    ) {
        let ws = spheres(&list);
        let x = Vec3::new(p[0], p[1], p[2]);
        let dir = Vec3::new(d[0], d[1], d[2]);
        prop_assume!(x.norm() < 4.0 && dir.norm() > 0.1 && ws.min_factor(x).1 > 0.05);
        let dir = dir * (1.0 / dir.norm());
        let spec = NavSpec::new(Potential::Psi, 4, Vec3::ZERO).unwrap();
        let (_, g) = value_gradient(&spec, &ws, x).unwrap();
        let h = 1e-5;
        let fd = (value(&spec, &ws, x + dir * h).unwrap() - value(&spec, &ws, x - dir * h).unwrap()) / (2.0 * h);
        prop_assert!((fd - g.dot(dir)).abs() <= 1e-6 * (1.0 + g.norm()), "{fd} vs {}", g.dot(dir));
    }

    #[test]
    fn value_is_zero_at_the_target_and_positive_nearby(list in scene(), t in proptest::array::uniform3(-1.0f64..1.0)) {
        let ws = spheres(&list);
        let target = Vec3::new(t[0], t[1], t[2]);
        let spec = NavSpec::new(Potential::Psi, 4, target).unwrap();
        prop_assert_eq!(value(&spec, &ws, target).unwrap(), 0.0);
        prop_assert!(value(&spec, &ws, target + Vec3::new(0.0, 0.0, 0.1)).unwrap() > 0.0);
    }
}
