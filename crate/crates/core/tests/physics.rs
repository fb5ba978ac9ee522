use clutter_core::math::Vec2;
use clutter_core::physics2d::{create_world, BodyId, BodyKind, PhysicsConfig, PhysicsError, World};
use clutter_core::scene::{generate_grid_scene, Bounds, SceneGenParams, SceneObject, SceneSpec};
use clutter_core::strategies::VelocityCmd;

const G: f64 = 9.81;

fn obj(x: f64, y: f64, width: f64, depth: f64, mass: f64) -> SceneObject {
    SceneObject { catalog_id: 0, width, depth, mass, x, y, yaw: 0.0, darkness: 0.5 }
}

fn scene_with(objects: Vec<SceneObject>) -> SceneSpec {
    let mut s = SceneSpec::empty(Bounds::default(), 0.265, Vec2::new(0.265, 0.336));
    s.objects = objects;
    s
}

fn run(world: &mut World, cmd: VelocityCmd, seconds: f64) {
    let n = (seconds / world.dt()).round() as usize;
    for _ in 0..n {
        world.step(&cmd).expect("step");
    }
}

#[test]
fn empty_scene_has_walls_and_effector_only() {
    let w = create_world(&scene_with(vec![]), &PhysicsConfig::default()).unwrap();
    assert_eq!(w.bodies().len(), 4);
    assert_eq!(w.bodies().iter().filter(|b| b.kind == BodyKind::Wall).count(), 3);
    assert_eq!(w.object_ids().count(), 0);
}

#[test]
fn single_object_world() {
    let w = create_world(&scene_with(vec![obj(0.265, 0.19, 0.05, 0.05, 0.3)]), &PhysicsConfig::default()).unwrap();
    assert_eq!(w.bodies().len(), 5);
    let movable: f64 = w.object_ids().map(|id| w.body(id).unwrap().mass).sum();
    assert_eq!(movable, 0.3);
}

#[test]
fn grid_scene_body_count_matches_spec() {
    let spec = generate_grid_scene(7, &SceneGenParams::default()).unwrap();
    let w = create_world(&spec, &PhysicsConfig::default()).unwrap();
    assert_eq!(w.object_ids().count(), spec.objects.len());
    assert_eq!(w.bodies().len(), spec.objects.len() + 4);
}

#[test]
fn overlapping_objects_are_rejected_with_the_pair() {
    let spec = scene_with(vec![obj(0.2, 0.2, 0.05, 0.05, 0.3), obj(0.22, 0.2, 0.05, 0.05, 0.3)]);
    match create_world(&spec, &PhysicsConfig::default()) {
        Err(PhysicsError::Overlap { a, b }) => assert_eq!((a, b), (BodyId(3), BodyId(4))),
        other => panic!("expected overlap, got {other:?}"),
    }
}

#[test]
fn sliding_object_stops_at_coulomb_time() {
    // mu g = 2 m/s^2, so 0.1 m/s stops after 0.05 s, about v^2 / (2 mu g) downrange
    let cfg = PhysicsConfig { floor_friction: 2.0 / G, ..PhysicsConfig::default() };
    let mut w = create_world(&scene_with(vec![obj(0.265, 0.19, 0.05, 0.05, 0.3)]), &cfg).unwrap();
    let id = BodyId(3);
    w.set_body_velocity(id, Vec2::new(0.1, 0.0), 0.0).unwrap();
    let mut prev = 0.1;
    let mut stop_time = None;
    while w.time() < 0.2 {
        w.step(&VelocityCmd::ZERO).unwrap();
        let v = w.body(id).unwrap().linear_velocity.length();
        assert!(v <= prev + 1e-12, "speed rose from {prev} to {v}");
        prev = v;
        if v < 1e-9 && stop_time.is_none() {
            stop_time = Some(w.time());
        }
    }
    let t = stop_time.expect("object never stopped");
    assert!(t <= 0.05 + 1e-9, "stopped at {t}");
    assert!(t >= 0.05 - w.dt() - 1e-9, "stopped early at {t}");
    // semi-implicit Euler: velocity is reduced before each position update
    let (dt, dv) = (w.dt(), 2.0 * w.dt());
    let expected: f64 = (1..=12).map(|k| (0.1 - k as f64 * dv).max(0.0) * dt).sum();
    let slid = w.body(id).unwrap().position.x - 0.265;
    assert!((slid - expected).abs() < 1e-9, "slid {slid}, expected {expected}");
    assert!((slid - 0.0025).abs() < 0.1 * 0.0025);
}

#[test]
fn zero_command_at_rest_only_advances_time() {
    let spec = generate_grid_scene(3, &SceneGenParams::default()).unwrap();
    let mut w = create_world(&spec, &PhysicsConfig::default()).unwrap();
    let before: Vec<_> = w.bodies().iter().map(|b| (b.position, b.angle)).collect();
    w.step(&VelocityCmd::ZERO).unwrap();
    let after: Vec<_> = w.bodies().iter().map(|b| (b.position, b.angle)).collect();
    assert_eq!(before, after);
    assert_eq!(w.time(), w.dt());
}

#[test]
fn effector_pushing_a_wall_jammed_object_is_held_back() {
    let depth = Bounds::default().depth;
    let mut w = create_world(&scene_with(vec![obj(0.265, depth - 0.03, 0.06, 0.06, 0.3)]), &PhysicsConfig::default()).unwrap();
    w.set_effector_pose(Vec2::new(0.265, depth - 0.062), 0.0);
    let v_max = 0.045;
    run(&mut w, VelocityCmd::new(0.0, v_max, 0.0), 1.0);
    assert!(w.effector_tip_velocity().length() < 0.1 * v_max);
    let contacts = w.contacts_on_body(w.effector_id()).unwrap();
    let pushed: f64 = contacts.iter().filter(|c| c.involves(BodyId(3))).map(|c| c.normal_force).sum();
    assert!(pushed > 0.0);
    // the servo saturates at its force bound
    assert!(pushed <= 15.0 + 0.5, "push {pushed}");
}

#[test]
fn wall_reaction_balances_a_steady_push() {
    // a known 3 N load into the back wall; static floor friction can carry
    // at most mu m g of it
    let depth = Bounds::default().depth;
    let cfg = PhysicsConfig::default();
    let m = 0.3;
    let mut w = create_world(&scene_with(vec![obj(0.265, depth - 0.03, 0.06, 0.06, m)]), &cfg).unwrap();
    let id = BodyId(3);
    w.set_external_force(id, Vec2::new(0.0, 3.0)).unwrap();
    run(&mut w, VelocityCmd::ZERO, 1.0);
    let wall: f64 = w.contacts_on_body(id).unwrap().iter().filter(|c| c.involves(BodyId(2))).map(|c| c.normal_force).sum();
    assert!((wall - 3.0).abs() <= cfg.floor_friction * m * G + 0.05, "wall reaction {wall}");
    assert!(w.body(id).unwrap().linear_velocity.length() < 1e-6);
}

#[test]
fn free_body_has_no_contacts() {
    let mut w = create_world(&scene_with(vec![obj(0.265, 0.19, 0.05, 0.05, 0.3)]), &PhysicsConfig::default()).unwrap();
    w.step(&VelocityCmd::ZERO).unwrap();
    assert!(w.contacts_on_body(BodyId(3)).unwrap().is_empty());
    assert!(matches!(w.contacts_on_body(BodyId(99)), Err(PhysicsError::UnknownBody(_))));
}

#[test]
fn effector_rotating_in_a_slot_is_pinched_from_both_sides() {
    // two objects against the side walls of a narrow scene leave a slot a
    // hair wider than the link
    let bounds = Bounds { width: 0.2025, depth: 0.38 };
    let mut s = SceneSpec::empty(bounds, 0.10125, Vec2::new(0.10125, 0.3));
    s.objects = vec![obj(0.044, 0.044, 0.088, 0.088, 0.4), obj(bounds.width - 0.044, 0.044, 0.088, 0.088, 0.4)];
    let mut w = create_world(&s, &PhysicsConfig::default()).unwrap();
    w.set_effector_pose(Vec2::new(0.10125, 0.08), 0.0);
    run(&mut w, VelocityCmd::new(0.0, 0.0, 0.1), 1.0);
    let contacts: Vec<_> = w.contacts_on_body(w.effector_id()).unwrap().into_iter().filter(|c| c.normal_force > 0.0).collect();
    let id = w.effector_id();
    let pushes: Vec<Vec2> = contacts.iter().map(|c| c.force_on(id)).collect();
    assert!(pushes.len() >= 2, "contacts: {contacts:?}");
    let opposing = pushes.iter().any(|a| pushes.iter().any(|b| a.x * b.x < 0.0));
    assert!(opposing, "forces on link: {pushes:?}");
}

fn scripted(w: &mut World, steps: usize) {
    for k in 0..steps {
        let t = k as f64 * w.dt();
        let cmd = VelocityCmd::new(0.03 * (1.7 * t).sin(), 0.045, 0.1 * (0.9 * t).cos());
        w.step(&cmd).unwrap();
    }
}

#[test]
fn identical_runs_hash_identically() {
    let spec = generate_grid_scene(11, &SceneGenParams::default()).unwrap();
    let cfg = PhysicsConfig::default();
    let mut a = create_world(&spec, &cfg).unwrap();
    let mut b = create_world(&spec, &cfg).unwrap();
    scripted(&mut a, 2400);
    scripted(&mut b, 2400);
    assert_eq!(a.state_hash(), b.state_hash());
    let mut c = create_world(&spec, &cfg).unwrap();
    scripted(&mut c, 2399);
    assert_ne!(a.state_hash(), c.state_hash());
}

#[test]
fn full_push_through_clutter_respects_contact_invariants() {
    let spec = generate_grid_scene(5, &SceneGenParams::default()).unwrap();
    let cfg = PhysicsConfig::default();
    let mut w = create_world(&spec, &cfg).unwrap();
    let walls: Vec<_> = w.bodies().iter().filter(|b| b.kind == BodyKind::Wall).map(|b| (b.position, b.angle)).collect();
    // 30 s of scripted pushing into the densest part of the scene
    for k in 0..7200 {
        let t = k as f64 * w.dt();
        w.step(&VelocityCmd::new(0.02 * (0.8 * t).sin(), 0.045, 0.05 * (0.5 * t).sin())).unwrap();
        for c in w.contacts() {
            assert!((c.normal.length() - 1.0).abs() <= 1e-9);
            assert!(c.normal_force >= 0.0);
            assert!(c.tangent_force.abs() <= c.friction_coeff * c.normal_force + 1e-6, "{c:?}");
        }
    }
    assert!(w.max_penetration() <= cfg.penetration_tolerance, "max penetration {}", w.max_penetration());
    let after: Vec<_> = w.bodies().iter().filter(|b| b.kind == BodyKind::Wall).map(|b| (b.position, b.angle)).collect();
    assert_eq!(walls, after);
}

#[test]
fn free_objects_only_slow_down() {
    let spec = generate_grid_scene(2, &SceneGenParams::default()).unwrap();
    let mut w = create_world(&spec, &PhysicsConfig::default()).unwrap();
    // kick one isolated-ish object and watch speeds while nothing touches it
    let id = w.object_ids().next().unwrap();
    w.set_body_velocity(id, Vec2::new(0.0, 0.05), 0.5).unwrap();
    let mut prev = w.body(id).unwrap().linear_velocity.length();
    for _ in 0..240 {
        w.step(&VelocityCmd::ZERO).unwrap();
        if !w.contacts_on_body(id).unwrap().is_empty() {
            break;
        }
        let v = w.body(id).unwrap().linear_velocity.length();
        assert!(v <= prev + 1e-12);
        prev = v;
    }
}
