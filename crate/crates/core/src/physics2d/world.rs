use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::math::{wrap_angle, Vec2};
use crate::scene::{Bounds, SceneSpec};
use crate::strategies::VelocityCmd;

use super::body::{Body, BodyId, BodyKind, Collider, Shape, ShapeInstance};
use super::collide::{collide, RawManifold};
use super::{PhysicsConfig, PhysicsError, PhysicsFault};

const WALL_THICKNESS: f64 = 0.05;
/// Approach speed below which contacts do not bounce even with restitution.
const RESTITUTION_THRESHOLD: f64 = 0.01;

/// A resolved contact from the last completed step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub body_a: BodyId,
    pub body_b: BodyId,
    pub point: Vec2,
    /// Unit normal pointing from `body_a` to `body_b`.
    pub normal: Vec2,
    pub penetration_depth: f64,
    /// Force pushing the bodies apart, N.
    pub normal_force: f64,
    /// Friction force along `normal.cross_z()` acting on `body_b`, N.
    pub tangent_force: f64,
    pub friction_coeff: f64,
}

impl Contact {
    pub fn tangent(&self) -> Vec2 {
        self.normal.cross_z()
    }

    /// Total contact force acting on `body_b` (the reaction acts on `body_a`).
    pub fn force_on_b(&self) -> Vec2 {
        self.normal * self.normal_force + self.tangent() * self.tangent_force
    }

    /// Force this contact applies to `id`, zero if `id` is not involved.
    pub fn force_on(&self, id: BodyId) -> Vec2 {
        if id == self.body_b {
            self.force_on_b()
        } else if id == self.body_a {
            -self.force_on_b()
        } else {
            Vec2::ZERO
        }
    }

    pub fn involves(&self, id: BodyId) -> bool {
        self.body_a == id || self.body_b == id
    }
}

/// An object whose centroid crossed the open front of the scene.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushedOut {
    pub body: BodyId,
    pub time: f64,
}

/// In-plane wrench, world frame, moment about the effector tip.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vec2,
    pub moment: f64,
}

#[derive(Clone, Copy, Debug)]
struct SolverPoint {
    position: Vec2,
    r_a: Vec2,
    r_b: Vec2,
    separation: f64,
    feature: u32,
    normal_mass: f64,
    tangent_mass: f64,
    bias: f64,
    normal_impulse: f64,
    tangent_impulse: f64,
}

#[derive(Clone, Debug)]
struct SolverManifold {
    key: u64,
    a: usize,
    b: usize,
    normal: Vec2,
    friction: f64,
    points: [SolverPoint; 2],
    count: usize,
}

#[derive(Clone, Copy, Debug, Default)]
struct MotorImpulse {
    x: f64,
    y: f64,
    angular: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct FloorImpulse {
    linear: Vec2,
    angular: f64,
}

/// Geometry of the effector link in its own frame; the link axis is local +y
/// and the tip sits at `(0, length / 2)`.
#[derive(Clone, Copy, Debug)]
struct EffectorFrame {
    index: usize,
    half_length: f64,
}

/// Deterministic fixed-step planar world: three walls, floor-friction
/// objects, and one velocity-servoed effector link.
#[derive(Clone, Debug)]
pub struct World {
    bodies: Vec<Body>,
    config: PhysicsConfig,
    time: f64,
    steps: u64,
    bounds: Bounds,
    rng_seed: u64,
    effector: EffectorFrame,
    manifolds: Vec<SolverManifold>,
    motor: MotorImpulse,
    floor: Vec<FloorImpulse>,
    contacts: Vec<Contact>,
    pushed_out: Vec<PushedOut>,
    flagged_out: Vec<bool>,
    last_max_penetration: f64,
    max_penetration: f64,
}

/// Builds the world for a scene: walls on the left, right and back (front
/// open), every scene object at rest, and the effector with its tip at the
/// start position on the front edge, pointing into the scene.
pub fn create_world(scene: &SceneSpec, config: &PhysicsConfig) -> Result<World, PhysicsError> {
    config.validate()?;
    let b = scene.bounds;
    let t = WALL_THICKNESS;
    let mu = config.body_friction;
    let mut bodies = vec![
        Body::wall(BodyId(0), Vec2::new(-0.5 * t, 0.5 * (b.depth + t)), Vec2::new(0.5 * t, 0.5 * (b.depth + t)), mu),
        Body::wall(
            BodyId(1),
            Vec2::new(b.width + 0.5 * t, 0.5 * (b.depth + t)),
            Vec2::new(0.5 * t, 0.5 * (b.depth + t)),
            mu,
        ),
        Body::wall(BodyId(2), Vec2::new(0.5 * b.width, b.depth + 0.5 * t), Vec2::new(0.5 * b.width + t, 0.5 * t), mu),
    ];

    for (i, obj) in scene.objects.iter().enumerate() {
        let id = BodyId(bodies.len());
        if !(obj.mass > 0.0) || !(obj.width > 0.0) || !(obj.depth > 0.0) {
            return Err(PhysicsError::InvalidObject { index: i });
        }
        let body = Body::rect_object(
            id,
            Vec2::new(obj.x, obj.y),
            obj.yaw,
            obj.width,
            obj.depth,
            obj.mass,
            config.floor_friction,
            config.body_friction,
        );
        for inst in body.shape_instances() {
            let (lo, hi) = inst.aabb();
            if lo.x < -1e-9 || lo.y < -1e-9 || hi.x > b.width + 1e-9 || hi.y > b.depth + 1e-9 {
                return Err(PhysicsError::OutOfBounds { body: id });
            }
        }
        bodies.push(body);
    }

    let e = &config.effector;
    let index = bodies.len();
    let r = 0.5 * e.width;
    let half_length = 0.5 * e.length;
    let tip = Vec2::new(scene.start_x, -e.start_gap);
    let moment = e.mass * (e.length * e.length + e.width * e.width) / 12.0;
    bodies.push(Body {
        id: BodyId(index),
        kind: BodyKind::Effector,
        colliders: vec![
            Collider {
                shape: Shape::Rect { half_extents: Vec2::new(r, 0.5 * (e.length - r)) },
                offset: Vec2::new(0.0, -0.5 * r),
            },
            Collider { shape: Shape::Circle { radius: r }, offset: Vec2::new(0.0, half_length - r) },
        ],
        position: tip - Vec2::new(0.0, half_length),
        angle: 0.0,
        linear_velocity: Vec2::ZERO,
        angular_velocity: 0.0,
        mass: e.mass,
        moment,
        floor_friction_coeff: 0.0,
        body_friction_coeff: e.body_friction,
        inv_mass: 1.0 / e.mass,
        inv_moment: 1.0 / moment,
        friction_radius: 0.0,
        external_force: Vec2::ZERO,
    });

    let n = bodies.len();
    let world = World {
        bodies,
        config: config.clone(),
        time: 0.0,
        steps: 0,
        bounds: b,
        rng_seed: scene.seed,
        effector: EffectorFrame { index, half_length },
        manifolds: Vec::new(),
        motor: MotorImpulse::default(),
        floor: vec![FloorImpulse::default(); n],
        contacts: Vec::new(),
        pushed_out: Vec::new(),
        flagged_out: vec![false; n],
        last_max_penetration: 0.0,
        max_penetration: 0.0,
    };
    if let Some((a, b)) = world.first_overlap() {
        return Err(PhysicsError::Overlap { a, b });
    }
    Ok(world)
}

impl World {
    pub fn config(&self) -> &PhysicsConfig {
        &self.config
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn body(&self, id: BodyId) -> Option<&Body> {
        self.bodies.get(id.0)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn effector_id(&self) -> BodyId {
        BodyId(self.effector.index)
    }

    pub fn object_ids(&self) -> impl Iterator<Item = BodyId> + '_ {
        self.bodies.iter().filter(|b| b.kind == BodyKind::Object).map(|b| b.id)
    }

    /// Contacts resolved during the last completed step.
    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    pub fn contacts_on_body(&self, id: BodyId) -> Result<Vec<Contact>, PhysicsError> {
        if id.0 >= self.bodies.len() {
            return Err(PhysicsError::UnknownBody(id));
        }
        Ok(self.contacts.iter().filter(|c| c.involves(id)).copied().collect())
    }

    pub fn pushed_out(&self) -> &[PushedOut] {
        &self.pushed_out
    }

    /// Deepest penetration seen at the start of the last step.
    pub fn last_max_penetration(&self) -> f64 {
        self.last_max_penetration
    }

    /// Deepest penetration seen since the world was created.
    pub fn max_penetration(&self) -> f64 {
        self.max_penetration
    }

    /// Sets a constant external force on a body, applied every step until
    /// changed. Used by fixtures that need a known load.
    pub fn set_external_force(&mut self, id: BodyId, force: Vec2) -> Result<(), PhysicsError> {
        let body = self.bodies.get_mut(id.0).ok_or(PhysicsError::UnknownBody(id))?;
        body.external_force = force;
        Ok(())
    }

    /// Teleports an object, for fixture setup. Velocities are zeroed.
    pub fn set_body_pose(&mut self, id: BodyId, position: Vec2, angle: f64) -> Result<(), PhysicsError> {
        let body = self.bodies.get_mut(id.0).ok_or(PhysicsError::UnknownBody(id))?;
        if body.kind == BodyKind::Wall {
            return Err(PhysicsError::ImmovableBody(id));
        }
        body.position = position;
        body.angle = angle;
        body.linear_velocity = Vec2::ZERO;
        body.angular_velocity = 0.0;
        self.manifolds.clear();
        Ok(())
    }

    /// Sets an object's initial velocity, for fixture setup.
    pub fn set_body_velocity(&mut self, id: BodyId, linear: Vec2, angular: f64) -> Result<(), PhysicsError> {
        let body = self.bodies.get_mut(id.0).ok_or(PhysicsError::UnknownBody(id))?;
        if body.kind == BodyKind::Wall {
            return Err(PhysicsError::ImmovableBody(id));
        }
        body.linear_velocity = linear;
        body.angular_velocity = angular;
        Ok(())
    }

    /// Places the effector tip at `tip` with the link heading `heading`
    /// (radians from the +y axis, positive towards +x).
    pub fn set_effector_pose(&mut self, tip: Vec2, heading: f64) {
        let hl = self.effector.half_length;
        let body = &mut self.bodies[self.effector.index];
        body.angle = -heading;
        body.position = tip - body.rot().y_axis() * hl;
        body.linear_velocity = Vec2::ZERO;
        body.angular_velocity = 0.0;
        self.manifolds.clear();
    }

    pub fn effector(&self) -> &Body {
        &self.bodies[self.effector.index]
    }

    pub fn effector_length(&self) -> f64 {
        2.0 * self.effector.half_length
    }

    pub fn effector_tip(&self) -> Vec2 {
        let body = self.effector();
        body.position + body.rot().y_axis() * self.effector.half_length
    }

    /// Link heading measured from the +y axis, positive towards +x, in (−π, π].
    pub fn effector_heading(&self) -> f64 {
        wrap_angle(-self.effector().angle)
    }

    pub fn effector_tip_velocity(&self) -> Vec2 {
        self.effector().point_velocity(self.effector_tip())
    }

    /// Rate of change of [`World::effector_heading`].
    pub fn effector_heading_rate(&self) -> f64 {
        -self.effector().angular_velocity
    }

    /// Wrench the effector exerts on its surroundings during the last step,
    /// moment taken about the tip.
    pub fn effector_wrench(&self) -> Wrench {
        let id = self.effector_id();
        let tip = self.effector_tip();
        let mut w = Wrench::default();
        for c in self.contacts.iter().filter(|c| c.involves(id)) {
            let on_env = -c.force_on(id);
            w.force += on_env;
            w.moment += (c.point - tip).cross(on_env);
        }
        w
    }

    /// Digest of every body's pose and velocity bits plus the clock.
    pub fn state_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.steps.hash(&mut h);
        self.time.to_bits().hash(&mut h);
        for b in &self.bodies {
            for v in [
                b.position.x,
                b.position.y,
                b.angle,
                b.linear_velocity.x,
                b.linear_velocity.y,
                b.angular_velocity,
            ] {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    fn first_overlap(&self) -> Option<(BodyId, BodyId)> {
        let shapes: Vec<Vec<ShapeInstance>> = self.bodies.iter().map(|b| b.shape_instances().collect()).collect();
        for i in 0..self.bodies.len() {
            for j in (i + 1)..self.bodies.len() {
                if self.bodies[i].is_static() && self.bodies[j].is_static() {
                    continue;
                }
                for sa in &shapes[i] {
                    for sb in &shapes[j] {
                        if let Some(m) = collide(sa, sb) {
                            if m.points().iter().any(|p| p.separation < -1e-9) {
                                return Some((self.bodies[i].id, self.bodies[j].id));
                            }
                        }
                    }
                }
            }
        }
        None
    }

    /// Advances the world by one fixed timestep with the effector servoed to
    /// `cmd` (tip velocity and heading rate), subject to the motor force and
    /// torque limits.
    pub fn step(&mut self, cmd: &VelocityCmd) -> Result<(), PhysicsFault> {
        let dt = self.config.dt;
        let inv_dt = 1.0 / dt;
        let n = self.bodies.len();

        let mut v: Vec<Vec2> = Vec::with_capacity(n);
        let mut w: Vec<f64> = Vec::with_capacity(n);
        for b in &self.bodies {
            v.push(b.linear_velocity + b.external_force * (b.inv_mass * dt));
            w.push(b.angular_velocity);
        }
        let inv_m: Vec<f64> = self.bodies.iter().map(|b| b.inv_mass).collect();
        let inv_i: Vec<f64> = self.bodies.iter().map(|b| b.inv_moment).collect();

        // narrowphase + warm start lookup
        let mut manifolds = self.collide_all();
        let mut max_pen: f64 = 0.0;
        for m in &mut manifolds {
            let (a, b) = (m.a, m.b);
            let pa = self.bodies[a].position;
            let pb = self.bodies[b].position;
            for p in m.points[..m.count].iter_mut() {
                max_pen = max_pen.max(-p.separation);
                p.r_a = p.position - pa;
                p.r_b = p.position - pb;
                let rna = p.r_a.dot(m.normal);
                let rnb = p.r_b.dot(m.normal);
                let k_normal = inv_m[a]
                    + inv_m[b]
                    + inv_i[a] * (p.r_a.length_squared() - rna * rna)
                    + inv_i[b] * (p.r_b.length_squared() - rnb * rnb);
                p.normal_mass = 1.0 / k_normal;
                let t = m.normal.cross_z();
                let rta = p.r_a.dot(t);
                let rtb = p.r_b.dot(t);
                let k_tangent = inv_m[a]
                    + inv_m[b]
                    + inv_i[a] * (p.r_a.length_squared() - rta * rta)
                    + inv_i[b] * (p.r_b.length_squared() - rtb * rtb);
                p.tangent_mass = 1.0 / k_tangent;
                p.bias = -self.config.baumgarte * inv_dt * (p.separation + self.config.penetration_slop).min(0.0);
                if self.config.restitution > 0.0 {
                    let dv = v[b] + Vec2::scalar_cross(w[b], p.r_b) - v[a] - Vec2::scalar_cross(w[a], p.r_a);
                    let vn = dv.dot(m.normal);
                    if vn < -RESTITUTION_THRESHOLD {
                        p.bias = p.bias.max(-self.config.restitution * vn);
                    }
                }
                let impulse = m.normal * p.normal_impulse + t * p.tangent_impulse;
                v[a] -= impulse * inv_m[a];
                w[a] -= inv_i[a] * p.r_a.cross(impulse);
                v[b] += impulse * inv_m[b];
                w[b] += inv_i[b] * p.r_b.cross(impulse);
            }
        }

        // effector motor rows act on the tip point and the heading rate
        let e = self.effector.index;
        let e_body = &self.bodies[e];
        let r_tip = e_body.rot().y_axis() * self.effector.half_length;
        let motor_target_v = cmd.linear;
        let motor_target_w = -cmd.angular;
        let mass_x = 1.0 / (inv_m[e] + inv_i[e] * r_tip.y * r_tip.y);
        let mass_y = 1.0 / (inv_m[e] + inv_i[e] * r_tip.x * r_tip.x);
        let mass_w = 1.0 / inv_i[e];
        let max_lin = self.config.effector.max_force * dt;
        let max_ang = self.config.effector.max_torque * dt;
        let mut motor = self.motor;
        motor.x = motor.x.clamp(-max_lin, max_lin);
        motor.y = motor.y.clamp(-max_lin, max_lin);
        motor.angular = motor.angular.clamp(-max_ang, max_ang);
        v[e] += Vec2::new(motor.x, motor.y) * inv_m[e];
        w[e] += inv_i[e] * (r_tip.cross(Vec2::new(motor.x, motor.y)) + motor.angular);

        // floor friction, warm started
        let g = self.config.gravity;
        let mut floor = std::mem::take(&mut self.floor);
        floor.resize(n, FloorImpulse::default());
        let mut floor_limits = vec![(0.0, 0.0); n];
        for (i, b) in self.bodies.iter().enumerate() {
            if b.kind != BodyKind::Object || b.floor_friction_coeff <= 0.0 {
                floor[i] = FloorImpulse::default();
                continue;
            }
            let max_f = b.floor_friction_coeff * b.mass * g * dt;
            floor_limits[i] = (max_f, max_f * b.friction_radius);
            let f = &mut floor[i];
            let len = f.linear.length();
            if len > max_f {
                f.linear = f.linear * (max_f / len);
            }
            f.angular = f.angular.clamp(-floor_limits[i].1, floor_limits[i].1);
            v[i] += f.linear * inv_m[i];
            w[i] += f.angular * inv_i[i];
        }

        for _ in 0..self.config.solver_iterations {
            // motor
            {
                let vt = v[e] + Vec2::scalar_cross(w[e], r_tip);
                let old = motor.x;
                motor.x = (old + mass_x * (motor_target_v.x - vt.x)).clamp(-max_lin, max_lin);
                let d = motor.x - old;
                v[e].x += d * inv_m[e];
                w[e] += inv_i[e] * r_tip.cross(Vec2::new(d, 0.0));

                let vt = v[e] + Vec2::scalar_cross(w[e], r_tip);
                let old = motor.y;
                motor.y = (old + mass_y * (motor_target_v.y - vt.y)).clamp(-max_lin, max_lin);
                let d = motor.y - old;
                v[e].y += d * inv_m[e];
                w[e] += inv_i[e] * r_tip.cross(Vec2::new(0.0, d));

                let old = motor.angular;
                motor.angular = (old + mass_w * (motor_target_w - w[e])).clamp(-max_ang, max_ang);
                w[e] += inv_i[e] * (motor.angular - old);
            }

            // floor friction
            for i in 0..n {
                let (max_f, max_t) = floor_limits[i];
                if max_f <= 0.0 {
                    continue;
                }
                let f = &mut floor[i];
                let old = f.linear;
                let mut acc = old - v[i] * self.bodies[i].mass;
                let len = acc.length();
                if len > max_f {
                    acc = acc * (max_f / len);
                }
                f.linear = acc;
                v[i] += (acc - old) * inv_m[i];

                let old = f.angular;
                f.angular = (old - w[i] * self.bodies[i].moment).clamp(-max_t, max_t);
                w[i] += (f.angular - old) * inv_i[i];
            }

            // contacts: normal then tangent per point, so every point ends the
            // iteration inside its friction cone
            for m in &mut manifolds {
                let (a, b) = (m.a, m.b);
                let t = m.normal.cross_z();
                for p in m.points[..m.count].iter_mut() {
                    let dv = v[b] + Vec2::scalar_cross(w[b], p.r_b) - v[a] - Vec2::scalar_cross(w[a], p.r_a);
                    let vn = dv.dot(m.normal);
                    let old = p.normal_impulse;
                    p.normal_impulse = (old + p.normal_mass * (-vn + p.bias)).max(0.0);
                    let impulse = m.normal * (p.normal_impulse - old);
                    v[a] -= impulse * inv_m[a];
                    w[a] -= inv_i[a] * p.r_a.cross(impulse);
                    v[b] += impulse * inv_m[b];
                    w[b] += inv_i[b] * p.r_b.cross(impulse);

                    let dv = v[b] + Vec2::scalar_cross(w[b], p.r_b) - v[a] - Vec2::scalar_cross(w[a], p.r_a);
                    let vt = dv.dot(t);
                    let max_t = m.friction * p.normal_impulse;
                    let old = p.tangent_impulse;
                    p.tangent_impulse = (old - p.tangent_mass * vt).clamp(-max_t, max_t);
                    let impulse = t * (p.tangent_impulse - old);
                    v[a] -= impulse * inv_m[a];
                    w[a] -= inv_i[a] * p.r_a.cross(impulse);
                    v[b] += impulse * inv_m[b];
                    w[b] += inv_i[b] * p.r_b.cross(impulse);
                }
            }
        }

        // integrate
        for (i, b) in self.bodies.iter_mut().enumerate() {
            if b.is_static() {
                continue;
            }
            b.linear_velocity = v[i];
            b.angular_velocity = w[i];
            b.position += v[i] * dt;
            b.angle += w[i] * dt;
        }

        self.contacts.clear();
        for m in &manifolds {
            for p in &m.points[..m.count] {
                self.contacts.push(Contact {
                    body_a: BodyId(m.a),
                    body_b: BodyId(m.b),
                    point: p.position,
                    normal: m.normal,
                    penetration_depth: (-p.separation).max(0.0),
                    normal_force: p.normal_impulse * inv_dt,
                    tangent_force: p.tangent_impulse * inv_dt,
                    friction_coeff: m.friction,
                });
            }
        }
        self.manifolds = manifolds;
        self.motor = motor;
        self.floor = floor;
        self.steps += 1;
        self.time = self.steps as f64 * dt;
        self.last_max_penetration = max_pen;
        self.max_penetration = self.max_penetration.max(max_pen);

        for (i, b) in self.bodies.iter().enumerate() {
            if b.kind == BodyKind::Object && !self.flagged_out[i] && b.position.y < 0.0 {
                self.flagged_out[i] = true;
                self.pushed_out.push(PushedOut { body: b.id, time: self.time });
            }
        }

        if let Some(b) = self
            .bodies
            .iter()
            .find(|b| !(b.position.is_finite() && b.angle.is_finite() && b.linear_velocity.is_finite()))
        {
            return Err(PhysicsFault::NonFinite { body: b.id, time: self.time });
        }
        if max_pen > self.config.fault_penetration {
            return Err(PhysicsFault::NotConverged { penetration: max_pen, time: self.time });
        }
        Ok(())
    }

    fn collide_all(&self) -> Vec<SolverManifold> {
        let shapes: Vec<Vec<ShapeInstance>> = self.bodies.iter().map(|b| b.shape_instances().collect()).collect();
        let boxes: Vec<(Vec2, Vec2)> = shapes
            .iter()
            .map(|s| {
                s.iter().fold(
                    (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
                    |(lo, hi), inst| {
                        let (l, h) = inst.aabb();
                        (Vec2::new(lo.x.min(l.x), lo.y.min(l.y)), Vec2::new(hi.x.max(h.x), hi.y.max(h.y)))
                    },
                )
            })
            .collect();

        let mut out = Vec::new();
        let n = self.bodies.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let (bi, bj) = (&self.bodies[i], &self.bodies[j]);
                if bi.is_static() && bj.is_static() {
                    continue;
                }
                let (li, hi) = boxes[i];
                let (lj, hj) = boxes[j];
                if li.x > hj.x || lj.x > hi.x || li.y > hj.y || lj.y > hi.y {
                    continue;
                }
                let friction = (bi.body_friction_coeff * bj.body_friction_coeff).sqrt();
                for (ci, si) in shapes[i].iter().enumerate() {
                    for (cj, sj) in shapes[j].iter().enumerate() {
                        if let Some(raw) = collide(si, sj) {
                            let key = pair_key(i, ci, j, cj);
                            out.push(self.warm_started(key, i, j, friction, &raw));
                        }
                    }
                }
            }
        }
        out
    }

    fn warm_started(&self, key: u64, a: usize, b: usize, friction: f64, raw: &RawManifold) -> SolverManifold {
        let previous = self.manifolds.binary_search_by_key(&key, |m| m.key).ok().map(|i| &self.manifolds[i]);
        let blank = SolverPoint {
            position: Vec2::ZERO,
            r_a: Vec2::ZERO,
            r_b: Vec2::ZERO,
            separation: 0.0,
            feature: 0,
            normal_mass: 0.0,
            tangent_mass: 0.0,
            bias: 0.0,
            normal_impulse: 0.0,
            tangent_impulse: 0.0,
        };
        let mut points = [blank; 2];
        for (k, cp) in raw.points().iter().enumerate() {
            let mut p = blank;
            p.position = cp.position;
            p.separation = cp.separation;
            p.feature = cp.feature;
            if let Some(prev) = previous {
                if let Some(old) = prev.points[..prev.count].iter().find(|o| o.feature == cp.feature) {
                    p.normal_impulse = old.normal_impulse;
                    p.tangent_impulse = old.tangent_impulse;
                }
            }
            points[k] = p;
        }
        SolverManifold { key, a, b, normal: raw.normal, friction, points, count: raw.count }
    }
}

fn pair_key(a: usize, ca: usize, b: usize, cb: usize) -> u64 {
    ((a as u64) << 40) | ((ca as u64) << 32) | ((b as u64) << 8) | cb as u64
}
