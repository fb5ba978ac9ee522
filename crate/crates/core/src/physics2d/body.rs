use serde::{Deserialize, Serialize};

use crate::math::{Rot, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BodyId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    /// Immovable, infinite mass.
    Wall,
    /// Movable clutter resting on the floor.
    Object,
    /// The velocity-servoed finger link.
    Effector,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Rect { half_extents: Vec2 },
    Circle { radius: f64 },
}

impl Shape {
    pub fn area(&self) -> f64 {
        match *self {
            Shape::Rect { half_extents } => 4.0 * half_extents.x * half_extents.y,
            Shape::Circle { radius } => std::f64::consts::PI * radius * radius,
        }
    }

    /// Counter-clockwise vertices in the shape's local frame (rectangles only).
    pub fn vertices(&self) -> Option<[Vec2; 4]> {
        match *self {
            Shape::Rect { half_extents: h } => Some([
                Vec2::new(-h.x, -h.y),
                Vec2::new(h.x, -h.y),
                Vec2::new(h.x, h.y),
                Vec2::new(-h.x, h.y),
            ]),
            Shape::Circle { .. } => None,
        }
    }
}

/// A shape rigidly attached to a body at a local offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Collider {
    pub shape: Shape,
    pub offset: Vec2,
}

/// A shape placed in the world.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ShapeInstance {
    pub shape: Shape,
    pub center: Vec2,
    pub rot: Rot,
}

impl ShapeInstance {
    pub fn aabb(&self) -> (Vec2, Vec2) {
        match self.shape {
            Shape::Rect { half_extents: h } => {
                let ext = Vec2::new(
                    self.rot.c.abs() * h.x + self.rot.s.abs() * h.y,
                    self.rot.s.abs() * h.x + self.rot.c.abs() * h.y,
                );
                (self.center - ext, self.center + ext)
            }
            Shape::Circle { radius } => {
                let ext = Vec2::new(radius, radius);
                (self.center - ext, self.center + ext)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Body {
    pub id: BodyId,
    pub kind: BodyKind,
    pub colliders: Vec<Collider>,
    pub position: Vec2,
    /// Counter-clockwise orientation in radians.
    pub angle: f64,
    pub linear_velocity: Vec2,
    pub angular_velocity: f64,
    pub mass: f64,
    pub moment: f64,
    pub floor_friction_coeff: f64,
    pub body_friction_coeff: f64,
    pub(crate) inv_mass: f64,
    pub(crate) inv_moment: f64,
    /// Effective lever arm of the floor patch for torsional friction.
    pub(crate) friction_radius: f64,
    pub(crate) external_force: Vec2,
}

impl Body {
    pub(crate) fn wall(id: BodyId, center: Vec2, half_extents: Vec2, body_friction: f64) -> Self {
        Self {
            id,
            kind: BodyKind::Wall,
            colliders: vec![Collider { shape: Shape::Rect { half_extents }, offset: Vec2::ZERO }],
            position: center,
            angle: 0.0,
            linear_velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            mass: f64::INFINITY,
            moment: f64::INFINITY,
            floor_friction_coeff: 0.0,
            body_friction_coeff: body_friction,
            inv_mass: 0.0,
            inv_moment: 0.0,
            friction_radius: 0.0,
            external_force: Vec2::ZERO,
        }
    }

    /// Uniform-density rectangle of footprint `width × depth`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn rect_object(
        id: BodyId,
        center: Vec2,
        angle: f64,
        width: f64,
        depth: f64,
        mass: f64,
        floor_friction: f64,
        body_friction: f64,
    ) -> Self {
        let moment = mass * (width * width + depth * depth) / 12.0;
        Self {
            id,
            kind: BodyKind::Object,
            colliders: vec![Collider {
                shape: Shape::Rect { half_extents: Vec2::new(0.5 * width, 0.5 * depth) },
                offset: Vec2::ZERO,
            }],
            position: center,
            angle,
            linear_velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            mass,
            moment,
            floor_friction_coeff: floor_friction,
            body_friction_coeff: body_friction,
            inv_mass: 1.0 / mass,
            inv_moment: 1.0 / moment,
            // mean distance to the centroid over a square of side a is 0.3826 a
            friction_radius: 0.3826 * (0.5 * (width * width + depth * depth)).sqrt(),
            external_force: Vec2::ZERO,
        }
    }

    #[inline]
    pub fn is_static(&self) -> bool {
        self.inv_mass == 0.0 && self.inv_moment == 0.0
    }

    #[inline]
    pub fn rot(&self) -> Rot {
        Rot::new(self.angle)
    }

    /// World coordinates of a body-local point.
    #[inline]
    pub fn world_point(&self, local: Vec2) -> Vec2 {
        self.position + self.rot().apply(local)
    }

    /// Velocity of a material point at world position `p`.
    #[inline]
    pub fn point_velocity(&self, p: Vec2) -> Vec2 {
        self.linear_velocity + Vec2::scalar_cross(self.angular_velocity, p - self.position)
    }

    pub(crate) fn shape_instances(&self) -> impl Iterator<Item = ShapeInstance> + '_ {
        let rot = self.rot();
        self.colliders.iter().map(move |c| ShapeInstance {
            shape: c.shape,
            center: self.position + rot.apply(c.offset),
            rot,
        })
    }

    pub fn area(&self) -> f64 {
        self.colliders.iter().map(|c| c.shape.area()).sum()
    }
}
