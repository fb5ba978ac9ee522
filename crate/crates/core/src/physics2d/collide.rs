//! Narrowphase: rectangle/rectangle by reference-face clipping, plus circle
//! cases. All normals point from shape A to shape B; separation is negative
//! while penetrating.

use crate::math::{Rot, Vec2};

use super::body::{Shape, ShapeInstance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct ContactPoint {
    pub position: Vec2,
    pub separation: f64,
    /// Stable id of the features that produced this point, for warm starting.
    pub feature: u32,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct RawManifold {
    pub normal: Vec2,
    pub points: [ContactPoint; 2],
    pub count: usize,
}

impl RawManifold {
    fn single(normal: Vec2, point: ContactPoint) -> Self {
        Self { normal, points: [point, point], count: 1 }
    }

    pub fn points(&self) -> &[ContactPoint] {
        &self.points[..self.count]
    }
}

pub(crate) fn collide(a: &ShapeInstance, b: &ShapeInstance) -> Option<RawManifold> {
    match (a.shape, b.shape) {
        (Shape::Rect { half_extents: ha }, Shape::Rect { half_extents: hb }) => {
            collide_rects(ha, a.center, a.rot, hb, b.center, b.rot)
        }
        (Shape::Rect { half_extents }, Shape::Circle { radius }) => {
            collide_rect_circle(half_extents, a.center, a.rot, b.center, radius)
        }
        (Shape::Circle { radius }, Shape::Rect { half_extents }) => {
            collide_rect_circle(half_extents, b.center, b.rot, a.center, radius).map(|mut m| {
                m.normal = -m.normal;
                m
            })
        }
        (Shape::Circle { radius: ra }, Shape::Circle { radius: rb }) => {
            collide_circles(a.center, ra, b.center, rb)
        }
    }
}

fn collide_circles(ca: Vec2, ra: f64, cb: Vec2, rb: f64) -> Option<RawManifold> {
    let d = cb - ca;
    let dist = d.length();
    let separation = dist - ra - rb;
    if separation > 0.0 {
        return None;
    }
    let normal = if dist > 0.0 { d * (1.0 / dist) } else { Vec2::new(0.0, 1.0) };
    let position = ca + normal * (ra + 0.5 * separation);
    Some(RawManifold::single(normal, ContactPoint { position, separation, feature: 0 }))
}

/// Rectangle A against circle B.
fn collide_rect_circle(h: Vec2, pos: Vec2, rot: Rot, center: Vec2, radius: f64) -> Option<RawManifold> {
    let local = rot.apply_inverse(center - pos);
    let clamped = Vec2::new(local.x.clamp(-h.x, h.x), local.y.clamp(-h.y, h.y));
    let (normal_local, surface_local, separation, feature) = if clamped == local {
        // center inside the rectangle: push out through the nearest face
        let dx = h.x - local.x.abs();
        let dy = h.y - local.y.abs();
        if dx < dy {
            let sx = if local.x >= 0.0 { 1.0 } else { -1.0 };
            (Vec2::new(sx, 0.0), Vec2::new(sx * h.x, local.y), -dx - radius, 1)
        } else {
            let sy = if local.y >= 0.0 { 1.0 } else { -1.0 };
            (Vec2::new(0.0, sy), Vec2::new(local.x, sy * h.y), -dy - radius, 2)
        }
    } else {
        let d = local - clamped;
        let dist = d.length();
        if dist > radius {
            return None;
        }
        (d * (1.0 / dist), clamped, dist - radius, 0)
    };
    Some(RawManifold::single(
        rot.apply(normal_local),
        ContactPoint { position: pos + rot.apply(surface_local), separation, feature },
    ))
}

// Edge numbering (local frame):
//        e1
//   v2 ------ v1
//    |        |
// e2 |        | e4
//    |        |
//   v3 ------ v4
//        e3
const NO_EDGE: u8 = 0;
const EDGE1: u8 = 1;
const EDGE2: u8 = 2;
const EDGE3: u8 = 3;
const EDGE4: u8 = 4;

#[derive(Clone, Copy, Debug, Default)]
struct FeaturePair {
    in_edge1: u8,
    out_edge1: u8,
    in_edge2: u8,
    out_edge2: u8,
}

impl FeaturePair {
    fn key(self) -> u32 {
        u32::from_le_bytes([self.in_edge1, self.out_edge1, self.in_edge2, self.out_edge2])
    }

    fn flipped(self) -> Self {
        Self {
            in_edge1: self.in_edge2,
            out_edge1: self.out_edge2,
            in_edge2: self.in_edge1,
            out_edge2: self.out_edge1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct ClipVertex {
    v: Vec2,
    fp: FeaturePair,
}

#[derive(Clone, Copy, PartialEq)]
enum Axis {
    FaceAX,
    FaceAY,
    FaceBX,
    FaceBY,
}

fn clip_segment_to_line(
    input: &[ClipVertex; 2],
    normal: Vec2,
    offset: f64,
    clip_edge: u8,
) -> ([ClipVertex; 2], usize) {
    let mut out = [ClipVertex::default(); 2];
    let mut n = 0;
    let d0 = normal.dot(input[0].v) - offset;
    let d1 = normal.dot(input[1].v) - offset;
    if d0 <= 0.0 {
        out[n] = input[0];
        n += 1;
    }
    if d1 <= 0.0 {
        out[n] = input[1];
        n += 1;
    }
    if d0 * d1 < 0.0 && n < 2 {
        let t = d0 / (d0 - d1);
        out[n].v = input[0].v + (input[1].v - input[0].v) * t;
        if d0 > 0.0 {
            out[n].fp = input[0].fp;
            out[n].fp.in_edge1 = clip_edge;
            out[n].fp.in_edge2 = NO_EDGE;
        } else {
            out[n].fp = input[1].fp;
            out[n].fp.out_edge1 = clip_edge;
            out[n].fp.out_edge2 = NO_EDGE;
        }
        n += 1;
    }
    (out, n)
}

fn incident_edge(h: Vec2, pos: Vec2, rot: Rot, normal: Vec2) -> [ClipVertex; 2] {
    let n = -rot.apply_inverse(normal);
    let mut c = [ClipVertex::default(); 2];
    let set = |c: &mut ClipVertex, v: Vec2, i: u8, o: u8| {
        c.v = v;
        c.fp.in_edge2 = i;
        c.fp.out_edge2 = o;
    };
    if n.x.abs() > n.y.abs() {
        if n.x > 0.0 {
            set(&mut c[0], Vec2::new(h.x, -h.y), EDGE3, EDGE4);
            set(&mut c[1], Vec2::new(h.x, h.y), EDGE4, EDGE1);
        } else {
            set(&mut c[0], Vec2::new(-h.x, h.y), EDGE1, EDGE2);
            set(&mut c[1], Vec2::new(-h.x, -h.y), EDGE2, EDGE3);
        }
    } else if n.y > 0.0 {
        set(&mut c[0], Vec2::new(h.x, h.y), EDGE4, EDGE1);
        set(&mut c[1], Vec2::new(-h.x, h.y), EDGE1, EDGE2);
    } else {
        set(&mut c[0], Vec2::new(-h.x, -h.y), EDGE2, EDGE3);
        set(&mut c[1], Vec2::new(h.x, -h.y), EDGE3, EDGE4);
    }
    c[0].v = pos + rot.apply(c[0].v);
    c[1].v = pos + rot.apply(c[1].v);
    c
}

fn collide_rects(ha: Vec2, pa: Vec2, ra: Rot, hb: Vec2, pb: Vec2, rb: Rot) -> Option<RawManifold> {
    let dp = pb - pa;
    let da = ra.apply_inverse(dp);
    let db = rb.apply_inverse(dp);
    let c = ra.inverse_mul(rb);
    let (ac, as_) = (c.c.abs(), c.s.abs());

    // |C| hB and |C|ᵀ hA
    let b_in_a = Vec2::new(ac * hb.x + as_ * hb.y, as_ * hb.x + ac * hb.y);
    let a_in_b = Vec2::new(ac * ha.x + as_ * ha.y, as_ * ha.x + ac * ha.y);

    let face_a = da.abs() - ha - b_in_a;
    if face_a.x > 0.0 || face_a.y > 0.0 {
        return None;
    }
    let face_b = db.abs() - a_in_b - hb;
    if face_b.x > 0.0 || face_b.y > 0.0 {
        return None;
    }

    const REL_TOL: f64 = 0.95;
    const ABS_TOL: f64 = 0.01;

    let mut axis = Axis::FaceAX;
    let mut separation = face_a.x;
    let mut normal = if da.x > 0.0 { ra.x_axis() } else { -ra.x_axis() };

    if face_a.y > REL_TOL * separation + ABS_TOL * ha.y {
        axis = Axis::FaceAY;
        separation = face_a.y;
        normal = if da.y > 0.0 { ra.y_axis() } else { -ra.y_axis() };
    }
    if face_b.x > REL_TOL * separation + ABS_TOL * hb.x {
        axis = Axis::FaceBX;
        separation = face_b.x;
        normal = if db.x > 0.0 { rb.x_axis() } else { -rb.x_axis() };
    }
    if face_b.y > REL_TOL * separation + ABS_TOL * hb.y {
        axis = Axis::FaceBY;
        normal = if db.y > 0.0 { rb.y_axis() } else { -rb.y_axis() };
    }

    let (front_normal, front, side_normal, neg_side, pos_side, neg_edge, pos_edge, incident) = match axis {
        Axis::FaceAX => {
            let side_normal = ra.y_axis();
            let side = pa.dot(side_normal);
            (
                normal,
                pa.dot(normal) + ha.x,
                side_normal,
                -side + ha.y,
                side + ha.y,
                EDGE3,
                EDGE1,
                incident_edge(hb, pb, rb, normal),
            )
        }
        Axis::FaceAY => {
            let side_normal = ra.x_axis();
            let side = pa.dot(side_normal);
            (
                normal,
                pa.dot(normal) + ha.y,
                side_normal,
                -side + ha.x,
                side + ha.x,
                EDGE2,
                EDGE4,
                incident_edge(hb, pb, rb, normal),
            )
        }
        Axis::FaceBX => {
            let fnorm = -normal;
            let side_normal = rb.y_axis();
            let side = pb.dot(side_normal);
            (
                fnorm,
                pb.dot(fnorm) + hb.x,
                side_normal,
                -side + hb.y,
                side + hb.y,
                EDGE3,
                EDGE1,
                incident_edge(ha, pa, ra, fnorm),
            )
        }
        Axis::FaceBY => {
            let fnorm = -normal;
            let side_normal = rb.x_axis();
            let side = pb.dot(side_normal);
            (
                fnorm,
                pb.dot(fnorm) + hb.y,
                side_normal,
                -side + hb.x,
                side + hb.x,
                EDGE2,
                EDGE4,
                incident_edge(ha, pa, ra, fnorm),
            )
        }
    };

    let (clip1, n1) = clip_segment_to_line(&incident, -side_normal, neg_side, neg_edge);
    if n1 < 2 {
        return None;
    }
    let (clip2, n2) = clip_segment_to_line(&clip1, side_normal, pos_side, pos_edge);
    if n2 < 2 {
        return None;
    }

    let mut manifold = RawManifold {
        normal,
        points: [ContactPoint { position: Vec2::ZERO, separation: 0.0, feature: 0 }; 2],
        count: 0,
    };
    for cv in clip2.iter() {
        let sep = front_normal.dot(cv.v) - front;
        if sep <= 0.0 {
            let fp = if matches!(axis, Axis::FaceBX | Axis::FaceBY) { cv.fp.flipped() } else { cv.fp };
            manifold.points[manifold.count] = ContactPoint {
                position: cv.v - front_normal * sep,
                separation: sep,
                feature: fp.key(),
            };
            manifold.count += 1;
        }
    }
    (manifold.count > 0).then_some(manifold)
}
