//! Two-room layout, panel grid, receiver orientation and line-of-sight tests.
//!
//! Coordinates are in meters. Room 1 (with the access point) spans
//! `x ∈ [0, 5]`, Room 2 is its mirror image across the shared wall at
//! `x = 5`. The panel sits on that wall and its elements face Room 1.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("source and receiver coincide")]
    ZeroDistance,
    #[error("panel footprint {width:.3} m x {height:.3} m does not fit on the wall")]
    PanelTooLarge { width: f64, height: f64 },
    #[error("panel needs at least one row and one column")]
    EmptyPanel,
    #[error("could not place {0} non-overlapping users in the room")]
    Placement(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Receiver pose: polar angle `alpha` from the vertical and azimuth `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviceOrientation {
    pub alpha: f64,
    pub beta: f64,
}

impl DeviceOrientation {
    /// Unit normal of the photodiode, `(sin α cos β, sin α sin β, cos α)`.
    pub fn normal(&self) -> Vec3 {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        Vec3::new(sa * cb, sa * sb, ca)
    }

    pub fn facing_up() -> Self {
        Self::default()
    }
}

/// Distribution of a single orientation angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum AngleLaw {
    Uniform { low: f64, high: f64 },
    /// Laplace(location, scale) restricted to `[low, high]` by rejection.
    Laplace { location: f64, scale: f64, low: f64, high: f64 },
}

impl AngleLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            AngleLaw::Uniform { low, high } => low + (high - low) * rng.gen::<f64>(),
            AngleLaw::Laplace {
                location,
                scale,
                low,
                high,
            } => loop {
                // inverse CDF on u ∈ (-1/2, 1/2)
                let u: f64 = rng.gen::<f64>() - 0.5;
                if u == -0.5 {
                    continue;
                }
                let x = location - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
                if (low..=high).contains(&x) {
                    break x;
                }
            },
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            AngleLaw::Uniform { low, high } | AngleLaw::Laplace { low, high, .. } => (low, high),
        }
    }
}

/// Sampling laws for the two receiver angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationModel {
    pub polar: AngleLaw,
    pub azimuth: AngleLaw,
}

impl Default for OrientationModel {
    fn default() -> Self {
        Self {
            polar: AngleLaw::Uniform { low: -PI, high: PI },
            azimuth: AngleLaw::Laplace {
                location: FRAC_PI_4,
                scale: PI / 12.0,
                low: 0.0,
                high: FRAC_PI_2,
            },
        }
    }
}

pub fn sample_orientation<R: Rng + ?Sized>(model: &OrientationModel, rng: &mut R) -> DeviceOrientation {
    let alpha = model.polar.sample(rng);
    let beta = model.azimuth.sample(rng);
    DeviceOrientation { alpha, beta }
}

/// Cosine of the incidence angle at an oriented receiver for light coming
/// from `source`.
pub fn cos_incidence(
    source: Vec3,
    receiver: Vec3,
    orientation: DeviceOrientation,
) -> Result<f64, GeometryError> {
    let delta = source - receiver;
    let d = delta.norm();
    if d == 0.0 {
        return Err(GeometryError::ZeroDistance);
    }
    let (sa, ca) = orientation.alpha.sin_cos();
    let (sb, cb) = orientation.beta.sin_cos();
    Ok((delta.x / d) * cb * sa + (delta.y / d) * sb * sa + (delta.z / d) * ca)
}

/// Steering direction of a panel element for a given yaw and roll.
pub fn panel_normal(yaw: f64, roll: f64) -> Vec3 {
    let (sg, cg) = yaw.sin_cos();
    let (sw, cw) = roll.sin_cos();
    Vec3::new(sg * cw, cg * cw, sw)
}

/// Cosine of the irradiance angle from a steered panel element towards a
/// receiver.
pub fn cos_irradiance_panel(
    element: Vec3,
    receiver: Vec3,
    yaw: f64,
    roll: f64,
) -> Result<f64, GeometryError> {
    let delta = element - receiver;
    let d = delta.norm();
    if d == 0.0 {
        return Err(GeometryError::ZeroDistance);
    }
    let (sg, cg) = yaw.sin_cos();
    let (sw, cw) = roll.sin_cos();
    Ok((delta.x / d) * sg * cw + (delta.y / d) * cg * cw + (delta.z / d) * sw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Room {
    One,
    Two,
}

/// Axis-aligned room volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl RoomBox {
    pub fn contains(&self, p: Vec3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }
}

/// Vertical cylinder standing on the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    /// Center of the footprint; `z` is the base height.
    pub base: Vec3,
    pub height: f64,
    pub diameter: f64,
}

impl Cylinder {
    fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    /// Whether the open segment `a → b` passes through the solid cylinder.
    pub fn intersects_segment(&self, a: Vec3, b: Vec3) -> bool {
        let eps: f64 = 1e-12;
        let dir = b - a;
        let r = self.radius();

        // parameter interval where the segment is within the height band
        let (mut lo, mut hi) = (eps, 1.0 - eps);
        let z0 = self.base.z;
        let z1 = self.base.z + self.height;
        if dir.z.abs() < 1e-15 {
            if a.z < z0 || a.z > z1 {
                return false;
            }
        } else {
            let ta = (z0 - a.z) / dir.z;
            let tb = (z1 - a.z) / dir.z;
            lo = lo.max(ta.min(tb));
            hi = hi.min(ta.max(tb));
        }
        if lo > hi {
            return false;
        }

        // horizontal distance to the axis: |p + t q|² ≤ r²
        let px = a.x - self.base.x;
        let py = a.y - self.base.y;
        let qa = dir.x * dir.x + dir.y * dir.y;
        let qb = 2.0 * (px * dir.x + py * dir.y);
        let qc = px * px + py * py - r * r;
        if qa < 1e-15 {
            return qc < 0.0;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            return false;
        }
        let s = disc.sqrt();
        let t0 = (-qb - s) / (2.0 * qa);
        let t1 = (-qb + s) / (2.0 * qa);
        t0.max(lo) < t1.min(hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserTerminal {
    /// Center of the body footprint on the floor.
    pub body_center: Vec3,
    pub body_height: f64,
    pub body_diameter: f64,
    /// Horizontal distance from the body axis to the receiver.
    pub receiver_offset: f64,
    pub receiver_height: f64,
    /// Horizontal direction (radians from +x) in which the receiver is held.
    pub facing: f64,
    pub orientation: DeviceOrientation,
    pub room: Room,
}

impl UserTerminal {
    pub fn receiver(&self) -> Vec3 {
        let (s, c) = self.facing.sin_cos();
        Vec3::new(
            self.body_center.x + self.receiver_offset * c,
            self.body_center.y + self.receiver_offset * s,
            self.body_center.z + self.receiver_height,
        )
    }

    pub fn body(&self) -> Cylinder {
        Cylinder {
            base: self.body_center,
            height: self.body_height,
            diameter: self.body_diameter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Mirror,
    Lc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelElement {
    pub center: Vec3,
    pub kind: ElementKind,
    /// Surface area in m².
    pub area: f64,
}

/// Where on the shared wall the panel is mounted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSpec {
    pub x: f64,
    pub width: f64,
    pub height: f64,
    /// Panel center along the wall (y) and above the floor (z).
    pub center_y: f64,
    pub center_z: f64,
}

impl Default for WallSpec {
    fn default() -> Self {
        Self {
            x: 5.0,
            width: 5.0,
            height: 3.0,
            center_y: 2.5,
            center_z: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelLayout {
    pub rows: usize,
    pub cols: usize,
    pub element_side: f64,
    pub wall: WallSpec,
    pub elements: Vec<PanelElement>,
}

impl PanelLayout {
    pub fn count(&self, kind: ElementKind) -> usize {
        self.elements.iter().filter(|e| e.kind == kind).count()
    }

    pub fn mirrors(&self) -> impl Iterator<Item = &PanelElement> {
        self.elements.iter().filter(|e| e.kind == ElementKind::Mirror)
    }

    pub fn lc_cells(&self) -> impl Iterator<Item = &PanelElement> {
        self.elements.iter().filter(|e| e.kind == ElementKind::Lc)
    }

    /// Unit normal of the wall surface on the access-point side.
    pub fn front_normal(&self) -> Vec3 {
        Vec3::new(-1.0, 0.0, 0.0)
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(self.wall.x, self.wall.center_y, self.wall.center_z)
    }
}

/// Lays out a `rows x cols` grid centered at the wall's mount point, with
/// mirrors and LC cells in a checkerboard (mirror at the first corner).
pub fn build_panel(
    rows: usize,
    cols: usize,
    element_side: f64,
    wall: &WallSpec,
) -> Result<PanelLayout, GeometryError> {
    if rows == 0 || cols == 0 {
        return Err(GeometryError::EmptyPanel);
    }
    let width = cols as f64 * element_side;
    let height = rows as f64 * element_side;
    let tol = 1e-9;
    let fits_y = wall.center_y - 0.5 * width >= -tol && wall.center_y + 0.5 * width <= wall.width + tol;
    let fits_z = wall.center_z - 0.5 * height >= -tol && wall.center_z + 0.5 * height <= wall.height + tol;
    if !(fits_y && fits_z) {
        return Err(GeometryError::PanelTooLarge { width, height });
    }

    let mut elements = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let y = wall.center_y + (c as f64 - 0.5 * (cols as f64 - 1.0)) * element_side;
            let z = wall.center_z + (r as f64 - 0.5 * (rows as f64 - 1.0)) * element_side;
            let kind = if (r + c) % 2 == 0 {
                ElementKind::Mirror
            } else {
                ElementKind::Lc
            };
            elements.push(PanelElement {
                center: Vec3::new(wall.x, y, z),
                kind,
                area: element_side * element_side,
            });
        }
    }
    Ok(PanelLayout {
        rows,
        cols,
        element_side,
        wall: *wall,
        elements,
    })
}

/// True when the open segment between the two points is obstructed by a
/// blocker, the user's own body, or the wall at `wall_x`.
pub fn los_blocked(
    ap: Vec3,
    receiver: Vec3,
    blockers: &[Cylinder],
    self_body: &Cylinder,
    wall_x: f64,
) -> bool {
    let crosses_wall = (ap.x - wall_x) * (receiver.x - wall_x) < 0.0;
    crosses_wall
        || self_body.intersects_segment(ap, receiver)
        || blockers.iter().any(|b| b.intersects_segment(ap, receiver))
}

/// Body and receiver dimensions of a user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyModel {
    pub height: f64,
    pub diameter: f64,
    pub receiver_offset: f64,
    pub receiver_height: f64,
}

impl Default for BodyModel {
    fn default() -> Self {
        Self {
            height: 1.65,
            diameter: 0.3,
            receiver_offset: 0.36,
            receiver_height: 0.85,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub rooms: [RoomBox; 2],
    pub ap: Vec3,
    pub panel: PanelLayout,
    pub users: Vec<UserTerminal>,
    pub blockers: Vec<Cylinder>,
    /// Whether direct AP→user paths are considered at all (ι).
    pub los_enabled: bool,
}

impl Scene {
    pub fn room_box(&self, room: Room) -> &RoomBox {
        match room {
            Room::One => &self.rooms[0],
            Room::Two => &self.rooms[1],
        }
    }

    /// Effective ι for one user: LoS must be enabled and the path clear.
    pub fn los_indicator(&self, user: &UserTerminal) -> bool {
        self.los_enabled
            && user.room == Room::One
            && !los_blocked(
                self.ap,
                user.receiver(),
                &self.blockers,
                &user.body(),
                self.panel.wall.x,
            )
    }
}

/// Static part of a scene: rooms, access point and panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub room_dims: Vec3,
    pub ap: Vec3,
    pub panel: PanelLayout,
    pub body: BodyModel,
    pub orientation: OrientationModel,
    pub los_enabled: bool,
    pub blockers_per_room: usize,
}

impl Layout {
    pub fn rooms(&self) -> [RoomBox; 2] {
        let d = self.room_dims;
        [
            RoomBox {
                min: Vec3::new(0.0, 0.0, 0.0),
                max: d,
            },
            RoomBox {
                min: Vec3::new(d.x, 0.0, 0.0),
                max: Vec3::new(2.0 * d.x, d.y, d.z),
            },
        ]
    }

    /// Draws one Monte Carlo realization: users split evenly between the two
    /// rooms (Room 1 gets the extra one when `users` is odd), each placed
    /// uniformly with its body and receiver inside its room and no two
    /// bodies overlapping.
    pub fn draw_scene<R: Rng + ?Sized>(&self, users: usize, rng: &mut R) -> Result<Scene, GeometryError> {
        let rooms = self.rooms();
        let in_room_two = users / 2;
        let in_room_one = users - in_room_two;
        let mut placed: Vec<UserTerminal> = Vec::with_capacity(users);
        for (room, count) in [(Room::One, in_room_one), (Room::Two, in_room_two)] {
            let bx = rooms[room as usize];
            for _ in 0..count {
                let user = self.place_user(room, &bx, &placed, rng)?;
                placed.push(user);
            }
        }
        let mut blockers = Vec::new();
        for bx in &rooms {
            for _ in 0..self.blockers_per_room {
                let margin = 0.5 * self.body.diameter;
                let x = bx.min.x + margin + (bx.max.x - bx.min.x - 2.0 * margin) * rng.gen::<f64>();
                let y = bx.min.y + margin + (bx.max.y - bx.min.y - 2.0 * margin) * rng.gen::<f64>();
                blockers.push(Cylinder {
                    base: Vec3::new(x, y, 0.0),
                    height: self.body.height,
                    diameter: self.body.diameter,
                });
            }
        }
        Ok(Scene {
            rooms,
            ap: self.ap,
            panel: self.panel.clone(),
            users: placed,
            blockers,
            los_enabled: self.los_enabled,
        })
    }

    fn place_user<R: Rng + ?Sized>(
        &self,
        room: Room,
        bx: &RoomBox,
        placed: &[UserTerminal],
        rng: &mut R,
    ) -> Result<UserTerminal, GeometryError> {
        let margin = 0.5 * self.body.diameter + self.body.receiver_offset;
        for _ in 0..10_000 {
            let x = bx.min.x + margin + (bx.max.x - bx.min.x - 2.0 * margin) * rng.gen::<f64>();
            let y = bx.min.y + margin + (bx.max.y - bx.min.y - 2.0 * margin) * rng.gen::<f64>();
            let facing = 2.0 * PI * rng.gen::<f64>();
            let orientation = sample_orientation(&self.orientation, rng);
            let candidate = UserTerminal {
                body_center: Vec3::new(x, y, 0.0),
                body_height: self.body.height,
                body_diameter: self.body.diameter,
                receiver_offset: self.body.receiver_offset,
                receiver_height: self.body.receiver_height,
                facing,
                orientation,
                room,
            };
            let clear = placed.iter().all(|u| {
                let dx = u.body_center.x - x;
                let dy = u.body_center.y - y;
                (dx * dx + dy * dy).sqrt() >= self.body.diameter
            });
            if clear {
                return Ok(candidate);
            }
        }
        Err(GeometryError::Placement(placed.len() + 1))
    }
}

impl Default for Layout {
    fn default() -> Self {
        let wall = WallSpec::default();
        Self {
            room_dims: Vec3::new(5.0, 5.0, 3.0),
            ap: Vec3::new(2.5, 2.5, 3.0),
            panel: build_panel(5, 10, 0.1, &wall).expect("default panel fits"),
            body: BodyModel::default(),
            orientation: OrientationModel::default(),
            los_enabled: false,
            blockers_per_room: 0,
        }
    }
}
