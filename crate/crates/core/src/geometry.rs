//! Rigid transforms, pinhole cameras, pose trajectories and view sampling.
//!
//! Conventions:
//! - A camera pose maps **world to camera** coordinates. The camera looks down
//!   its +z axis with +x right and +y down in the image.
//! - An object pose maps **object to world** coordinates.
//!
//! A model point `p` therefore lands in the camera frame as
//! `cam_pose.apply(object_pose.apply(p))`, or equivalently through the single
//! pose `cam_pose.compose(&object_pose)`. For example, with an identity object
//! pose and `cam_pose` translating by `(0, 0, 3)`, the model origin sits 3
//! units in front of the camera and projects onto the principal point.

use alloc::vec::Vec;
use core::fmt;

use crate::math::{Vec2, Vec3};

/// Points at or closer than this camera-space depth are behind the camera.
pub const Z_NEAR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    InvalidQuaternion,
    NonFiniteTranslation,
    InvalidIntrinsics,
    NonPositiveDepth,
    EmptyTrajectory,
    InvalidTrajectory,
    InvalidViewCount,
    InvalidRadius,
    DegenerateLookAt,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            GeometryError::InvalidQuaternion => "quaternion must be finite and non-zero",
            GeometryError::NonFiniteTranslation => "translation must be finite",
            GeometryError::InvalidIntrinsics => {
                "intrinsics need fx > 0, fy > 0, width >= 1, height >= 1 and a finite principal point"
            }
            GeometryError::NonPositiveDepth => "depth must be positive",
            GeometryError::EmptyTrajectory => "trajectory has no keyframes",
            GeometryError::InvalidTrajectory => {
                "trajectory keyframe times must be finite and strictly increasing, and fps > 0"
            }
            GeometryError::InvalidViewCount => "view count must be >= 1",
            GeometryError::InvalidRadius => "radius must be positive",
            GeometryError::DegenerateLookAt => "camera center coincides with its target",
        };
        f.write_str(msg)
    }
}

impl core::error::Error for GeometryError {}

/// Unit quaternion `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Option<Quat> {
        let a = axis.normalized()?;
        let (s, c) = (libm::sin(0.5 * angle), libm::cos(0.5 * angle));
        Some(Quat {
            w: c,
            x: a.x * s,
            y: a.y * s,
            z: a.z * s,
        })
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn dot(&self, o: &Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    fn scale(&self, s: f64) -> Quat {
        Quat {
            w: self.w * s,
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    fn add(&self, o: &Quat) -> Quat {
        Quat {
            w: self.w + o.w,
            x: self.x + o.x,
            y: self.y + o.y,
            z: self.z + o.z,
        }
    }

    /// Hamilton product `self * o`.
    pub fn mul(&self, o: &Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn conjugate(&self) -> Quat {
        Quat {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Normalizes and flips sign so that `w >= 0`.
    fn canonical(&self) -> Option<Quat> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        let q = self.scale(1.0 / n);
        Some(if q.w < 0.0 { q.scale(-1.0) } else { q })
    }

    /// Rotation angle in radians, in `[0, pi]` for canonical quaternions.
    pub fn angle(&self) -> f64 {
        2.0 * libm::atan2(libm::sqrt(self.x * self.x + self.y * self.y + self.z * self.z), self.w.abs())
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let Quat { w, x, y, z } = *self;
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    /// Converts a rotation matrix (rows) to a quaternion.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Quat {
        let trace = m[0][0] + m[1][1] + m[2][2];
        if trace > 0.0 {
            let s = libm::sqrt(trace + 1.0) * 2.0;
            Quat {
                w: 0.25 * s,
                x: (m[2][1] - m[1][2]) / s,
                y: (m[0][2] - m[2][0]) / s,
                z: (m[1][0] - m[0][1]) / s,
            }
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = libm::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0;
            Quat {
                w: (m[2][1] - m[1][2]) / s,
                x: 0.25 * s,
                y: (m[0][1] + m[1][0]) / s,
                z: (m[0][2] + m[2][0]) / s,
            }
        } else if m[1][1] > m[2][2] {
            let s = libm::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0;
            Quat {
                w: (m[0][2] - m[2][0]) / s,
                x: (m[0][1] + m[1][0]) / s,
                y: 0.25 * s,
                z: (m[1][2] + m[2][1]) / s,
            }
        } else {
            let s = libm::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0;
            Quat {
                w: (m[1][0] - m[0][1]) / s,
                x: (m[0][2] + m[2][0]) / s,
                y: (m[1][2] + m[2][1]) / s,
                z: 0.25 * s,
            }
        }
    }

    /// Spherical linear interpolation along the shorter arc.
    pub fn slerp(&self, other: &Quat, t: f64) -> Quat {
        let mut d = self.dot(other);
        let mut b = *other;
        if d < 0.0 {
            d = -d;
            b = b.scale(-1.0);
        }
        let (wa, wb) = if d > 1.0 - 1e-12 {
            (1.0 - t, t)
        } else {
            let theta = libm::acos(d.min(1.0));
            let s = libm::sin(theta);
            (libm::sin((1.0 - t) * theta) / s, libm::sin(t * theta) / s)
        };
        let q = self.scale(wa).add(&b.scale(wb));
        let n = q.norm();
        q.scale(1.0 / n)
    }
}

/// Rigid transform `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose6DoF {
    rotation: Quat,
    translation: Vec3,
    matrix: [[f64; 3]; 3],
}

impl Pose6DoF {
    pub const IDENTITY: Pose6DoF = Pose6DoF {
        rotation: Quat::IDENTITY,
        translation: Vec3::ZERO,
        matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Renormalizes the quaternion and canonicalizes it to `w >= 0`.
    pub fn new(rotation: Quat, translation: Vec3) -> Result<Self, GeometryError> {
        let rotation = rotation.canonical().ok_or(GeometryError::InvalidQuaternion)?;
        if !translation.is_finite() {
            return Err(GeometryError::NonFiniteTranslation);
        }
        Ok(Self::from_unit(rotation, translation))
    }

    fn from_unit(rotation: Quat, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
            matrix: rotation.to_matrix(),
        }
    }

    pub fn from_translation(t: Vec3) -> Result<Self, GeometryError> {
        Self::new(Quat::IDENTITY, t)
    }

    pub fn rotation(&self) -> Quat {
        self.rotation
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    pub fn rotation_matrix(&self) -> [[f64; 3]; 3] {
        self.matrix
    }

    pub fn rotate(&self, p: Vec3) -> Vec3 {
        let m = &self.matrix;
        Vec3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotate(p) + self.translation
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose6DoF) -> Pose6DoF {
        let q = self.rotation.mul(&other.rotation);
        let t = self.apply(other.translation);
        let q = q.canonical().unwrap_or(Quat::IDENTITY);
        Self::from_unit(q, t)
    }

    pub fn inverse(&self) -> Pose6DoF {
        let q = self.rotation.conjugate();
        let m = &self.matrix;
        let t = self.translation;
        // R^T t
        let rt = Vec3::new(
            m[0][0] * t.x + m[1][0] * t.y + m[2][0] * t.z,
            m[0][1] * t.x + m[1][1] * t.y + m[2][1] * t.z,
            m[0][2] * t.x + m[1][2] * t.y + m[2][2] * t.z,
        );
        Self::from_unit(q, -rt)
    }

    /// Camera pose (world to camera) for a camera at `eye` looking at `target`.
    ///
    /// `up` fixes the roll; when the gaze is parallel to `up`, `(1, 0, 0)` is
    /// used instead.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<Pose6DoF, GeometryError> {
        let forward = (target - eye).normalized().ok_or(GeometryError::DegenerateLookAt)?;
        let pick = |up: Vec3| {
            let r = forward.cross(up);
            (r.norm() > 1e-9).then(|| r.normalized()).flatten()
        };
        let right = pick(up)
            .or_else(|| pick(Vec3::new(1.0, 0.0, 0.0)))
            .ok_or(GeometryError::DegenerateLookAt)?;
        let down = forward.cross(right);
        let m = [right.to_array(), down.to_array(), forward.to_array()];
        let q = Quat::from_matrix(m);
        let rot = Pose6DoF::new(q, Vec3::ZERO)?;
        let t = -rot.rotate(eye);
        Pose6DoF::new(q, t)
    }

    /// Camera center in world coordinates, assuming a world-to-camera pose.
    pub fn camera_center(&self) -> Vec3 {
        self.inverse().translation
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self, GeometryError> {
        let ok = fx > 0.0
            && fy > 0.0
            && fx.is_finite()
            && fy.is_finite()
            && cx.is_finite()
            && cy.is_finite()
            && width >= 1
            && height >= 1;
        ok.then_some(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
        .ok_or(GeometryError::InvalidIntrinsics)
    }

    /// Square-pixel camera with the principal point at the image center.
    pub fn centered(focal: f64, width: usize, height: usize) -> Result<Self, GeometryError> {
        Self::new(focal, focal, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }
}

/// Intrinsics paired with a world-to-camera pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub pose: Pose6DoF,
}

impl Camera {
    pub fn new(intrinsics: CameraIntrinsics, pose: Pose6DoF) -> Self {
        Self { intrinsics, pose }
    }

    pub fn project(&self, world_point: Vec3) -> Option<Projection> {
        project_point(&self.intrinsics, &self.pose, world_point)
    }

    pub fn unproject(&self, pixel: Vec2, depth: f64) -> Result<Vec3, GeometryError> {
        unproject_pixel(&self.intrinsics, &self.pose, pixel, depth)
    }
}

/// A point projected in front of the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Vec2,
    pub depth: f64,
}

/// Projects a camera-space point; `None` when `z <= Z_NEAR`.
pub fn project_camera_point(intr: &CameraIntrinsics, p: Vec3) -> Option<Projection> {
    if p.z <= Z_NEAR {
        return None;
    }
    Some(Projection {
        pixel: Vec2::new(intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy),
        depth: p.z,
    })
}

/// Projects a world point through `cam_pose` (world to camera). `None` means behind.
pub fn project_point(intr: &CameraIntrinsics, cam_pose: &Pose6DoF, world_point: Vec3) -> Option<Projection> {
    project_camera_point(intr, cam_pose.apply(world_point))
}

/// Inverse of [`project_point`].
pub fn unproject_pixel(
    intr: &CameraIntrinsics,
    cam_pose: &Pose6DoF,
    pixel: Vec2,
    depth: f64,
) -> Result<Vec3, GeometryError> {
    if !(depth > 0.0) {
        return Err(GeometryError::NonPositiveDepth);
    }
    let p = Vec3::new(
        (pixel.x - intr.cx) / intr.fx * depth,
        (pixel.y - intr.cy) / intr.fy * depth,
        depth,
    );
    Ok(cam_pose.inverse().apply(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub time: f64,
    pub pose: Pose6DoF,
}

/// Timed object poses sampled into frames at `fps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrajectory {
    keyframes: Vec<Keyframe>,
    fps: f64,
}

impl PoseTrajectory {
    pub fn new(keyframes: Vec<Keyframe>, fps: f64) -> Result<Self, GeometryError> {
        if keyframes.is_empty() {
            return Err(GeometryError::EmptyTrajectory);
        }
        let increasing = keyframes.windows(2).all(|w| w[0].time < w[1].time);
        let finite = keyframes.iter().all(|k| k.time.is_finite());
        if !increasing || !finite || !(fps > 0.0) || !fps.is_finite() {
            return Err(GeometryError::InvalidTrajectory);
        }
        Ok(Self { keyframes, fps })
    }

    /// A single constant pose.
    pub fn constant(pose: Pose6DoF, fps: f64) -> Result<Self, GeometryError> {
        Self::new(alloc::vec![Keyframe { time: 0.0, pose }], fps)
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keyframes
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn start_time(&self) -> f64 {
        self.keyframes[0].time
    }

    /// Time of frame `i`.
    pub fn frame_time(&self, i: usize) -> f64 {
        self.start_time() + i as f64 / self.fps
    }
}

/// Pose at time `t`, clamped to the keyframe range.
///
/// Rotation uses slerp along the shorter arc and translation is linear; a
/// query exactly at a keyframe time returns that keyframe unchanged.
pub fn interpolate_pose(traj: &PoseTrajectory, t: f64) -> Result<Pose6DoF, GeometryError> {
    let keys = &traj.keyframes;
    let first = keys.first().ok_or(GeometryError::EmptyTrajectory)?;
    let last = keys[keys.len() - 1];
    if !(t > first.time) {
        return Ok(first.pose);
    }
    if t >= last.time {
        return Ok(last.pose);
    }
    // first index with time > t; t lies in [keys[i-1], keys[i])
    let i = keys.partition_point(|k| k.time <= t);
    let (a, b) = (&keys[i - 1], &keys[i]);
    if t == a.time {
        return Ok(a.pose);
    }
    let u = (t - a.time) / (b.time - a.time);
    let q = a.pose.rotation.slerp(&b.pose.rotation, u);
    let tr = a.pose.translation.lerp(b.pose.translation, u);
    Pose6DoF::new(q, tr)
}

/// Direction of point `k` on an `n`-point Fibonacci sphere lattice (polar axis z).
pub fn fibonacci_direction(k: usize, n: usize) -> Vec3 {
    let golden_conjugate = (libm::sqrt(5.0) - 1.0) / 2.0;
    let cos_theta = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
    let sin_theta = libm::sqrt((1.0 - cos_theta * cos_theta).max(0.0));
    let turns = k as f64 * golden_conjugate;
    let phi = 2.0 * core::f64::consts::PI * (turns - libm::floor(turns));
    Vec3::new(sin_theta * libm::cos(phi), sin_theta * libm::sin(phi), cos_theta)
}

/// `n` camera poses on a Fibonacci lattice of `radius` around `look_at`,
/// each looking at `look_at` with up vector `(0, 1, 0)`.
pub fn sample_sphere_views(n: usize, radius: f64, look_at: Vec3) -> Result<Vec<Pose6DoF>, GeometryError> {
    if n == 0 {
        return Err(GeometryError::InvalidViewCount);
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(GeometryError::InvalidRadius);
    }
    (0..n)
        .map(|k| {
            let eye = look_at + fibonacci_direction(k, n) * radius;
            Pose6DoF::look_at(eye, look_at, Vec3::new(0.0, 1.0, 0.0))
        })
        .collect()
}
