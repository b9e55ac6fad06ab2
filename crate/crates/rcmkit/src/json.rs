//! JSON schemas for poses, cameras, trajectories and consistency reports.

use std::fs;
use std::path::Path;

use rcmkit_core::{
    Camera, CameraIntrinsics, ConsistencyReport, Keyframe, Pose6DoF, PoseTrajectory, Quat, Vec3,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Image size used when a camera file omits `width`/`height`.
pub const DEFAULT_RESOLUTION: usize = 512;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("schema types serialize") + "\n"
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseJson {
    pub qw: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl PoseJson {
    pub fn to_pose(&self) -> Result<Pose6DoF> {
        let q = Quat {
            w: self.qw,
            x: self.qx,
            y: self.qy,
            z: self.qz,
        };
        Ok(Pose6DoF::new(q, Vec3::new(self.tx, self.ty, self.tz))?)
    }
}

impl From<&Pose6DoF> for PoseJson {
    fn from(p: &Pose6DoF) -> Self {
        let q = p.rotation();
        let t = p.translation();
        Self {
            qw: q.w,
            qx: q.x,
            qy: q.y,
            qz: q.z,
            tx: t.x,
            ty: t.y,
            tz: t.z,
        }
    }
}

/// Pinhole intrinsics with an optional world-to-camera pose (identity when absent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraJson {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default = "default_resolution")]
    pub width: usize,
    #[serde(default = "default_resolution")]
    pub height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<PoseJson>,
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

impl CameraJson {
    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        Ok(CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)?)
    }

    pub fn to_camera(&self) -> Result<Camera> {
        let pose = match &self.pose {
            Some(p) => p.to_pose()?,
            None => Pose6DoF::IDENTITY,
        };
        Ok(Camera::new(self.intrinsics()?, pose))
    }

    pub fn from_camera(cam: &Camera) -> Self {
        let i = &cam.intrinsics;
        Self {
            fx: i.fx,
            fy: i.fy,
            cx: i.cx,
            cy: i.cy,
            width: i.width,
            height: i.height,
            pose: Some(PoseJson::from(&cam.pose)),
        }
    }
}

/// Intrinsics only, as stored in cache manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsJson {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl From<&CameraIntrinsics> for IntrinsicsJson {
    fn from(i: &CameraIntrinsics) -> Self {
        Self {
            fx: i.fx,
            fy: i.fy,
            cx: i.cx,
            cy: i.cy,
            width: i.width,
            height: i.height,
        }
    }
}

impl IntrinsicsJson {
    pub fn to_intrinsics(&self) -> Result<CameraIntrinsics> {
        Ok(CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeJson {
    pub t: f64,
    pub pose: PoseJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryJson {
    pub fps: f64,
    pub keyframes: Vec<KeyframeJson>,
}

impl TrajectoryJson {
    pub fn to_trajectory(&self) -> Result<PoseTrajectory> {
        let keys = self
            .keyframes
            .iter()
            .map(|k| {
                Ok(Keyframe {
                    time: k.t,
                    pose: k.pose.to_pose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PoseTrajectory::new(keys, self.fps)?)
    }

    pub fn from_trajectory(traj: &PoseTrajectory) -> Self {
        Self {
            fps: traj.fps(),
            keyframes: traj
                .keyframes()
                .iter()
                .map(|k| KeyframeJson {
                    t: k.time,
                    pose: PoseJson::from(&k.pose),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub t_ssim: f64,
    pub per_frame_ssim: Vec<f64>,
    pub n_frames: usize,
    pub warnings: Vec<String>,
}

impl From<&ConsistencyReport> for ReportJson {
    fn from(r: &ConsistencyReport) -> Self {
        Self {
            t_ssim: r.t_ssim,
            per_frame_ssim: r.per_frame_ssim.clone(),
            n_frames: r.n_frames,
            warnings: r.warnings.clone(),
        }
    }
}

pub fn load_camera(path: &Path) -> Result<Camera> {
    read_json::<CameraJson>(path)?.to_camera()
}

pub fn load_trajectory(path: &Path) -> Result<PoseTrajectory> {
    read_json::<TrajectoryJson>(path)?.to_trajectory()
}
