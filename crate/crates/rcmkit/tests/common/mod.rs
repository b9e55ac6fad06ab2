#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rcmkit::images::write_rgb_png;
use rcmkit::pointmap::write_ply;
use rcmkit::json::{to_json_string, CameraJson, TrajectoryJson};
use rcmkit::write_obj;
use rcmkit_core::{compute_aabb, compute_rcm_colors, oracle_pointmaps, Camera, CameraIntrinsics, Keyframe, Mesh, Pose6DoF, PoseTrajectory, Quat, RgbImage, Vec2, Vec3, Vertex};

/// Axis-aligned cube `[-0.5, 0.5]^3`; every face maps the full texture.
pub fn textured_cube(texture: RgbImage) -> Mesh {
    // (normal axis, sign)
    let faces = [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0)];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (axis, sign) in faces {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        let base = vertices.len() as u32;
        for (s, t) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
            let mut p = [0.0; 3];
            p[axis] = 0.5 * sign;
            p[a] = s - 0.5;
            p[b] = t - 0.5;
            vertices.push(Vertex::with_uv(Vec3::from_array(p), Vec2::new(s, t)));
        }
        triangles.push([base, base + 1, base + 2]);
        triangles.push([base, base + 2, base + 3]);
    }
    Mesh::new(vertices, triangles, Some(texture)).unwrap()
}

/// 4x4 blocks of distinct colors with a gentle gradient inside each block.
pub fn block_texture() -> RgbImage {
    RgbImage::from_fn(64, 64, |x, y| {
        let (bx, by) = (x / 16, y / 16);
        let k = (bx * 4 + by) as u8;
        [
            40 + 12 * k + (x % 16) as u8,
            200 - 10 * k + (y % 16) as u8,
            if (bx + by) % 2 == 0 { 60 } else { 190 },
        ]
    })
}

/// An unrelated texture: diagonal bands in a different palette.
pub fn stripe_texture() -> RgbImage {
    RgbImage::from_fn(64, 64, |x, y| {
        let band = ((x + 2 * y) / 11) % 3;
        [[230, 30, 90], [20, 40, 60], [250, 220, 20]][band]
    })
}

/// Full turn about the world y axis over `seconds`, with the cube tilted
/// towards the camera so that its top face shows.
pub fn orbit_trajectory(seconds: f64, fps: f64) -> PoseTrajectory {
    let tilt = Quat::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), 25f64.to_radians()).unwrap();
    let keys = (0..=4)
        .map(|k| {
            let spin = Quat::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), k as f64 * std::f64::consts::FRAC_PI_2).unwrap();
            Keyframe {
                time: seconds * k as f64 / 4.0,
                pose: Pose6DoF::new(spin.mul(&tilt), Vec3::ZERO).unwrap(),
            }
        })
        .collect();
    PoseTrajectory::new(keys, fps).unwrap()
}

/// Camera three units down +z from the origin, looking at it.
pub fn front_camera(focal: f64, size: usize) -> Camera {
    Camera::new(
        CameraIntrinsics::centered(focal, size, size).unwrap(),
        Pose6DoF::from_translation(Vec3::new(0.0, 0.0, 3.0)).unwrap(),
    )
}

pub struct FixtureFiles {
    pub dir: PathBuf,
    pub mesh: PathBuf,
    pub texture: PathBuf,
    pub camera: PathBuf,
    pub trajectory: PathBuf,
    pub static_trajectory: PathBuf,
}

/// Writes the textured cube, a 64x64 camera and two trajectories into `dir`.
pub fn write_fixture(dir: &Path) -> FixtureFiles {
    let tex = block_texture();
    let mesh = textured_cube(tex.clone());
    let f = FixtureFiles {
        dir: dir.to_path_buf(),
        mesh: dir.join("cube.obj"),
        texture: dir.join("cube.png"),
        camera: dir.join("camera.json"),
        trajectory: dir.join("orbit.json"),
        static_trajectory: dir.join("static.json"),
    };
    fs::write(&f.mesh, write_obj(&mesh)).unwrap();
    write_rgb_png(&f.texture, &tex).unwrap();
    fs::write(&f.camera, to_json_string(&CameraJson::from_camera(&front_camera(60.0, 64)))).unwrap();
    fs::write(&f.trajectory, to_json_string(&TrajectoryJson::from_trajectory(&orbit_trajectory(2.0, 5.0)))).unwrap();
    let fixed = PoseTrajectory::constant(orbit_trajectory(2.0, 5.0).keyframes()[0].pose, 5.0).unwrap();
    fs::write(&f.static_trajectory, to_json_string(&TrajectoryJson::from_trajectory(&fixed))).unwrap();
    f
}

/// Writes an oracle sequence as PNG + PLY + camera files and returns the manifest path.
pub fn write_frames_manifest(dir: &Path, drop_camera_of_last: bool) -> PathBuf {
    let mesh = textured_cube(block_texture());
    let colors = compute_rcm_colors(&mesh, &compute_aabb(&mesh).unwrap()).unwrap();
    let cam = front_camera(60.0, 64);
    let seq = oracle_pointmaps(&mesh, &colors, &orbit_trajectory(2.0, 5.0), &cam, 4).unwrap();
    let mut rows = Vec::new();
    for i in 0..4 {
        let (img, ply, cj) = (format!("f{i}.png"), format!("f{i}.ply"), format!("c{i}.json"));
        write_rgb_png(&dir.join(&img), &seq.frames[i]).unwrap();
        fs::write(dir.join(&ply), write_ply(&seq.maps[i])).unwrap();
        fs::write(dir.join(&cj), to_json_string(&CameraJson::from_camera(&seq.cams[i]))).unwrap();
        if drop_camera_of_last && i == 3 {
            rows.push(serde_json::json!({"image": img, "pointmap": ply}));
        } else {
            rows.push(serde_json::json!({"image": img, "pointmap": ply, "camera": cj}));
        }
    }
    let p = dir.join("frames.json");
    fs::write(&p, serde_json::to_string(&serde_json::json!({ "frames": rows })).unwrap()).unwrap();
    p
}
