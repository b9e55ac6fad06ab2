mod common;

use std::fs;

use rcmkit::images::read_rgba_png;
use rcmkit::{build_cache, load_cache, Error};
use rcmkit_core::cache::cache_view_poses;
use rcmkit_core::raster::rasterize_fragments;
use rcmkit_core::{compute_aabb, sample_sphere_views, Camera, CameraIntrinsics, Pose6DoF};

fn intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::centered(120.0, 64, 64).unwrap()
}

#[test]
fn single_view_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = common::textured_cube(common::block_texture());
    let cache = build_cache(&mesh, 1, &intrinsics(), 3.0, dir.path()).unwrap();
    assert_eq!(cache.entries.len(), 1);
    let (_, mask) = read_rgba_png(&cache.entries[0].rcm_image).unwrap();
    let count = mask.pixels().iter().filter(|&&m| m).count();
    assert!(count > 0);
    // nothing touches the border, so the cube is fully inside the image
    for y in 0..64 {
        for x in 0..64 {
            if x == 0 || y == 0 || x == 63 || y == 63 {
                assert!(!mask.get(x, y));
            }
        }
    }
}

#[test]
fn build_load_round_trip_and_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mesh = common::textured_cube(common::block_texture());
    let built = build_cache(&mesh, 6, &intrinsics(), 2.5, a.path()).unwrap();
    let aabb = compute_aabb(&mesh).unwrap();
    let expect = sample_sphere_views(6, 2.5 * aabb.diagonal(), aabb.center()).unwrap();
    assert_eq!(built.entries.iter().map(|e| e.view_pose).collect::<Vec<_>>(), expect);

    let loaded = load_cache(a.path()).unwrap();
    assert_eq!(loaded.entries.len(), 6);
    assert_eq!(loaded.intrinsics, built.intrinsics);
    assert_eq!(loaded.aabb, built.aabb);
    assert_eq!(loaded.mesh_fingerprint, built.mesh_fingerprint);
    for (l, b) in loaded.entries.iter().zip(&built.entries) {
        assert_eq!((l.index, &l.rcm_sha256, &l.rgb_sha256), (b.index, &b.rcm_sha256, &b.rgb_sha256));
        let (ql, qb) = (l.view_pose.rotation(), b.view_pose.rotation());
        assert!((ql.w - qb.w).abs() + (ql.x - qb.x).abs() + (ql.y - qb.y).abs() + (ql.z - qb.z).abs() < 1e-9);
        assert!((l.view_pose.translation() - b.view_pose.translation()).norm() < 1e-9);
    }
    assert!(loaded.verify_mesh(&mesh));
    assert!(!loaded.verify_mesh(&common::textured_cube(common::stripe_texture())));

    build_cache(&mesh, 6, &intrinsics(), 2.5, b.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 13);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn load_reports_damage() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = common::textured_cube(common::block_texture());
    build_cache(&mesh, 3, &intrinsics(), 2.5, dir.path()).unwrap();
    let manifest = dir.path().join("cache.json");
    let original = fs::read_to_string(&manifest).unwrap();

    fs::remove_file(dir.path().join("view_1_rcm.png")).unwrap();
    let e = load_cache(dir.path()).unwrap_err();
    assert!(matches!(e, Error::ImageMissing { entry: 1, .. }), "{e}");
    assert!(e.to_string().contains("entry 1"));
    build_cache(&mesh, 3, &intrinsics(), 2.5, dir.path()).unwrap();

    let v: serde_json::Value = serde_json::from_str(&original).unwrap();
    let good = v["entries"][0]["rgb_sha256"].as_str().unwrap().to_string();
    let bad_hash = original.replace(&good, &"0".repeat(64));
    fs::write(&manifest, bad_hash).unwrap();
    assert!(matches!(load_cache(dir.path()), Err(Error::ManifestCorrupt { .. })));

    fs::write(&manifest, original.replace("\"index\": 2", "\"index\": 5")).unwrap();
    assert!(matches!(load_cache(dir.path()), Err(Error::ManifestCorrupt { .. })));

    fs::write(&manifest, "{ not json").unwrap();
    assert!(matches!(load_cache(dir.path()), Err(Error::ManifestCorrupt { .. })));

    fs::remove_file(&manifest).unwrap();
    assert!(matches!(load_cache(dir.path()), Err(Error::ManifestMissing(_))));
}

#[test]
fn mask_mismatch_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = common::textured_cube(common::block_texture());
    build_cache(&mesh, 2, &intrinsics(), 2.5, dir.path()).unwrap();
    // swap in view 1's rgb as view 0's and refresh the hash so only the masks disagree
    let manifest = dir.path().join("cache.json");
    let text = fs::read_to_string(&manifest).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let (h0, h1) = (
        v["entries"][0]["rgb_sha256"].as_str().unwrap(),
        v["entries"][1]["rgb_sha256"].as_str().unwrap(),
    );
    fs::copy(dir.path().join("view_1_rgb.png"), dir.path().join("view_0_rgb.png")).unwrap();
    fs::write(&manifest, text.replacen(h0, h1, 1)).unwrap();
    let e = load_cache(dir.path()).unwrap_err();
    assert!(matches!(e, Error::MaskMismatch { entry: 0 }), "{e}");
}

#[test]
fn too_small_radius_fails_and_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = common::textured_cube(common::block_texture());
    let out = dir.path().join("c");
    assert!(build_cache(&mesh, 6, &intrinsics(), 0.3, &out).is_err());
    assert!(!out.join("cache.json").exists());
    assert!(build_cache(&mesh, 0, &intrinsics(), 2.5, &out).unwrap_err().to_string().contains("views must be >= 1"));
}

#[test]
fn six_views_see_every_cube_vertex() {
    let mesh = common::textured_cube(common::block_texture());
    let aabb = compute_aabb(&mesh).unwrap();
    let intr = intrinsics();
    let poses = cache_view_poses(&aabb, 6, 2.5).unwrap();
    let mut hidden_pairs = 0;
    for v in mesh.vertices() {
        let seen = poses.iter().filter(|pose| {
            let cam = Camera::new(intr, **pose);
            let p = cam.project(v.position).unwrap();
            let (x, y) = ((p.pixel.x - 0.5).round().clamp(0.0, 63.0) as usize, (p.pixel.y - 0.5).round().clamp(0.0, 63.0) as usize);
            let frags = rasterize_fragments(&mesh, &Pose6DoF::IDENTITY, &cam);
            // passes the z-test when nothing at its pixel is clearly nearer
            frags.get(x, y).map_or(true, |f| f.depth > p.depth - 0.05)
        });
        let seen = seen.count();
        hidden_pairs += poses.len() - seen;
        assert!(seen > 0, "vertex {:?} hidden in every view", v.position);
    }
    // the far corners are occluded in some views, so the z-test is doing work
    assert!(hidden_pairs > 0);
}
