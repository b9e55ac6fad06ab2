//! On-disk RCM cache: `cache.json` plus `view_<i>_rcm.png` / `view_<i>_rgb.png`.
//!
//! Both images of a view are RGBA with alpha 255 on the foreground, so the
//! rcm/rgb mask equality can be checked after loading. Every image is pinned
//! by a SHA-256 in the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use rcmkit_core::cache::render_cache;
use rcmkit_core::{Aabb, CameraIntrinsics, Mesh, Pose6DoF, Vec3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::images::{encode_rgba_png, read_rgba_png};
use crate::json::{to_json_string, IntrinsicsJson, PoseJson};

pub const MANIFEST_NAME: &str = "cache.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub index: usize,
    /// World-to-camera pose; the object sits at its model coordinates.
    pub view_pose: Pose6DoF,
    pub rcm_image: PathBuf,
    pub rgb_image: PathBuf,
    pub rcm_sha256: String,
    pub rgb_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcmCache {
    pub dir: PathBuf,
    pub entries: Vec<CacheEntry>,
    pub intrinsics: CameraIntrinsics,
    pub mesh_fingerprint: String,
    pub aabb: Aabb,
}

impl RcmCache {
    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(MANIFEST_NAME)
    }

    /// True when `mesh` is the mesh this cache was built from.
    pub fn verify_mesh(&self, mesh: &Mesh) -> bool {
        self.mesh_fingerprint == mesh_fingerprint(mesh)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AabbJson {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryJson {
    index: usize,
    pose: PoseJson,
    rcm_image: String,
    rcm_sha256: String,
    rgb_image: String,
    rgb_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestJson {
    version: u32,
    mesh_fingerprint: String,
    intrinsics: IntrinsicsJson,
    aabb: AabbJson,
    entries: Vec<EntryJson>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 over a canonical little-endian encoding of geometry, per-vertex
/// attributes, and texture.
pub fn mesh_fingerprint(mesh: &Mesh) -> String {
    let mut h = Sha256::new();
    h.update((mesh.vertices().len() as u64).to_le_bytes());
    for v in mesh.vertices() {
        for c in v.position.to_array() {
            h.update(c.to_le_bytes());
        }
        match v.uv {
            Some(uv) => {
                h.update([1]);
                h.update(uv.x.to_le_bytes());
                h.update(uv.y.to_le_bytes());
            }
            None => h.update([0]),
        }
        match v.rgb {
            Some(c) => {
                h.update([1]);
                h.update(c);
            }
            None => h.update([0]),
        }
    }
    h.update((mesh.triangles().len() as u64).to_le_bytes());
    for t in mesh.triangles() {
        for i in t {
            h.update(i.to_le_bytes());
        }
    }
    match mesh.texture() {
        Some(tex) => {
            h.update([1]);
            h.update((tex.width() as u64).to_le_bytes());
            h.update((tex.height() as u64).to_le_bytes());
            for p in tex.pixels() {
                h.update(p);
            }
        }
        None => h.update([0]),
    }
    hex::encode(h.finalize())
}

fn rcm_name(i: usize) -> String {
    format!("view_{i}_rcm.png")
}

fn rgb_name(i: usize) -> String {
    format!("view_{i}_rgb.png")
}

/// Renders the cache views and writes images plus manifest into `out_dir`.
/// Files written before an error are removed again.
pub fn build_cache(
    mesh: &Mesh,
    n_views: usize,
    intrinsics: &CameraIntrinsics,
    radius_factor: f64,
    out_dir: &Path,
) -> Result<RcmCache> {
    let rendered = render_cache(mesh, n_views, intrinsics, radius_factor)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = write_cache(mesh, &rendered, out_dir, &mut written);
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

fn write_cache(
    mesh: &Mesh,
    rendered: &rcmkit_core::RenderedCache,
    out_dir: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<RcmCache> {
    let mut entries = Vec::with_capacity(rendered.views.len());
    let mut json_entries = Vec::with_capacity(rendered.views.len());
    for view in &rendered.views {
        let fb = &view.buffers;
        let mut hashes = Vec::with_capacity(2);
        for (name, img) in [(rcm_name(view.index), &fb.rcm), (rgb_name(view.index), &fb.rgb)] {
            let path = out_dir.join(&name);
            let bytes = encode_rgba_png(&path, img, &fb.mask)?;
            written.push(path.clone());
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            hashes.push(sha256_hex(&bytes));
        }
        let [rcm_sha256, rgb_sha256]: [String; 2] = hashes.try_into().expect("two images per view");
        json_entries.push(EntryJson {
            index: view.index,
            pose: PoseJson::from(&view.view_pose),
            rcm_image: rcm_name(view.index),
            rcm_sha256: rcm_sha256.clone(),
            rgb_image: rgb_name(view.index),
            rgb_sha256: rgb_sha256.clone(),
        });
        entries.push(CacheEntry {
            index: view.index,
            view_pose: view.view_pose,
            rcm_image: out_dir.join(rcm_name(view.index)),
            rgb_image: out_dir.join(rgb_name(view.index)),
            rcm_sha256,
            rgb_sha256,
        });
    }
    let fingerprint = mesh_fingerprint(mesh);
    let manifest = ManifestJson {
        version: MANIFEST_VERSION,
        mesh_fingerprint: fingerprint.clone(),
        intrinsics: IntrinsicsJson::from(&rendered.intrinsics),
        aabb: AabbJson {
            min: rendered.aabb.b_min.to_array(),
            max: rendered.aabb.b_max.to_array(),
        },
        entries: json_entries,
    };
    let path = out_dir.join(MANIFEST_NAME);
    written.push(path.clone());
    fs::write(&path, to_json_string(&manifest)).map_err(|e| Error::io(&path, e))?;
    Ok(RcmCache {
        dir: out_dir.to_path_buf(),
        entries,
        intrinsics: rendered.intrinsics,
        mesh_fingerprint: fingerprint,
        aabb: rendered.aabb,
    })
}

fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

/// Loads `dir/cache.json` and re-validates every entry against its images.
pub fn load_cache(dir: &Path) -> Result<RcmCache> {
    let path = dir.join(MANIFEST_NAME);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::ManifestMissing(path)),
        Err(e) => return Err(Error::io(&path, e)),
    };
    let corrupt = |message: String| Error::ManifestCorrupt {
        path: path.clone(),
        message,
    };
    let manifest: ManifestJson = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(corrupt(format!("unsupported version {}", manifest.version)));
    }
    if !is_sha256_hex(&manifest.mesh_fingerprint) {
        return Err(corrupt("mesh_fingerprint is not a SHA-256 hex digest".into()));
    }
    if manifest.entries.is_empty() {
        return Err(corrupt("no entries".into()));
    }
    let intrinsics = manifest
        .intrinsics
        .to_intrinsics()
        .map_err(|e| corrupt(format!("intrinsics: {e}")))?;
    let aabb = Aabb {
        b_min: Vec3::from_array(manifest.aabb.min),
        b_max: Vec3::from_array(manifest.aabb.max),
    };
    if !(aabb.b_min.is_finite() && aabb.b_max.is_finite())
        || (0..3).any(|k| !(aabb.b_max[k] > aabb.b_min[k]))
    {
        return Err(corrupt("aabb must be finite with max > min on every axis".into()));
    }

    let mut entries = Vec::with_capacity(manifest.entries.len());
    for (pos, e) in manifest.entries.iter().enumerate() {
        if e.index != pos {
            return Err(corrupt(format!("entry {pos} has index {}; indices must be 0..n-1 in order", e.index)));
        }
        let view_pose = e.pose.to_pose().map_err(|err| corrupt(format!("entry {pos} pose: {err}")))?;
        let mut decoded = Vec::with_capacity(2);
        for (name, expected) in [(&e.rcm_image, &e.rcm_sha256), (&e.rgb_image, &e.rgb_sha256)] {
            let rel = Path::new(name);
            if rel.is_absolute() || rel.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                return Err(corrupt(format!("entry {pos}: image path {name:?} must stay inside the cache")));
            }
            let img_path = dir.join(rel);
            let bytes = match fs::read(&img_path) {
                Ok(b) => b,
                Err(err) if err.kind() == std::io::ErrorKind::NotFound => {
                    return Err(Error::ImageMissing {
                        entry: pos,
                        path: img_path,
                    })
                }
                Err(err) => return Err(Error::io(&img_path, err)),
            };
            if sha256_hex(&bytes) != *expected {
                return Err(corrupt(format!("entry {pos}: SHA-256 mismatch for {name}")));
            }
            let (_, mask) = read_rgba_png(&img_path)?;
            if mask.dims() != (intrinsics.width, intrinsics.height) {
                return Err(corrupt(format!(
                    "entry {pos}: {name} is {}x{}, intrinsics say {}x{}",
                    mask.width(),
                    mask.height(),
                    intrinsics.width,
                    intrinsics.height
                )));
            }
            decoded.push((img_path, mask));
        }
        if decoded[0].1 != decoded[1].1 {
            return Err(Error::MaskMismatch { entry: pos });
        }
        let mut it = decoded.into_iter();
        let (rcm_image, _) = it.next().expect("rcm image");
        let (rgb_image, _) = it.next().expect("rgb image");
        entries.push(CacheEntry {
            index: pos,
            view_pose,
            rcm_image,
            rgb_image,
            rcm_sha256: e.rcm_sha256.clone(),
            rgb_sha256: e.rgb_sha256.clone(),
        });
    }
    Ok(RcmCache {
        dir: dir.to_path_buf(),
        entries,
        intrinsics,
        mesh_fingerprint: manifest.mesh_fingerprint,
        aabb,
    })
}
