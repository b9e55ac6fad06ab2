//! ASCII PLY point maps and the frames manifest consumed by `tssim --manifest`.
//!
//! Each PLY vertex carries `x y z` (double), `red green blue` (uchar) and the
//! integer source pixel `u v`. The image size comes from the paired camera.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rcmkit_core::{Camera, ColoredPoint, ConsistencyError, Image, PointMap, RgbImage, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::images::read_rgb_png;
use crate::json::load_camera;

const PROPERTIES: [&str; 8] = ["x", "y", "z", "red", "green", "blue", "u", "v"];

pub fn write_ply(map: &PointMap) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str("comment u v are the pixel_u pixel_v source pixel of each point\n");
    writeln!(out, "comment frame_index {}", map.frame_index).expect("String write");
    writeln!(out, "element vertex {}", map.defined_count()).expect("String write");
    for p in ["x", "y", "z"] {
        writeln!(out, "property double {p}").expect("String write");
    }
    for p in ["red", "green", "blue"] {
        writeln!(out, "property uchar {p}").expect("String write");
    }
    out.push_str("property int u\nproperty int v\nend_header\n");
    for (u, v, pt) in map.iter_defined() {
        let (p, c) = (pt.position, pt.color);
        writeln!(out, "{} {} {} {} {} {} {u} {v}", p.x, p.y, p.z, c[0], c[1], c[2]).expect("String write");
    }
    out
}

/// Parses an ASCII PLY point map into a `width` x `height` grid.
pub fn parse_ply(text: &str, path: &Path, frame_index: usize, width: usize, height: usize) -> Result<PointMap> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(err(1, "missing 'ply' magic".into())),
    }
    let mut count: Option<usize> = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    let mut header_done = false;
    for (ln, line) in lines.by_ref() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["format", "ascii", _] => {}
            ["format", ..] => return Err(err(ln, "only ASCII PLY is supported".into())),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse().map_err(|_| err(ln, format!("invalid vertex count {n:?}")))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", "list", ..] if in_vertex => return Err(err(ln, "list properties are not supported".into())),
            ["property", _, name] if in_vertex => props.push(name.to_string()),
            ["property", ..] => {}
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => return Err(err(ln, format!("unexpected header line {line:?}"))),
        }
    }
    if !header_done {
        return Err(err(0, "missing end_header".into()));
    }
    let count = count.ok_or_else(|| err(0, "missing 'element vertex'".into()))?;
    let column: HashMap<&str, usize> = props.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let mut idx = [0usize; 8];
    for (k, name) in PROPERTIES.iter().enumerate() {
        idx[k] = *column
            .get(name)
            .ok_or_else(|| err(0, format!("missing vertex property {name:?}")))?;
    }

    let mut points = Image::filled(width, height, None);
    let mut seen = 0usize;
    for (ln, line) in lines {
        if seen == count {
            if line.is_empty() {
                continue;
            }
            return Err(err(ln, format!("more than the declared {count} vertices")));
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != props.len() {
            return Err(err(ln, format!("expected {} values, found {}", props.len(), f.len())));
        }
        let num = |k: usize| -> Result<f64> {
            f[idx[k]]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(ln, format!("invalid {} value {:?}", PROPERTIES[k], f[idx[k]])))
        };
        let byte = |k: usize| -> Result<u8> {
            f[idx[k]]
                .parse::<u8>()
                .map_err(|_| err(ln, format!("invalid {} value {:?}", PROPERTIES[k], f[idx[k]])))
        };
        let pixel = |k: usize, limit: usize| -> Result<usize> {
            f[idx[k]]
                .parse::<usize>()
                .ok()
                .filter(|&p| p < limit)
                .ok_or_else(|| err(ln, format!("pixel {} {:?} outside 0..{limit}", PROPERTIES[k], f[idx[k]])))
        };
        let position = Vec3::new(num(0)?, num(1)?, num(2)?);
        let color = [byte(3)?, byte(4)?, byte(5)?];
        let (u, v) = (pixel(6, width)?, pixel(7, height)?);
        if points.get(u, v).is_some() {
            return Err(err(ln, format!("pixel ({u}, {v}) appears twice")));
        }
        points.set(u, v, Some(ColoredPoint { position, color }));
        seen += 1;
    }
    if seen != count {
        return Err(err(0, format!("declared {count} vertices, found {seen}")));
    }
    Ok(PointMap::new(frame_index, points)?)
}

pub fn read_ply(path: &Path, frame_index: usize, width: usize, height: usize) -> Result<PointMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&text, path, frame_index, width, height)
}

/// One manifest row; missing fields are tolerated while parsing so that
/// count mismatches can be reported as such.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointmap: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesManifest {
    pub frames: Vec<FrameJson>,
}

/// Frames, point maps, and cameras loaded from a frames manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub frames: Vec<RgbImage>,
    pub maps: Vec<PointMap>,
    pub cams: Vec<Camera>,
}

/// Loads a frames manifest; relative paths resolve against its directory.
pub fn load_frames_manifest(path: &Path) -> Result<FrameSet> {
    let manifest: FramesManifest = crate::json::read_json(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &str| -> PathBuf { base.join(p) };
    let images: Vec<&String> = manifest.frames.iter().filter_map(|f| f.image.as_ref()).collect();
    let plys: Vec<&String> = manifest.frames.iter().filter_map(|f| f.pointmap.as_ref()).collect();
    let cams: Vec<&String> = manifest.frames.iter().filter_map(|f| f.camera.as_ref()).collect();
    if images.len() != plys.len() || images.len() != cams.len() || images.len() != manifest.frames.len() {
        return Err(ConsistencyError::LengthMismatch {
            frames: images.len(),
            maps: plys.len(),
            cameras: cams.len(),
        }
        .into());
    }
    let mut set = FrameSet {
        frames: Vec::with_capacity(images.len()),
        maps: Vec::with_capacity(images.len()),
        cams: Vec::with_capacity(images.len()),
    };
    for (i, ((img, ply), cam)) in images.iter().zip(&plys).zip(&cams).enumerate() {
        let camera = load_camera(&resolve(cam))?;
        let (w, h) = (camera.intrinsics.width, camera.intrinsics.height);
        set.frames.push(read_rgb_png(&resolve(img))?);
        set.maps.push(read_ply(&resolve(ply), i, w, h)?);
        set.cams.push(camera);
    }
    Ok(set)
}
