//! Wavefront OBJ subset: `v` (optionally with RGB), `vt`, and `f` records.
//!
//! Polygons are fan-triangulated, indices may be negative (relative to the
//! records seen so far), and each distinct `(v, vt)` corner becomes one mesh
//! vertex. Normals, groups, and materials are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rcmkit_core::{Mesh, MeshError, RgbImage, Vec2, Vec3, Vertex};

use crate::error::{Error, Result};
use crate::images::read_rgb_png;

/// Loads an OBJ file and, when given, its PNG texture.
pub fn load_mesh(path: &Path, texture_path: Option<&Path>) -> Result<Mesh> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let texture = texture_path.map(read_rgb_png).transpose()?;
    parse_obj(&text, path, texture)
}

fn parse_floats(fields: &[&str], path: &Path, line: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("invalid number {f:?}"),
                })
        })
        .collect()
}

fn resolve(raw: &str, count: usize, path: &Path, line: usize) -> Result<usize> {
    let idx: i64 = raw.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("invalid index {raw:?}"),
    })?;
    let resolved = match idx {
        0 => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "OBJ indices start at 1".into(),
            })
        }
        i if i > 0 => i - 1,
        i => count as i64 + i,
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(Error::IndexOutOfRange {
            path: path.to_path_buf(),
            line,
            index: idx,
            count,
        });
    }
    Ok(resolved as usize)
}

/// Parses OBJ text; `path` is only used in diagnostics.
pub fn parse_obj(text: &str, path: &Path, texture: Option<RgbImage>) -> Result<Mesh> {
    let mut positions: Vec<(Vec3, Option<[u8; 3]>)> = Vec::new();
    let mut uvs: Vec<Vec2> = Vec::new();
    let mut corners: HashMap<(usize, Option<usize>), u32> = HashMap::new();
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut fields = content.split_whitespace();
        let Some(keyword) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        let malformed = |message: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{keyword}: {message}"),
        };
        match keyword {
            "v" => {
                let vals = parse_floats(&rest, path, line)?;
                let rgb = match vals.len() {
                    3 | 4 => None,
                    6 => Some([3, 4, 5].map(|k| (vals[k].clamp(0.0, 1.0) * 255.0).round() as u8)),
                    _ => return Err(malformed("expected 3, 4 or 6 numbers")),
                };
                positions.push((Vec3::new(vals[0], vals[1], vals[2]), rgb));
            }
            "vt" => {
                let vals = parse_floats(&rest, path, line)?;
                if vals.is_empty() || vals.len() > 3 {
                    return Err(malformed("expected 1 to 3 numbers"));
                }
                uvs.push(Vec2::new(vals[0], vals.get(1).copied().unwrap_or(0.0)));
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(malformed("a face needs at least 3 corners"));
                }
                let mut face = Vec::with_capacity(rest.len());
                for corner in &rest {
                    let mut parts = corner.split('/');
                    let v = resolve(parts.next().unwrap_or(""), positions.len(), path, line)?;
                    let vt = match parts.next() {
                        None | Some("") => None,
                        Some(t) => Some(resolve(t, uvs.len(), path, line)?),
                    };
                    // a third component is the normal index, which is discarded
                    if parts.nth(1).is_some() {
                        return Err(malformed("too many '/' separated fields"));
                    }
                    let id = *corners.entry((v, vt)).or_insert_with(|| {
                        let (position, rgb) = positions[v];
                        vertices.push(Vertex {
                            position,
                            uv: vt.map(|t| uvs[t]),
                            rgb,
                        });
                        (vertices.len() - 1) as u32
                    });
                    face.push(id);
                }
                for k in 1..face.len() - 1 {
                    triangles.push([face[0], face[k], face[k + 1]]);
                }
            }
            _ => {}
        }
    }

    Mesh::new(vertices, triangles, texture).map_err(|e| match e {
        MeshError::TextureMissing => Error::TextureMissing(path.to_path_buf()),
        other => Error::Mesh(other),
    })
}

/// Serializes the mesh as OBJ with one `v`/`vt` pair per vertex.
pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    let has_uv = mesh.vertices().iter().all(|v| v.uv.is_some()) && !mesh.vertices().is_empty();
    for v in mesh.vertices() {
        let p = v.position;
        match v.rgb {
            Some(c) => writeln!(
                out,
                "v {} {} {} {} {} {}",
                p.x,
                p.y,
                p.z,
                c[0] as f64 / 255.0,
                c[1] as f64 / 255.0,
                c[2] as f64 / 255.0
            ),
            None => writeln!(out, "v {} {} {}", p.x, p.y, p.z),
        }
        .expect("writing to a String cannot fail");
    }
    if has_uv {
        for v in mesh.vertices() {
            let uv = v.uv.expect("checked above");
            writeln!(out, "vt {} {}", uv.x, uv.y).expect("writing to a String cannot fail");
        }
    }
    for t in mesh.triangles() {
        let [a, b, c] = t.map(|i| i + 1);
        if has_uv {
            writeln!(out, "f {a}/{a} {b}/{b} {c}/{c}")
        } else {
            writeln!(out, "f {a} {b} {c}")
        }
        .expect("writing to a String cannot fail");
    }
    out
}
