//! Triangle meshes, bounding boxes, and per-vertex relative coordinate colors.
//!
//! A relative coordinate map (RCM) colors every surface point with its position
//! normalized by the object's axis-aligned bounding box, so the lower corner
//! maps to black and the upper corner to white:
//!
//! ```text
//! normalized = (position - b_min) / (b_max - b_min)     in [0, 1]^3
//! quantized  = floor(255 * normalized)                 in [0, 255]^3
//! ```

use alloc::vec::Vec;
use core::fmt;

use crate::image::{Rgb, RgbImage};
use crate::math::{Vec2, Vec3};

/// Relative epsilon used to widen degenerate bounding-box axes.
pub const AABB_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    EmptyMesh,
    IndexOutOfRange { triangle: usize, index: u32, vertex_count: usize },
    NonFinitePosition { vertex: usize },
    /// Vertices carry UVs but no texture was supplied.
    TextureMissing,
    /// A texture was supplied but some vertex has no UV.
    UvMissing { vertex: usize },
    EmptyTexture,
    NoTexture,
    ZeroExtent { axis: usize },
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::EmptyMesh => write!(f, "mesh has no vertices"),
            MeshError::IndexOutOfRange {
                triangle,
                index,
                vertex_count,
            } => write!(
                f,
                "triangle {triangle} references vertex {index} but mesh has {vertex_count} vertices"
            ),
            MeshError::NonFinitePosition { vertex } => {
                write!(f, "vertex {vertex} has a non-finite position")
            }
            MeshError::TextureMissing => write!(f, "mesh has texture coordinates but no texture"),
            MeshError::UvMissing { vertex } => {
                write!(f, "mesh has a texture but vertex {vertex} has no texture coordinate")
            }
            MeshError::EmptyTexture => write!(f, "texture image has zero size"),
            MeshError::NoTexture => write!(f, "mesh has no texture"),
            MeshError::ZeroExtent { axis } => write!(f, "bounding box has zero extent on axis {axis}"),
        }
    }
}

impl core::error::Error for MeshError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub position: Vec3,
    pub uv: Option<Vec2>,
    pub rgb: Option<Rgb>,
}

impl Vertex {
    pub fn new(position: Vec3) -> Self {
        Self {
            position,
            uv: None,
            rgb: None,
        }
    }

    pub fn with_uv(position: Vec3, uv: Vec2) -> Self {
        Self {
            position,
            uv: Some(uv),
            rgb: None,
        }
    }
}

/// An indexed triangle mesh with an optional diffuse texture.
///
/// A mesh with zero triangles is valid and renders nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vertex>,
    triangles: Vec<[u32; 3]>,
    texture: Option<RgbImage>,
}

impl Mesh {
    pub fn new(
        vertices: Vec<Vertex>,
        triangles: Vec<[u32; 3]>,
        texture: Option<RgbImage>,
    ) -> Result<Self, MeshError> {
        for (i, v) in vertices.iter().enumerate() {
            let uv_ok = v.uv.map_or(true, |uv| uv.x.is_finite() && uv.y.is_finite());
            if !v.position.is_finite() || !uv_ok {
                return Err(MeshError::NonFinitePosition { vertex: i });
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &index in tri {
                if index as usize >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index,
                        vertex_count: vertices.len(),
                    });
                }
            }
        }
        match &texture {
            Some(tex) => {
                if tex.width() == 0 || tex.height() == 0 {
                    return Err(MeshError::EmptyTexture);
                }
                if let Some(i) = vertices.iter().position(|v| v.uv.is_none()) {
                    return Err(MeshError::UvMissing { vertex: i });
                }
            }
            None => {
                if vertices.iter().any(|v| v.uv.is_some()) {
                    return Err(MeshError::TextureMissing);
                }
            }
        }
        Ok(Self {
            vertices,
            triangles,
            texture,
        })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn texture(&self) -> Option<&RgbImage> {
        self.texture.as_ref()
    }

    /// True when there is nothing to rasterize.
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Same geometry with a different texture (UVs must already be present).
    pub fn with_texture(&self, texture: RgbImage) -> Result<Self, MeshError> {
        Mesh::new(self.vertices.clone(), self.triangles.clone(), Some(texture))
    }

    /// Applies `position * scale + offset` to every vertex.
    pub fn transformed(&self, scale: f64, offset: Vec3) -> Self {
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vertex {
                position: v.position * scale + offset,
                ..*v
            })
            .collect();
        Self {
            vertices,
            triangles: self.triangles.clone(),
            texture: self.texture.clone(),
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub b_min: Vec3,
    pub b_max: Vec3,
}

impl Aabb {
    pub fn extent(&self) -> Vec3 {
        self.b_max - self.b_min
    }

    pub fn center(&self) -> Vec3 {
        (self.b_min + self.b_max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    /// Maps a normalized coordinate in `[0,1]^3` back into model space.
    pub fn denormalize(&self, normalized: Vec3) -> Vec3 {
        self.b_min + normalized.mul_elem(self.extent())
    }

    /// Maps a quantized RCM color back to a model-space point using `c / 255`.
    pub fn unquantize(&self, rgb: Rgb) -> Vec3 {
        let n = Vec3::new(rgb[0] as f64, rgb[1] as f64, rgb[2] as f64) / 255.0;
        self.denormalize(n)
    }
}

/// Component-wise min/max over all vertex positions, with degenerate axes
/// widened symmetrically to `AABB_EPSILON * max_extent` (or `AABB_EPSILON`
/// when every axis is degenerate).
pub fn compute_aabb(mesh: &Mesh) -> Result<Aabb, MeshError> {
    let mut it = mesh.vertices.iter().map(|v| v.position);
    let first = it.next().ok_or(MeshError::EmptyMesh)?;
    let (mut b_min, mut b_max) = it.fold((first, first), |(lo, hi), p| {
        (lo.min_elem(p), hi.max_elem(p))
    });

    let ext = b_max - b_min;
    let max_extent = ext.x.max(ext.y).max(ext.z);
    let scale = if max_extent > 0.0 { max_extent } else { 1.0 };
    let eps = AABB_EPSILON * scale;

    let mut lo = b_min.to_array();
    let mut hi = b_max.to_array();
    for k in 0..3 {
        if hi[k] - lo[k] < eps {
            let c = 0.5 * (lo[k] + hi[k]);
            lo[k] = c - 0.5 * eps;
            hi[k] = c + 0.5 * eps;
        }
    }
    b_min = Vec3::from_array(lo);
    b_max = Vec3::from_array(hi);
    Ok(Aabb { b_min, b_max })
}

/// Per-vertex relative coordinate color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcmColor {
    pub normalized: Vec3,
    pub quantized: Rgb,
}

impl RcmColor {
    pub fn from_normalized(normalized: Vec3) -> Self {
        let n = Vec3::new(
            normalized.x.clamp(0.0, 1.0),
            normalized.y.clamp(0.0, 1.0),
            normalized.z.clamp(0.0, 1.0),
        );
        // clamp after the floor: 255 * 1.0 floors to 255 which is already in range
        let q = |c: f64| libm::floor(255.0 * c).clamp(0.0, 255.0) as u8;
        Self {
            normalized: n,
            quantized: [q(n.x), q(n.y), q(n.z)],
        }
    }
}

/// Normalizes every vertex by `aabb` and quantizes to 8 bits.
/// Vertices outside the box are clamped onto it.
pub fn compute_rcm_colors(mesh: &Mesh, aabb: &Aabb) -> Result<Vec<RcmColor>, MeshError> {
    let ext = aabb.extent();
    for k in 0..3 {
        if !(ext[k] > 0.0) {
            return Err(MeshError::ZeroExtent { axis: k });
        }
    }
    Ok(mesh
        .vertices
        .iter()
        .map(|v| RcmColor::from_normalized((v.position - aabb.b_min).div_elem(ext)))
        .collect())
}

/// Bilinear texture lookup with repeat wrapping.
///
/// `v = 0` is the bottom row of the image (OBJ convention); texel `(i, j)`
/// has its center at `((i + 0.5) / w, 1 - (j + 0.5) / h)`.
pub fn sample_texture(mesh: &Mesh, uv: Vec2) -> Result<Rgb, MeshError> {
    let tex = mesh.texture.as_ref().ok_or(MeshError::NoTexture)?;
    Ok(sample_bilinear(tex, uv))
}

pub(crate) fn sample_bilinear(tex: &RgbImage, uv: Vec2) -> Rgb {
    let (w, h) = tex.dims();
    let u = uv.x - libm::floor(uv.x);
    let v = uv.y - libm::floor(uv.y);
    let x = u * w as f64 - 0.5;
    let y = (1.0 - v) * h as f64 - 0.5;
    let x0 = libm::floor(x);
    let y0 = libm::floor(y);
    let fx = x - x0;
    let fy = y - y0;
    let wrap = |i: f64, n: usize| (i as i64).rem_euclid(n as i64) as usize;
    let (xa, xb) = (wrap(x0, w), wrap(x0 + 1.0, w));
    let (ya, yb) = (wrap(y0, h), wrap(y0 + 1.0, h));

    let p00 = tex.get(xa, ya);
    let p10 = tex.get(xb, ya);
    let p01 = tex.get(xa, yb);
    let p11 = tex.get(xb, yb);
    let mut out = [0u8; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = crate::math::round_to_u8(top * (1.0 - fy) + bottom * fy);
    }
    out
}
