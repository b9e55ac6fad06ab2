//! Z-buffered triangle rasterization of posed meshes.
//!
//! Every pixel is sampled once at its center `(x + 0.5, y + 0.5)`. Shared
//! edges follow the top-left fill rule, there is no backface culling, and
//! attributes are interpolated perspective-correctly. Triangles crossing the
//! near plane are clipped and their clip vertices carry barycentric
//! coordinates relative to the original triangle, so attributes are always
//! interpolated from the original three vertices.

use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{interpolate_pose, Camera, CameraIntrinsics, GeometryError, Pose6DoF, PoseTrajectory, Z_NEAR};
use crate::image::{DepthImage, Image, Mask, Rgb, RgbImage};
use crate::math::{round_to_u8, Vec2, Vec3};
use crate::mesh::{sample_bilinear, Mesh, RcmColor};

/// Albedo used for meshes that carry neither a texture nor vertex colors.
pub const DEFAULT_ALBEDO: Rgb = [128, 128, 128];

/// Depths closer than this are treated as ties, resolved by triangle index.
pub const DEPTH_TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum RasterError {
    ColorCountMismatch { colors: usize, vertices: usize },
    InvalidFrameCount,
    Geometry(GeometryError),
}

impl fmt::Display for RasterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RasterError::ColorCountMismatch { colors, vertices } => {
                write!(f, "got {colors} RCM colors for {vertices} vertices")
            }
            RasterError::InvalidFrameCount => write!(f, "frame count must be >= 1"),
            RasterError::Geometry(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for RasterError {}

impl From<GeometryError> for RasterError {
    fn from(e: GeometryError) -> Self {
        RasterError::Geometry(e)
    }
}

/// Barycentric weights of a sample point relative to triangle `(i, j, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl BarycentricWeights {
    pub fn sum(&self) -> f64 {
        self.alpha + self.beta + self.gamma
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// `alpha * a + beta * b + gamma * c` per channel, rounded half up.
    pub fn blend_rgb(&self, a: Rgb, b: Rgb, c: Rgb) -> Rgb {
        let mut out = [0u8; 3];
        for ch in 0..3 {
            out[ch] = round_to_u8(self.alpha * a[ch] as f64 + self.beta * b[ch] as f64 + self.gamma * c[ch] as f64);
        }
        out
    }
}

/// The surface sample that won the depth test at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub triangle: u32,
    /// Perspective-correct weights of the original triangle's vertices.
    pub weights: BarycentricWeights,
    /// Camera-space z.
    pub depth: f64,
}

pub type FragmentImage = Image<Option<Fragment>>;

/// Rendered output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffers {
    pub rcm: RgbImage,
    pub rgb: RgbImage,
    pub depth: DepthImage,
    pub mask: Mask,
}

impl FrameBuffers {
    pub fn width(&self) -> usize {
        self.mask.width()
    }

    pub fn height(&self) -> usize {
        self.mask.height()
    }

    pub fn coverage(&self) -> usize {
        self.mask.pixels().iter().filter(|&&m| m).count()
    }
}

#[derive(Clone, Copy)]
struct ClipVertex {
    p: Vec3,
    bary: [f64; 3],
}

fn clip_near(tri: [ClipVertex; 3], out: &mut Vec<ClipVertex>) {
    out.clear();
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let a_in = a.p.z > Z_NEAR;
        let b_in = b.p.z > Z_NEAR;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (Z_NEAR - a.p.z) / (b.p.z - a.p.z);
            let mut p = a.p.lerp(b.p, t);
            // keep the clip vertex strictly in front so its 1/z stays finite
            p.z = p.z.max(Z_NEAR);
            let mut bary = [0.0; 3];
            for k in 0..3 {
                bary[k] = a.bary[k] + (b.bary[k] - a.bary[k]) * t;
            }
            out.push(ClipVertex { p, bary });
        }
    }
}

#[derive(Clone, Copy)]
struct ScreenVertex {
    s: Vec2,
    inv_z: f64,
    bary: [f64; 3],
}

fn edge(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Top or left edge for positively oriented triangles in y-down screen space.
fn is_top_left(a: Vec2, b: Vec2) -> bool {
    let dy = b.y - a.y;
    let dx = b.x - a.x;
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

fn covers(e: f64, top_left: bool) -> bool {
    e > 0.0 || (e == 0.0 && top_left)
}

fn pixel_span(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    // pixel x is covered when lo <= x + 0.5 <= hi
    let first = libm::ceil(lo - 0.5).max(0.0);
    let last = libm::floor(hi - 0.5).min(n as f64 - 1.0);
    (first <= last).then(|| (first as usize, last as usize))
}

fn wins(depth: f64, triangle: u32, cur: &Option<Fragment>) -> bool {
    match cur {
        None => true,
        Some(f) => {
            if (depth - f.depth).abs() < DEPTH_TIE_EPSILON {
                triangle < f.triangle
            } else {
                depth < f.depth
            }
        }
    }
}

fn raster_triangle(intr: &CameraIntrinsics, v: [ScreenVertex; 3], triangle: u32, frags: &mut FragmentImage) {
    let mut v = v;
    let mut area = edge(v[0].s, v[1].s, v[2].s);
    if !(area.is_finite()) || area == 0.0 {
        return;
    }
    if area < 0.0 {
        v.swap(1, 2);
        area = -area;
    }
    let (s0, s1, s2) = (v[0].s, v[1].s, v[2].s);
    let tl = [is_top_left(s1, s2), is_top_left(s2, s0), is_top_left(s0, s1)];

    let min_x = s0.x.min(s1.x).min(s2.x);
    let max_x = s0.x.max(s1.x).max(s2.x);
    let min_y = s0.y.min(s1.y).min(s2.y);
    let max_y = s0.y.max(s1.y).max(s2.y);
    let Some((x0, x1)) = pixel_span(min_x, max_x, intr.width) else { return };
    let Some((y0, y1)) = pixel_span(min_y, max_y, intr.height) else { return };

    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
            let e0 = edge(s1, s2, p);
            let e1 = edge(s2, s0, p);
            let e2 = edge(s0, s1, p);
            if !(covers(e0, tl[0]) && covers(e1, tl[1]) && covers(e2, tl[2])) {
                continue;
            }
            let w0 = e0 / area * v[0].inv_z;
            let w1 = e1 / area * v[1].inv_z;
            let w2 = e2 / area * v[2].inv_z;
            let sum = w0 + w1 + w2;
            let depth = 1.0 / sum;
            let slot = frags.get_mut(x, y);
            if !wins(depth, triangle, slot) {
                continue;
            }
            let (b0, b1, b2) = (w0 / sum, w1 / sum, w2 / sum);
            let mut orig = [0.0; 3];
            for k in 0..3 {
                orig[k] = b0 * v[0].bary[k] + b1 * v[1].bary[k] + b2 * v[2].bary[k];
            }
            *slot = Some(Fragment {
                triangle,
                weights: BarycentricWeights {
                    alpha: orig[0],
                    beta: orig[1],
                    gamma: orig[2],
                },
                depth,
            });
        }
    }
}

/// Visibility pass: for each pixel, the nearest triangle and its weights.
pub fn rasterize_fragments(mesh: &Mesh, object_pose: &Pose6DoF, camera: &Camera) -> FragmentImage {
    let intr = &camera.intrinsics;
    let view = camera.pose.compose(object_pose);
    let cam_pts: Vec<Vec3> = mesh.vertices().iter().map(|v| view.apply(v.position)).collect();
    let mut frags: FragmentImage = Image::filled(intr.width, intr.height, None);
    let mut poly = Vec::with_capacity(4);

    for (t, tri) in mesh.triangles().iter().enumerate() {
        let corners = [0usize, 1, 2].map(|k| {
            let mut bary = [0.0; 3];
            bary[k] = 1.0;
            ClipVertex {
                p: cam_pts[tri[k] as usize],
                bary,
            }
        });
        clip_near(corners, &mut poly);
        if poly.len() < 3 {
            continue;
        }
        let screen: Vec<ScreenVertex> = poly
            .iter()
            .map(|c| {
                let inv_z = 1.0 / c.p.z;
                ScreenVertex {
                    s: Vec2::new(intr.fx * c.p.x * inv_z + intr.cx, intr.fy * c.p.y * inv_z + intr.cy),
                    inv_z,
                    bary: c.bary,
                }
            })
            .collect();
        for i in 1..screen.len() - 1 {
            raster_triangle(intr, [screen[0], screen[i], screen[i + 1]], t as u32, &mut frags);
        }
    }
    frags
}

fn albedo(mesh: &Mesh, tri: [u32; 3], w: &BarycentricWeights) -> Rgb {
    let verts = mesh.vertices();
    let [a, b, c] = tri.map(|i| &verts[i as usize]);
    if let Some(tex) = mesh.texture() {
        // Mesh guarantees every vertex has a UV when a texture is present.
        let uv = |v: &crate::mesh::Vertex| v.uv.unwrap_or_default();
        let (ua, ub, uc) = (uv(a), uv(b), uv(c));
        let p = ua * w.alpha + ub * w.beta + uc * w.gamma;
        return sample_bilinear(tex, p);
    }
    let col = |v: &crate::mesh::Vertex| v.rgb.unwrap_or(DEFAULT_ALBEDO);
    w.blend_rgb(col(a), col(b), col(c))
}

/// Renders RCM, albedo, depth and coverage for one posed mesh.
pub fn rasterize(
    mesh: &Mesh,
    rcm_colors: &[RcmColor],
    object_pose: &Pose6DoF,
    camera: &Camera,
    background: Rgb,
) -> Result<FrameBuffers, RasterError> {
    if rcm_colors.len() != mesh.vertices().len() {
        return Err(RasterError::ColorCountMismatch {
            colors: rcm_colors.len(),
            vertices: mesh.vertices().len(),
        });
    }
    let frags = rasterize_fragments(mesh, object_pose, camera);
    Ok(shade(mesh, rcm_colors, &frags, background))
}

/// Turns a visibility pass into frame buffers.
pub fn shade(mesh: &Mesh, rcm_colors: &[RcmColor], frags: &FragmentImage, background: Rgb) -> FrameBuffers {
    let (w, h) = frags.dims();
    let mut rcm = RgbImage::filled(w, h, background);
    let mut rgb = RgbImage::filled(w, h, background);
    let mut depth = DepthImage::filled(w, h, f32::INFINITY);
    let mut mask = Mask::filled(w, h, false);
    for y in 0..h {
        for x in 0..w {
            let Some(f) = frags.get(x, y) else { continue };
            let tri = mesh.triangles()[f.triangle as usize];
            let [a, b, c] = tri.map(|i| rcm_colors[i as usize].quantized);
            rcm.set(x, y, f.weights.blend_rgb(a, b, c));
            rgb.set(x, y, albedo(mesh, tri, &f.weights));
            depth.set(x, y, f.depth as f32);
            mask.set(x, y, true);
        }
    }
    FrameBuffers { rcm, rgb, depth, mask }
}

/// Object poses for frames `0..n_frames`, frame `i` at `start + i / fps`.
pub fn frame_poses(traj: &PoseTrajectory, n_frames: usize) -> Result<Vec<Pose6DoF>, RasterError> {
    if n_frames == 0 {
        return Err(RasterError::InvalidFrameCount);
    }
    (0..n_frames)
        .map(|i| interpolate_pose(traj, traj.frame_time(i)).map_err(RasterError::from))
        .collect()
}

/// Renders `n_frames` frames of an object moving along `traj` in front of a fixed camera.
pub fn render_sequence(
    mesh: &Mesh,
    rcm_colors: &[RcmColor],
    traj: &PoseTrajectory,
    camera: &Camera,
    n_frames: usize,
    background: Rgb,
) -> Result<Vec<FrameBuffers>, RasterError> {
    frame_poses(traj, n_frames)?
        .iter()
        .map(|pose| rasterize(mesh, rcm_colors, pose, camera, background))
        .collect()
}
