//! Cross-frame geometry consistency (T-SSIM) and mask IoU.
//!
//! Per-frame point maps are concatenated into one cloud, the cloud is splatted
//! back into every frame's camera, and each reprojection is compared with its
//! source frame by SSIM. T-SSIM is the mean over frames.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{Camera, GeometryError, PoseTrajectory};
use crate::image::{GrayImage, Image, Mask, Rgb, RgbImage, WHITE};
use crate::math::{Vec2, Vec3};
use crate::mesh::{Mesh, RcmColor};
use crate::raster::{frame_poses, rasterize, RasterError};

/// Default splat half-width in pixels (3x3 squares).
pub const DEFAULT_SPLAT_RADIUS: usize = 1;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const SSIM_RANGE: f64 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub enum ConsistencyError {
    EmptyInput,
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    TooSmall { width: usize, height: usize },
    LengthMismatch { frames: usize, maps: usize, cameras: usize },
    NonFinitePoint { frame: usize },
    Raster(RasterError),
    Geometry(GeometryError),
}

impl fmt::Display for ConsistencyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConsistencyError::EmptyInput => write!(f, "no point maps given"),
            ConsistencyError::DimensionMismatch { left, right } => write!(
                f,
                "image dimensions differ: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            ConsistencyError::TooSmall { width, height } => {
                write!(f, "images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {width}x{height}")
            }
            ConsistencyError::LengthMismatch { frames, maps, cameras } => write!(
                f,
                "length mismatch: {frames} frames, {maps} point maps, {cameras} cameras"
            ),
            ConsistencyError::NonFinitePoint { frame } => write!(f, "point map {frame} has a non-finite point"),
            ConsistencyError::Raster(e) => write!(f, "{e}"),
            ConsistencyError::Geometry(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ConsistencyError {}

impl From<RasterError> for ConsistencyError {
    fn from(e: RasterError) -> Self {
        ConsistencyError::Raster(e)
    }
}

impl From<GeometryError> for ConsistencyError {
    fn from(e: GeometryError) -> Self {
        ConsistencyError::Geometry(e)
    }
}

/// A colored 3D point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColoredPoint {
    pub position: Vec3,
    pub color: Rgb,
}

/// Per-pixel world points of one frame; defined where the object is visible.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    pub frame_index: usize,
    points: Image<Option<ColoredPoint>>,
}

impl PointMap {
    pub fn new(frame_index: usize, points: Image<Option<ColoredPoint>>) -> Result<Self, ConsistencyError> {
        if points.pixels().iter().flatten().any(|p| !p.position.is_finite()) {
            return Err(ConsistencyError::NonFinitePoint { frame: frame_index });
        }
        Ok(Self { frame_index, points })
    }

    pub fn empty(frame_index: usize, width: usize, height: usize) -> Self {
        Self {
            frame_index,
            points: Image::filled(width, height, None),
        }
    }

    pub fn width(&self) -> usize {
        self.points.width()
    }

    pub fn height(&self) -> usize {
        self.points.height()
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&ColoredPoint> {
        self.points.get(x, y).as_ref()
    }

    pub fn defined_count(&self) -> usize {
        self.points.pixels().iter().filter(|p| p.is_some()).count()
    }

    /// Defined points in row-major pixel order with their `(u, v)` pixel.
    pub fn iter_defined(&self) -> impl Iterator<Item = (usize, usize, &ColoredPoint)> + '_ {
        let w = self.width();
        self.points
            .pixels()
            .iter()
            .enumerate()
            .filter_map(move |(i, p)| p.as_ref().map(|p| (i % w, i / w, p)))
    }

    pub fn mask(&self) -> Mask {
        self.points.map(|p| p.is_some())
    }
}

/// An unordered bag of colored points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<ColoredPoint>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Concatenates all defined points, in frame order then row-major pixel order.
pub fn aggregate(maps: &[PointMap]) -> Result<PointCloud, ConsistencyError> {
    if maps.is_empty() {
        return Err(ConsistencyError::EmptyInput);
    }
    let total = maps.iter().map(PointMap::defined_count).sum();
    let mut points = Vec::with_capacity(total);
    for m in maps {
        points.extend(m.iter_defined().map(|(_, _, p)| *p));
    }
    Ok(PointCloud { points })
}

/// Splats `cloud` into `camera` with `(2r+1)^2` squares and a per-pixel depth
/// test. Exact depth ties go to the lower point index.
pub fn reproject(cloud: &PointCloud, camera: &Camera, background: Rgb, splat_radius: usize) -> RgbImage {
    let (w, h) = (camera.intrinsics.width, camera.intrinsics.height);
    let mut img = RgbImage::filled(w, h, background);
    let mut zbuf: Image<(f64, usize)> = Image::filled(w, h, (f64::INFINITY, usize::MAX));
    let r = splat_radius as i64;
    for (idx, pt) in cloud.points.iter().enumerate() {
        let Some(proj) = camera.project(pt.position) else { continue };
        let (u, v) = (proj.pixel.x, proj.pixel.y);
        if !(u.is_finite() && v.is_finite()) {
            continue;
        }
        let cx = libm::floor(u);
        let cy = libm::floor(v);
        // skip points whose whole splat misses the image
        if cx < -(r as f64) - 1.0 || cy < -(r as f64) - 1.0 || cx > (w as f64) + r as f64 || cy > (h as f64) + r as f64 {
            continue;
        }
        let (cx, cy) = (cx as i64, cy as i64);
        for y in (cy - r).max(0)..=(cy + r).min(h as i64 - 1) {
            for x in (cx - r).max(0)..=(cx + r).min(w as i64 - 1) {
                let (x, y) = (x as usize, y as usize);
                let slot = zbuf.get_mut(x, y);
                if proj.depth < slot.0 || (proj.depth == slot.0 && idx < slot.1) {
                    *slot = (proj.depth, idx);
                    img.set(x, y, pt.color);
                }
            }
        }
    }
    img
}

/// Images that SSIM can score; RGB is reduced to BT.601 luma.
pub trait LumaSource {
    fn dims(&self) -> (usize, usize);
    fn luma(&self) -> Vec<f64>;
}

pub fn bt601_luma(p: Rgb) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

impl LumaSource for RgbImage {
    fn dims(&self) -> (usize, usize) {
        Image::dims(self)
    }

    fn luma(&self) -> Vec<f64> {
        self.pixels().iter().map(|&p| bt601_luma(p)).collect()
    }
}

impl LumaSource for GrayImage {
    fn dims(&self) -> (usize, usize) {
        Image::dims(self)
    }

    fn luma(&self) -> Vec<f64> {
        self.pixels().iter().map(|&p| p as f64).collect()
    }
}

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
pub fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = libm::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// "Valid" separable filtering of a row-major plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut horiz = Vec::with_capacity(ow * h);
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz.push(taps.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(t, v)| t * v).sum::<f64>());
        }
    }
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * horiz[(y + k) * ow + x];
            }
            out.push(acc);
        }
    }
    out
}

/// Mean structural similarity over all fully contained 11x11 Gaussian windows.
pub fn ssim<I: LumaSource>(a: &I, b: &I) -> Result<f64, ConsistencyError> {
    let (da, db) = (a.dims(), b.dims());
    if da != db {
        return Err(ConsistencyError::DimensionMismatch { left: da, right: db });
    }
    let (w, h) = da;
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(ConsistencyError::TooSmall { width: w, height: h });
    }
    Ok(ssim_planes(&a.luma(), &b.luma(), w, h))
}

fn ssim_planes(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let taps = gaussian_taps();
    let c1 = (SSIM_K1 * SSIM_RANGE) * (SSIM_K1 * SSIM_RANGE);
    let c2 = (SSIM_K2 * SSIM_RANGE) * (SSIM_K2 * SSIM_RANGE);

    let sq = |p: &[f64]| p.iter().map(|v| v * v).collect::<Vec<_>>();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, w, h, &taps);
    let mu_b = filter_valid(b, w, h, &taps);
    let e_aa = filter_valid(&sq(a), w, h, &taps);
    let e_bb = filter_valid(&sq(b), w, h, &taps);
    let e_ab = filter_valid(&ab, w, h, &taps);

    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        total += num / den;
    }
    total / mu_a.len() as f64
}

/// Per-frame SSIM scores and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub per_frame_ssim: Vec<f64>,
    pub t_ssim: f64,
    pub n_frames: usize,
    pub warnings: Vec<String>,
}

impl ConsistencyReport {
    pub fn from_scores(per_frame_ssim: Vec<f64>, warnings: Vec<String>) -> Self {
        let n = per_frame_ssim.len();
        let t_ssim = per_frame_ssim.iter().sum::<f64>() / n as f64;
        Self {
            per_frame_ssim,
            t_ssim,
            n_frames: n,
            warnings,
        }
    }
}

/// Image region compared by SSIM in [`compute_tssim_in`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SsimRegion {
    /// Whole frames, background included.
    #[default]
    FullFrame,
    /// Bounding box of the frame's point-map pixels, grown to at least one
    /// SSIM window. Frames with an empty point map fall back to the full frame.
    ObjectCrop,
}

fn crop(img: &RgbImage, x0: usize, y0: usize, w: usize, h: usize) -> RgbImage {
    Image::from_fn(w, h, |x, y| *img.get(x0 + x, y0 + y))
}

// Grows [lo, hi] to at least `min` samples while staying inside 0..len.
fn grow(lo: usize, hi: usize, min: usize, len: usize) -> (usize, usize) {
    let span = hi - lo + 1;
    if span >= min {
        return (lo, span);
    }
    let start = lo.saturating_sub((min - span) / 2).min(len - min);
    (start, min)
}

fn object_box(map: &PointMap) -> Option<(usize, usize, usize, usize)> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for (x, y, _) in map.iter_defined() {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if x0 == usize::MAX {
        return None;
    }
    let (x, w) = grow(x0, x1, SSIM_WINDOW, map.width());
    let (y, h) = grow(y0, y1, SSIM_WINDOW, map.height());
    Some((x, y, w, h))
}

/// Aggregates all point maps once, reprojects the cloud into each frame's
/// camera on a white background, and averages per-frame SSIM over full frames.
pub fn compute_tssim(
    frames: &[RgbImage],
    maps: &[PointMap],
    cams: &[Camera],
    splat_radius: usize,
) -> Result<ConsistencyReport, ConsistencyError> {
    compute_tssim_in(frames, maps, cams, splat_radius, SsimRegion::FullFrame)
}

/// [`compute_tssim`] with a selectable comparison region.
pub fn compute_tssim_in(
    frames: &[RgbImage],
    maps: &[PointMap],
    cams: &[Camera],
    splat_radius: usize,
    region: SsimRegion,
) -> Result<ConsistencyReport, ConsistencyError> {
    if frames.len() != maps.len() || frames.len() != cams.len() {
        return Err(ConsistencyError::LengthMismatch {
            frames: frames.len(),
            maps: maps.len(),
            cameras: cams.len(),
        });
    }
    if frames.is_empty() {
        return Err(ConsistencyError::EmptyInput);
    }
    let mut warnings = Vec::new();
    for (i, ((frame, map), cam)) in frames.iter().zip(maps).zip(cams).enumerate() {
        let fd = frame.dims();
        for other in [(map.width(), map.height()), (cam.intrinsics.width, cam.intrinsics.height)] {
            if other != fd {
                return Err(ConsistencyError::DimensionMismatch { left: fd, right: other });
            }
        }
        if fd.0 < SSIM_WINDOW || fd.1 < SSIM_WINDOW {
            return Err(ConsistencyError::TooSmall { width: fd.0, height: fd.1 });
        }
        if map.defined_count() == 0 {
            warnings.push(format!("frame {i}: point map is empty"));
        }
    }
    let cloud = aggregate(maps)?;
    let mut scores = Vec::with_capacity(frames.len());
    for ((frame, map), cam) in frames.iter().zip(maps).zip(cams) {
        let projected = reproject(&cloud, cam, WHITE, splat_radius);
        let score = match (region, object_box(map)) {
            (SsimRegion::ObjectCrop, Some((x, y, w, h))) => {
                ssim(&crop(frame, x, y, w, h), &crop(&projected, x, y, w, h))?
            }
            _ => ssim(frame, &projected)?,
        };
        scores.push(score);
    }
    Ok(ConsistencyReport::from_scores(scores, warnings))
}

/// Ground-truth stand-in for a reconstruction model: rendered frames, their
/// depth-derived point maps, and the equivalent moving cameras.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSequence {
    pub frames: Vec<RgbImage>,
    pub maps: Vec<PointMap>,
    /// World-to-camera of frame `i` is `camera.pose ∘ object_pose_i`, so the
    /// object stays fixed at its model coordinates.
    pub cams: Vec<Camera>,
}

/// Renders `traj` and unprojects every covered pixel center through its depth.
pub fn oracle_pointmaps(
    mesh: &Mesh,
    rcm_colors: &[RcmColor],
    traj: &PoseTrajectory,
    camera: &Camera,
    n_frames: usize,
) -> Result<OracleSequence, ConsistencyError> {
    let poses = frame_poses(traj, n_frames)?;
    let mut out = OracleSequence {
        frames: Vec::with_capacity(n_frames),
        maps: Vec::with_capacity(n_frames),
        cams: Vec::with_capacity(n_frames),
    };
    for (i, obj) in poses.iter().enumerate() {
        let fb = rasterize(mesh, rcm_colors, obj, camera, WHITE)?;
        let cam = Camera::new(camera.intrinsics, camera.pose.compose(obj));
        let mut points = Image::filled(fb.width(), fb.height(), None);
        for y in 0..fb.height() {
            for x in 0..fb.width() {
                if !*fb.mask.get(x, y) {
                    continue;
                }
                let px = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                let position = cam.unproject(px, *fb.depth.get(x, y) as f64)?;
                points.set(
                    x,
                    y,
                    Some(ColoredPoint {
                        position,
                        color: *fb.rgb.get(x, y),
                    }),
                );
            }
        }
        out.maps.push(PointMap::new(i, points)?);
        out.frames.push(fb.rgb);
        out.cams.push(cam);
    }
    Ok(out)
}

/// `|A ∩ B| / |A ∪ B|`, defined as 1 when both masks are empty.
pub fn mask_iou(a: &Mask, b: &Mask) -> Result<f64, ConsistencyError> {
    if a.dims() != b.dims() {
        return Err(ConsistencyError::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.pixels().iter().zip(b.pixels()) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraIntrinsics, Pose6DoF};
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn cam(w: usize, h: usize) -> Camera {
        Camera::new(CameraIntrinsics::centered(w as f64, w, h).unwrap(), Pose6DoF::IDENTITY)
    }

    fn map_with(frame: usize, w: usize, h: usize, pixels: &[(usize, usize)]) -> PointMap {
        let mut img = Image::filled(w, h, None);
        for &(x, y) in pixels {
            img.set(
                x,
                y,
                Some(ColoredPoint {
                    position: Vec3::new(x as f64, y as f64, frame as f64 + 1.0),
                    color: [x as u8, y as u8, frame as u8],
                }),
            );
        }
        PointMap::new(frame, img).unwrap()
    }

    #[test]
    fn aggregate_concatenates() {
        let a: Vec<_> = (0..100).map(|i| (i % 20, i / 20)).collect();
        let b: Vec<_> = (0..250).map(|i| (i % 25, i / 25)).collect();
        let cloud = aggregate(&[map_with(0, 30, 30, &a), map_with(1, 30, 30, &b)]).unwrap();
        assert_eq!(cloud.len(), 350);
        assert_eq!(aggregate(&[]), Err(ConsistencyError::EmptyInput));
    }

    #[test]
    fn aggregate_single_map_is_row_major() {
        let m = map_with(0, 8, 8, &[(5, 3), (1, 1), (7, 0)]);
        let cloud = aggregate(&[m.clone()]).unwrap();
        let order: Vec<_> = cloud.points.iter().map(|p| (p.position.x as usize, p.position.y as usize)).collect();
        assert_eq!(order, vec![(7, 0), (1, 1), (5, 3)]);
        let empty = PointMap::empty(1, 8, 8);
        assert_eq!(aggregate(&[m, empty]).unwrap(), cloud);
    }

    #[test]
    fn reproject_single_point() {
        let c = cam(21, 21);
        let cloud = PointCloud {
            points: vec![ColoredPoint {
                position: Vec3::new(0.0, 0.0, 2.0),
                color: [1, 2, 3],
            }],
        };
        let img = reproject(&cloud, &c, WHITE, 0);
        let fg: Vec<_> = img.pixels().iter().enumerate().filter(|(_, p)| **p != WHITE).collect();
        assert_eq!(fg.len(), 1);
        assert_eq!(fg[0], (10 * 21 + 10, &[1, 2, 3]));
        let img = reproject(&cloud, &c, WHITE, 1);
        assert_eq!(img.pixels().iter().filter(|p| **p != WHITE).count(), 9);
    }

    #[test]
    fn reproject_nearest_wins_and_empty_is_background() {
        let c = cam(21, 21);
        let pt = |z: f64, color: Rgb| ColoredPoint {
            position: Vec3::new(0.0, 0.0, z),
            color,
        };
        let cloud = PointCloud {
            points: vec![pt(2.0, [200, 0, 0]), pt(1.0, [0, 200, 0])],
        };
        assert_eq!(*reproject(&cloud, &c, WHITE, 0).get(10, 10), [0, 200, 0]);
        let behind = PointCloud {
            points: vec![pt(-1.0, [0, 0, 0])],
        };
        assert!(reproject(&behind, &c, [7, 7, 7], 1).pixels().iter().all(|p| *p == [7, 7, 7]));
        assert!(reproject(&PointCloud::default(), &c, WHITE, 2).pixels().iter().all(|p| *p == WHITE));
    }

    #[test]
    fn ssim_of_identical_images_is_one() {
        let img = RgbImage::from_fn(32, 24, |x, y| [(x * 7) as u8, (y * 11) as u8, ((x * y) % 256) as u8]);
        assert_eq!(ssim(&img, &img).unwrap(), 1.0);
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        let a = GrayImage::filled(16, 16, 0);
        let b = GrayImage::filled(16, 16, 255);
        let c1 = (0.01f64 * 255.0).powi(2);
        let expect = c1 / (255.0f64 * 255.0 + c1);
        assert!((ssim(&a, &b).unwrap() - expect).abs() < 1e-7);
        assert!((expect - 9.999e-5).abs() < 1e-7);
    }

    #[test]
    fn ssim_errors() {
        let a = GrayImage::filled(16, 16, 0);
        let b = GrayImage::filled(16, 15, 0);
        assert!(matches!(ssim(&a, &b), Err(ConsistencyError::DimensionMismatch { .. })));
        let s = GrayImage::filled(10, 40, 0);
        assert!(matches!(ssim(&s, &s), Err(ConsistencyError::TooSmall { .. })));
    }

    /// Direct per-window evaluation with the 2D weights, no separable passes.
    fn ssim_brute_force(a: &GrayImage, b: &GrayImage) -> f64 {
        let g = gaussian_taps();
        let (w, h) = a.dims();
        let c1 = (0.01f64 * 255.0).powi(2);
        let c2 = (0.03f64 * 255.0).powi(2);
        let mut sum = 0.0;
        let mut n = 0;
        for y0 in 0..=h - 11 {
            for x0 in 0..=w - 11 {
                let (mut ma, mut mb) = (0.0, 0.0);
                for j in 0..11 {
                    for i in 0..11 {
                        let wt = g[i] * g[j];
                        ma += wt * *a.get(x0 + i, y0 + j) as f64;
                        mb += wt * *b.get(x0 + i, y0 + j) as f64;
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for j in 0..11 {
                    for i in 0..11 {
                        let wt = g[i] * g[j];
                        let da = *a.get(x0 + i, y0 + j) as f64 - ma;
                        let db = *b.get(x0 + i, y0 + j) as f64 - mb;
                        va += wt * da * da;
                        vb += wt * db * db;
                        cov += wt * da * db;
                    }
                }
                sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                n += 1;
            }
        }
        sum / n as f64
    }

    #[test]
    fn ssim_checkerboard_matches_brute_force() {
        let a = GrayImage::from_fn(40, 33, |x, y| if (x / 4 + y / 4) % 2 == 0 { 0 } else { 255 });
        let b = a.map(|v| 255 - v);
        let fast = ssim(&a, &b).unwrap();
        let slow = ssim_brute_force(&a, &b);
        assert!((fast - slow).abs() < 1e-4, "{fast} vs {slow}");
        assert!(fast < 0.0);
    }

    #[test]
    fn mask_iou_cases() {
        let full = |f: &dyn Fn(usize) -> bool| Mask::from_fn(16, 4, |x, _| f(x));
        let a = full(&|x| x < 8);
        let b = full(&|x| x < 12);
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(mask_iou(&a, &full(&|x| x >= 8)).unwrap(), 0.0);
        assert_eq!(mask_iou(&a, &b).unwrap(), 2.0 / 3.0);
        let none = full(&|_| false);
        assert_eq!(mask_iou(&none, &none).unwrap(), 1.0);
        assert!(mask_iou(&a, &Mask::filled(4, 4, false)).is_err());
    }

    #[test]
    fn tssim_requires_matching_lengths() {
        let f = RgbImage::filled(12, 12, WHITE);
        let m = PointMap::empty(0, 12, 12);
        let c = cam(12, 12);
        assert!(matches!(
            compute_tssim(&[f.clone(), f.clone()], &[m.clone()], &[c, c], 1),
            Err(ConsistencyError::LengthMismatch { frames: 2, maps: 1, cameras: 2 })
        ));
        assert_eq!(compute_tssim(&[], &[], &[], 1), Err(ConsistencyError::EmptyInput));
        let r = compute_tssim(&[f], &[m], &[c], 1).unwrap();
        assert_eq!(r.per_frame_ssim, vec![1.0]);
        assert_eq!(r.t_ssim, 1.0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn object_crop_box() {
        let pt = ColoredPoint {
            position: Vec3::new(0.0, 0.0, 1.0),
            color: [0, 0, 0],
        };
        let points = Image::from_fn(40, 30, |x, y| (x == 38 && (y == 2 || y == 5)).then_some(pt));
        let m = PointMap::new(0, points).unwrap();
        // 1 px wide at the right border, 4 px tall near the top
        assert_eq!(object_box(&m), Some((29, 0, 11, 11)));
        assert_eq!(object_box(&PointMap::empty(0, 40, 30)), None);
        assert_eq!(grow(3, 20, 11, 40), (3, 18));
        assert_eq!(grow(10, 10, 11, 40), (5, 11));
    }

    #[test]
    fn crop_region_ignores_background_difference() {
        let c = cam(24, 24);
        let mut frame = RgbImage::filled(24, 24, WHITE);
        frame.set(0, 0, [0, 0, 0]);
        let empty = PointMap::empty(0, 24, 24);
        let full = compute_tssim_in(&[frame.clone()], &[empty.clone()], &[c], 1, SsimRegion::FullFrame).unwrap();
        let cropped = compute_tssim_in(&[frame], &[empty], &[c], 1, SsimRegion::ObjectCrop).unwrap();
        // no object pixels, so the crop falls back to the full frame
        assert_eq!(full, cropped);
        assert!(full.t_ssim < 1.0);
    }

    #[test]
    fn report_is_arithmetic_mean() {
        let r = ConsistencyReport::from_scores(vec![0.8, 1.0], vec![]);
        assert!((r.t_ssim - 0.9).abs() < 1e-12);
        assert_eq!(r.n_frames, 2);
    }

    proptest! {
        #[test]
        fn ssim_is_symmetric_and_bounded(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = GrayImage::from_fn(17, 13, |_, _| rng.gen());
            let b = GrayImage::from_fn(17, 13, |_, _| rng.gen());
            let ab = ssim(&a, &b).unwrap();
            let ba = ssim(&b, &a).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!((-1.0..=1.0).contains(&ab));
            if a != b {
                prop_assert!(ab < 1.0);
            }
        }

        #[test]
        fn reproject_is_permutation_invariant(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng, seq::SliceRandom};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<ColoredPoint> = (0..200)
                .map(|_| ColoredPoint {
                    position: Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(1.0..3.0)),
                    color: [rng.gen(), rng.gen(), rng.gen()],
                })
                .collect();
            let mut shuffled = points.clone();
            shuffled.shuffle(&mut rng);
            let c = cam(24, 24);
            let a = reproject(&PointCloud { points }, &c, WHITE, 1);
            let b = reproject(&PointCloud { points: shuffled }, &c, WHITE, 1);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn aggregate_is_linear(split in 0usize..5, counts in prop::collection::vec(0usize..40, 1..5)) {
            let maps: Vec<PointMap> = counts
                .iter()
                .enumerate()
                .map(|(f, &n)| map_with(f, 8, 8, &(0..n.min(64)).map(|i| (i % 8, i / 8)).collect::<Vec<_>>()))
                .collect();
            let split = split.min(maps.len());
            let (l, r) = maps.split_at(split);
            let whole = aggregate(&maps).unwrap();
            let mut joined = if l.is_empty() { PointCloud::default() } else { aggregate(l).unwrap() };
            if !r.is_empty() {
                joined.points.extend(aggregate(r).unwrap().points);
            }
            prop_assert_eq!(whole, joined);
        }
    }
}
