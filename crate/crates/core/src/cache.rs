//! Sparse-view reference renders: paired RCM and albedo images of a mesh from
//! a Fibonacci lattice of cameras around its bounding box.

use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{sample_sphere_views, Camera, CameraIntrinsics, GeometryError, Pose6DoF};
use crate::image::WHITE;
use crate::mesh::{compute_aabb, compute_rcm_colors, Aabb, Mesh, MeshError};
use crate::raster::{rasterize, FrameBuffers, RasterError};

pub const DEFAULT_VIEW_COUNT: usize = 6;
/// Camera distance as a multiple of the bounding-box diagonal.
pub const DEFAULT_RADIUS_FACTOR: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub enum CacheError {
    InvalidViewCount,
    InvalidRadiusFactor,
    ObjectOutOfFrustum { view: usize },
    Mesh(MeshError),
    Geometry(GeometryError),
    Raster(RasterError),
}

impl fmt::Display for CacheError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CacheError::InvalidViewCount => write!(f, "views must be >= 1"),
            CacheError::InvalidRadiusFactor => write!(f, "radius factor must be positive"),
            CacheError::ObjectOutOfFrustum { view } => write!(
                f,
                "object is not fully inside the frustum of view {view}; increase the radius factor"
            ),
            CacheError::Mesh(e) => write!(f, "{e}"),
            CacheError::Geometry(e) => write!(f, "{e}"),
            CacheError::Raster(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for CacheError {}

impl From<MeshError> for CacheError {
    fn from(e: MeshError) -> Self {
        CacheError::Mesh(e)
    }
}

impl From<GeometryError> for CacheError {
    fn from(e: GeometryError) -> Self {
        CacheError::Geometry(e)
    }
}

impl From<RasterError> for CacheError {
    fn from(e: RasterError) -> Self {
        CacheError::Raster(e)
    }
}

/// One reference view: camera pose plus its RCM/albedo render.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheView {
    pub index: usize,
    pub view_pose: Pose6DoF,
    pub buffers: FrameBuffers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedCache {
    pub aabb: Aabb,
    pub intrinsics: CameraIntrinsics,
    pub views: Vec<CacheView>,
}

/// Camera poses used for a cache: `n_views` lattice points at distance
/// `radius_factor * diagonal` from the bounding-box center.
pub fn cache_view_poses(aabb: &Aabb, n_views: usize, radius_factor: f64) -> Result<Vec<Pose6DoF>, CacheError> {
    if n_views == 0 {
        return Err(CacheError::InvalidViewCount);
    }
    if !(radius_factor > 0.0) || !radius_factor.is_finite() {
        return Err(CacheError::InvalidRadiusFactor);
    }
    Ok(sample_sphere_views(n_views, radius_factor * aabb.diagonal(), aabb.center())?)
}

/// True when every vertex projects in front of the camera and inside the image.
pub fn mesh_in_frustum(mesh: &Mesh, camera: &Camera) -> bool {
    let (w, h) = (camera.intrinsics.width as f64, camera.intrinsics.height as f64);
    mesh.vertices().iter().all(|v| match camera.project(v.position) {
        Some(p) => p.pixel.x >= 0.0 && p.pixel.y >= 0.0 && p.pixel.x <= w && p.pixel.y <= h,
        None => false,
    })
}

/// Renders every cache view with the object at its model coordinates.
pub fn render_cache(
    mesh: &Mesh,
    n_views: usize,
    intrinsics: &CameraIntrinsics,
    radius_factor: f64,
) -> Result<RenderedCache, CacheError> {
    let aabb = compute_aabb(mesh)?;
    let colors = compute_rcm_colors(mesh, &aabb)?;
    let poses = cache_view_poses(&aabb, n_views, radius_factor)?;
    let mut views = Vec::with_capacity(poses.len());
    for (index, view_pose) in poses.into_iter().enumerate() {
        let camera = Camera::new(*intrinsics, view_pose);
        if !mesh_in_frustum(mesh, &camera) {
            return Err(CacheError::ObjectOutOfFrustum { view: index });
        }
        let buffers = rasterize(mesh, &colors, &Pose6DoF::IDENTITY, &camera, WHITE)?;
        views.push(CacheView {
            index,
            view_pose,
            buffers,
        });
    }
    Ok(RenderedCache {
        aabb,
        intrinsics: *intrinsics,
        views,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::mesh::Vertex;
    use alloc::vec;

    fn tetra() -> Mesh {
        let v = vec![
            Vertex::new(Vec3::new(0.0, 0.0, 0.0)),
            Vertex::new(Vec3::new(1.0, 0.0, 0.0)),
            Vertex::new(Vec3::new(0.0, 1.0, 0.0)),
            Vertex::new(Vec3::new(0.0, 0.0, 1.0)),
        ];
        Mesh::new(v, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]], None).unwrap()
    }

    #[test]
    fn views_follow_lattice() {
        let m = tetra();
        let intr = CameraIntrinsics::centered(64.0, 64, 64).unwrap();
        let c = render_cache(&m, 6, &intr, 3.0).unwrap();
        let aabb = compute_aabb(&m).unwrap();
        let expect = sample_sphere_views(6, 3.0 * aabb.diagonal(), aabb.center()).unwrap();
        let got: Vec<_> = c.views.iter().map(|v| v.view_pose).collect();
        assert_eq!(got, expect);
        assert!(c.views.iter().all(|v| v.buffers.coverage() > 0));
        assert_eq!(c.views.iter().map(|v| v.index).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_bad_parameters() {
        let m = tetra();
        let intr = CameraIntrinsics::centered(64.0, 64, 64).unwrap();
        assert_eq!(render_cache(&m, 0, &intr, 3.0), Err(CacheError::InvalidViewCount));
        assert_eq!(render_cache(&m, 2, &intr, -1.0), Err(CacheError::InvalidRadiusFactor));
        // a very long focal length cannot frame the object
        let tele = CameraIntrinsics::centered(2000.0, 64, 64).unwrap();
        assert_eq!(render_cache(&m, 2, &tele, 1.0), Err(CacheError::ObjectOutOfFrustum { view: 0 }));
    }
}
