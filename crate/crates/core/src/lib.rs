//! Rendering of relative coordinate maps (RCM) for posed meshes and
//! scoring of cross-frame geometry consistency (T-SSIM).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the cache
//! directory layout and the command-line tool live in the `rcmkit` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cache;
pub mod consistency;
pub mod geometry;
pub mod image;
pub mod math;
pub mod mesh;
pub mod raster;

pub use geometry::{
    interpolate_pose, project_point, sample_sphere_views, unproject_pixel, Camera, CameraIntrinsics, GeometryError,
    Keyframe, Pose6DoF, PoseTrajectory, Quat,
};
pub use image::{DepthImage, GrayImage, Image, Mask, Rgb, RgbImage};
pub use math::{Vec2, Vec3};
pub use mesh::{compute_aabb, compute_rcm_colors, sample_texture, Aabb, Mesh, MeshError, RcmColor, Vertex};
pub use raster::{rasterize, render_sequence, BarycentricWeights, FrameBuffers, RasterError};
pub use cache::{render_cache, CacheError, CacheView, RenderedCache};
pub use consistency::{
    aggregate, compute_tssim, compute_tssim_in, mask_iou, oracle_pointmaps, reproject, ssim, ColoredPoint, ConsistencyError,
    ConsistencyReport, OracleSequence, PointCloud, PointMap, SsimRegion,
};
