use std::path::PathBuf;

use rcmkit_core::{CacheError, ConsistencyError, GeometryError, MeshError, RasterError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: file not found", .0.display())]
    FileNotFound(PathBuf),

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{}:{line}: index {index} out of range ({count} available)", path.display())]
    IndexOutOfRange { path: PathBuf, line: usize, index: i64, count: usize },

    #[error("{}: mesh has texture coordinates but no texture was supplied", .0.display())]
    TextureMissing(PathBuf),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Image { path: PathBuf, source: image::ImageError },

    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("{}: cache manifest not found", .0.display())]
    ManifestMissing(PathBuf),

    #[error("{}: corrupt cache manifest: {message}", path.display())]
    ManifestCorrupt { path: PathBuf, message: String },

    #[error("cache entry {entry}: image {} is missing", path.display())]
    ImageMissing { entry: usize, path: PathBuf },

    #[error("cache entry {entry}: RCM and RGB foreground masks differ")]
    MaskMismatch { entry: usize },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error(transparent)]
    Raster(#[from] RasterError),

    #[error(transparent)]
    Cache(#[from] CacheError),

    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
