//! File formats, the on-disk RCM cache, and the `rcmkit` command-line tool
//! built on `rcmkit-core`.

pub mod cache;
pub mod cli;
pub mod error;
pub mod images;
pub mod json;
pub mod obj;
pub mod pointmap;

pub use cache::{build_cache, load_cache, mesh_fingerprint, CacheEntry, RcmCache};
pub use error::{Error, Result};
pub use obj::{load_mesh, parse_obj, write_obj};
