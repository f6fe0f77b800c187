//! On-disk containers: raw-frame AVF clips and model checkpoints.

mod avf;
mod checkpoint;

use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub use avf::{
    decode_avf, encode_avf, read_avf, read_avf_raw, write_avf, AvfHeader, AVF_HEADER_LEN, AVF_MAGIC, AVF_VERSION,
};
pub use checkpoint::{checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint, CHECKPOINT_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("not an AVF file (magic {0:02x?})")]
    BadMagic([u8; 4]),
    #[error("unsupported AVF version {0}")]
    UnsupportedVersion(u16),
    #[error("AVF header is {0} bytes, expected 22")]
    TruncatedHeader(usize),
    #[error("AVF payload has {found} bytes, header promises {expected}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("AVF payload has trailing bytes after {expected}")]
    TrailingBytes { expected: usize },
    #[error("video cannot be stored: {0}")]
    BadVideo(String),
    #[error("checkpoint format_version {found}, this build reads {expected}")]
    VersionMismatch { expected: u64, found: String },
    #[error("parameter {name}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl StoreError {
    pub fn is_io(&self) -> bool {
        matches!(self, StoreError::Io { .. })
    }

    fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
