//! Exchange formats: pair records, frame rasters, manifests and splits.

mod container;
mod frame;
mod manifest;
mod pair;
mod split;
mod video;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use container::{Container, Entry, CONTAINER_VERSION, DTYPE_F32};
pub use frame::{decode_frame, encode_frame, encode_pgm, FRAME_MAGIC};
pub use manifest::{
    load_manifest, DatasetManifest, Label, ManifestError, ManifestRow, PromptModality, Split,
    MANIFEST_HEADER,
};
pub use pair::{read_pointmap_file, write_pointmap_file, PairRecord, PAIR_MAGIC};
pub use split::{split_train_test, SplitOutcome, DEFAULT_TEST_FRACTION};
pub use video::{frame_file_name, pair_file_name, write_video, VideoData, VideoEntry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("bad magic {found:?} at offset 0, expected {expected:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {version} at offset {offset}")]
    UnsupportedVersion { version: u32, offset: usize },
    #[error("entry `{entry}`: unsupported dtype {dtype} at offset {offset}")]
    UnsupportedDtype { entry: String, dtype: u8, offset: usize },
    #[error("truncated while reading `{entry}`: stream ends at offset {offset}")]
    Truncated { entry: String, offset: usize },
    #[error("missing required entry `{name}`")]
    MissingEntry { name: String },
    #[error("entry `{entry}` has dims {found:?}, expected {expected}")]
    DimMismatch { entry: String, expected: String, found: Vec<usize> },
    #[error("entry `{entry}`: {reason}")]
    InvalidPayload { entry: String, reason: String },
    #[error("invalid entry name `{name}` at offset {offset:?}")]
    InvalidName { name: String, offset: Option<usize> },
    #[error("duplicate entry `{name}` at offset {offset}")]
    DuplicateEntry { name: String, offset: usize },
    #[error("unexpected trailing bytes at offset {offset}")]
    TrailingBytes { offset: usize },
    #[error("missing pair record for t = {t}")]
    MissingPair { t: usize },
    #[error("{0}")]
    Layout(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: Box<FormatError> },
}

impl FormatError {
    /// Attaches the file the error came from.
    pub fn at(self, path: &Path) -> Self {
        match self {
            e @ (FormatError::Io { .. } | FormatError::InFile { .. }) => e,
            e => FormatError::InFile { path: path.to_path_buf(), source: Box::new(e) },
        }
    }

    /// The error with any file context removed.
    pub fn root(&self) -> &FormatError {
        match self {
            FormatError::InFile { source, .. } => source.root(),
            e => e,
        }
    }
}
