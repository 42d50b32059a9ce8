//! Codebook files.
//!
//! Layout (little endian): `M_t`, `M`, `B`, `seed` as `u64`, then the
//! `2^B` entries one after another, each row-major as `(re, im)` `f64`
//! pairs.

use std::path::{Path, PathBuf};

use rcmimo_core::su::Codebook;

#[derive(Debug, thiserror::Error)]
pub enum CodebookFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: rcmimo_core::Error },
}

pub fn write_codebook(codebook: &Codebook, path: &Path) -> Result<(), CodebookFileError> {
    std::fs::write(path, codebook.to_bytes()).map_err(|source| CodebookFileError::Io { path: path.to_owned(), source })
}

pub fn read_codebook(path: &Path) -> Result<Codebook, CodebookFileError> {
    let bytes = std::fs::read(path).map_err(|source| CodebookFileError::Io { path: path.to_owned(), source })?;
    Codebook::from_bytes(&bytes).map_err(|source| CodebookFileError::Format { path: path.to_owned(), source })
}
