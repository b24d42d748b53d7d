//! Report artifacts: CSV tables, SVG plots and the run manifest.

pub mod csv;
mod manifest;
pub mod svg;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use csv::{parse_series_csv, series_csv};
pub use manifest::{sha256_file, sha256_hex, RunManifest};
pub use svg::{render_fes_svg, render_series_svg, PlotStyle};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("nothing to render: {0}")]
    EmptyInput(String),
    #[error("manifest: {0}")]
    Manifest(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `contents` via a temporary sibling and rename, creating parents.
pub fn write_text(path: &Path, contents: &str) -> Result<(), ReportError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents.as_bytes()).map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Series as CSV at `path`.
pub fn write_csv(series: &crate::analysis::TimeSeries, path: &Path) -> Result<(), ReportError> {
    write_text(path, &series_csv(series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::TimeSeries;

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let s = TimeSeries::new("a", "b", vec![(0, 1.0)]);
        let err = write_csv(&s, &blocker.join("sub").join("a.csv")).unwrap_err();
        assert!(matches!(err, ReportError::Io { .. }));
    }
}
