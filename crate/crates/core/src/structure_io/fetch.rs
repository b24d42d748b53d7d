//! RCSB download client with an on-disk cache (`<cache_dir>/<pdbid>.pdb`).

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{parse_pdb, FormatError, Structure};

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid PDB ID {0:?}: expected a digit followed by three alphanumerics")]
    InvalidId(String),
    #[error("{url}: not found (HTTP 404)")]
    NotFound { url: String },
    #[error("fetching {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("cache {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// Minimal HTTP GET abstraction so tests can substitute a canned transport.
pub trait Transport {
    fn get(&self, url: &str) -> Result<HttpResponse, String>;
}

/// Blocking HTTPS transport backed by `ureq`.
#[derive(Debug, Default, Clone, Copy)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        let mut resp = agent.get(url).call().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Lower-cased ID if it matches `[0-9][A-Za-z0-9]{3}`.
pub fn validate_pdb_id(id: &str) -> Result<String, FetchError> {
    let bytes = id.as_bytes();
    let ok = bytes.len() == 4
        && bytes[0].is_ascii_digit()
        && bytes[1..].iter().all(u8::is_ascii_alphanumeric);
    if ok {
        Ok(id.to_ascii_lowercase())
    } else {
        Err(FetchError::InvalidId(id.to_string()))
    }
}

pub fn archive_url(pdb_id: &str) -> String {
    format!("https://files.rcsb.org/download/{}.pdb", pdb_id.to_ascii_uppercase())
}

pub fn cache_path(pdb_id: &str, cache_dir: &Path) -> PathBuf {
    cache_dir.join(format!("{}.pdb", pdb_id.to_ascii_lowercase()))
}

/// Returns the cached structure when present; otherwise downloads it once,
/// stores the body verbatim and parses it.
pub fn fetch_structure(
    pdb_id: &str,
    cache_dir: &Path,
    transport: &dyn Transport,
) -> Result<Structure, FetchError> {
    let id = validate_pdb_id(pdb_id)?;
    let path = cache_path(&id, cache_dir);
    let cache_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| FetchError::Cache { path, source }
    };
    let text = if path.is_file() {
        fs::read_to_string(&path).map_err(cache_err(&path))?
    } else {
        let url = archive_url(&id);
        let resp = transport.get(&url).map_err(|message| FetchError::Transport {
            url: url.clone(),
            message,
        })?;
        match resp.status {
            200..=299 => {}
            404 => return Err(FetchError::NotFound { url }),
            s => {
                return Err(FetchError::Transport {
                    url,
                    message: format!("HTTP status {s}"),
                })
            }
        }
        fs::create_dir_all(cache_dir).map_err(cache_err(cache_dir))?;
        let tmp = path.with_extension("pdb.part");
        fs::write(&tmp, &resp.body).map_err(cache_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(cache_err(&path))?;
        String::from_utf8_lossy(&resp.body).into_owned()
    };
    let mut structure = parse_pdb(&text).map_err(|source| FetchError::Parse {
        path: path.clone(),
        source,
    })?;
    if structure.source_label.is_empty() {
        structure.source_label = id.to_ascii_uppercase();
    }
    Ok(structure)
}
