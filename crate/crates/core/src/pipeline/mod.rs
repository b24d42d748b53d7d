//! Orchestration behind the command-line tool: per-label output layout,
//! run lock, manifest bookkeeping and the individual steps.

mod analyze;
mod plots;
mod steps;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{AnalysisError, Selection};
use crate::jobspec::{parse_jobspec, JobSpecError, ParsedJobSpec, ValidationReport};
use crate::namd_gen::{sanitize_label, NamdGenError};
use crate::report::{sha256_file, write_text, ReportError, RunManifest};
use crate::residues::is_amino_acid;
use crate::structure_io::{
    open_dcd, parse_namd_log, parse_pdb, parse_psf, DcdHeader, EnergyTable, FetchError, FormatError, Frame,
    Structure, Topology,
};

pub use analyze::{run_analyze, AnalysisOptions, AnalyzeSources, Metrics};
pub use plots::run_report;
pub use steps::{
    default_parameter_files, label_for, load_spec_or_reject, resolve_structure, run_gen_namd, run_pipeline, run_preflight, run_validate, GenNamdRequest,
    PipelineRequest, StructureSource,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{path}: {source}")]
    JobSpec {
        path: PathBuf,
        #[source]
        source: JobSpecError,
    },
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("{context}: {source}")]
    Analysis {
        context: String,
        #[source]
        source: AnalysisError,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    NamdGen(NamdGenError),
    #[error("{} is in use by another run; delete {} if no run is active", .0.display(), .0.join(LOCK_FILE).display())]
    Locked(PathBuf),
    #[error("{0}")]
    Usage(String),
    #[error("validation failed with {} error(s); report written to {}", .report.errors().count(), .path.display())]
    Rejected { report: ValidationReport, path: PathBuf },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Rejected { .. } | PipelineError::NamdGen(_) => EXIT_REJECTED,
            _ => EXIT_FAILURE,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

pub(crate) fn analysis_err(context: impl Into<String>) -> impl FnOnce(AnalysisError) -> PipelineError {
    let context = context.into();
    move |source| PipelineError::Analysis { context, source }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

pub fn load_structure(path: &Path) -> Result<Structure> {
    let mut s = parse_pdb(&read_text(path)?).map_err(|source| PipelineError::Format {
        path: path.to_path_buf(),
        source,
    })?;
    if s.source_label.is_empty() {
        s.source_label = file_name(path);
    }
    Ok(s)
}

pub fn load_topology(path: &Path) -> Result<Topology> {
    parse_psf(&read_text(path)?).map_err(|source| PipelineError::Format {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_trajectory(path: &Path) -> Result<(DcdHeader, Vec<Frame>)> {
    let fmt = |source| PipelineError::Format {
        path: path.to_path_buf(),
        source,
    };
    open_dcd(path).and_then(|r| r.read_all()).map_err(fmt)
}

pub fn load_energy_log(path: &Path) -> Result<EnergyTable> {
    parse_namd_log(&read_text(path)?).map_err(|source| PipelineError::Format {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_jobspec(path: &Path) -> Result<ParsedJobSpec> {
    parse_jobspec(&read_text(path)?).map_err(|source| PipelineError::JobSpec {
        path: path.to_path_buf(),
        source,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Resolves a selection keyword against a structure: `all`, `protein`,
/// `ca`, `backbone`, or `index:<i>[-<j>][,...]` with 0-based inclusive ranges.
pub fn parse_selection(expr: &str, s: &Structure) -> Result<Selection> {
    let expr = expr.trim();
    let bad = |m: String| PipelineError::Usage(format!("selection '{expr}': {m}"));
    let ctx = || format!("selection '{expr}'");
    let sel = match expr.to_ascii_lowercase().as_str() {
        "all" => Selection::from_structure(s, "all", |_, _| true),
        "protein" => Selection::protein(s),
        "ca" => Selection::alpha_carbons(s),
        "backbone" => Selection::from_structure(s, "protein-backbone", |s, i| {
            let a = &s.atoms[i];
            matches!(a.name.trim(), "N" | "CA" | "C" | "O") && is_amino_acid(&a.res_name)
        }),
        other => {
            let Some(list) = other.strip_prefix("index:") else {
                return Err(bad("expected all, protein, ca, backbone or index:<ranges>".into()));
            };
            let mut wanted = Vec::new();
            for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let (lo, hi) = part.split_once('-').unwrap_or((part, part));
                let lo: usize = lo.trim().parse().map_err(|_| bad(format!("bad index '{lo}'")))?;
                let hi: usize = hi.trim().parse().map_err(|_| bad(format!("bad index '{hi}'")))?;
                if hi < lo {
                    return Err(bad(format!("range {lo}-{hi} is reversed")));
                }
                wanted.extend(lo..=hi);
            }
            let residue = s.residue_of_atom();
            Selection::new(wanted, format!("index:{list}"), s.len()).and_then(|sel| {
                let res = sel.indices().iter().map(|&i| residue[i]).collect();
                sel.with_residues(res)
            })
        }
    };
    sel.map_err(analysis_err(ctx()))
}

/// `<out>/<label>/{inputs,configs,analysis,plots,manifest.json}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputLayout {
    pub root: PathBuf,
}

pub const LOCK_FILE: &str = ".lock";

impl OutputLayout {
    pub fn new(out_dir: &Path, label: &str) -> Self {
        OutputLayout {
            root: out_dir.join(sanitize_label(label)),
        }
    }

    pub fn inputs(&self) -> PathBuf {
        self.root.join("inputs")
    }

    pub fn configs(&self) -> PathBuf {
        self.root.join("configs")
    }

    pub fn analysis(&self) -> PathBuf {
        self.root.join("analysis")
    }

    pub fn plots(&self) -> PathBuf {
        self.root.join("plots")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    fn create(&self) -> Result<()> {
        for d in [self.inputs(), self.configs(), self.analysis(), self.plots()] {
            fs::create_dir_all(&d).map_err(io_err(&d))?;
        }
        Ok(())
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(root: &Path) -> Result<DirLock> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        let path = root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::Locked(root.to_path_buf())),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// A locked output directory plus the manifest being assembled for it.
#[derive(Debug)]
pub struct Session {
    pub layout: OutputLayout,
    manifest: RunManifest,
    _lock: DirLock,
}

impl Session {
    /// Locks `<out>/<label>` and continues its existing manifest, dropping
    /// entries whose files have since disappeared.
    pub fn open(out_dir: &Path, label: &str) -> Result<Session> {
        Self::start(out_dir, label, true)
    }

    /// Like [`Session::open`] but starts an empty manifest.
    pub fn fresh(out_dir: &Path, label: &str) -> Result<Session> {
        Self::start(out_dir, label, false)
    }

    fn start(out_dir: &Path, label: &str, resume: bool) -> Result<Session> {
        let layout = OutputLayout::new(out_dir, label);
        let lock = DirLock::acquire(&layout.root)?;
        layout.create()?;
        let mut manifest = RunManifest::new(label);
        if resume {
            if let Some(old) = RunManifest::load(&layout.root) {
                manifest.input_hashes = old.input_hashes;
                manifest.commands_run = old.commands_run;
                manifest.outputs = old
                    .outputs
                    .into_iter()
                    .filter(|(_, rel)| layout.root.join(rel).exists())
                    .collect();
            }
        }
        Ok(Session {
            layout,
            manifest,
            _lock: lock,
        })
    }

    pub fn label(&self) -> &str {
        &self.manifest.spec_label
    }

    pub fn command(&mut self, cmd: impl Into<String>) {
        let cmd = cmd.into();
        if !self.manifest.commands_run.contains(&cmd) {
            self.manifest.commands_run.push(cmd);
        }
    }

    /// Hashes an input file under its file name.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let hash = sha256_file(path)?;
        self.manifest.input_hashes.insert(file_name(path), hash);
        Ok(())
    }

    /// Copies an input into `inputs/`, hashing it as well.
    pub fn stage_input(&mut self, path: &Path) -> Result<PathBuf> {
        self.input(path)?;
        let dest = self.layout.inputs().join(file_name(path));
        if fs::canonicalize(path).ok() != fs::canonicalize(&dest).ok() {
            fs::copy(path, &dest).map_err(io_err(&dest))?;
        }
        Ok(dest)
    }

    /// Writes `contents` at `rel` (relative to the label directory) and
    /// records it as artifact `name`.
    pub fn write(&mut self, name: &str, rel: &str, contents: &str) -> Result<PathBuf> {
        let path = self.layout.root.join(rel);
        write_text(&path, contents)?;
        self.manifest.record_output(name, rel);
        Ok(path)
    }

    pub fn outputs(&self) -> &std::collections::BTreeMap<String, String> {
        &self.manifest.outputs
    }

    /// Writes the manifest; always the last file touched by a command.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.manifest.write(&self.layout.root)?;
        Ok(self.layout.manifest())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_lock_refused_until_drop() {
        let dir = tempfile::tempdir().unwrap();
        let a = DirLock::acquire(dir.path()).unwrap();
        let err = DirLock::acquire(dir.path()).unwrap_err();
        assert!(matches!(err, PipelineError::Locked(_)));
        assert_eq!(err.exit_code(), EXIT_FAILURE);
        drop(a);
        DirLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn layout_uses_sanitized_label() {
        let l = OutputLayout::new(Path::new("/tmp/out"), "my run/1");
        assert_eq!(l.root, Path::new("/tmp/out/my_run_1"));
        assert_eq!(l.manifest(), Path::new("/tmp/out/my_run_1/manifest.json"));
    }

    #[test]
    fn selection_keywords() {
        let pdb = "\
ATOM      1  N   ALA A   1       0.000   0.000   0.000  1.00  0.00           N
ATOM      2  CA  ALA A   1       1.458   0.000   0.000  1.00  0.00           C
ATOM      3  CB  ALA A   1       1.958   1.400   0.000  1.00  0.00           C
HETATM    4  O   HOH A   2       5.000   5.000   5.000  1.00  0.00           O
";
        let s = parse_pdb(pdb).unwrap();
        assert_eq!(parse_selection("all", &s).unwrap().len(), 4);
        assert_eq!(parse_selection("protein", &s).unwrap().len(), 3);
        assert_eq!(parse_selection("CA", &s).unwrap().indices(), &[1]);
        assert_eq!(parse_selection("backbone", &s).unwrap().indices(), &[0, 1]);
        assert_eq!(parse_selection("index:0-1,3", &s).unwrap().indices(), &[0, 1, 3]);
        assert!(parse_selection("index:2-1", &s).is_err());
        assert!(parse_selection("index:9", &s).is_err());
        assert!(parse_selection("water", &s).is_err());
    }
}
