use std::path::{Path, PathBuf};

use super::{
    load_jobspec, load_structure, run_analyze, run_report, AnalysisOptions, AnalyzeSources, PipelineError, Result,
    Session,
};
use crate::jobspec::{
    clean_jobspec, preflight_structure, serialize_jobspec, validate_jobspec_with_margin, Finding, JobSpec,
    JobSpecError, ParsedJobSpec, ValidationReport, DEFAULT_MEMBRANE_MARGIN,
};
use crate::namd_gen::{generate_configs, render_config, sanitize_label, InputPaths, NamdGenError};
use crate::structure_io::{cache_path, fetch_structure, validate_pdb_id, Transport};

/// Where the input structure for validation comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructureSource {
    /// Explicit PDB file.
    File(PathBuf),
    /// `pdb_file` from the spec, else `pdb_id` from the cache; downloads on
    /// a cache miss only when `fetch` is set.
    FromSpec { cache_dir: PathBuf, fetch: bool },
}

/// CHARMM36m parameter set referenced when none is given.
pub fn default_parameter_files() -> Vec<PathBuf> {
    ["toppar/par_all36m_prot.prm", "toppar/par_all36_lipid.prm", "toppar/toppar_water_ions.str"]
        .into_iter()
        .map(PathBuf::from)
        .collect()
}

/// Resolves the structure path, downloading only when allowed.
pub fn resolve_structure(
    spec: &JobSpec,
    spec_path: &Path,
    source: &StructureSource,
    transport: &dyn Transport,
) -> Result<Option<PathBuf>> {
    match source {
        StructureSource::File(p) => Ok(Some(p.clone())),
        StructureSource::FromSpec { cache_dir, fetch } => {
            if let Some(file) = &spec.pdb_file {
                let base = spec_path.parent().unwrap_or(Path::new("."));
                return Ok(Some(base.join(file)));
            }
            let Some(id) = &spec.pdb_id else { return Ok(None) };
            let Ok(id) = validate_pdb_id(id) else { return Ok(None) };
            let path = cache_path(&id, cache_dir);
            if path.is_file() {
                return Ok(Some(path));
            }
            if *fetch {
                fetch_structure(&id, cache_dir, transport)?;
                return Ok(Some(path));
            }
            Ok(None)
        }
    }
}

fn write_report(session: &mut Session, name: &str, report: &ValidationReport) -> Result<PathBuf> {
    session.write(name, &format!("analysis/{name}.json"), &report.to_json())
}

/// Output directory label for a spec file: its `label`, or the file stem
/// when the spec cannot be read or has none.
pub fn label_for(spec_path: &Path) -> String {
    load_jobspec(spec_path)
        .ok()
        .map(|p| p.spec.label)
        .filter(|l| !l.trim().is_empty())
        .unwrap_or_else(|| {
            spec_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "job".into())
        })
}

/// Parses the spec; schema violations are written as a validation report
/// and returned as [`PipelineError::Rejected`].
pub fn load_spec_or_reject(session: &mut Session, spec_path: &Path) -> Result<ParsedJobSpec> {
    match load_jobspec(spec_path) {
        Err(PipelineError::JobSpec {
            source: JobSpecError::Schema(issues),
            ..
        }) => {
            let report = ValidationReport::new(
                issues
                    .iter()
                    .map(|i| Finding::error("schema", format!("{}: {}", spec_path.display(), i.message), i.path.clone()))
                    .collect(),
            );
            let path = write_report(session, "validation_report", &report)?;
            Err(PipelineError::Rejected { report, path })
        }
        other => other,
    }
}

/// Structure checks alone, written to `analysis/preflight_report.json`.
pub fn run_preflight(session: &mut Session, structure: &Path) -> Result<ValidationReport> {
    session.command("preflight");
    let s = load_structure(structure)?;
    session.stage_input(structure)?;
    let report = preflight_structure(&s);
    write_report(session, "preflight_report", &report)?;
    Ok(report)
}

/// Spec checks plus structure preflight and membrane fit when a structure is
/// available. The report is written whatever the verdict; a report with
/// errors comes back as [`PipelineError::Rejected`].
pub fn run_validate(
    session: &mut Session,
    spec_path: &Path,
    structure: Option<&Path>,
    margin: Option<f64>,
) -> Result<ValidationReport> {
    session.command("validate");
    session.stage_input(spec_path)?;
    let parsed = load_spec_or_reject(session, spec_path)?;
    let s = match structure {
        Some(p) => {
            let s = load_structure(p)?;
            session.stage_input(p)?;
            Some(s)
        }
        None => None,
    };
    let mut report = validate_jobspec_with_margin(&parsed.spec, s.as_ref(), margin.unwrap_or(DEFAULT_MEMBRANE_MARGIN));
    report.extend(parsed.warnings);
    let path = write_report(session, "validation_report", &report)?;
    if report.has_errors() {
        return Err(PipelineError::Rejected { report, path });
    }
    Ok(report)
}

/// Files referenced by the generated configs. Unset entries fall back to
/// `<label>.psf`, `<label>.pdb` and [`default_parameter_files`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenNamdRequest {
    pub psf: Option<PathBuf>,
    pub system_pdb: Option<PathBuf>,
    pub parameter_files: Vec<PathBuf>,
    pub extended_system: Option<PathBuf>,
}

/// Writes the three stage configs and the normalised spec to `configs/`.
pub fn run_gen_namd(session: &mut Session, spec: &JobSpec, req: &GenNamdRequest) -> Result<Vec<String>> {
    session.command("gen-namd");
    let base = sanitize_label(&spec.label);
    let paths = InputPaths {
        structure: req.psf.clone().unwrap_or_else(|| PathBuf::from(format!("{base}.psf"))),
        coordinates: req.system_pdb.clone().unwrap_or_else(|| PathBuf::from(format!("{base}.pdb"))),
        parameter_files: if req.parameter_files.is_empty() {
            default_parameter_files()
        } else {
            req.parameter_files.clone()
        },
        extended_system: req.extended_system.clone(),
    };
    let configs = match generate_configs(spec, &paths) {
        Ok(c) => c,
        Err(NamdGenError::Refused(report)) => {
            let path = write_report(session, "validation_report", &report)?;
            return Err(PipelineError::Rejected { report, path });
        }
        Err(e) => return Err(PipelineError::NamdGen(e)),
    };
    let mut written = Vec::new();
    for c in &configs {
        let rel = format!("configs/{}", c.file_name());
        session.write(&format!("config_{}", c.stage), &rel, &render_config(c))?;
        written.push(rel);
    }
    session.write("jobspec", "configs/jobspec.yml", &serialize_jobspec(&clean_jobspec(spec)))?;
    written.push("configs/jobspec.yml".into());
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRequest {
    pub spec_path: PathBuf,
    pub out_dir: PathBuf,
    pub structure: StructureSource,
    pub membrane_margin: Option<f64>,
    pub gen: GenNamdRequest,
    /// Analysis runs only when a trajectory or energy log is supplied.
    pub trajectory: Option<PathBuf>,
    pub energy_log: Option<PathBuf>,
    pub analysis: AnalysisOptions,
}

/// validate → gen-namd → analyze → report into a fresh manifest. Returns the
/// label directory.
pub fn run_pipeline(req: &PipelineRequest, transport: &dyn Transport) -> Result<PathBuf> {
    let mut session = Session::fresh(&req.out_dir, &label_for(&req.spec_path))?;
    let structure = match load_jobspec(&req.spec_path) {
        Ok(parsed) => {
            if let (StructureSource::FromSpec { fetch: true, .. }, Some(id)) = (&req.structure, &parsed.spec.pdb_id) {
                session.command(format!("fetch {}", id.to_ascii_uppercase()));
            }
            resolve_structure(&parsed.spec, &req.spec_path, &req.structure, transport)?
        }
        Err(_) => None,
    };
    match run_validate(&mut session, &req.spec_path, structure.as_deref(), req.membrane_margin) {
        Ok(_) => {}
        Err(e @ PipelineError::Rejected { .. }) => {
            session.finish()?;
            return Err(e);
        }
        Err(e) => return Err(e),
    }
    let spec = load_jobspec(&req.spec_path)?.spec;
    run_gen_namd(&mut session, &spec, &req.gen)?;

    let mut metrics = req.analysis.metrics;
    if req.trajectory.is_none() {
        metrics = crate::pipeline::Metrics {
            energy: metrics.energy,
            ..Default::default()
        };
    }
    if req.energy_log.is_none() {
        metrics.energy = false;
    }
    if !metrics.is_empty() {
        let reference = req.gen.system_pdb.clone().or(structure).ok_or_else(|| {
            PipelineError::Usage("analysis needs a system PDB matching the trajectory".into())
        })?;
        let src = AnalyzeSources {
            structure: reference,
            topology: req.gen.psf.clone(),
            trajectory: req.trajectory.clone(),
            energy_log: req.energy_log.clone(),
        };
        let opts = AnalysisOptions {
            metrics,
            ..req.analysis.clone()
        };
        run_analyze(&mut session, &src, &opts)?;
        run_report(&mut session)?;
    }
    let root = session.layout.root.clone();
    session.finish()?;
    Ok(root)
}
