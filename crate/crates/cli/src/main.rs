use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mdpipe::analysis::SasaParams;
use mdpipe::jobspec::ValidationReport;
use mdpipe::pipeline::{
    label_for, load_spec_or_reject, run_analyze, run_gen_namd, run_pipeline, run_preflight, run_report,
    run_validate, resolve_structure, AnalysisOptions, AnalyzeSources, GenNamdRequest, Metrics, PipelineError,
    PipelineRequest, Session, StructureSource, EXIT_FAILURE, EXIT_OK, EXIT_REJECTED,
};
use mdpipe::structure_io::{cache_path, fetch_structure, validate_pdb_id, UreqTransport};

/// Protein MD preparation and trajectory analysis.
#[derive(Debug, Parser)]
#[command(name = "mdpipe", version)]
struct Cli {
    /// Parent directory for per-label output directories.
    #[arg(long, global = true, default_value = "mdpipe-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download a structure from RCSB into the cache and stage it.
    Fetch {
        pdb_id: String,
        #[command(flatten)]
        cache: CacheArgs,
        /// Output label (defaults to the PDB ID).
        #[arg(long)]
        label: Option<String>,
    },
    /// Report missing atoms, nonstandard residues and chain breaks.
    Preflight {
        structure: PathBuf,
        /// Output label (defaults to the file stem).
        #[arg(long)]
        label: Option<String>,
    },
    /// Check a job spec, and its structure when one is available.
    Validate {
        spec: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
        /// Lateral clearance around the protein for bilayer systems, Å.
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Write minimization, equilibration and production NAMD configs.
    GenNamd {
        spec: PathBuf,
        #[command(flatten)]
        files: NamdFileArgs,
    },
    /// Compute trajectory metrics into CSV tables.
    Analyze {
        #[arg(long)]
        label: String,
        /// PDB whose atoms match the trajectory; also the RMSD reference.
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        psf: Option<PathBuf>,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        energy_log: Option<PathBuf>,
        #[command(flatten)]
        metrics: MetricArgs,
        #[command(flatten)]
        opts: AnalysisArgs,
    },
    /// Render SVG plots from existing analysis tables.
    Report {
        #[arg(long)]
        label: String,
    },
    /// validate, gen-namd, analyze and report in one run.
    Pipeline {
        spec: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        margin: Option<f64>,
        #[command(flatten)]
        files: NamdFileArgs,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        energy_log: Option<PathBuf>,
        /// Metrics to compute; all of them when none is given.
        #[command(flatten)]
        metrics: MetricArgs,
        #[command(flatten)]
        opts: AnalysisArgs,
    },
}

#[derive(Debug, Args)]
struct CacheArgs {
    /// Structure cache directory.
    #[arg(long, env = "MDPIPE_CACHE")]
    cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Input PDB; otherwise the spec's pdb_file or a cached pdb_id.
    #[arg(long)]
    structure: Option<PathBuf>,
    /// Download pdb_id from RCSB when it is not cached.
    #[arg(long)]
    fetch: bool,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Debug, Args)]
struct NamdFileArgs {
    /// PSF of the assembled system.
    #[arg(long)]
    psf: Option<PathBuf>,
    /// PDB coordinates of the assembled system.
    #[arg(long)]
    system_pdb: Option<PathBuf>,
    /// CHARMM parameter or stream file; repeat for several.
    #[arg(long = "param")]
    params: Vec<PathBuf>,
    /// Extended-system file with the initial periodic cell.
    #[arg(long)]
    xsc: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricArgs {
    #[arg(long)]
    rmsd: bool,
    #[arg(long)]
    rmsf: bool,
    #[arg(long)]
    rg: bool,
    #[arg(long)]
    sasa: bool,
    #[arg(long)]
    hbonds: bool,
    #[arg(long)]
    energy: bool,
    #[arg(long)]
    fes: bool,
    #[arg(long)]
    all: bool,
}

impl MetricArgs {
    fn metrics(&self) -> Metrics {
        if self.all {
            return Metrics::ALL;
        }
        Metrics {
            rmsd: self.rmsd,
            rmsf: self.rmsf,
            rg: self.rg,
            sasa: self.sasa,
            hbonds: self.hbonds,
            energy: self.energy,
            fes: self.fes,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MinImage {
    Auto,
    On,
    Off,
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Frame spacing in ns, overriding the DCD header.
    #[arg(long)]
    ns_per_frame: Option<f64>,
    /// Selection for RMSD and RMSF: all, protein, ca, backbone or index:<ranges>.
    #[arg(long, default_value = "ca")]
    rmsd_selection: String,
    #[arg(long, default_value = "protein")]
    rg_selection: String,
    #[arg(long, default_value = "protein")]
    sasa_selection: String,
    #[arg(long, default_value = "protein")]
    hbond_selection: String,
    /// Measure RMSD without superposition.
    #[arg(long)]
    no_superpose: bool,
    #[arg(long, default_value_t = 1.4)]
    probe: f64,
    #[arg(long, default_value_t = 960)]
    sasa_points: usize,
    /// Radius override as ELEMENT=Å; repeatable.
    #[arg(long = "radius", value_parser = parse_radius)]
    radii: Vec<(String, f64)>,
    #[arg(long, default_value_t = 3.5)]
    hbond_distance: f64,
    #[arg(long, default_value_t = 120.0)]
    hbond_angle: f64,
    #[arg(long, value_enum, default_value_t = MinImage::Auto)]
    min_image: MinImage,
    #[arg(long, default_value_t = 100)]
    max_lag: usize,
    #[arg(long, default_value_t = 25)]
    fes_bins: usize,
}

fn parse_radius(s: &str) -> Result<(String, f64), String> {
    let (el, r) = s.split_once('=').ok_or_else(|| format!("expected ELEMENT=RADIUS, got '{s}'"))?;
    let r: f64 = r.trim().parse().map_err(|_| format!("bad radius '{r}'"))?;
    Ok((el.trim().to_string(), r))
}

impl AnalysisArgs {
    fn options(&self, metrics: Metrics) -> AnalysisOptions {
        AnalysisOptions {
            metrics,
            ns_per_frame: self.ns_per_frame,
            rmsd_selection: self.rmsd_selection.clone(),
            rg_selection: self.rg_selection.clone(),
            sasa_selection: self.sasa_selection.clone(),
            hbond_selection: self.hbond_selection.clone(),
            superpose: !self.no_superpose,
            sasa: SasaParams {
                probe: self.probe,
                n_points: self.sasa_points,
            },
            radius_overrides: self.radii.iter().cloned().collect::<BTreeMap<_, _>>(),
            hbond_distance: self.hbond_distance,
            hbond_angle: self.hbond_angle,
            hbond_min_image: match self.min_image {
                MinImage::Auto => None,
                MinImage::On => Some(true),
                MinImage::Off => Some(false),
            },
            max_lag: self.max_lag,
            fes_bins: self.fes_bins,
            ..AnalysisOptions::default()
        }
    }
}

fn cache_dir(args: &CacheArgs) -> PathBuf {
    if let Some(c) = &args.cache {
        return c.clone();
    }
    if let Some(x) = std::env::var_os("XDG_CACHE_HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(x).join("mdpipe");
    }
    if let Some(h) = std::env::var_os("HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(h).join(".cache").join("mdpipe");
    }
    PathBuf::from(".mdpipe-cache")
}

fn structure_source(args: &SourceArgs) -> StructureSource {
    match &args.structure {
        Some(p) => StructureSource::File(p.clone()),
        None => StructureSource::FromSpec {
            cache_dir: cache_dir(&args.cache),
            fetch: args.fetch,
        },
    }
}

fn namd_request(files: &NamdFileArgs) -> GenNamdRequest {
    GenNamdRequest {
        psf: files.psf.clone(),
        system_pdb: files.system_pdb.clone(),
        parameter_files: files.params.clone(),
        extended_system: files.xsc.clone(),
    }
}

fn print_report(report: &ValidationReport) {
    for f in report.findings() {
        println!("{f}");
    }
    println!("verdict: {}", if report.has_errors() { "fail" } else { "pass" });
}

/// Runs `body` in a locked session and writes the manifest afterwards,
/// including when validation rejected the input.
fn in_session(out: &Path, label: &str, body: impl FnOnce(&mut Session) -> Result<(), PipelineError>) -> Result<(), PipelineError> {
    let mut session = Session::open(out, label)?;
    let result = body(&mut session);
    match result {
        Ok(()) => {
            let manifest = session.finish()?;
            println!("manifest: {}", manifest.display());
            Ok(())
        }
        Err(e @ PipelineError::Rejected { .. }) => {
            if let PipelineError::Rejected { report, .. } = &e {
                print_report(report);
            }
            session.finish()?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let out = cli.out.as_path();
    match cli.command {
        Command::Fetch { pdb_id, cache, label } => {
            let id = validate_pdb_id(&pdb_id)?;
            let upper = id.to_ascii_uppercase();
            let dir = cache_dir(&cache);
            fetch_structure(&id, &dir, &UreqTransport)?;
            let cached = cache_path(&id, &dir);
            println!("cached: {}", cached.display());
            in_session(out, label.as_deref().unwrap_or(&upper), |s| {
                s.command(format!("fetch {upper}"));
                let staged = s.stage_input(&cached)?;
                println!("staged: {}", staged.display());
                Ok(())
            })
        }
        Command::Preflight { structure, label } => {
            let label = label.unwrap_or_else(|| {
                structure
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "structure".into())
            });
            in_session(out, &label, |s| {
                let report = run_preflight(s, &structure)?;
                print_report(&report);
                if report.has_errors() {
                    let path = s.layout.analysis().join("preflight_report.json");
                    return Err(PipelineError::Rejected { report, path });
                }
                Ok(())
            })
        }
        Command::Validate { spec, source, margin } => in_session(out, &label_for(&spec), |s| {
            let structure = match mdpipe::pipeline::load_jobspec(&spec) {
                Ok(p) => resolve_structure(&p.spec, &spec, &structure_source(&source), &UreqTransport)?,
                Err(_) => None,
            };
            let report = run_validate(s, &spec, structure.as_deref(), margin)?;
            print_report(&report);
            Ok(())
        }),
        Command::GenNamd { spec, files } => in_session(out, &label_for(&spec), |s| {
            s.stage_input(&spec)?;
            let parsed = load_spec_or_reject(s, &spec)?;
            for rel in run_gen_namd(s, &parsed.spec, &namd_request(&files))? {
                println!("wrote {}", s.layout.root.join(rel).display());
            }
            Ok(())
        }),
        Command::Analyze {
            label,
            structure,
            psf,
            trajectory,
            energy_log,
            metrics,
            opts,
        } => {
            let m = metrics.metrics();
            if m.is_empty() {
                return Err(PipelineError::Usage(
                    "choose at least one of --rmsd --rmsf --rg --sasa --hbonds --energy --fes --all".into(),
                ));
            }
            in_session(out, &label, |s| {
                let src = AnalyzeSources {
                    structure,
                    topology: psf,
                    trajectory,
                    energy_log,
                };
                run_analyze(s, &src, &opts.options(m))?;
                println!("analysis: {}", s.layout.analysis().display());
                Ok(())
            })
        }
        Command::Report { label } => in_session(out, &label, |s| {
            for rel in run_report(s)? {
                println!("wrote {}", s.layout.root.join(rel).display());
            }
            Ok(())
        }),
        Command::Pipeline {
            spec,
            source,
            margin,
            files,
            trajectory,
            energy_log,
            metrics,
            opts,
        } => {
            let m = metrics.metrics();
            let req = PipelineRequest {
                spec_path: spec,
                out_dir: out.to_path_buf(),
                structure: structure_source(&source),
                membrane_margin: margin,
                gen: namd_request(&files),
                trajectory,
                energy_log,
                analysis: opts.options(if m.is_empty() { Metrics::ALL } else { m }),
            };
            match run_pipeline(&req, &UreqTransport) {
                Ok(root) => {
                    println!("output: {}", root.display());
                    Ok(())
                }
                Err(e) => {
                    if let PipelineError::Rejected { report, .. } = &e {
                        print_report(report);
                    }
                    Err(e)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_FAILURE as u8 } else { EXIT_OK as u8 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code == EXIT_FAILURE || code == EXIT_REJECTED);
            ExitCode::from(code as u8)
        }
    }
}
