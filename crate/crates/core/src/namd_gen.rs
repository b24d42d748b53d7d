//! NAMD input decks (minimization, equilibration, NPT production) from a
//! validated job spec, plus the inverse parser for rendered files.

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::jobspec::{validate_jobspec, CaseType, JobSpec, ValidationReport};

/// Production length in ns; fixed for every spec.
pub const PRODUCTION_NS: f64 = 1.0;
/// 1 atm in bar.
pub const TARGET_PRESSURE_BAR: f64 = 1.01325;
const TRAJECTORY_INTERVAL_FS: f64 = 10_000.0;
const ENERGY_INTERVAL_FS: f64 = 1_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Minimization,
    Equilibration,
    Production,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Minimization, Stage::Equilibration, Stage::Production];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Minimization => "minimization",
            Stage::Equilibration => "equilibration",
            Stage::Production => "production",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Self::ALL.into_iter().find(|st| st.as_str() == s.trim())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Files every stage reads.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputPaths {
    /// PSF topology.
    pub structure: PathBuf,
    /// PDB coordinates.
    pub coordinates: PathBuf,
    /// CHARMM parameter/stream files, in load order.
    pub parameter_files: Vec<PathBuf>,
    /// Optional `.xsc` supplying the periodic cell for the first stage.
    pub extended_system: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamdConfig {
    pub label: String,
    pub stage: Stage,
    /// Ordered `key value` pairs; keys may repeat (e.g. `parameters`).
    pub parameters: Vec<(String, String)>,
    pub input_paths: InputPaths,
    pub output_prefix: String,
}

impl NamdConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.parameters.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.parameters.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// `<sanitized label>_<stage>.conf`
    pub fn file_name(&self) -> String {
        format!("{}.conf", self.output_prefix)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NamdGenError {
    #[error("job spec has validation errors: {}", .0.errors().map(|f| f.to_string()).collect::<Vec<_>>().join("; "))]
    Refused(ValidationReport),
    #[error("periodic system needs cell dimensions: set `cell` in the job spec or supply an extended-system (.xsc) file")]
    MissingCell,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing '# {0}:' header line")]
    MissingHeader(&'static str),
}

/// Label reduced to `[A-Za-z0-9_-]`, other characters replaced by `_`.
pub fn sanitize_label(label: &str) -> String {
    let s: String = label
        .trim()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "job".into()
    } else {
        s
    }
}

/// Integration step in fs: 4 with hydrogen mass repartitioning, else 2.
pub fn timestep_fs(spec: &JobSpec) -> f64 {
    if spec.hmr {
        4.0
    } else {
        2.0
    }
}

fn steps_for(ns: f64, dt_fs: f64) -> u64 {
    (ns * 1.0e6 / dt_fs).round() as u64
}

fn path_str(p: &std::path::Path) -> String {
    p.to_string_lossy().into_owned()
}

struct Builder(Vec<(String, String)>);

impl Builder {
    fn set(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }
}

/// Three stage configs. Refuses specs whose validation has errors.
pub fn generate_configs(spec: &JobSpec, paths: &InputPaths) -> Result<Vec<NamdConfig>, NamdGenError> {
    let report = validate_jobspec(spec, None);
    if report.has_errors() {
        return Err(NamdGenError::Refused(report));
    }
    if spec.periodic && spec.cell.is_none() && paths.extended_system.is_none() {
        return Err(NamdGenError::MissingCell);
    }
    let base = sanitize_label(&spec.label);
    let dt = timestep_fs(spec);
    let t = spec.temperature;
    let prefix = |st: Stage| format!("{base}_{}", st.as_str());

    let mut configs = Vec::with_capacity(3);
    for (i, stage) in Stage::ALL.into_iter().enumerate() {
        let mut b = Builder(Vec::new());
        b.set("structure", path_str(&paths.structure));
        b.set("coordinates", path_str(&paths.coordinates));
        let previous = (i > 0).then(|| prefix(Stage::ALL[i - 1]));
        if let Some(prev) = &previous {
            b.set("bincoordinates", format!("{prev}.coor"));
            if stage == Stage::Production {
                b.set("binvelocities", format!("{prev}.vel"));
            }
        }
        if stage != Stage::Production {
            b.set("temperature", t);
        }
        b.set("paraTypeCharmm", "on");
        for p in &paths.parameter_files {
            b.set("parameters", path_str(p));
        }
        b.set("exclude", "scaled1-4");
        b.set("1-4scaling", "1.0");
        b.set("cutoff", "12.0");
        b.set("switching", "on");
        b.set("switchdist", "10.0");
        b.set("pairlistdist", "14.0");
        b.set("timestep", dt);
        b.set("rigidBonds", "all");
        b.set("nonbondedFreq", 1);
        b.set("fullElectFrequency", 2);
        b.set("stepspercycle", 20);

        if spec.periodic {
            match (&previous, spec.cell, &paths.extended_system) {
                (Some(prev), _, _) => b.set("extendedSystem", format!("{prev}.xsc")),
                (None, _, Some(xsc)) => b.set("extendedSystem", path_str(xsc)),
                (None, Some(c), None) => {
                    b.set("cellBasisVector1", format!("{} 0 0", c.a));
                    b.set("cellBasisVector2", format!("0 {} 0", c.b));
                    b.set("cellBasisVector3", format!("0 0 {}", c.c));
                    b.set("cellOrigin", "0 0 0");
                }
                (None, None, None) => unreachable!("checked above"),
            }
            b.set("wrapAll", "on");
            b.set("PME", "yes");
            b.set("PMEGridSpacing", "1.0");
            if spec.case_type == CaseType::Bilayer {
                b.set("useFlexibleCell", "yes");
                b.set("useConstantRatio", "yes");
            }
        }

        b.set("outputName", prefix(stage));
        b.set("outputEnergies", (ENERGY_INTERVAL_FS / dt).round() as u64);
        let traj = (TRAJECTORY_INTERVAL_FS / dt).round() as u64;
        b.set("dcdfreq", traj);
        b.set("restartfreq", traj);
        if spec.periodic {
            b.set("xstFreq", traj);
        }

        match stage {
            Stage::Minimization => {
                b.set("minimize", spec.protocol.minimization_steps);
            }
            Stage::Equilibration => {
                b.set("langevin", "on");
                b.set("langevinDamping", "1.0");
                b.set("langevinTemp", t);
                b.set("langevinHydrogen", "off");
                b.set("reassignFreq", 500);
                b.set("reassignTemp", t);
                b.set("firsttimestep", 0);
                b.set("run", steps_for(spec.protocol.equilibration_ns, dt));
            }
            Stage::Production => {
                b.set("langevin", "on");
                b.set("langevinDamping", "1.0");
                b.set("langevinTemp", t);
                b.set("langevinHydrogen", "off");
                b.set("langevinPiston", "on");
                b.set("langevinPistonTarget", TARGET_PRESSURE_BAR);
                b.set("langevinPistonPeriod", "100.0");
                b.set("langevinPistonDecay", "50.0");
                b.set("langevinPistonTemp", t);
                b.set("firsttimestep", 0);
                b.set("run", steps_for(PRODUCTION_NS, dt));
            }
        }
        configs.push(NamdConfig {
            label: spec.label.clone(),
            stage,
            parameters: b.0,
            input_paths: paths.clone(),
            output_prefix: prefix(stage),
        });
    }
    Ok(configs)
}

const KEY_WIDTH: usize = 22;

/// One `key value` line per parameter under a two-line comment header.
pub fn render_config(c: &NamdConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("# label: {}\n", c.label));
    out.push_str(&format!("# stage: {}\n", c.stage));
    out.push('\n');
    for (k, v) in &c.parameters {
        out.push_str(&format!("{k:<KEY_WIDTH$} {v}\n"));
    }
    out
}

/// Result of reading a rendered config back.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub label: String,
    pub stage: Stage,
    pub parameters: Vec<(String, String)>,
}

/// Inverse of [`render_config`]; other `#` comment lines are skipped.
pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigParseError> {
    let mut label = None;
    let mut stage = None;
    let mut parameters = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim_start();
            if let Some(l) = comment.strip_prefix("label:") {
                label = Some(l.trim().to_string());
            } else if let Some(s) = comment.strip_prefix("stage:") {
                stage = Some(Stage::parse(s).ok_or_else(|| ConfigParseError::Line {
                    line: i + 1,
                    message: format!("unknown stage '{}'", s.trim()),
                })?);
            }
            continue;
        }
        let (k, v) = line
            .split_once(char::is_whitespace)
            .map(|(k, v)| (k, v.trim()))
            .unwrap_or((line, ""));
        if v.is_empty() {
            return Err(ConfigParseError::Line {
                line: i + 1,
                message: format!("key '{k}' has no value"),
            });
        }
        parameters.push((k.to_string(), v.to_string()));
    }
    Ok(ParsedConfig {
        label: label.ok_or(ConfigParseError::MissingHeader("label"))?,
        stage: stage.ok_or(ConfigParseError::MissingHeader("stage"))?,
        parameters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jobspec::CellSpec;

    fn paths() -> InputPaths {
        InputPaths {
            structure: "step5_input.psf".into(),
            coordinates: "step5_input.pdb".into(),
            parameter_files: vec!["par_all36m_prot.prm".into(), "toppar_water_ions.str".into()],
            extended_system: None,
        }
    }

    fn ubq(hmr: bool) -> JobSpec {
        let mut s = JobSpec::new("1UBQ solution system", "1ubq", CaseType::Solution, 300.0);
        s.hmr = hmr;
        s.cell = Some(CellSpec { a: 60.0, b: 60.0, c: 60.0 });
        s
    }

    #[test]
    fn production_is_one_ns() {
        for hmr in [false, true] {
            let cfgs = generate_configs(&ubq(hmr), &paths()).unwrap();
            let prod = &cfgs[2];
            let dt: f64 = prod.get("timestep").unwrap().parse().unwrap();
            let steps: f64 = prod.get("run").unwrap().parse().unwrap();
            assert_eq!(steps * dt, 1.0e6);
            assert_eq!(prod.get("langevinTemp"), Some("300"));
            assert_eq!(prod.get("langevinPistonTemp"), Some("300"));
            assert_eq!(prod.get("langevinPiston"), Some("on"));
        }
    }

    #[test]
    fn non_periodic_has_no_pme_or_cell() {
        let mut s = ubq(true);
        s.periodic = false;
        s.cell = None;
        for c in generate_configs(&s, &paths()).unwrap() {
            for key in ["PME", "cellBasisVector1", "extendedSystem", "wrapAll"] {
                assert!(c.get(key).is_none(), "{key} in {}", c.stage);
            }
        }
    }

    #[test]
    fn missing_cell_refused() {
        let mut s = ubq(true);
        s.cell = None;
        assert_eq!(generate_configs(&s, &paths()), Err(NamdGenError::MissingCell));
        let mut p = paths();
        p.extended_system = Some("step5_input.xsc".into());
        assert!(generate_configs(&s, &p).is_ok());
    }

    #[test]
    fn invalid_spec_refused() {
        let mut s = ubq(true);
        s.temperature = -5.0;
        assert!(matches!(generate_configs(&s, &paths()), Err(NamdGenError::Refused(_))));
    }

    #[test]
    fn render_parse_fixed_point() {
        for c in generate_configs(&ubq(true), &paths()).unwrap() {
            let text = render_config(&c);
            let parsed = parse_config(&text).unwrap();
            assert_eq!(parsed.parameters, c.parameters);
            assert_eq!(parsed.stage, c.stage);
            assert_eq!(parsed.label, c.label);
            let again = NamdConfig {
                parameters: parsed.parameters,
                ..c.clone()
            };
            assert_eq!(render_config(&again), text);
        }
    }

    #[test]
    fn file_names() {
        let c = generate_configs(&ubq(true), &paths()).unwrap();
        assert_eq!(c[0].file_name(), "1UBQ_solution_system_minimization.conf");
    }
}
