//! YAML job specifications: parsing, canonical cleaning, serialization and
//! validation against structural and membrane-geometry rules.

mod report;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde_yaml::{Mapping, Value};
use thiserror::Error;

pub use report::{Finding, Severity, ValidationReport, Verdict};
pub use validate::{
    preflight_structure, validate_jobspec, validate_jobspec_with_margin,
    validate_membrane_geometry, DEFAULT_MEMBRANE_MARGIN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseType {
    Solution,
    Bilayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Namd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IonPlacement {
    MonteCarlo,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientationSource {
    None,
    Opm,
    Pdb,
}

macro_rules! keyword_enum {
    ($ty:ty { $($variant:path => $word:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self { $($variant => $word),+ }
            }

            fn from_word(s: &str) -> Option<Self> {
                let s = s.trim();
                $(if s.eq_ignore_ascii_case($word) { return Some($variant); })+
                None
            }

            fn words() -> &'static str {
                concat!($($word, " "),+).trim_ascii_end()
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(CaseType { CaseType::Solution => "solution", CaseType::Bilayer => "bilayer" });
keyword_enum!(Engine { Engine::Namd => "namd" });
keyword_enum!(IonPlacement { IonPlacement::MonteCarlo => "mc", IonPlacement::Distance => "distance" });
keyword_enum!(OrientationSource {
    OrientationSource::None => "none",
    OrientationSource::Opm => "opm",
    OrientationSource::Pdb => "pdb",
});

/// Lipid bilayer request; leaflet maps go from lipid name to ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct Membrane {
    pub upper_lipids: BTreeMap<String, f64>,
    pub lower_lipids: BTreeMap<String, f64>,
    /// Å
    pub xy_dim: f64,
}

/// Orthorhombic periodic cell edge lengths in Å.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Pre-production protocol knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub minimization_steps: u64,
    pub equilibration_ns: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            minimization_steps: 10_000,
            equilibration_ns: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub label: String,
    pub pdb_id: Option<String>,
    pub pdb_file: Option<String>,
    pub case_type: CaseType,
    pub engine: Engine,
    /// K
    pub temperature: f64,
    pub hmr: bool,
    pub solvation: bool,
    pub periodic: bool,
    pub ion_type: String,
    /// mol/L
    pub ion_concentration: f64,
    pub ion_placement: IonPlacement,
    pub orientation_source: OrientationSource,
    pub membrane: Option<Membrane>,
    pub pore_water: bool,
    /// Recorded only; protonation is left to the system builder.
    pub ph: Option<f64>,
    pub force_field: Option<String>,
    pub cell: Option<CellSpec>,
    pub protocol: Protocol,
}

impl JobSpec {
    /// A spec with the given required fields and every default applied.
    pub fn new(label: impl Into<String>, pdb_id: impl Into<String>, case_type: CaseType, temperature: f64) -> Self {
        JobSpec {
            label: label.into(),
            pdb_id: Some(pdb_id.into()),
            pdb_file: None,
            case_type,
            engine: Engine::Namd,
            temperature,
            hmr: false,
            solvation: true,
            periodic: true,
            ion_type: "KCl".into(),
            ion_concentration: 0.15,
            ion_placement: IonPlacement::MonteCarlo,
            orientation_source: OrientationSource::None,
            membrane: None,
            pore_water: false,
            ph: None,
            force_field: None,
            cell: None,
            protocol: Protocol::default(),
        }
    }
}

/// Location and description of a schema violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JobSpecError {
    #[error("malformed YAML: {0}")]
    Yaml(String),
    #[error("job spec schema errors: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Schema(Vec<SchemaIssue>),
}

/// A parsed spec plus tolerant-reader warnings (unknown keys).
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedJobSpec {
    pub spec: JobSpec,
    pub warnings: Vec<Finding>,
}

const TOP_LEVEL_KEYS: [&str; 19] = [
    "label",
    "pdb_id",
    "pdb_file",
    "case_type",
    "engine",
    "temperature",
    "hmr",
    "solvation",
    "periodic",
    "ion_type",
    "ion_concentration",
    "ion_placement",
    "orientation_source",
    "membrane",
    "pore_water",
    "ph",
    "force_field",
    "cell",
    "protocol",
];

#[derive(Default)]
struct Reader {
    issues: Vec<SchemaIssue>,
    warnings: Vec<Finding>,
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Sequence(_) => "list",
        Value::Mapping(_) => "mapping",
        Value::Tagged(_) => "tagged value",
    }
}

impl Reader {
    fn issue(&mut self, path: &str, message: impl Into<String>) {
        self.issues.push(SchemaIssue {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn mismatch(&mut self, path: &str, expected: &str, got: &Value) {
        self.issue(path, format!("expected {expected}, found {}", kind(got)));
    }

    fn mapping<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Mapping> {
        match v {
            Value::Mapping(m) => Some(m),
            other => {
                self.mismatch(path, "a mapping", other);
                None
            }
        }
    }

    fn string(&mut self, m: &Mapping, key: &str, path: &str) -> Option<String> {
        match m.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.mismatch(path, "a string", other);
                None
            }
        }
    }

    fn number(&mut self, m: &Mapping, key: &str, path: &str) -> Option<f64> {
        match m.get(key)? {
            Value::Number(n) => n.as_f64(),
            other => {
                self.mismatch(path, "a number", other);
                None
            }
        }
    }

    fn boolean(&mut self, m: &Mapping, key: &str, path: &str) -> Option<bool> {
        match m.get(key)? {
            Value::Bool(b) => Some(*b),
            other => {
                self.mismatch(path, "true or false", other);
                None
            }
        }
    }

    fn keyword<T>(&mut self, m: &Mapping, key: &str, parse: fn(&str) -> Option<T>, allowed: &str) -> Option<T> {
        let s = self.string(m, key, key)?;
        let parsed = parse(&s);
        if parsed.is_none() {
            self.issue(key, format!("unknown value '{s}' (expected one of: {allowed})"));
        }
        parsed
    }

    fn leaflet(&mut self, m: &Mapping, key: &str) -> Option<BTreeMap<String, f64>> {
        let path = format!("membrane.{key}");
        let Some(v) = m.get(key) else {
            self.issue(&path, "missing required key");
            return None;
        };
        let map = self.mapping(v, &path)?;
        let mut out = BTreeMap::new();
        for (k, val) in map {
            let Value::String(name) = k else {
                self.mismatch(&path, "lipid names as keys", k);
                continue;
            };
            match val {
                Value::Number(n) => {
                    out.insert(name.clone(), n.as_f64().unwrap_or(f64::NAN));
                }
                other => self.mismatch(&format!("{path}.{name}"), "a number", other),
            }
        }
        Some(out)
    }

    fn unknown_keys(&mut self, m: &Mapping, known: &[&str], prefix: &str) {
        for k in m.keys() {
            let name = match k {
                Value::String(s) => s.clone(),
                other => format!("{other:?}"),
            };
            if !known.contains(&name.as_str()) {
                let subject = format!("{prefix}{name}");
                self.warnings.push(Finding::warning(
                    "unknown-key",
                    format!("unknown key '{subject}' ignored"),
                    subject,
                ));
            }
        }
    }
}

/// Parses a YAML job spec. All schema problems are reported together.
pub fn parse_jobspec(text: &str) -> Result<ParsedJobSpec, JobSpecError> {
    let doc: Value = serde_yaml::from_str(text).map_err(|e| JobSpecError::Yaml(e.to_string()))?;
    let mut r = Reader::default();
    let Some(root) = r.mapping(&doc, "<document>") else {
        return Err(JobSpecError::Schema(r.issues));
    };
    r.unknown_keys(root, &TOP_LEVEL_KEYS, "");

    let label = r.string(root, "label", "label");
    let pdb_id = r.string(root, "pdb_id", "pdb_id");
    let pdb_file = r.string(root, "pdb_file", "pdb_file");
    let case_type = r.keyword(root, "case_type", CaseType::from_word, CaseType::words());
    let temperature = r.number(root, "temperature", "temperature");

    let missing: Vec<&str> = [
        ("label", root.contains_key("label")),
        (
            "pdb_id or pdb_file",
            root.contains_key("pdb_id") || root.contains_key("pdb_file"),
        ),
        ("case_type", root.contains_key("case_type")),
        ("temperature", root.contains_key("temperature")),
    ]
    .iter()
    .filter(|(_, present)| !present)
    .map(|(k, _)| *k)
    .collect();
    for key in &missing {
        r.issue(key, "missing required key");
    }

    let engine = r.keyword(root, "engine", Engine::from_word, Engine::words());
    let hmr = r.boolean(root, "hmr", "hmr");
    let solvation = r.boolean(root, "solvation", "solvation");
    let periodic = r.boolean(root, "periodic", "periodic");
    let ion_type = r.string(root, "ion_type", "ion_type");
    let ion_concentration = r.number(root, "ion_concentration", "ion_concentration");
    let ion_placement = r.keyword(root, "ion_placement", IonPlacement::from_word, IonPlacement::words());
    let orientation_source = r.keyword(
        root,
        "orientation_source",
        OrientationSource::from_word,
        OrientationSource::words(),
    );
    let pore_water = r.boolean(root, "pore_water", "pore_water");
    let ph = r.number(root, "ph", "ph");
    let force_field = r.string(root, "force_field", "force_field");

    let membrane = match root.get("membrane") {
        None | Some(Value::Null) => None,
        Some(v) => r.mapping(v, "membrane").and_then(|m| {
            r.unknown_keys(m, &["upper_lipids", "lower_lipids", "xy_dim"], "membrane.");
            let upper = r.leaflet(m, "upper_lipids");
            let lower = r.leaflet(m, "lower_lipids");
            let xy = r.number(m, "xy_dim", "membrane.xy_dim");
            if !m.contains_key("xy_dim") {
                r.issue("membrane.xy_dim", "missing required key");
            }
            Some(Membrane {
                upper_lipids: upper?,
                lower_lipids: lower?,
                xy_dim: xy?,
            })
        }),
    };
    if case_type == Some(CaseType::Bilayer) && !root.contains_key("membrane") {
        r.issue("membrane", "bilayer case requires a membrane section");
    }

    let cell = match root.get("cell") {
        None | Some(Value::Null) => None,
        Some(v) => r.mapping(v, "cell").and_then(|m| {
            r.unknown_keys(m, &["a", "b", "c"], "cell.");
            let mut get = |k: &str| {
                let path = format!("cell.{k}");
                if !m.contains_key(k) {
                    r.issue(&path, "missing required key");
                }
                r.number(m, k, &path)
            };
            let (a, b, c) = (get("a"), get("b"), get("c"));
            Some(CellSpec { a: a?, b: b?, c: c? })
        }),
    };

    let mut protocol = Protocol::default();
    if let Some(v) = root.get("protocol") {
        if let Some(m) = r.mapping(v, "protocol") {
            r.unknown_keys(m, &["minimization_steps", "equilibration_ns"], "protocol.");
            match m.get("minimization_steps") {
                None => {}
                Some(Value::Number(n)) if n.as_u64().is_some() => {
                    protocol.minimization_steps = n.as_u64().unwrap();
                }
                Some(other) => r.mismatch("protocol.minimization_steps", "a non-negative integer", other),
            }
            if let Some(ns) = r.number(m, "equilibration_ns", "protocol.equilibration_ns") {
                protocol.equilibration_ns = ns;
            }
        }
    }

    if !r.issues.is_empty() {
        return Err(JobSpecError::Schema(r.issues));
    }
    let (Some(label), Some(case_type), Some(temperature)) = (label, case_type, temperature) else {
        unreachable!("required keys were checked above");
    };
    let spec = JobSpec {
        label,
        pdb_id,
        pdb_file,
        case_type,
        engine: engine.unwrap_or(Engine::Namd),
        temperature,
        hmr: hmr.unwrap_or(false),
        solvation: solvation.unwrap_or(true),
        periodic: periodic.unwrap_or(true),
        ion_type: ion_type.unwrap_or_else(|| "KCl".into()),
        ion_concentration: ion_concentration.unwrap_or(0.15),
        ion_placement: ion_placement.unwrap_or(IonPlacement::MonteCarlo),
        orientation_source: orientation_source.unwrap_or(OrientationSource::None),
        membrane,
        pore_water: pore_water.unwrap_or(false),
        ph,
        force_field,
        cell,
        protocol,
    };
    let mut warnings = r.warnings;
    warnings.sort();
    Ok(ParsedJobSpec { spec, warnings })
}

fn normalize_leaflet(leaflet: &mut BTreeMap<String, f64>) {
    let sum: f64 = leaflet.values().sum();
    if !(sum > 0.0) || !sum.is_finite() || (sum - 1.0).abs() <= 1e-12 {
        return;
    }
    for v in leaflet.values_mut() {
        *v /= sum;
    }
}

/// Canonical form: trimmed label, lower-case PDB ID, leaflet ratios summing
/// to 1 and temperature rounded to 0.01 K. Idempotent.
pub fn clean_jobspec(spec: &JobSpec) -> JobSpec {
    let mut out = spec.clone();
    out.label = out.label.trim().to_string();
    out.pdb_id = out.pdb_id.map(|id| id.trim().to_ascii_lowercase());
    if let Some(m) = out.membrane.as_mut() {
        normalize_leaflet(&mut m.upper_lipids);
        normalize_leaflet(&mut m.lower_lipids);
    }
    if out.temperature.is_finite() {
        out.temperature = (out.temperature * 100.0).round() / 100.0;
    }
    out
}

fn num(x: f64) -> Value {
    Value::Number(x.into())
}

fn key(k: &str) -> Value {
    Value::String(k.to_string())
}

/// YAML text that parses back to `spec`. Keys are emitted in a fixed order.
pub fn serialize_jobspec(spec: &JobSpec) -> String {
    let mut m = Mapping::new();
    m.insert(key("label"), Value::String(spec.label.clone()));
    if let Some(id) = &spec.pdb_id {
        m.insert(key("pdb_id"), Value::String(id.clone()));
    }
    if let Some(f) = &spec.pdb_file {
        m.insert(key("pdb_file"), Value::String(f.clone()));
    }
    m.insert(key("case_type"), key(spec.case_type.as_str()));
    m.insert(key("engine"), key(spec.engine.as_str()));
    m.insert(key("temperature"), num(spec.temperature));
    m.insert(key("hmr"), Value::Bool(spec.hmr));
    m.insert(key("solvation"), Value::Bool(spec.solvation));
    m.insert(key("periodic"), Value::Bool(spec.periodic));
    m.insert(key("ion_type"), Value::String(spec.ion_type.clone()));
    m.insert(key("ion_concentration"), num(spec.ion_concentration));
    m.insert(key("ion_placement"), key(spec.ion_placement.as_str()));
    m.insert(key("orientation_source"), key(spec.orientation_source.as_str()));
    if let Some(mem) = &spec.membrane {
        let leaflet = |l: &BTreeMap<String, f64>| {
            Value::Mapping(l.iter().map(|(k, &v)| (key(k), num(v))).collect())
        };
        let mut mm = Mapping::new();
        mm.insert(key("upper_lipids"), leaflet(&mem.upper_lipids));
        mm.insert(key("lower_lipids"), leaflet(&mem.lower_lipids));
        mm.insert(key("xy_dim"), num(mem.xy_dim));
        m.insert(key("membrane"), Value::Mapping(mm));
    }
    m.insert(key("pore_water"), Value::Bool(spec.pore_water));
    if let Some(ph) = spec.ph {
        m.insert(key("ph"), num(ph));
    }
    if let Some(ff) = &spec.force_field {
        m.insert(key("force_field"), Value::String(ff.clone()));
    }
    if let Some(c) = spec.cell {
        let mut cm = Mapping::new();
        cm.insert(key("a"), num(c.a));
        cm.insert(key("b"), num(c.b));
        cm.insert(key("c"), num(c.c));
        m.insert(key("cell"), Value::Mapping(cm));
    }
    let mut pm = Mapping::new();
    pm.insert(
        key("minimization_steps"),
        Value::Number(spec.protocol.minimization_steps.into()),
    );
    pm.insert(key("equilibration_ns"), num(spec.protocol.equilibration_ns));
    m.insert(key("protocol"), Value::Mapping(pm));
    serde_yaml::to_string(&Value::Mapping(m)).expect("YAML mapping of plain scalars always serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const UBQ: &str = "\
label: 1UBQ solution system
pdb_id: 1UBQ
pdb_file: 1ubq.pdb
case_type: solution
engine: NAMD
temperature: 300
hmr: true
solvation: true
periodic: true
ion_type: KCl
ion_concentration: 0.15
orientation_source: none
";

    #[test]
    fn parses_solution_run() {
        let p = parse_jobspec(UBQ).unwrap();
        assert_eq!(p.spec.case_type, CaseType::Solution);
        assert_eq!(p.spec.temperature, 300.0);
        assert_eq!(p.spec.ion_concentration, 0.15);
        assert_eq!(p.spec.ion_placement, IonPlacement::MonteCarlo);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn stray_key_warns() {
        let p = parse_jobspec(&format!("{UBQ}colour: blue\n")).unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].code, "unknown-key");
    }

    #[test]
    fn all_missing_keys_reported() {
        let err = parse_jobspec("engine: namd\n").unwrap_err();
        let JobSpecError::Schema(issues) = err else { panic!() };
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        assert_eq!(paths, vec!["label", "pdb_id or pdb_file", "case_type", "temperature"]);
    }

    #[test]
    fn bilayer_needs_xy() {
        let text = "label: x\npdb_id: 1afo\ncase_type: bilayer\ntemperature: 310\nmembrane:\n  upper_lipids: {POPC: 1}\n  lower_lipids: {POPC: 1}\n";
        let JobSpecError::Schema(issues) = parse_jobspec(text).unwrap_err() else { panic!() };
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "membrane.xy_dim");
    }

    #[test]
    fn type_mismatch_has_path() {
        let text = "label: x\npdb_id: 1afo\ncase_type: solution\ntemperature: hot\n";
        let JobSpecError::Schema(issues) = parse_jobspec(text).unwrap_err() else { panic!() };
        assert_eq!(issues[0].path, "temperature");
    }

    #[test]
    fn cleaning_normalizes() {
        let mut s = JobSpec::new("  a ", "1AFO", CaseType::Bilayer, 303.149);
        s.membrane = Some(Membrane {
            upper_lipids: [("POPC".to_string(), 2.0)].into(),
            lower_lipids: [("POPC".to_string(), 1.0), ("POPE".to_string(), 1.0)].into(),
            xy_dim: 50.0,
        });
        let c = clean_jobspec(&s);
        assert_eq!(c.label, "a");
        assert_eq!(c.pdb_id.as_deref(), Some("1afo"));
        assert_eq!(c.temperature, 303.15);
        let m = c.membrane.as_ref().unwrap();
        assert_eq!(m.upper_lipids["POPC"], 1.0);
        assert_eq!(m.lower_lipids["POPE"], 0.5);
        assert_eq!(clean_jobspec(&c), c);
    }

    #[test]
    fn serialize_round_trip() {
        let s = clean_jobspec(&parse_jobspec(UBQ).unwrap().spec);
        let again = parse_jobspec(&serialize_jobspec(&s)).unwrap();
        assert_eq!(again.spec, s);
        assert!(again.warnings.is_empty());
    }
}
