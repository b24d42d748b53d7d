use std::collections::BTreeMap;

use super::{CaseType, Finding, JobSpec, ValidationReport};
use crate::residues::{is_amino_acid, is_whitelisted};
use crate::structure_io::{validate_pdb_id, Structure};

/// Lipid clearance added to the protein's lateral extent, Å.
pub const DEFAULT_MEMBRANE_MARGIN: f64 = 15.0;

const BACKBONE: [&str; 4] = ["N", "CA", "C", "O"];
const CHAIN_BREAK_CN: f64 = 2.0;

fn residue_subject(s: &Structure, r: usize) -> String {
    format!("{} {}", s.residues[r].res_name, s.residues[r].label())
}

/// Detection-only structure checks. Never modifies `s`.
pub fn preflight_structure(s: &Structure) -> ValidationReport {
    let mut findings = Vec::new();

    let mut nonstandard: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (r, res) in s.residues.iter().enumerate() {
        if !is_whitelisted(&res.res_name) {
            nonstandard.entry(res.res_name.as_str()).or_default().push(r);
        }
    }
    for (name, rs) in nonstandard {
        findings.push(Finding::warning(
            "nonstandard-residue",
            format!(
                "nonstandard residue {name}: {} occurrence(s), first at {}",
                rs.len(),
                s.residues[rs[0]].label()
            ),
            name,
        ));
    }

    for (r, res) in s.residues.iter().enumerate() {
        if !is_amino_acid(&res.res_name) {
            continue;
        }
        let missing: Vec<&str> = BACKBONE
            .iter()
            .copied()
            .filter(|&name| {
                s.find_in_residue(r, name).is_none()
                    && !(name == "O" && s.find_in_residue(r, "OT1").is_some())
            })
            .collect();
        if !missing.is_empty() {
            findings.push(Finding::error(
                "incomplete-residue",
                format!(
                    "incomplete residue {} chain {} residue {}: missing backbone atom(s) {}",
                    res.res_name,
                    res.chain_id,
                    res.res_seq,
                    missing.join(", ")
                ),
                residue_subject(s, r),
            ));
        }
    }

    let mut alt: BTreeMap<(char, i32, String), usize> = BTreeMap::new();
    for d in &s.dropped_alt_locs {
        *alt.entry((d.chain_id, d.res_seq, d.res_name.clone())).or_default() += 1;
    }
    for ((chain, seq, name), n) in alt {
        findings.push(Finding::info(
            "altloc-dropped",
            format!("{n} alternate-location record(s) beyond 'A' dropped"),
            format!("{name} {chain}:{seq}"),
        ));
    }

    let n_h = s.atoms.iter().filter(|a| a.element == "H").count();
    if n_h > 0 {
        findings.push(Finding::info(
            "hydrogens-present",
            format!("{n_h} hydrogen atom(s) present in the input structure"),
            s.source_label.clone(),
        ));
    }

    for r in 1..s.residues.len() {
        let (prev, next) = (&s.residues[r - 1], &s.residues[r]);
        if prev.chain_id != next.chain_id || !is_amino_acid(&prev.res_name) || !is_amino_acid(&next.res_name) {
            continue;
        }
        let (Some(c), Some(n)) = (s.find_in_residue(r - 1, "C"), s.find_in_residue(r, "N")) else {
            continue;
        };
        let d = (s.atoms[c].position - s.atoms[n].position).norm();
        if d > CHAIN_BREAK_CN {
            findings.push(Finding::warning(
                "chain-break",
                format!("C–N distance {d:.3} Å between {} and {} exceeds {CHAIN_BREAK_CN} Å", prev.label(), next.label()),
                format!("{} {}", prev.label(), next.label()),
            ));
        }
    }
    ValidationReport::new(findings)
}

/// Lateral fit of the protein in the requested membrane patch: error iff
/// `xy_dim < max(extent_x, extent_y) + margin`.
pub fn validate_membrane_geometry(s: &Structure, spec: &JobSpec, margin: f64) -> ValidationReport {
    let Some(mem) = spec.membrane.as_ref().filter(|_| spec.case_type == CaseType::Bilayer) else {
        return ValidationReport::default();
    };
    let protein: Vec<_> = s.atoms.iter().filter(|a| is_amino_acid(&a.res_name)).collect();
    if protein.is_empty() {
        return ValidationReport::new(vec![Finding::warning(
            "no-protein-atoms",
            "structure has no amino-acid atoms; membrane fit not checked",
            "membrane.xy_dim",
        )]);
    }
    let extent = |f: fn(&crate::geometry::Vec3) -> f64| {
        let (lo, hi) = protein.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
            let v = f(&a.position);
            (lo.min(v), hi.max(v))
        });
        hi - lo
    };
    let (ex, ey) = (extent(|p| p.x), extent(|p| p.y));
    let widest = ex.max(ey);
    let needed = widest + margin;
    if mem.xy_dim < needed {
        ValidationReport::new(vec![Finding::error(
            "membrane-too-small",
            format!(
                "membrane XY size {} Å is too small: protein lateral extent {widest:.3} Å (x {ex:.3}, y {ey:.3}) plus margin {margin} Å needs at least {needed:.3} Å",
                mem.xy_dim
            ),
            "membrane.xy_dim",
        )])
    } else {
        ValidationReport::default()
    }
}

fn spec_findings(spec: &JobSpec) -> Vec<Finding> {
    let mut out = Vec::new();
    if spec.label.trim().is_empty() {
        out.push(Finding::error("empty-label", "label is empty", "label"));
    }
    if !(spec.temperature > 0.0 && spec.temperature <= 1000.0) {
        out.push(Finding::error(
            "temperature-range",
            format!("temperature {} K is outside (0, 1000] K", spec.temperature),
            "temperature",
        ));
    }
    if !(spec.ion_concentration >= 0.0 && spec.ion_concentration <= 10.0) {
        out.push(Finding::error(
            "ion-concentration-range",
            format!("ion concentration {} M is outside [0, 10] M", spec.ion_concentration),
            "ion_concentration",
        ));
    }
    if let Some(id) = &spec.pdb_id {
        if validate_pdb_id(id).is_err() {
            out.push(Finding::error(
                "invalid-pdb-id",
                format!("'{id}' is not a PDB ID (digit followed by three alphanumerics)"),
                "pdb_id",
            ));
        }
    }
    if spec.pdb_id.is_none() && spec.pdb_file.is_none() {
        out.push(Finding::error("missing-structure", "neither pdb_id nor pdb_file is set", "pdb_id"));
    }
    match (&spec.membrane, spec.case_type) {
        (None, CaseType::Bilayer) => out.push(Finding::error(
            "missing-membrane",
            "bilayer case requires a membrane section",
            "membrane",
        )),
        (Some(_), CaseType::Solution) => out.push(Finding::warning(
            "membrane-ignored",
            "membrane section is ignored for a solution case",
            "membrane",
        )),
        (Some(m), CaseType::Bilayer) => {
            if !(m.xy_dim > 0.0) || !m.xy_dim.is_finite() {
                out.push(Finding::error(
                    "membrane-xy-dim",
                    format!("membrane XY size {} Å must be positive", m.xy_dim),
                    "membrane.xy_dim",
                ));
            }
            for (name, leaflet) in [("upper_lipids", &m.upper_lipids), ("lower_lipids", &m.lower_lipids)] {
                if leaflet.is_empty() {
                    out.push(Finding::error(
                        "empty-leaflet",
                        format!("{name} has no lipids"),
                        format!("membrane.{name}"),
                    ));
                }
                for (lipid, &ratio) in leaflet {
                    if !(ratio > 0.0) || !ratio.is_finite() {
                        out.push(Finding::error(
                            "lipid-ratio",
                            format!("ratio {ratio} for {lipid} must be positive"),
                            format!("membrane.{name}.{lipid}"),
                        ));
                    }
                }
            }
        }
        (None, CaseType::Solution) => {}
    }
    if let Some(c) = spec.cell {
        if ![c.a, c.b, c.c].iter().all(|&l| l > 0.0 && l.is_finite()) {
            out.push(Finding::error(
                "cell-dimensions",
                format!("cell edges ({}, {}, {}) Å must be positive", c.a, c.b, c.c),
                "cell",
            ));
        }
        if !spec.periodic {
            out.push(Finding::warning(
                "cell-ignored",
                "cell is ignored because periodic is false",
                "cell",
            ));
        }
    }
    if !(spec.protocol.equilibration_ns > 0.0) || !spec.protocol.equilibration_ns.is_finite() {
        out.push(Finding::error(
            "protocol-range",
            format!("equilibration length {} ns must be positive", spec.protocol.equilibration_ns),
            "protocol.equilibration_ns",
        ));
    }
    if let Some(ph) = spec.ph {
        if !(0.0..=14.0).contains(&ph) {
            out.push(Finding::warning("ph-range", format!("pH {ph} is outside [0, 14]"), "ph"));
        }
    }
    out
}

pub fn validate_jobspec(spec: &JobSpec, structure: Option<&Structure>) -> ValidationReport {
    validate_jobspec_with_margin(spec, structure, DEFAULT_MEMBRANE_MARGIN)
}

/// Spec invariants, plus structure preflight and membrane fit when a
/// structure is supplied.
pub fn validate_jobspec_with_margin(spec: &JobSpec, structure: Option<&Structure>, margin: f64) -> ValidationReport {
    let mut report = ValidationReport::new(spec_findings(spec));
    if let Some(s) = structure {
        report = report.merge(preflight_structure(s));
        if spec.case_type == CaseType::Bilayer {
            report = report.merge(validate_membrane_geometry(s, spec, margin));
        }
    }
    report
}
