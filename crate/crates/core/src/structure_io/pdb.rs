use std::fmt::Write as _;

use super::{AtomRecord, DroppedAltLoc, FormatError, Result, Structure};
use crate::elements::{atomic_weight, normalize_symbol, UNKNOWN_ELEMENT};
use crate::geometry::Vec3;

// Mass used for atoms whose element resolves to the unknown sentinel.
const UNKNOWN_ELEMENT_MASS: f64 = 12.011;

/// 1-based inclusive column range of a fixed-width line, blank-padded.
fn cols(line: &[u8], first: usize, last: usize) -> String {
    let start = first - 1;
    if start >= line.len() {
        return String::new();
    }
    let end = last.min(line.len());
    String::from_utf8_lossy(&line[start..end]).into_owned()
}

fn col_char(line: &[u8], col: usize) -> Option<char> {
    line.get(col - 1)
        .map(|&b| b as char)
        .filter(|c| !c.is_whitespace())
}

fn parse_real(line: &[u8], first: usize, last: usize, what: &str, lineno: usize) -> Result<f64> {
    let raw = cols(line, first, last);
    let v: f64 = raw.trim().parse().map_err(|_| FormatError::Parse {
        line: lineno,
        message: format!("malformed {what} field '{}' (columns {first}-{last})", raw.trim()),
    })?;
    if !v.is_finite() {
        return Err(FormatError::Parse {
            line: lineno,
            message: format!("non-finite {what} value"),
        });
    }
    Ok(v)
}

fn parse_optional_real(line: &[u8], first: usize, last: usize, default: f64) -> f64 {
    cols(line, first, last).trim().parse().unwrap_or(default)
}

/// Element from columns 77-78, else the first alphabetic character of the atom name.
fn resolve_element(element_field: &str, atom_name: &str) -> String {
    let field = element_field.trim();
    if !field.is_empty() {
        return normalize_symbol(field).unwrap_or(UNKNOWN_ELEMENT).to_string();
    }
    atom_name
        .chars()
        .find(|c| c.is_ascii_alphabetic())
        .and_then(|c| normalize_symbol(&c.to_string()))
        .unwrap_or(UNKNOWN_ELEMENT)
        .to_string()
}

/// Parses ATOM/HETATM records of the first model of a PDB document.
pub fn parse_pdb(text: &str) -> Result<Structure> {
    let mut atoms = Vec::new();
    let mut dropped = Vec::new();
    let mut source_label = String::new();
    let mut models_seen = 0usize;
    let mut last_serial = 0u32;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.as_bytes();
        let record = cols(line, 1, 6);
        let record = record.trim_end();
        match record {
            "HEADER" => {
                source_label = cols(line, 63, 66).trim().to_string();
            }
            "MODEL" => {
                models_seen += 1;
                if models_seen > 1 && !atoms.is_empty() {
                    break;
                }
            }
            "ENDMDL" => {
                if !atoms.is_empty() {
                    break;
                }
            }
            "ATOM" | "HETATM" => {
                let alt_loc = col_char(line, 17);
                let name = cols(line, 13, 16);
                let res_name = cols(line, 18, 20).trim().to_string();
                let chain_id = line.get(21).map(|&b| b as char).unwrap_or(' ');
                let res_seq_raw = cols(line, 23, 26);
                let res_seq: i32 = res_seq_raw.trim().parse().map_err(|_| FormatError::Parse {
                    line: lineno,
                    message: format!("malformed residue number '{}'", res_seq_raw.trim()),
                })?;
                if let Some(alt) = alt_loc.filter(|&c| c != 'A') {
                    dropped.push(DroppedAltLoc {
                        line: lineno,
                        chain_id,
                        res_seq,
                        res_name,
                        atom_name: name.trim().to_string(),
                        alt_loc: alt,
                    });
                    continue;
                }
                let x = parse_real(line, 31, 38, "x coordinate", lineno)?;
                let y = parse_real(line, 39, 46, "y coordinate", lineno)?;
                let z = parse_real(line, 47, 54, "z coordinate", lineno)?;
                let serial = cols(line, 7, 11)
                    .trim()
                    .parse::<u32>()
                    .ok()
                    .filter(|&s| s >= 1)
                    .unwrap_or(last_serial + 1);
                last_serial = serial;
                let element = resolve_element(&cols(line, 77, 78), &name);
                let mass = atomic_weight(&element).unwrap_or(UNKNOWN_ELEMENT_MASS);
                atoms.push(AtomRecord {
                    serial,
                    name,
                    alt_loc,
                    res_name,
                    chain_id,
                    res_seq,
                    insertion_code: col_char(line, 27),
                    position: Vec3::new(x, y, z),
                    occupancy: parse_optional_real(line, 55, 60, 1.0),
                    b_factor: parse_optional_real(line, 61, 66, 0.0),
                    element,
                    mass,
                    is_hetero: record == "HETATM",
                });
            }
            _ => {}
        }
    }

    if atoms.is_empty() {
        return Err(FormatError::EmptyStructure);
    }
    let mut structure = Structure::from_atoms(atoms, source_label);
    structure.dropped_alt_locs = dropped;
    Ok(structure)
}

/// Writes ATOM/HETATM records (plus END) in fixed-column layout.
pub fn write_pdb(structure: &Structure) -> String {
    let mut out = String::new();
    for atom in &structure.atoms {
        let record = if atom.is_hetero { "HETATM" } else { "ATOM  " };
        // 4-char names start in column 13; shorter names conventionally start in 14
        let name = if atom.name.len() >= 4 {
            atom.name[..4].to_string()
        } else if atom.name.starts_with(' ') {
            format!("{:<4}", atom.name)
        } else {
            format!(" {:<3}", atom.name)
        };
        let _ = writeln!(
            out,
            "{record}{serial:>5} {name}{alt}{res:>3} {chain}{seq:>4}{icode}   {x:>8.3}{y:>8.3}{z:>8.3}{occ:>6.2}{b:>6.2}          {el:>2}",
            serial = atom.serial % 100_000,
            alt = atom.alt_loc.unwrap_or(' '),
            res = atom.res_name,
            chain = atom.chain_id,
            seq = atom.res_seq,
            icode = atom.insertion_code.unwrap_or(' '),
            x = atom.position.x,
            y = atom.position.y,
            z = atom.position.z,
            occ = atom.occupancy,
            b = atom.b_factor,
            el = atom.element.to_uppercase(),
        );
    }
    out.push_str("END\n");
    out
}
