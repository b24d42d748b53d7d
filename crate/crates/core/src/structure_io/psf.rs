use std::fmt::Write as _;

use super::{FormatError, Result, Topology};
use crate::elements::{atomic_weight, normalize_symbol, UNKNOWN_ELEMENT};

// CHARMM ion atom names that do not start with their element symbol.
const CHARMM_IONS: &[(&str, &str)] = &[
    ("SOD", "Na"),
    ("POT", "K"),
    ("CLA", "Cl"),
    ("CAL", "Ca"),
    ("CES", "Cs"),
    ("LIT", "Li"),
    ("RUB", "Rb"),
    ("BAR", "Ba"),
    ("ZN2", "Zn"),
    ("CD2", "Cd"),
    ("MG", "Mg"),
];

/// Element for a PSF atom from its name, checked against its mass.
///
/// Two-letter symbols are only accepted when the recorded mass is within
/// 1.5 amu of the standard weight, so `CA` (alpha carbon) stays carbon while
/// `CL` with mass 35.45 becomes chlorine. One-letter symbols are accepted
/// regardless of mass, which keeps repartitioned hydrogens and heavy atoms
/// classified correctly.
pub fn guess_psf_element(atom_name: &str, mass: f64) -> String {
    let upper = atom_name.trim().to_ascii_uppercase();
    if let Some((_, el)) = CHARMM_IONS.iter().find(|(n, _)| *n == upper) {
        return el.to_string();
    }
    let letters: String = upper
        .trim_start_matches(|c: char| c.is_ascii_digit())
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect();
    if letters.len() >= 2 {
        if let Some(sym) = normalize_symbol(&letters[..2]) {
            if atomic_weight(sym).is_some_and(|w| (w - mass).abs() < 1.5) {
                return sym.to_string();
            }
        }
    }
    if let Some(sym) = letters.get(..1).and_then(normalize_symbol) {
        return sym.to_string();
    }
    UNKNOWN_ELEMENT.to_string()
}

/// Header line of a PSF section, e.g. `    1234 !NATOM`.
fn section_header(line: &str) -> Option<(usize, String)> {
    let bang = line.find('!')?;
    let count = line[..bang].split_whitespace().next()?.parse().ok()?;
    let tag = line[bang + 1..]
        .split(|c: char| c == ':' || c.is_whitespace())
        .next()?
        .to_ascii_uppercase();
    Some((count, tag))
}

/// Parses the !NATOM and !NBOND sections of an X-PLOR or CHARMM PSF.
pub fn parse_psf(text: &str) -> Result<Topology> {
    let lines: Vec<&str> = text.lines().collect();
    let mut topo = Topology::default();
    let mut saw_atoms = false;
    let mut saw_bonds = false;
    let mut i = 0;

    while i < lines.len() {
        let Some((count, tag)) = section_header(lines[i]) else {
            i += 1;
            continue;
        };
        i += 1;
        match tag.as_str() {
            "NATOM" => {
                saw_atoms = true;
                for k in 0..count {
                    let lineno = i + 1;
                    let line = lines.get(i).copied().unwrap_or("");
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.len() < 8 || line.contains('!') {
                        return Err(FormatError::Structural(format!(
                            "!NATOM declares {count} atoms but line {lineno} (atom {}) is missing or malformed",
                            k + 1
                        )));
                    }
                    let num = |s: &str, what: &str| -> Result<f64> {
                        s.parse::<f64>().map_err(|_| FormatError::Parse {
                            line: lineno,
                            message: format!("malformed {what} '{s}'"),
                        })
                    };
                    let charge = num(fields[6], "charge")?;
                    let mass = num(fields[7], "mass")?;
                    topo.segids.push(fields[1].to_string());
                    topo.res_ids.push(fields[2].to_string());
                    topo.res_names.push(fields[3].to_string());
                    topo.atom_names.push(fields[4].to_string());
                    topo.elements.push(guess_psf_element(fields[4], mass));
                    topo.charges.push(charge);
                    topo.masses.push(mass);
                    i += 1;
                }
            }
            "NBOND" => {
                saw_bonds = true;
                let mut indices: Vec<usize> = Vec::new();
                while i < lines.len() {
                    let line = lines[i];
                    if line.trim().is_empty() || line.contains('!') {
                        break;
                    }
                    for tok in line.split_whitespace() {
                        let v: usize = tok.parse().map_err(|_| FormatError::Parse {
                            line: i + 1,
                            message: format!("malformed bond index '{tok}'"),
                        })?;
                        indices.push(v);
                    }
                    i += 1;
                }
                if indices.len() % 2 != 0 || indices.len() / 2 != count {
                    return Err(FormatError::Structural(format!(
                        "!NBOND declares {count} bonds but {} indices ({} pairs) were listed",
                        indices.len(),
                        indices.len() / 2
                    )));
                }
                topo.bonds = indices.chunks_exact(2).map(|p| (p[0], p[1])).collect();
            }
            _ => {}
        }
    }

    if !saw_atoms {
        return Err(FormatError::Structural("missing !NATOM section".into()));
    }
    if !saw_bonds {
        return Err(FormatError::Structural("missing !NBOND section".into()));
    }
    let n = topo.masses.len();
    for bond in &mut topo.bonds {
        let (a, b) = *bond;
        if a == 0 || b == 0 || a > n || b > n {
            return Err(FormatError::Parse {
                line: 0,
                message: format!("bond ({a}, {b}) references an atom outside 1..={n}"),
            });
        }
        if a == b {
            return Err(FormatError::Structural(format!("self-bond on atom {a}")));
        }
        *bond = (a - 1, b - 1);
    }
    topo.classify_hbond_sites();
    Ok(topo)
}

/// Writes a minimal X-PLOR style PSF with !NATOM and !NBOND sections.
pub fn write_psf(topo: &Topology) -> String {
    let mut out = String::from("PSF\n\n       1 !NTITLE\n REMARKS written by mdpipe\n\n");
    let _ = writeln!(out, "{:>8} !NATOM", topo.n_atoms());
    for i in 0..topo.n_atoms() {
        let field = |v: &[String], default: &str| {
            v.get(i)
                .filter(|s| !s.is_empty())
                .cloned()
                .unwrap_or_else(|| default.to_string())
        };
        let name = field(&topo.atom_names, "X");
        let _ = writeln!(
            out,
            "{:>8} {:<4} {:<4} {:<4} {:<4} {:<4} {:>10} {:>13} {:>11}",
            i + 1,
            field(&topo.segids, "SEG"),
            field(&topo.res_ids, "1"),
            field(&topo.res_names, "UNK"),
            name,
            name,
            topo.charges.get(i).copied().unwrap_or(0.0),
            topo.masses[i],
            0
        );
    }
    let _ = write!(out, "\n{:>8} !NBOND: bonds\n", topo.bonds.len());
    for chunk in topo.bonds.chunks(4) {
        for &(a, b) in chunk {
            let _ = write!(out, "{:>8}{:>8}", a + 1, b + 1);
        }
        out.push('\n');
    }
    out.push('\n');
    out
}
