use std::fmt::Write as _;

use super::ReportError;
use crate::analysis::{FesGrid, HBondKey, PerAtomSeries, TimeSeries};

/// `<name> (<unit>)`, or just the name for dimensionless quantities.
pub fn column_title(name: &str, unit: &str) -> String {
    if unit.is_empty() {
        name.to_string()
    } else {
        format!("{name} ({unit})")
    }
}

/// Shortest decimal representation that round-trips; always uses '.'.
pub fn fmt_value(v: f64) -> String {
    format!("{v}")
}

pub fn series_csv(s: &TimeSeries) -> String {
    let mut out = format!("index,{}\n", column_title(&s.name, &s.unit));
    for &(i, v) in &s.points {
        let _ = writeln!(out, "{i},{}", fmt_value(v));
    }
    out
}

/// Per-atom values keyed by atom index.
pub fn per_atom_csv(s: &PerAtomSeries) -> String {
    let mut out = format!("index,{}\n", column_title(&s.name, &s.unit));
    for (&i, &v) in s.atom_indices.iter().zip(&s.values) {
        let _ = writeln!(out, "{i},{}", fmt_value(v));
    }
    out
}

/// Per-residue means keyed by residue index.
pub fn residue_rollup_csv(s: &PerAtomSeries) -> String {
    let mut out = format!("index,{}\n", column_title(&format!("{} residue mean", s.name), &s.unit));
    for &(r, v) in &s.residue_rollup {
        let _ = writeln!(out, "{r},{}", fmt_value(v));
    }
    out
}

pub fn persistence_csv(p: &[(HBondKey, f64)]) -> String {
    let mut out = String::from("donor,hydrogen,acceptor,occupancy\n");
    for (k, occ) in p {
        let _ = writeln!(out, "{},{},{},{}", k.donor, k.hydrogen, k.acceptor, fmt_value(*occ));
    }
    out
}

/// Occupied cells only: bin indices, lower edges, count and free energy.
pub fn fes_csv(g: &FesGrid) -> String {
    let mut out = String::from("rg_bin,rmsd_bin,rg_lo (Å),rmsd_lo (Å),count,free_energy (kT)\n");
    for (i, row) in g.free_energy.iter().enumerate() {
        for (j, f) in row.iter().enumerate() {
            if let Some(f) = f {
                let _ = writeln!(
                    out,
                    "{i},{j},{},{},{},{}",
                    fmt_value(g.rg_edges[i]),
                    fmt_value(g.rmsd_edges[j]),
                    g.counts[i][j],
                    fmt_value(*f)
                );
            }
        }
    }
    out
}

/// Reads a two-column `index,<title>` file back into a series.
pub fn parse_series_csv(text: &str) -> Result<TimeSeries, ReportError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| ReportError::Csv {
        line: 1,
        message: "empty file".into(),
    })?;
    let title = header.strip_prefix("index,").ok_or_else(|| ReportError::Csv {
        line: 1,
        message: format!("header '{header}' does not start with 'index,'"),
    })?;
    let (name, unit) = match title.rsplit_once(" (") {
        Some((n, u)) if u.ends_with(')') => (n.to_string(), u[..u.len() - 1].to_string()),
        _ => (title.to_string(), String::new()),
    };
    let mut points = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let bad = |message: String| ReportError::Csv { line: lineno, message };
        let (i, v) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("expected two fields in '{line}'")))?;
        let i: usize = i.parse().map_err(|_| bad(format!("bad index '{i}'")))?;
        let v: f64 = v.parse().map_err(|_| bad(format!("bad value '{v}'")))?;
        points.push((i, v));
    }
    Ok(TimeSeries::new(name, unit, points))
}
