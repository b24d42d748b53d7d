//! Synthetic systems shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use mdpipe::geometry::Vec3;
use mdpipe::structure_io::{parse_pdb, write_dcd_to, DcdHeader, Frame, Structure};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// AKMA time units per picosecond.
const AKMA_PER_PS: f64 = 1.0 / 0.048_888_21;

pub struct Atom {
    pub name: &'static str,
    pub res_name: &'static str,
    pub chain: char,
    pub res_seq: i32,
    pub element: &'static str,
    pub pos: Vec3,
}

fn pdb_line(out: &mut String, serial: usize, a: &Atom) {
    let record = if a.res_name == "HOH" { "HETATM" } else { "ATOM  " };
    let name = if a.name.len() < 4 { format!(" {:<3}", a.name) } else { a.name.to_string() };
    let _ = writeln!(
        out,
        "{record}{:>5} {name} {:>3} {}{:>4}    {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}",
        serial % 100_000,
        a.res_name,
        a.chain,
        a.res_seq % 10_000,
        a.pos.x,
        a.pos.y,
        a.pos.z,
        1.0,
        0.0,
        a.element
    );
}

pub fn to_pdb(atoms: &[Atom]) -> String {
    let mut out = String::new();
    for (i, a) in atoms.iter().enumerate() {
        pdb_line(&mut out, i + 1, a);
    }
    out.push_str("END\n");
    out
}

/// Parallel extended strands along x, 4.6 Å apart in y. Every backbone N–H
/// points at the O of the next strand, 3.37 Å away and collinear, so each
/// residue of strand `s < n_strands - 1` donates one hydrogen bond.
pub fn strands(n_strands: usize, residues_per_strand: usize) -> Vec<Atom> {
    let mut atoms = Vec::new();
    for s in 0..n_strands {
        let chain = (b'A' + (s % 26) as u8) as char;
        let y = 4.6 * s as f64;
        for r in 0..residues_per_strand {
            let x = 3.4 * r as f64;
            let res_seq = r as i32 + 1;
            let mut push = |name, element, p: Vec3| {
                atoms.push(Atom {
                    name,
                    res_name: "ALA",
                    chain,
                    res_seq,
                    element,
                    pos: p,
                })
            };
            push("N", "N", Vec3::new(x, y, 0.0));
            push("H", "H", Vec3::new(x, y + 1.0, 0.0));
            push("CA", "C", Vec3::new(x + 1.2, y, 0.8));
            push("CB", "C", Vec3::new(x + 1.6, y + 0.4, 2.2));
            push("C", "C", Vec3::new(x + 2.3, y, 0.0));
            push("O", "O", Vec3::new(x, y - 1.23, -0.05));
        }
    }
    atoms
}

/// Water molecules on a cubic lattice starting at `origin`.
pub fn waters(n: usize, origin: Vec3, spacing: f64) -> Vec<Atom> {
    let side = (n as f64).cbrt().ceil() as usize;
    let mut atoms = Vec::with_capacity(3 * n);
    for k in 0..n {
        let (i, j, l) = (k % side, (k / side) % side, k / (side * side));
        let o = origin + Vec3::new(i as f64, j as f64, l as f64) * spacing;
        let res_seq = k as i32 + 1;
        for (name, element, d) in [
            ("OH2", "O", Vec3::ZERO),
            ("H1", "H", Vec3::new(0.9572, 0.0, 0.0)),
            ("H2", "H", Vec3::new(-0.24, 0.927, 0.0)),
        ] {
            atoms.push(Atom {
                name,
                res_name: "HOH",
                chain: 'W',
                res_seq,
                element,
                pos: o + d,
            });
        }
    }
    atoms
}

/// Snaps coordinates to multiples of 1/8 Å, which survive both the PDB
/// three-decimal format and DCD single precision unchanged.
pub fn snap(atoms: &mut [Atom]) {
    let q = |v: f64| (v * 8.0).round() / 8.0;
    for a in atoms {
        a.pos = Vec3::new(q(a.pos.x), q(a.pos.y), q(a.pos.z));
    }
}

pub fn structure_of(atoms: &[Atom]) -> (String, Structure) {
    let pdb = to_pdb(atoms);
    let s = parse_pdb(&pdb).expect("synthetic PDB parses");
    (pdb, s)
}

/// Frames of `base` with uniform noise of amplitude `jitter` Å; frame 0 is
/// exact when `jitter` is zero.
pub fn jittered_frames(base: &[Vec3], n_frames: usize, jitter: f64, seed: u64) -> Vec<Frame> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n_frames)
        .map(|i| {
            let coords = base
                .iter()
                .map(|&p| {
                    if jitter == 0.0 {
                        p
                    } else {
                        p + Vec3::new(
                            rng.random_range(-jitter..jitter),
                            rng.random_range(-jitter..jitter),
                            rng.random_range(-jitter..jitter),
                        )
                    }
                })
                .collect();
            Frame::new(i, coords)
        })
        .collect()
}

/// DCD header whose frames are `ps_per_frame` apart.
pub fn timed_header(n_atoms: usize, n_frames: usize, ps_per_frame: f64) -> DcdHeader {
    let mut h = DcdHeader::new(n_atoms, n_frames as u32);
    h.step_interval = 5000;
    h.timestep = (ps_per_frame / 5000.0 * AKMA_PER_PS) as f32;
    h
}

pub fn write_dcd_file(path: &Path, header: &DcdHeader, frames: &[Frame]) {
    let f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    write_dcd_to(f, header, frames).unwrap();
}

/// NAMD-style log with `n` energy rows.
pub fn namd_log(n: usize) -> String {
    let mut out = String::from("Info: synthetic run\nETITLE:      TS           BOND          ANGLE      POTENTIAL         TEMP\n");
    for k in 0..n {
        let ts = 500 * k;
        let _ = writeln!(
            out,
            "ENERGY: {ts:>7} {:>14.4} {:>14.4} {:>14.4} {:>14.4}",
            100.0 + k as f64,
            200.0 - 0.5 * k as f64,
            -5000.0 + (k as f64 * 0.7).sin() * 25.0,
            300.0 + (k as f64 * 0.3).cos()
        );
    }
    out
}
