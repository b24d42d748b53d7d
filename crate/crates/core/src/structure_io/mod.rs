//! Readers and writers for the file formats the pipeline touches:
//! PDB structures, PSF topologies, DCD trajectories and NAMD energy logs,
//! plus a caching RCSB download client.

mod dcd;
mod fetch;
mod namd_log;
mod pdb;
mod psf;

use std::ops::Range;

use thiserror::Error;

use crate::geometry::{UnitCell, Vec3};

pub use dcd::{open_dcd, read_dcd, write_dcd, write_dcd_to, DcdHeader, DcdReader, Endianness};
pub use fetch::{
    archive_url, cache_path, fetch_structure, validate_pdb_id, FetchError, HttpResponse, Transport,
    UreqTransport,
};
pub use namd_log::{parse_namd_log, EnergyRow, EnergyTable, RowError};
pub use pdb::{parse_pdb, write_pdb};
pub use psf::{guess_psf_element, parse_psf, write_psf};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("structure contains no atoms")]
    EmptyStructure,
    #[error("malformed file structure: {0}")]
    Structural(String),
    #[error("corrupt record at byte offset {offset}: {message}")]
    CorruptRecord { offset: u64, message: String },
    #[error("trajectory truncated after {frames_read} complete frame(s) (byte offset {offset})")]
    Truncated { frames_read: usize, offset: u64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// One ATOM/HETATM record.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomRecord {
    pub serial: u32,
    pub name: String,
    pub alt_loc: Option<char>,
    pub res_name: String,
    pub chain_id: char,
    pub res_seq: i32,
    pub insertion_code: Option<char>,
    pub position: Vec3,
    pub occupancy: f64,
    pub b_factor: f64,
    pub element: String,
    pub mass: f64,
    pub is_hetero: bool,
}

/// Contiguous run of atoms sharing (chain, residue number, insertion code).
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueSpan {
    pub chain_id: char,
    pub res_seq: i32,
    pub insertion_code: Option<char>,
    pub res_name: String,
    pub atoms: Range<usize>,
}

impl ResidueSpan {
    /// `A:12` or `A:12B` style identifier.
    pub fn label(&self) -> String {
        let chain = if self.chain_id == ' ' { '_' } else { self.chain_id };
        match self.insertion_code {
            Some(code) => format!("{chain}:{}{code}", self.res_seq),
            None => format!("{chain}:{}", self.res_seq),
        }
    }
}

/// Alternate location record skipped by the PDB reader.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedAltLoc {
    pub line: usize,
    pub chain_id: char,
    pub res_seq: i32,
    pub res_name: String,
    pub atom_name: String,
    pub alt_loc: char,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Structure {
    pub atoms: Vec<AtomRecord>,
    pub residues: Vec<ResidueSpan>,
    pub source_label: String,
    pub dropped_alt_locs: Vec<DroppedAltLoc>,
}

impl Structure {
    /// Builds the residue index over `atoms`, which must already be in file order.
    pub fn from_atoms(atoms: Vec<AtomRecord>, source_label: impl Into<String>) -> Self {
        let mut residues: Vec<ResidueSpan> = Vec::new();
        for (i, atom) in atoms.iter().enumerate() {
            let same = residues.last().is_some_and(|r| {
                r.chain_id == atom.chain_id
                    && r.res_seq == atom.res_seq
                    && r.insertion_code == atom.insertion_code
                    && r.atoms.end == i
            });
            if same {
                residues.last_mut().unwrap().atoms.end = i + 1;
            } else {
                residues.push(ResidueSpan {
                    chain_id: atom.chain_id,
                    res_seq: atom.res_seq,
                    insertion_code: atom.insertion_code,
                    res_name: atom.res_name.clone(),
                    atoms: i..i + 1,
                });
            }
        }
        Structure {
            atoms,
            residues,
            source_label: source_label.into(),
            dropped_alt_locs: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.atoms.iter().map(|a| a.position).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.mass).collect()
    }

    pub fn elements(&self) -> Vec<String> {
        self.atoms.iter().map(|a| a.element.clone()).collect()
    }

    /// Residue index of every atom.
    pub fn residue_of_atom(&self) -> Vec<usize> {
        let mut out = vec![0; self.atoms.len()];
        for (r, span) in self.residues.iter().enumerate() {
            for slot in &mut out[span.atoms.clone()] {
                *slot = r;
            }
        }
        out
    }

    /// Index of the named atom inside residue `r`.
    pub fn find_in_residue(&self, r: usize, name: &str) -> Option<usize> {
        self.residues[r]
            .atoms
            .clone()
            .find(|&i| self.atoms[i].name.trim() == name)
    }
}

/// Bonded topology from a PSF file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    pub atom_names: Vec<String>,
    pub res_names: Vec<String>,
    pub res_ids: Vec<String>,
    pub segids: Vec<String>,
    pub elements: Vec<String>,
    pub masses: Vec<f64>,
    pub charges: Vec<f64>,
    pub bonds: Vec<(usize, usize)>,
    /// (donor heavy atom, bonded hydrogen), sorted.
    pub donors: Vec<(usize, usize)>,
    /// N, O and S atoms, ascending.
    pub acceptors: Vec<usize>,
}

impl Topology {
    pub fn n_atoms(&self) -> usize {
        self.masses.len()
    }

    /// Recomputes `donors` and `acceptors` from `elements` and `bonds`.
    pub fn classify_hbond_sites(&mut self) {
        use crate::elements::{is_hydrogen, is_polar_heavy};
        let mut donors: Vec<(usize, usize)> = Vec::new();
        for &(i, j) in &self.bonds {
            let (ei, ej) = (self.elements[i].as_str(), self.elements[j].as_str());
            if is_polar_heavy(ei) && is_hydrogen(ej) {
                donors.push((i, j));
            } else if is_polar_heavy(ej) && is_hydrogen(ei) {
                donors.push((j, i));
            }
        }
        donors.sort_unstable();
        donors.dedup();
        self.donors = donors;
        self.acceptors = (0..self.elements.len())
            .filter(|&i| is_polar_heavy(&self.elements[i]))
            .collect();
    }

    /// Topology guessed from a structure when no PSF is available: each
    /// hydrogen is bonded to its nearest heavy atom within 1.3 Å.
    pub fn from_structure_by_distance(s: &Structure) -> Topology {
        let heavy: Vec<usize> = (0..s.len()).filter(|&i| s.atoms[i].element != "H").collect();
        let mut bonds = Vec::new();
        for (h, atom) in s.atoms.iter().enumerate() {
            if atom.element != "H" {
                continue;
            }
            let nearest = heavy
                .iter()
                .map(|&j| (j, (s.atoms[j].position - atom.position).norm2()))
                .filter(|&(_, d2)| d2 <= 1.3 * 1.3)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, _)) = nearest {
                bonds.push((j.min(h), j.max(h)));
            }
        }
        let mut topo = Topology {
            atom_names: s.atoms.iter().map(|a| a.name.trim().to_string()).collect(),
            res_names: s.atoms.iter().map(|a| a.res_name.clone()).collect(),
            res_ids: s.atoms.iter().map(|a| a.res_seq.to_string()).collect(),
            segids: s.atoms.iter().map(|a| a.chain_id.to_string()).collect(),
            elements: s.elements(),
            masses: s.masses(),
            charges: vec![0.0; s.len()],
            bonds,
            donors: Vec::new(),
            acceptors: Vec::new(),
        };
        topo.classify_hbond_sites();
        topo
    }
}

/// One trajectory snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub coords: Vec<Vec3>,
    pub unit_cell: Option<UnitCell>,
}

impl Frame {
    pub fn new(index: usize, coords: Vec<Vec3>) -> Self {
        Frame {
            index,
            coords,
            unit_cell: None,
        }
    }
}
