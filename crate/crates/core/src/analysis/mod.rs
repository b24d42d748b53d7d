//! Trajectory analyses: RMSD, RMSF, radius of gyration, SASA, hydrogen
//! bonds, free-energy surfaces and RMSD drift screening.
//!
//! Series operations evaluate frames in parallel and always reduce in frame
//! order, so results do not depend on the number of worker threads.

mod drift;
mod fes;
pub mod grid;
mod hbonds;
mod sasa;
mod structural;

use thiserror::Error;

use crate::geometry::{GeometryError, Vec3};
use crate::residues::is_amino_acid;
use crate::structure_io::Structure;

pub use drift::{drift_check, DriftParams, DriftVerdict};
pub use fes::{free_energy_surface, FesGrid};
pub use hbonds::{
    detect_hbonds, hbond_autocorrelation, hbond_count_series, hbond_persistence, hbond_timeline,
    HBondKey, HBondParams, HBondRecord, HBondTimeline,
};
pub use sasa::{
    assign_radii, polar_mask, sasa_frame, sasa_per_frame, sasa_series, sphere_points,
    RadiiAssignment, SasaParams, SasaResult,
};
pub use structural::{
    average_structure, radius_of_gyration, radius_of_gyration_series, rmsd_series, rmsf,
    rmsf_to_bfactor, AverageStructure, RmsfOptions,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("atom index {index} is outside a system of {n_atoms} atoms")]
    SelectionOutOfRange { index: usize, n_atoms: usize },
    #[error("empty selection")]
    EmptySelection,
    #[error("trajectory has no frames")]
    EmptyTrajectory,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no van der Waals radius for atom {index} ({name}, element {element})")]
    MissingRadius {
        index: usize,
        name: String,
        element: String,
    },
    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("series mismatch: {0}")]
    SeriesMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Sorted, unique atom indices plus an optional residue id per selected atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    atom_indices: Vec<usize>,
    label: String,
    residue_of: Option<Vec<usize>>,
}

impl Selection {
    /// Sorts and de-duplicates `indices`; every index must be `< n_atoms`.
    pub fn new(mut indices: Vec<usize>, label: impl Into<String>, n_atoms: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_atoms) {
            return Err(AnalysisError::SelectionOutOfRange { index: bad, n_atoms });
        }
        if indices.is_empty() {
            return Err(AnalysisError::EmptySelection);
        }
        Ok(Selection {
            atom_indices: indices,
            label: label.into(),
            residue_of: None,
        })
    }

    pub fn all(n_atoms: usize) -> Result<Self> {
        Self::new((0..n_atoms).collect(), "all", n_atoms)
    }

    /// Atoms of `structure` matching `pred`, with residue ids attached.
    pub fn from_structure(
        structure: &Structure,
        label: impl Into<String>,
        pred: impl Fn(&Structure, usize) -> bool,
    ) -> Result<Self> {
        let indices: Vec<usize> = (0..structure.len()).filter(|&i| pred(structure, i)).collect();
        let mut sel = Self::new(indices, label, structure.len())?;
        let residue = structure.residue_of_atom();
        sel.residue_of = Some(sel.atom_indices.iter().map(|&i| residue[i]).collect());
        Ok(sel)
    }

    /// `CA` atoms of amino-acid residues.
    pub fn alpha_carbons(structure: &Structure) -> Result<Self> {
        Self::from_structure(structure, "protein-CA", |s, i| {
            let a = &s.atoms[i];
            a.name.trim() == "CA" && is_amino_acid(&a.res_name)
        })
    }

    /// Every atom of an amino-acid residue.
    pub fn protein(structure: &Structure) -> Result<Self> {
        Self::from_structure(structure, "protein", |s, i| is_amino_acid(&s.atoms[i].res_name))
    }

    pub fn indices(&self) -> &[usize] {
        &self.atom_indices
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.atom_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atom_indices.is_empty()
    }

    pub fn residue_of(&self) -> Option<&[usize]> {
        self.residue_of.as_deref()
    }

    pub fn with_residues(mut self, residue_of: Vec<usize>) -> Result<Self> {
        if residue_of.len() != self.atom_indices.len() {
            return Err(AnalysisError::InvalidParameter(format!(
                "{} residue ids for {} selected atoms",
                residue_of.len(),
                self.atom_indices.len()
            )));
        }
        self.residue_of = Some(residue_of);
        Ok(self)
    }

    pub(crate) fn check_bounds(&self, n_atoms: usize) -> Result<()> {
        match self.atom_indices.last() {
            Some(&last) if last >= n_atoms => Err(AnalysisError::SelectionOutOfRange {
                index: last,
                n_atoms,
            }),
            _ => Ok(()),
        }
    }

    /// Selected coordinates in selection order.
    pub fn gather(&self, coords: &[Vec3]) -> Vec<Vec3> {
        self.atom_indices.iter().map(|&i| coords[i]).collect()
    }

    pub fn gather_values(&self, values: &[f64]) -> Vec<f64> {
        self.atom_indices.iter().map(|&i| values[i]).collect()
    }
}

/// Per-frame scalar series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub name: String,
    pub unit: String,
    pub points: Vec<(usize, f64)>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, unit: impl Into<String>, points: Vec<(usize, f64)>) -> Self {
        TimeSeries {
            name: name.into(),
            unit: unit.into(),
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.points.is_empty())
            .then(|| self.points.iter().map(|p| p.1).sum::<f64>() / self.points.len() as f64)
    }
}

/// Per-atom values over a selection plus a per-residue mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PerAtomSeries {
    pub name: String,
    pub unit: String,
    pub atom_indices: Vec<usize>,
    pub values: Vec<f64>,
    /// (residue index, mean over that residue's selected atoms), ascending.
    pub residue_rollup: Vec<(usize, f64)>,
}

pub(crate) fn residue_rollup(sel: &Selection, values: &[f64]) -> Vec<(usize, f64)> {
    let Some(residues) = sel.residue_of() else {
        return Vec::new();
    };
    let mut acc: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for (&r, &v) in residues.iter().zip(values) {
        let e = acc.entry(r).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter().map(|(r, (s, n))| (r, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_sorts_and_checks() {
        let s = Selection::new(vec![3, 1, 3], "x", 4).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
        assert!(matches!(
            Selection::new(vec![4], "x", 4),
            Err(AnalysisError::SelectionOutOfRange { index: 4, .. })
        ));
        assert!(Selection::new(vec![], "x", 4).is_err());
    }
}
