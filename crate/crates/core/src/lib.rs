//! Deterministic core of a protein MD preparation and analysis pipeline:
//! file formats, superposition kernels, trajectory analyses, job-spec
//! validation, NAMD input generation and report output.

pub mod analysis;
pub mod elements;
pub mod geometry;
pub mod jobspec;
pub mod namd_gen;
pub mod pipeline;
pub mod report;
pub mod residues;
pub mod structure_io;

pub use analysis::{PerAtomSeries, Selection, TimeSeries};
pub use geometry::{UnitCell, Vec3};
pub use jobspec::{JobSpec, ValidationReport};
pub use structure_io::{AtomRecord, Frame, Structure, Topology};
