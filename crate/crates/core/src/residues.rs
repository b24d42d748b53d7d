//! Residue-name vocabularies.

/// The 20 canonical amino acids.
pub const CANONICAL_AMINO_ACIDS: [&str; 20] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
];

// Protonation/tautomer names written by CHARMM and AMBER tooling.
const AMINO_ACID_VARIANTS: [&str; 10] = [
    "HSD", "HSE", "HSP", "HID", "HIE", "HIP", "CYX", "ASH", "GLH", "LYN",
];

const WATERS: [&str; 3] = ["HOH", "TIP3", "WAT"];

/// Ions accepted without a nonstandard-residue finding.
pub const STANDARD_IONS: [&str; 6] = ["NA", "CL", "K", "MG", "CA", "ZN"];

pub fn is_canonical_amino_acid(res_name: &str) -> bool {
    CANONICAL_AMINO_ACIDS.contains(&res_name)
}

/// Canonical amino acids plus common protonation-state names.
pub fn is_amino_acid(res_name: &str) -> bool {
    is_canonical_amino_acid(res_name) || AMINO_ACID_VARIANTS.contains(&res_name)
}

pub fn is_water(res_name: &str) -> bool {
    WATERS.contains(&res_name)
}

/// Residues the preflight check accepts silently: canonical amino acids,
/// HOH/TIP3 waters and the common ions.
pub fn is_whitelisted(res_name: &str) -> bool {
    is_canonical_amino_acid(res_name)
        || res_name == "HOH"
        || res_name == "TIP3"
        || STANDARD_IONS.contains(&res_name)
}
