//! Element symbols, standard atomic weights and van der Waals radii.

/// Sentinel symbol for atoms whose element could not be determined.
pub const UNKNOWN_ELEMENT: &str = "X";

/// Fallback radius (Å) for recognized elements missing from [`vdw_radius`].
pub const FALLBACK_VDW_RADIUS: f64 = 1.70;

// IUPAC 2021 standard atomic weights (abridged/conventional values), amu.
const ATOMIC_WEIGHTS: &[(&str, f64)] = &[
    ("H", 1.008),
    ("He", 4.0026),
    ("Li", 6.94),
    ("Be", 9.0122),
    ("B", 10.81),
    ("C", 12.011),
    ("N", 14.007),
    ("O", 15.999),
    ("F", 18.998),
    ("Ne", 20.180),
    ("Na", 22.990),
    ("Mg", 24.305),
    ("Al", 26.982),
    ("Si", 28.085),
    ("P", 30.974),
    ("S", 32.06),
    ("Cl", 35.45),
    ("Ar", 39.95),
    ("K", 39.098),
    ("Ca", 40.078),
    ("Sc", 44.956),
    ("Ti", 47.867),
    ("V", 50.942),
    ("Cr", 51.996),
    ("Mn", 54.938),
    ("Fe", 55.845),
    ("Co", 58.933),
    ("Ni", 58.693),
    ("Cu", 63.546),
    ("Zn", 65.38),
    ("Ga", 69.723),
    ("Ge", 72.630),
    ("As", 74.922),
    ("Se", 78.971),
    ("Br", 79.904),
    ("Kr", 83.798),
    ("Rb", 85.468),
    ("Sr", 87.62),
    ("Y", 88.906),
    ("Zr", 91.222),
    ("Nb", 92.906),
    ("Mo", 95.95),
    ("Ru", 101.07),
    ("Rh", 102.91),
    ("Pd", 106.42),
    ("Ag", 107.87),
    ("Cd", 112.41),
    ("In", 114.82),
    ("Sn", 118.71),
    ("Sb", 121.76),
    ("Te", 127.60),
    ("I", 126.90),
    ("Xe", 131.29),
    ("Cs", 132.91),
    ("Ba", 137.33),
    ("La", 138.91),
    ("Ce", 140.12),
    ("Pr", 140.91),
    ("Nd", 144.24),
    ("Sm", 150.36),
    ("Eu", 151.96),
    ("Gd", 157.25),
    ("Tb", 158.93),
    ("Dy", 162.50),
    ("Ho", 164.93),
    ("Er", 167.26),
    ("Tm", 168.93),
    ("Yb", 173.05),
    ("Lu", 174.97),
    ("Hf", 178.49),
    ("Ta", 180.95),
    ("W", 183.84),
    ("Re", 186.21),
    ("Os", 190.23),
    ("Ir", 192.22),
    ("Pt", 195.08),
    ("Au", 196.97),
    ("Hg", 200.59),
    ("Tl", 204.38),
    ("Pb", 207.2),
    ("Bi", 208.98),
    ("Th", 232.04),
    ("U", 238.03),
];

/// Normalizes a raw symbol ("FE", " c", "Cl") to canonical capitalization.
///
/// Returns `None` if the result is not a recognized element.
pub fn normalize_symbol(raw: &str) -> Option<&'static str> {
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed.len() > 2 {
        return None;
    }
    ATOMIC_WEIGHTS
        .iter()
        .find(|(sym, _)| sym.eq_ignore_ascii_case(trimmed))
        .map(|(sym, _)| *sym)
}

pub fn is_known(symbol: &str) -> bool {
    ATOMIC_WEIGHTS.iter().any(|(sym, _)| *sym == symbol)
}

/// Standard atomic weight in amu, `None` for unknown symbols.
pub fn atomic_weight(symbol: &str) -> Option<f64> {
    ATOMIC_WEIGHTS
        .iter()
        .find(|(sym, _)| *sym == symbol)
        .map(|(_, w)| *w)
}

/// Bondi-style van der Waals radius in Å for the elements that dominate proteins.
pub fn vdw_radius(symbol: &str) -> Option<f64> {
    match symbol {
        "H" => Some(1.20),
        "C" => Some(1.70),
        "N" => Some(1.55),
        "O" => Some(1.52),
        "S" => Some(1.80),
        "P" => Some(1.80),
        _ => None,
    }
}

/// N, O and S: the elements that can act as hydrogen-bond donors/acceptors
/// and that count as polar surface.
pub fn is_polar_heavy(symbol: &str) -> bool {
    matches!(symbol, "N" | "O" | "S")
}

pub fn is_hydrogen(symbol: &str) -> bool {
    symbol == "H"
}
