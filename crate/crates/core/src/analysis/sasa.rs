use std::collections::BTreeMap;

use rayon::prelude::*;

use super::grid::CellGrid;
use super::{AnalysisError, Result, Selection, TimeSeries};
use crate::elements::{is_hydrogen, is_known, is_polar_heavy, vdw_radius, FALLBACK_VDW_RADIUS};
use crate::geometry::Vec3;
use crate::structure_io::Frame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SasaParams {
    pub probe: f64,
    pub n_points: usize,
}

impl Default for SasaParams {
    fn default() -> Self {
        SasaParams {
            probe: 1.4,
            n_points: 960,
        }
    }
}

impl SasaParams {
    fn validate(&self) -> Result<()> {
        if !(self.probe >= 0.0) || !self.probe.is_finite() {
            return Err(AnalysisError::InvalidParameter(format!(
                "probe radius {} must be ≥ 0",
                self.probe
            )));
        }
        if self.n_points < 12 {
            return Err(AnalysisError::InvalidParameter(format!(
                "n_points {} must be ≥ 12",
                self.n_points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SasaResult {
    pub total: f64,
    /// Å² per selected atom, in selection order.
    pub per_atom: Vec<f64>,
    pub polar: f64,
    pub apolar: f64,
}

/// Golden-spiral lattice of `n` unit vectors.
pub fn sphere_points(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let y = 1.0 - (2 * k + 1) as f64 / n as f64;
            let r = (1.0 - y * y).max(0.0).sqrt();
            let (s, c) = (k as f64 * golden).sin_cos();
            Vec3::new(c * r, y, s * r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiiAssignment {
    /// Radius per selected atom, in selection order.
    pub radii: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Van der Waals radii for the selected atoms. `overrides` maps an element
/// symbol to a radius and takes precedence over the built-in table.
pub fn assign_radii(
    sel: &Selection,
    elements: &[String],
    atom_names: &[String],
    overrides: &BTreeMap<String, f64>,
) -> Result<RadiiAssignment> {
    sel.check_bounds(elements.len())?;
    let mut fallback: BTreeMap<&str, usize> = BTreeMap::new();
    let mut radii = Vec::with_capacity(sel.len());
    for &i in sel.indices() {
        let el = elements[i].as_str();
        let r = match overrides.get(el).copied().or_else(|| vdw_radius(el)) {
            Some(r) => r,
            None if is_known(el) => {
                *fallback.entry(el).or_default() += 1;
                FALLBACK_VDW_RADIUS
            }
            None => {
                return Err(AnalysisError::MissingRadius {
                    index: i,
                    name: atom_names.get(i).cloned().unwrap_or_default(),
                    element: el.to_string(),
                })
            }
        };
        radii.push(r);
    }
    let warnings = fallback
        .into_iter()
        .map(|(el, n)| format!("no radius for element {el}; using {FALLBACK_VDW_RADIUS} Å for {n} atom(s)"))
        .collect();
    Ok(RadiiAssignment { radii, warnings })
}

/// Per-atom polarity: N, O and S atoms and hydrogens bonded to them.
pub fn polar_mask(elements: &[String], bonds: &[(usize, usize)]) -> Vec<bool> {
    let mut mask: Vec<bool> = elements.iter().map(|e| is_polar_heavy(e)).collect();
    for &(a, b) in bonds {
        if is_polar_heavy(&elements[a]) && is_hydrogen(&elements[b]) {
            mask[b] = true;
        }
        if is_polar_heavy(&elements[b]) && is_hydrogen(&elements[a]) {
            mask[a] = true;
        }
    }
    mask
}

struct Prepared<'a> {
    unit: Vec<Vec3>,
    radii: &'a [f64],
    polar: &'a [bool],
    params: SasaParams,
}

fn prepare<'a>(sel: &Selection, radii: &'a [f64], polar: &'a [bool], params: SasaParams) -> Result<Prepared<'a>> {
    params.validate()?;
    if radii.len() != sel.len() || polar.len() != sel.len() {
        return Err(AnalysisError::InvalidParameter(format!(
            "{} radii and {} polarity flags for {} selected atoms",
            radii.len(),
            polar.len(),
            sel.len()
        )));
    }
    if let Some(r) = radii.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!("radius {r} must be ≥ 0")));
    }
    Ok(Prepared {
        unit: sphere_points(params.n_points),
        radii,
        polar,
        params,
    })
}

fn atom_area(i: usize, centers: &[Vec3], big_r: &[f64], grid: &CellGrid, unit: &[Vec3], scratch: &mut Vec<(f64, usize)>) -> f64 {
    let ri = big_r[i];
    if ri == 0.0 {
        return 0.0;
    }
    let ci = centers[i];
    scratch.clear();
    grid.for_each_candidate(ci, |j| {
        if j != i {
            let d2 = (centers[j] - ci).norm2();
            let reach = ri + big_r[j];
            if d2 < reach * reach {
                scratch.push((d2, j));
            }
        }
    });
    // nearest first: they occlude most points
    scratch.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut exposed = 0usize;
    let mut last = usize::MAX;
    'points: for &u in unit {
        let p = ci + u * ri;
        if last != usize::MAX {
            let j = scratch[last].1;
            if (p - centers[j]).norm2() < big_r[j] * big_r[j] {
                continue;
            }
        }
        for (k, &(_, j)) in scratch.iter().enumerate() {
            if (p - centers[j]).norm2() < big_r[j] * big_r[j] {
                last = k;
                continue 'points;
            }
        }
        exposed += 1;
    }
    4.0 * std::f64::consts::PI * ri * ri * (exposed as f64 / unit.len() as f64)
}

fn frame_kernel(coords: &[Vec3], sel: &Selection, prep: &Prepared, parallel_atoms: bool) -> SasaResult {
    let centers = sel.gather(coords);
    let big_r: Vec<f64> = prep.radii.iter().map(|r| r + prep.params.probe).collect();
    let cell = big_r.iter().fold(0.0f64, |m, &r| m.max(2.0 * r)).max(1e-6);
    let grid = CellGrid::new(&centers, cell);
    let per_atom: Vec<f64> = if parallel_atoms {
        (0..centers.len())
            .into_par_iter()
            .map_init(Vec::new, |scratch, i| atom_area(i, &centers, &big_r, &grid, &prep.unit, scratch))
            .collect()
    } else {
        let mut scratch = Vec::new();
        (0..centers.len())
            .map(|i| atom_area(i, &centers, &big_r, &grid, &prep.unit, &mut scratch))
            .collect()
    };
    let mut polar = 0.0;
    let mut apolar = 0.0;
    for (&a, &is_polar) in per_atom.iter().zip(prep.polar) {
        if is_polar {
            polar += a;
        } else {
            apolar += a;
        }
    }
    SasaResult {
        total: per_atom.iter().sum(),
        per_atom,
        polar,
        apolar,
    }
}

/// Shrake–Rupley SASA of the selected atoms, which are treated as the whole
/// system. `radii` and `polar` are given per selected atom.
pub fn sasa_frame(
    frame: &Frame,
    sel: &Selection,
    radii: &[f64],
    polar: &[bool],
    params: SasaParams,
) -> Result<SasaResult> {
    sel.check_bounds(frame.coords.len())?;
    let prep = prepare(sel, radii, polar, params)?;
    Ok(frame_kernel(&frame.coords, sel, &prep, true))
}

pub fn sasa_per_frame(
    frames: &[Frame],
    sel: &Selection,
    radii: &[f64],
    polar: &[bool],
    params: SasaParams,
) -> Result<Vec<SasaResult>> {
    for f in frames {
        sel.check_bounds(f.coords.len())?;
    }
    let prep = prepare(sel, radii, polar, params)?;
    Ok(frames
        .par_iter()
        .map(|f| frame_kernel(&f.coords, sel, &prep, false))
        .collect())
}

/// Total SASA per frame.
pub fn sasa_series(
    frames: &[Frame],
    sel: &Selection,
    radii: &[f64],
    polar: &[bool],
    params: SasaParams,
) -> Result<TimeSeries> {
    let results = sasa_per_frame(frames, sel, radii, polar, params)?;
    Ok(TimeSeries::new(
        "SASA",
        "Å²",
        frames.iter().zip(results).map(|(f, r)| (f.index, r.total)).collect(),
    ))
}
