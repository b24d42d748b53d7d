use rayon::prelude::*;

use super::{residue_rollup, AnalysisError, PerAtomSeries, Result, Selection, TimeSeries};
use crate::geometry::{center_of_mass, kabsch, rmsd_raw, Vec3};
use crate::structure_io::Frame;

fn check_frames(frames: &[Frame], sel: &Selection) -> Result<()> {
    if frames.is_empty() {
        return Err(AnalysisError::EmptyTrajectory);
    }
    for f in frames {
        sel.check_bounds(f.coords.len())?;
    }
    if frames.windows(2).any(|w| w[1].index <= w[0].index) {
        return Err(AnalysisError::InvalidParameter(
            "frame indices must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Selected coordinates of `coords` fitted onto `target` (same length).
fn fit_onto(coords: &[Vec3], target: &[Vec3]) -> Result<Vec<Vec3>> {
    let fit = kabsch(coords, target, None)?;
    Ok(fit.apply_all(coords))
}

/// RMSD of each frame's selection against the reference selection, after an
/// optional optimal superposition.
pub fn rmsd_series(
    frames: &[Frame],
    reference: &[Vec3],
    sel: &Selection,
    superpose: bool,
) -> Result<TimeSeries> {
    check_frames(frames, sel)?;
    sel.check_bounds(reference.len())?;
    let target = sel.gather(reference);
    let points = frames
        .par_iter()
        .map(|f| {
            let mobile = sel.gather(&f.coords);
            let value = if superpose {
                rmsd_raw(&fit_onto(&mobile, &target)?, &target, None)?
            } else {
                rmsd_raw(&mobile, &target, None)?
            };
            Ok((f.index, value))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries::new("RMSD", "Å", points))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageStructure {
    /// Mean selected coordinates, in selection order.
    pub coords: Vec<Vec3>,
    pub iterations: usize,
    pub converged: bool,
}

fn mean_of(sets: &[Vec<Vec3>]) -> Vec<Vec3> {
    let n = sets[0].len();
    let mut acc = vec![Vec3::ZERO; n];
    for set in sets {
        for (a, &p) in acc.iter_mut().zip(set) {
            *a += p;
        }
    }
    let k = sets.len() as f64;
    acc.into_iter().map(|p| p / k).collect()
}

/// Iterative mean structure: frames are fitted to the running mean and
/// re-averaged until the mean moves by less than `tol` (RMSD, Å).
pub fn average_structure(
    frames: &[Frame],
    sel: &Selection,
    max_iter: usize,
    tol: f64,
) -> Result<AverageStructure> {
    check_frames(frames, sel)?;
    if max_iter == 0 {
        return Err(AnalysisError::InvalidParameter("max_iter must be ≥ 1".into()));
    }
    let selected: Vec<Vec<Vec3>> = frames.par_iter().map(|f| sel.gather(&f.coords)).collect();
    let mut mean = selected[0].clone();
    for iteration in 1..=max_iter {
        let aligned = selected
            .par_iter()
            .map(|c| fit_onto(c, &mean))
            .collect::<Result<Vec<_>>>()?;
        let next = mean_of(&aligned);
        let shift = rmsd_raw(&next, &mean, None)?;
        mean = next;
        if shift < tol {
            return Ok(AverageStructure {
                coords: mean,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Ok(AverageStructure {
        coords: mean,
        iterations: max_iter,
        converged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsfOptions {
    /// Fit every frame onto the iterative average before measuring.
    pub superpose: bool,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for RmsfOptions {
    fn default() -> Self {
        RmsfOptions {
            superpose: true,
            max_iter: 50,
            tol: 1e-6,
        }
    }
}

/// Per-atom root-mean-square fluctuation about the time-averaged position.
pub fn rmsf(frames: &[Frame], sel: &Selection, opts: RmsfOptions) -> Result<PerAtomSeries> {
    check_frames(frames, sel)?;
    if frames.len() < 2 {
        return Err(AnalysisError::Degenerate(
            "RMSF needs at least two frames".into(),
        ));
    }
    let samples: Vec<Vec<Vec3>> = if opts.superpose {
        let avg = average_structure(frames, sel, opts.max_iter, opts.tol)?;
        frames
            .par_iter()
            .map(|f| fit_onto(&sel.gather(&f.coords), &avg.coords))
            .collect::<Result<Vec<_>>>()?
    } else {
        frames.par_iter().map(|f| sel.gather(&f.coords)).collect()
    };
    // two-pass: mean first, then squared deviations
    let mean = mean_of(&samples);
    let mut msd = vec![0.0; sel.len()];
    for s in &samples {
        for ((acc, &p), &m) in msd.iter_mut().zip(s).zip(&mean) {
            *acc += (p - m).norm2();
        }
    }
    let n = samples.len() as f64;
    let values: Vec<f64> = msd.into_iter().map(|v| (v / n).sqrt()).collect();
    Ok(PerAtomSeries {
        name: "RMSF".into(),
        unit: "Å".into(),
        atom_indices: sel.indices().to_vec(),
        residue_rollup: residue_rollup(sel, &values),
        values,
    })
}

/// Isotropic B-factor equivalent, B = (8π²/3)·RMSF².
pub fn rmsf_to_bfactor(rmsf: &PerAtomSeries) -> Result<PerAtomSeries> {
    if let Some(v) = rmsf.values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!(
            "RMSF value {v} is not a finite non-negative number"
        )));
    }
    let k = 8.0 * std::f64::consts::PI * std::f64::consts::PI / 3.0;
    let b = |x: f64| k * x * x;
    Ok(PerAtomSeries {
        name: "B-factor".into(),
        unit: "Å²".into(),
        atom_indices: rmsf.atom_indices.clone(),
        values: rmsf.values.iter().map(|&x| b(x)).collect(),
        residue_rollup: rmsf.residue_rollup.iter().map(|&(r, x)| (r, b(x))).collect(),
    })
}

/// Mass-weighted radius of gyration of one coordinate set.
pub fn radius_of_gyration(coords: &[Vec3], masses: &[f64]) -> Result<f64> {
    let com = center_of_mass(coords, masses)?;
    let total: f64 = masses.iter().sum();
    let s: f64 = coords
        .iter()
        .zip(masses)
        .map(|(&p, &m)| m * (p - com).norm2())
        .sum();
    Ok((s / total).sqrt())
}

/// `masses` is indexed by atom, like the frame coordinates.
pub fn radius_of_gyration_series(
    frames: &[Frame],
    sel: &Selection,
    masses: &[f64],
) -> Result<TimeSeries> {
    check_frames(frames, sel)?;
    sel.check_bounds(masses.len())?;
    let m = sel.gather_values(masses);
    let points = frames
        .par_iter()
        .map(|f| Ok((f.index, radius_of_gyration(&sel.gather(&f.coords), &m)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries::new("Rg", "Å", points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames_of(sets: Vec<Vec<Vec3>>) -> Vec<Frame> {
        sets.into_iter().enumerate().map(|(i, c)| Frame::new(i, c)).collect()
    }

    fn base() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.5, 0.2, -0.3),
            Vec3::new(2.1, 1.4, 0.5),
            Vec3::new(-0.7, 2.2, 1.1),
        ]
    }

    #[test]
    fn rg_examples() {
        assert_eq!(radius_of_gyration(&[Vec3::new(1.0, 2.0, 3.0)], &[5.0]).unwrap(), 0.0);
        let d = radius_of_gyration(&[Vec3::new(-2.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)], &[1.0, 1.0]).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        let r = radius_of_gyration(&[Vec3::ZERO, Vec3::new(4.0, 0.0, 0.0)], &[1.0, 3.0]).unwrap();
        assert!((r - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rmsd_of_copies_is_zero() {
        let b = base();
        let frames = frames_of(vec![b.clone(), b.clone()]);
        let sel = Selection::all(4).unwrap();
        for sup in [true, false] {
            let s = rmsd_series(&frames, &b, &sel, sup).unwrap();
            assert!(s.values().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn average_of_identical_frames() {
        let b = base();
        let frames = frames_of(vec![b.clone(); 3]);
        let avg = average_structure(&frames, &Selection::all(4).unwrap(), 10, 1e-9).unwrap();
        assert_eq!(avg.iterations, 1);
        for (p, q) in avg.coords.iter().zip(&b) {
            assert!((*p - *q).norm() < 1e-12);
        }
    }

    #[test]
    fn oscillating_atom_without_fit() {
        let b = base();
        let d = 0.8;
        let mut plus = b.clone();
        let mut minus = b.clone();
        plus[2].x += d;
        minus[2].x -= d;
        let frames = frames_of(vec![plus, minus]);
        let opts = RmsfOptions { superpose: false, ..Default::default() };
        let r = rmsf(&frames, &Selection::all(4).unwrap(), opts).unwrap();
        for (i, v) in r.values.iter().enumerate() {
            let want = if i == 2 { d } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "{i}: {v}");
        }
    }

    #[test]
    fn rmsf_single_frame_is_degenerate() {
        let frames = frames_of(vec![base()]);
        assert!(matches!(
            rmsf(&frames, &Selection::all(4).unwrap(), RmsfOptions::default()),
            Err(AnalysisError::Degenerate(_))
        ));
    }

    #[test]
    fn bfactor_constant() {
        let s = PerAtomSeries {
            name: "RMSF".into(),
            unit: "Å".into(),
            atom_indices: vec![0, 1, 2],
            values: vec![0.0, 1.0, 2.0],
            residue_rollup: vec![],
        };
        let b = rmsf_to_bfactor(&s).unwrap();
        assert_eq!(b.values[0], 0.0);
        assert!((b.values[1] - 26.318945069614).abs() < 1e-9);
        assert!((b.values[2] - 4.0 * b.values[1]).abs() < 1e-12);
    }
}
