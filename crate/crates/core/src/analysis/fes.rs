use super::{AnalysisError, Result, TimeSeries};

/// Rg × RMSD free-energy surface; cell `[i][j]` is Rg bin `i`, RMSD bin `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FesGrid {
    pub rg_edges: Vec<f64>,
    pub rmsd_edges: Vec<f64>,
    pub counts: Vec<Vec<usize>>,
    /// −ln(p) in kT, shifted so the lowest occupied cell is 0; `None` where empty.
    pub free_energy: Vec<Vec<Option<f64>>>,
    pub occupied_mask: Vec<Vec<bool>>,
}

fn edges(values: &[f64], n_bins: usize, what: &str) -> Result<(f64, f64, Vec<f64>)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(AnalysisError::InvalidParameter(format!("{what} series has non-finite values")));
    }
    if hi <= lo {
        return Err(AnalysisError::Degenerate(format!(
            "{what} series is constant ({lo}); histogram range is zero"
        )));
    }
    let w = (hi - lo) / n_bins as f64;
    let mut e: Vec<f64> = (0..=n_bins).map(|k| lo + w * k as f64).collect();
    e[n_bins] = hi;
    Ok((lo, w, e))
}

fn bin(x: f64, lo: f64, w: f64, n: usize) -> usize {
    (((x - lo) / w).floor() as usize).min(n - 1)
}

/// Equal-width 2D histogram over the data ranges (upper edge inclusive).
pub fn free_energy_surface(rg: &TimeSeries, rmsd: &TimeSeries, n_bins: usize) -> Result<FesGrid> {
    if n_bins < 2 {
        return Err(AnalysisError::InvalidParameter(format!("n_bins {n_bins} must be ≥ 2")));
    }
    if rg.indices() != rmsd.indices() {
        return Err(AnalysisError::SeriesMismatch(
            "Rg and RMSD series have different frame indices".into(),
        ));
    }
    if rg.is_empty() {
        return Err(AnalysisError::InsufficientData { needed: 1, got: 0 });
    }
    let (rv, mv) = (rg.values(), rmsd.values());
    let (rlo, rw, rg_edges) = edges(&rv, n_bins, "Rg")?;
    let (mlo, mw, rmsd_edges) = edges(&mv, n_bins, "RMSD")?;
    let mut counts = vec![vec![0usize; n_bins]; n_bins];
    for (&r, &m) in rv.iter().zip(&mv) {
        counts[bin(r, rlo, rw, n_bins)][bin(m, mlo, mw, n_bins)] += 1;
    }
    let cmax = counts.iter().flatten().copied().max().unwrap_or(0) as f64;
    let free_energy = counts
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| (c > 0).then(|| (cmax / c as f64).ln()))
                .collect()
        })
        .collect();
    let occupied_mask = counts.iter().map(|row| row.iter().map(|&c| c > 0).collect()).collect();
    Ok(FesGrid {
        rg_edges,
        rmsd_edges,
        counts,
        free_energy,
        occupied_mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new("x", "Å", v.iter().copied().enumerate().collect())
    }

    #[test]
    fn three_to_one() {
        let rg = ts(&[1.0, 1.0, 1.0, 2.0]);
        let rmsd = ts(&[0.5, 0.5, 0.5, 3.0]);
        let g = free_energy_surface(&rg, &rmsd, 2).unwrap();
        assert_eq!(g.counts, vec![vec![3, 0], vec![0, 1]]);
        assert_eq!(g.free_energy[0][0], Some(0.0));
        assert!((g.free_energy[1][1].unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(g.free_energy[0][1], None);
        assert!(!g.occupied_mask[1][0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            free_energy_surface(&ts(&[1.0, 1.0]), &ts(&[0.0, 1.0]), 4),
            Err(AnalysisError::Degenerate(_))
        ));
        let mut other = ts(&[0.0, 1.0]);
        other.points[1].0 = 5;
        assert!(matches!(
            free_energy_surface(&ts(&[0.0, 1.0]), &other, 4),
            Err(AnalysisError::SeriesMismatch(_))
        ));
    }
}
