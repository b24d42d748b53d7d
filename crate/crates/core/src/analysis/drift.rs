use super::{AnalysisError, Result, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    /// Trailing fraction of the series that is fitted.
    pub window_fraction: f64,
    /// Å/ns
    pub slope_tol: f64,
    /// Å
    pub level_tol: f64,
}

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams {
            window_fraction: 0.5,
            slope_tol: 2.0,
            level_tol: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftVerdict {
    pub atypical: bool,
    /// Least-squares slope over the window, Å/ns.
    pub slope: f64,
    /// Mean RMSD over the window, Å.
    pub mean_level: f64,
    pub window_points: usize,
    pub reasons: Vec<String>,
}

pub const MIN_DRIFT_POINTS: usize = 10;

/// Flags an RMSD series whose tail keeps climbing or sits too high.
/// Frame `i` is placed at `i · ns_per_frame` nanoseconds.
pub fn drift_check(rmsd: &TimeSeries, ns_per_frame: f64, params: DriftParams) -> Result<DriftVerdict> {
    let n = rmsd.len();
    if n < MIN_DRIFT_POINTS {
        return Err(AnalysisError::InsufficientData {
            needed: MIN_DRIFT_POINTS,
            got: n,
        });
    }
    if !(ns_per_frame > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "ns_per_frame {ns_per_frame} must be positive"
        )));
    }
    if !(params.window_fraction > 0.0 && params.window_fraction <= 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "window_fraction {} must lie in (0, 1]",
            params.window_fraction
        )));
    }
    let w = ((params.window_fraction * n as f64).ceil() as usize).clamp(2, n);
    let tail = &rmsd.points[n - w..];
    let t: Vec<f64> = tail.iter().map(|p| p.0 as f64 * ns_per_frame).collect();
    let y: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let k = w as f64;
    let tm = t.iter().sum::<f64>() / k;
    let ym = y.iter().sum::<f64>() / k;
    let sxy: f64 = t.iter().zip(&y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    let slope = sxy / sxx;

    let mut reasons = Vec::new();
    if slope.abs() > params.slope_tol {
        reasons.push(format!(
            "trailing slope {slope:.3} Å/ns exceeds {} Å/ns",
            params.slope_tol
        ));
    }
    if ym > params.level_tol {
        reasons.push(format!(
            "trailing mean {ym:.3} Å exceeds {} Å",
            params.level_tol
        ));
    }
    Ok(DriftVerdict {
        atypical: !reasons.is_empty(),
        slope,
        mean_level: ym,
        window_points: w,
        reasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(usize) -> f64, n: usize) -> TimeSeries {
        TimeSeries::new("RMSD", "Å", (0..n).map(|i| (i, f(i))).collect())
    }

    #[test]
    fn flat_is_stable() {
        let p = DriftParams { level_tol: 3.0, ..Default::default() };
        let v = drift_check(&series(|_| 1.5, 100), 0.01, p).unwrap();
        assert!(!v.atypical);
        assert!(v.slope.abs() < 1e-12);
    }

    #[test]
    fn ramp_is_atypical() {
        // 0 → 12 Å across 1 ns
        let v = drift_check(&series(|i| 12.0 * i as f64 / 100.0, 101), 0.01, DriftParams::default()).unwrap();
        assert!(v.atypical);
        assert!((v.slope - 12.0).abs() < 1e-9);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            drift_check(&series(|_| 1.0, 9), 0.01, DriftParams::default()),
            Err(AnalysisError::InsufficientData { needed: 10, got: 9 })
        ));
    }
}
