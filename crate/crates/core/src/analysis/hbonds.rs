use std::collections::BTreeMap;

use rayon::prelude::*;

use super::grid::CellGrid;
use super::{AnalysisError, Result, TimeSeries};
use crate::geometry::{min_image, Vec3};
use crate::structure_io::{Frame, Topology};

/// Slack applied to both cutoffs so that boundary geometries built in
/// floating point count as inside.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HBondParams {
    /// Donor heavy atom to acceptor distance, Å (inclusive).
    pub dist_cutoff: f64,
    /// Angle at the hydrogen between H→D and H→A, degrees (inclusive).
    pub angle_cutoff: f64,
    pub use_min_image: bool,
}

impl Default for HBondParams {
    fn default() -> Self {
        HBondParams {
            dist_cutoff: 3.5,
            angle_cutoff: 120.0,
            use_min_image: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HBondKey {
    pub donor: usize,
    pub hydrogen: usize,
    pub acceptor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HBondRecord {
    pub donor: usize,
    pub hydrogen: usize,
    pub acceptor: usize,
    pub distance: f64,
    pub angle: f64,
}

impl HBondRecord {
    pub fn key(&self) -> HBondKey {
        HBondKey {
            donor: self.donor,
            hydrogen: self.hydrogen,
            acceptor: self.acceptor,
        }
    }
}

/// Angle in degrees between `u` and `v`.
pub(crate) fn angle_deg(u: Vec3, v: Vec3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v)).to_degrees()
}

fn check_topology(frame: &Frame, topo: &Topology) -> Result<()> {
    let n = frame.coords.len();
    let max_site = topo
        .donors
        .iter()
        .flat_map(|&(d, h)| [d, h])
        .chain(topo.acceptors.iter().copied())
        .max();
    match max_site {
        Some(m) if m >= n => Err(AnalysisError::SelectionOutOfRange { index: m, n_atoms: n }),
        _ => Ok(()),
    }
}

/// Geometric hydrogen bonds in one frame, sorted by (donor, hydrogen, acceptor).
pub fn detect_hbonds(frame: &Frame, topo: &Topology, params: HBondParams) -> Result<Vec<HBondRecord>> {
    if !(params.dist_cutoff > 0.0) || !params.dist_cutoff.is_finite() {
        return Err(AnalysisError::InvalidParameter(format!(
            "distance cutoff {} must be positive",
            params.dist_cutoff
        )));
    }
    check_topology(frame, topo)?;
    let box_lengths = if params.use_min_image {
        let cell = frame.unit_cell.ok_or_else(|| {
            AnalysisError::Geometry(crate::geometry::GeometryError::UnsupportedCell(
                "minimum image requested but the frame has no unit cell".into(),
            ))
        })?;
        Some(cell.orthorhombic_lengths()?)
    } else {
        None
    };
    let disp = |to: Vec3, from: Vec3| match box_lengths {
        Some(b) => min_image(to - from, b),
        None => to - from,
    };

    let x = &frame.coords;
    let acc_pos: Vec<Vec3> = topo.acceptors.iter().map(|&a| x[a]).collect();
    let dmax = params.dist_cutoff + BOUNDARY_EPS;
    let reach = dmax * (1.0 + 1e-12);
    let grid = match box_lengths {
        Some(b) => CellGrid::periodic(&acc_pos, reach, b),
        None => CellGrid::new(&acc_pos, reach),
    };
    let amin = params.angle_cutoff - BOUNDARY_EPS;

    let mut out = Vec::new();
    for &(d, h) in &topo.donors {
        let (pd, ph) = (x[d], x[h]);
        let h_to_d = disp(pd, ph);
        grid.for_each_candidate(pd, |k| {
            let a = topo.acceptors[k];
            if a == d {
                return;
            }
            let dist = disp(x[a], pd).norm();
            if dist > dmax {
                return;
            }
            let angle = angle_deg(h_to_d, disp(x[a], ph));
            if angle >= amin {
                out.push(HBondRecord {
                    donor: d,
                    hydrogen: h,
                    acceptor: a,
                    distance: dist,
                    angle,
                });
            }
        });
    }
    out.sort_by_key(|r| r.key());
    Ok(out)
}

/// Presence bitmap of every bond ever observed, one entry per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct HBondTimeline {
    pub frame_indices: Vec<usize>,
    pub counts: Vec<usize>,
    pub presence: BTreeMap<HBondKey, Vec<bool>>,
}

impl HBondTimeline {
    pub fn from_records(frame_indices: Vec<usize>, per_frame: &[Vec<HBondRecord>]) -> Self {
        let n = per_frame.len();
        let mut presence: BTreeMap<HBondKey, Vec<bool>> = BTreeMap::new();
        for (t, recs) in per_frame.iter().enumerate() {
            for r in recs {
                presence.entry(r.key()).or_insert_with(|| vec![false; n])[t] = true;
            }
        }
        HBondTimeline {
            frame_indices,
            counts: per_frame.iter().map(Vec::len).collect(),
            presence,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.frame_indices.len()
    }

    pub fn count_series(&self) -> TimeSeries {
        TimeSeries::new(
            "H-bonds",
            "count",
            self.frame_indices
                .iter()
                .zip(&self.counts)
                .map(|(&i, &c)| (i, c as f64))
                .collect(),
        )
    }

    /// Occupancy per bond, highest first; ties in (D, H, A) order.
    pub fn persistence(&self) -> Vec<(HBondKey, f64)> {
        let n = self.n_frames() as f64;
        let mut out: Vec<(HBondKey, f64)> = self
            .presence
            .iter()
            .map(|(k, bits)| (*k, bits.iter().filter(|&&b| b).count() as f64 / n))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    /// Intermittent existence correlation C(τ) for τ = 0..=max_lag. Empty
    /// when no bond was ever observed.
    pub fn autocorrelation(&self, max_lag: usize) -> Result<TimeSeries> {
        let n = self.n_frames();
        if max_lag >= n {
            return Err(AnalysisError::InvalidParameter(format!(
                "max_lag {max_lag} must be smaller than the {n} frames"
            )));
        }
        let mut points = Vec::new();
        if !self.presence.is_empty() {
            let on: usize = self
                .presence
                .values()
                .map(|b| b.iter().filter(|&&x| x).count())
                .sum();
            let denom = on as f64 / (self.presence.len() * n) as f64;
            for tau in 0..=max_lag {
                let valid = n - tau;
                let hits: usize = self
                    .presence
                    .values()
                    .map(|b| (0..valid).filter(|&t| b[t] && b[t + tau]).count())
                    .sum();
                let num = hits as f64 / (self.presence.len() * valid) as f64;
                points.push((tau, num / denom));
            }
        }
        Ok(TimeSeries::new("H-bond autocorrelation", "", points))
    }
}

pub fn hbond_timeline(frames: &[Frame], topo: &Topology, params: HBondParams) -> Result<HBondTimeline> {
    if frames.is_empty() {
        return Err(AnalysisError::EmptyTrajectory);
    }
    let per_frame = frames
        .par_iter()
        .map(|f| detect_hbonds(f, topo, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(HBondTimeline::from_records(
        frames.iter().map(|f| f.index).collect(),
        &per_frame,
    ))
}

pub fn hbond_count_series(frames: &[Frame], topo: &Topology, params: HBondParams) -> Result<TimeSeries> {
    Ok(hbond_timeline(frames, topo, params)?.count_series())
}

pub fn hbond_persistence(
    frames: &[Frame],
    topo: &Topology,
    params: HBondParams,
) -> Result<Vec<(HBondKey, f64)>> {
    Ok(hbond_timeline(frames, topo, params)?.persistence())
}

pub fn hbond_autocorrelation(
    frames: &[Frame],
    topo: &Topology,
    max_lag: usize,
    params: HBondParams,
) -> Result<TimeSeries> {
    hbond_timeline(frames, topo, params)?.autocorrelation(max_lag)
}
