use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::{
    analysis_err, load_energy_log, load_structure, load_topology, load_trajectory, parse_selection, PipelineError,
    Result, Session,
};
use crate::analysis::{
    assign_radii, drift_check, free_energy_surface, hbond_timeline, polar_mask, radius_of_gyration_series,
    rmsd_series, rmsf, rmsf_to_bfactor, sasa_per_frame, AnalysisError, DriftParams, HBondParams, RmsfOptions,
    SasaParams, Selection, TimeSeries,
};
use crate::report::csv::{fes_csv, per_atom_csv, persistence_csv, residue_rollup_csv, series_csv};
use crate::structure_io::{Frame, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Metrics {
    pub rmsd: bool,
    pub rmsf: bool,
    pub rg: bool,
    pub sasa: bool,
    pub hbonds: bool,
    pub energy: bool,
    pub fes: bool,
}

impl Metrics {
    pub const ALL: Metrics = Metrics {
        rmsd: true,
        rmsf: true,
        rg: true,
        sasa: true,
        hbonds: true,
        energy: true,
        fes: true,
    };

    pub fn is_empty(&self) -> bool {
        self.flags().is_empty()
    }

    pub fn needs_trajectory(&self) -> bool {
        self.rmsd || self.rmsf || self.rg || self.sasa || self.hbonds || self.fes
    }

    /// Metric names in canonical order.
    pub fn flags(&self) -> Vec<&'static str> {
        [
            (self.rmsd, "rmsd"),
            (self.rmsf, "rmsf"),
            (self.rg, "rg"),
            (self.sasa, "sasa"),
            (self.hbonds, "hbonds"),
            (self.energy, "energy"),
            (self.fes, "fes"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub metrics: Metrics,
    /// Overrides the DCD header's frame spacing.
    pub ns_per_frame: Option<f64>,
    /// Used for RMSD and RMSF.
    pub rmsd_selection: String,
    pub rg_selection: String,
    pub sasa_selection: String,
    pub hbond_selection: String,
    pub superpose: bool,
    pub sasa: SasaParams,
    pub radius_overrides: BTreeMap<String, f64>,
    pub hbond_distance: f64,
    pub hbond_angle: f64,
    /// `None` applies minimum image whenever every frame carries an
    /// orthorhombic cell.
    pub hbond_min_image: Option<bool>,
    pub max_lag: usize,
    pub fes_bins: usize,
    pub drift: DriftParams,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        let hb = HBondParams::default();
        AnalysisOptions {
            metrics: Metrics::ALL,
            ns_per_frame: None,
            rmsd_selection: "ca".into(),
            rg_selection: "protein".into(),
            sasa_selection: "protein".into(),
            hbond_selection: "protein".into(),
            superpose: true,
            sasa: SasaParams::default(),
            radius_overrides: BTreeMap::new(),
            hbond_distance: hb.dist_cutoff,
            hbond_angle: hb.angle_cutoff,
            hbond_min_image: None,
            max_lag: 100,
            fes_bins: 25,
            drift: DriftParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalyzeSources {
    pub structure: PathBuf,
    pub topology: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub energy_log: Option<PathBuf>,
}

fn stats(s: &TimeSeries) -> Value {
    let v = s.values();
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({
        "name": s.name,
        "unit": s.unit,
        "points": v.len(),
        "mean": s.mean(),
        "min": (!v.is_empty()).then_some(min),
        "max": (!v.is_empty()).then_some(max),
        "last": v.last(),
    })
}

fn soft(e: &AnalysisError) -> bool {
    matches!(e, AnalysisError::Degenerate(_) | AnalysisError::InsufficientData { .. })
}

/// Topology whose donors and acceptors are limited to `sel`.
fn restrict_sites(topo: &Topology, sel: &Selection) -> Topology {
    let mut inside = vec![false; topo.n_atoms()];
    for &i in sel.indices() {
        inside[i] = true;
    }
    let mut t = topo.clone();
    t.donors.retain(|&(d, h)| inside[d] && inside[h]);
    t.acceptors.retain(|&a| inside[a]);
    t
}

fn auto_min_image(frames: &[Frame]) -> bool {
    frames
        .iter()
        .all(|f| f.unit_cell.is_some_and(|c| c.orthorhombic_lengths().is_ok()))
}

/// Computes the requested metrics, writing CSVs and `analysis/summary.json`.
pub fn run_analyze(session: &mut Session, src: &AnalyzeSources, opts: &AnalysisOptions) -> Result<()> {
    let m = opts.metrics;
    if m.is_empty() {
        return Err(PipelineError::Usage("no analysis metric selected".into()));
    }
    session.command(format!(
        "analyze {}",
        m.flags().iter().map(|f| format!("--{f}")).collect::<Vec<_>>().join(" ")
    ));
    let structure = load_structure(&src.structure)?;
    session.input(&src.structure)?;
    let topo = match &src.topology {
        Some(p) => {
            let t = load_topology(p)?;
            if t.n_atoms() != structure.len() {
                return Err(PipelineError::Usage(format!(
                    "{}: topology has {} atoms but {} has {}",
                    p.display(),
                    t.n_atoms(),
                    src.structure.display(),
                    structure.len()
                )));
            }
            session.input(p)?;
            t
        }
        None => Topology::from_structure_by_distance(&structure),
    };

    let mut summary = Map::new();
    let mut metrics = Map::new();
    let mut warnings: Vec<String> = Vec::new();
    summary.insert("label".into(), json!(session.label()));
    summary.insert("n_atoms".into(), json!(structure.len()));

    let mut frames: Vec<Frame> = Vec::new();
    let mut ns_per_frame = opts.ns_per_frame;
    let mut time_source = if ns_per_frame.is_some() { "override" } else { "none" };
    if m.needs_trajectory() {
        let path = src.trajectory.as_deref().ok_or_else(|| {
            PipelineError::Usage(format!("metrics {} need a trajectory", m.flags().join(", ")))
        })?;
        let (header, f) = load_trajectory(path)?;
        if header.n_atoms != structure.len() {
            return Err(PipelineError::Usage(format!(
                "{}: trajectory has {} atoms but {} has {}",
                path.display(),
                header.n_atoms,
                src.structure.display(),
                structure.len()
            )));
        }
        if f.is_empty() {
            return Err(analysis_err(path.display().to_string())(AnalysisError::EmptyTrajectory));
        }
        session.input(path)?;
        if ns_per_frame.is_none() {
            if let Some(ps) = header.frame_interval_ps() {
                ns_per_frame = Some(ps / 1000.0);
                time_source = "dcd-header";
            }
        }
        frames = f;
        summary.insert("n_frames".into(), json!(frames.len()));
    }
    summary.insert("ns_per_frame".into(), json!(ns_per_frame));
    summary.insert("time_source".into(), json!(time_source));

    let mut rmsd = None;
    if m.rmsd || m.fes {
        let sel = parse_selection(&opts.rmsd_selection, &structure)?;
        let s = rmsd_series(&frames, &structure.positions(), &sel, opts.superpose).map_err(analysis_err("RMSD"))?;
        session.write("rmsd", "analysis/rmsd.csv", &series_csv(&s))?;
        let mut st = stats(&s);
        st["selection"] = json!(sel.label());
        st["selection_atoms"] = json!(sel.len());
        metrics.insert("rmsd".into(), st);
        rmsd = Some(s);
    }

    if m.rmsf {
        let sel = parse_selection(&opts.rmsd_selection, &structure)?;
        match rmsf(&frames, &sel, RmsfOptions::default()) {
            Ok(r) => {
                let b = rmsf_to_bfactor(&r).map_err(analysis_err("B-factor"))?;
                session.write("rmsf", "analysis/rmsf.csv", &per_atom_csv(&r))?;
                session.write("rmsf_residue", "analysis/rmsf_residue.csv", &residue_rollup_csv(&r))?;
                session.write("bfactor", "analysis/bfactor.csv", &per_atom_csv(&b))?;
                let max = r.values.iter().copied().fold(0.0, f64::max);
                metrics.insert(
                    "rmsf".into(),
                    json!({
                        "selection": sel.label(),
                        "selection_atoms": sel.len(),
                        "mean": r.values.iter().sum::<f64>() / r.values.len() as f64,
                        "max": max,
                    }),
                );
            }
            Err(e) if soft(&e) => warnings.push(format!("RMSF skipped: {e}")),
            Err(e) => return Err(analysis_err("RMSF")(e)),
        }
    }

    let mut rg = None;
    if m.rg || m.fes {
        let sel = parse_selection(&opts.rg_selection, &structure)?;
        let s = radius_of_gyration_series(&frames, &sel, &structure.masses()).map_err(analysis_err("Rg"))?;
        session.write("rg", "analysis/rg.csv", &series_csv(&s))?;
        let mut st = stats(&s);
        st["selection"] = json!(sel.label());
        metrics.insert("rg".into(), st);
        rg = Some(s);
    }

    if m.sasa {
        let sel = parse_selection(&opts.sasa_selection, &structure)?;
        let radii = assign_radii(&sel, &topo.elements, &topo.atom_names, &opts.radius_overrides)
            .map_err(analysis_err("SASA radii"))?;
        warnings.extend(radii.warnings.iter().map(|w| format!("SASA: {w}")));
        let polar_all = polar_mask(&topo.elements, &topo.bonds);
        let polar: Vec<bool> = sel.indices().iter().map(|&i| polar_all[i]).collect();
        let res = sasa_per_frame(&frames, &sel, &radii.radii, &polar, opts.sasa).map_err(analysis_err("SASA"))?;
        let series = |name: &str, get: &dyn Fn(&crate::analysis::SasaResult) -> f64| {
            TimeSeries::new(name, "Å²", frames.iter().zip(&res).map(|(f, r)| (f.index, get(r))).collect())
        };
        let total = series("SASA", &|r| r.total);
        let polar = series("SASA polar", &|r| r.polar);
        let apolar = series("SASA apolar", &|r| r.apolar);
        session.write("sasa_total", "analysis/sasa_total.csv", &series_csv(&total))?;
        session.write("sasa_polar", "analysis/sasa_polar.csv", &series_csv(&polar))?;
        session.write("sasa_apolar", "analysis/sasa_apolar.csv", &series_csv(&apolar))?;
        let mut st = stats(&total);
        st["selection"] = json!(sel.label());
        st["probe"] = json!(opts.sasa.probe);
        st["n_points"] = json!(opts.sasa.n_points);
        st["polar_mean"] = json!(polar.mean());
        st["apolar_mean"] = json!(apolar.mean());
        metrics.insert("sasa".into(), st);
    }

    if m.hbonds {
        let sel = parse_selection(&opts.hbond_selection, &structure)?;
        let sites = restrict_sites(&topo, &sel);
        let use_min_image = opts.hbond_min_image.unwrap_or_else(|| auto_min_image(&frames));
        let params = HBondParams {
            dist_cutoff: opts.hbond_distance,
            angle_cutoff: opts.hbond_angle,
            use_min_image,
        };
        let tl = hbond_timeline(&frames, &sites, params).map_err(analysis_err("H-bonds"))?;
        let count = tl.count_series();
        let persistence = tl.persistence();
        let lag = opts.max_lag.min(tl.n_frames() - 1);
        let acf = tl.autocorrelation(lag).map_err(analysis_err("H-bond autocorrelation"))?;
        session.write("hbonds_count", "analysis/hbonds_count.csv", &series_csv(&count))?;
        session.write("hbonds_persistence", "analysis/hbonds_persistence.csv", &persistence_csv(&persistence))?;
        session.write("hbonds_autocorrelation", "analysis/hbonds_autocorrelation.csv", &series_csv(&acf))?;
        let mut st = stats(&count);
        st["selection"] = json!(sel.label());
        st["distinct_bonds"] = json!(persistence.len());
        st["distance_cutoff"] = json!(params.dist_cutoff);
        st["angle_cutoff_deg"] = json!(params.angle_cutoff);
        st["min_image"] = json!(use_min_image);
        st["max_lag"] = json!(lag);
        metrics.insert("hbonds".into(), st);
    }

    if m.energy {
        let path = src
            .energy_log
            .as_deref()
            .ok_or_else(|| PipelineError::Usage("energy analysis needs a NAMD log".into()))?;
        let table = load_energy_log(path)?;
        session.input(path)?;
        warnings.extend(table.warnings.iter().map(|w| format!("{}: {w}", path.display())));
        warnings.extend(
            table
                .row_errors
                .iter()
                .map(|e| format!("{}: line {}: {}", path.display(), e.line, e.message)),
        );
        session.write("energy_table", "analysis/energy_table.csv", &energy_table_csv(&table))?;
        let mut st = json!({ "rows": table.rows.len(), "columns": table.column_names });
        match table.column_index("POTENTIAL") {
            Some(col) => {
                let mut points = Vec::with_capacity(table.rows.len());
                for r in &table.rows {
                    match usize::try_from(r.timestep) {
                        Ok(ts) => points.push((ts, r.values[col])),
                        Err(_) => warnings.push(format!("{}: negative timestep {} skipped", path.display(), r.timestep)),
                    }
                }
                let pe = TimeSeries::new("Potential energy", "kcal/mol", points);
                session.write("energy", "analysis/energy.csv", &series_csv(&pe))?;
                st["potential"] = stats(&pe);
            }
            None => warnings.push(format!("{}: no POTENTIAL column", path.display())),
        }
        metrics.insert("energy".into(), st);
    }

    if m.fes {
        let (rg, rmsd) = (rg.as_ref().unwrap(), rmsd.as_ref().unwrap());
        match free_energy_surface(rg, rmsd, opts.fes_bins) {
            Ok(g) => {
                session.write("fes", "analysis/fes.csv", &fes_csv(&g))?;
                let occupied = g.occupied_mask.iter().flatten().filter(|&&b| b).count();
                metrics.insert("fes".into(), json!({ "bins": opts.fes_bins, "occupied_cells": occupied }));
            }
            Err(e) if soft(&e) => warnings.push(format!("free-energy surface skipped: {e}")),
            Err(e) => return Err(analysis_err("free-energy surface")(e)),
        }
    }

    if let Some(rmsd) = &rmsd {
        let verdict = match ns_per_frame {
            None => json!({ "skipped": "no frame spacing: the DCD header has none and no override was given" }),
            Some(dt) => match drift_check(rmsd, dt, opts.drift) {
                Ok(v) => json!({
                    "atypical": v.atypical,
                    "slope_angstrom_per_ns": v.slope,
                    "mean_level_angstrom": v.mean_level,
                    "window_points": v.window_points,
                    "reasons": v.reasons,
                }),
                Err(e) if soft(&e) => json!({ "skipped": e.to_string() }),
                Err(e) => return Err(analysis_err("RMSD drift check")(e)),
            },
        };
        summary.insert("drift".into(), verdict);
    }

    summary.insert("metrics".into(), Value::Object(metrics));
    summary.insert("warnings".into(), json!(warnings));
    let mut text = serde_json::to_string_pretty(&Value::Object(summary)).expect("summary serializes");
    text.push('\n');
    session.write("summary", "analysis/summary.json", &text)?;
    Ok(())
}

fn energy_table_csv(t: &crate::structure_io::EnergyTable) -> String {
    use crate::report::csv::fmt_value;
    let mut out = t.column_names.join(",");
    out.push('\n');
    for r in &t.rows {
        let row: Vec<String> = r.values.iter().map(|&v| fmt_value(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reads `analysis/summary.json` from a label directory, if present.
pub(crate) fn read_summary(root: &Path) -> Option<Value> {
    let text = std::fs::read_to_string(root.join("analysis/summary.json")).ok()?;
    serde_json::from_str(&text).ok()
}
