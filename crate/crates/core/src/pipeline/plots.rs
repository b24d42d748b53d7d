use std::fs;

use super::analyze::read_summary;
use super::{analysis_err, PipelineError, Result, Session};
use crate::analysis::{free_energy_surface, TimeSeries};
use crate::report::{parse_series_csv, render_fes_svg, render_series_svg, PlotStyle, ReportError};

enum Axis {
    Time,
    Lag,
    Timestep,
    Residue,
    Atom,
}

// artifact name, x-axis kind, plot title
const SERIES_PLOTS: [(&str, Axis, &str); 10] = [
    ("rmsd", Axis::Time, "RMSD"),
    ("rg", Axis::Time, "Radius of gyration"),
    ("sasa_total", Axis::Time, "SASA"),
    ("sasa_polar", Axis::Time, "Polar SASA"),
    ("sasa_apolar", Axis::Time, "Apolar SASA"),
    ("hbonds_count", Axis::Time, "Hydrogen bonds"),
    ("hbonds_autocorrelation", Axis::Lag, "H-bond autocorrelation"),
    ("energy", Axis::Timestep, "Potential energy"),
    ("rmsf_residue", Axis::Residue, "RMSF per residue"),
    ("rmsf", Axis::Atom, "RMSF per atom"),
];

fn load_series(session: &Session, name: &str) -> Result<Option<TimeSeries>> {
    let Some(rel) = session.outputs().get(name) else {
        return Ok(None);
    };
    let path = session.layout.root.join(rel);
    let text = fs::read_to_string(&path).map_err(|source| PipelineError::Io {
        path: path.clone(),
        source,
    })?;
    let s = parse_series_csv(&text).map_err(|e| match e {
        ReportError::Csv { line, message } => PipelineError::Usage(format!("{}: line {line}: {message}", path.display())),
        other => PipelineError::Report(other),
    })?;
    Ok(Some(s))
}

/// Renders an SVG for every analysis table recorded in the session.
/// Frame axes become time axes when the summary records a frame spacing.
pub fn run_report(session: &mut Session) -> Result<Vec<String>> {
    session.command("report");
    let summary = read_summary(&session.layout.root);
    let ns_per_frame = summary.as_ref().and_then(|s| s["ns_per_frame"].as_f64());
    let fes_bins = summary
        .as_ref()
        .and_then(|s| s["metrics"]["fes"]["bins"].as_u64())
        .unwrap_or(25) as usize;
    let label = session.label().to_string();
    let mut written = Vec::new();

    if !SERIES_PLOTS.iter().any(|(n, ..)| session.outputs().contains_key(*n)) {
        return Err(PipelineError::Usage(format!(
            "{}: no analysis results to report; run analyze first",
            session.layout.analysis().display()
        )));
    }

    for (name, axis, title) in SERIES_PLOTS {
        if name == "rmsf" && session.outputs().contains_key("rmsf_residue") {
            continue;
        }
        let Some(series) = load_series(session, name)? else { continue };
        if series.is_empty() {
            continue;
        }
        let (x_label, x_scale) = match (axis, ns_per_frame) {
            (Axis::Time, Some(dt)) => ("Time (ns)", dt),
            (Axis::Time, None) => ("Frame", 1.0),
            (Axis::Lag, Some(dt)) => ("Lag (ns)", dt),
            (Axis::Lag, None) => ("Lag (frames)", 1.0),
            (Axis::Timestep, _) => ("Timestep", 1.0),
            (Axis::Residue, _) => ("Residue index", 1.0),
            (Axis::Atom, _) => ("Atom index", 1.0),
        };
        let style = PlotStyle {
            title: format!("{label}: {title}"),
            x_label: x_label.into(),
            x_scale,
            ..PlotStyle::default()
        };
        let svg = render_series_svg(&series, &style)?;
        let rel = format!("plots/{name}.svg");
        session.write(&format!("plot_{name}"), &rel, &svg)?;
        written.push(rel);
    }

    if session.outputs().contains_key("fes") {
        if let (Some(rg), Some(rmsd)) = (load_series(session, "rg")?, load_series(session, "rmsd")?) {
            let grid = free_energy_surface(&rg, &rmsd, fes_bins).map_err(analysis_err("free-energy surface"))?;
            let svg = render_fes_svg(&grid, &format!("{label}: free-energy surface"))?;
            session.write("plot_fes", "plots/fes.svg", &svg)?;
            written.push("plots/fes.svg".into());
        }
    }
    Ok(written)
}
