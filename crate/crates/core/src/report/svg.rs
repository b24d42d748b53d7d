use std::fmt::Write as _;

use super::csv::column_title;
use super::ReportError;
use crate::analysis::{FesGrid, TimeSeries};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    /// Multiplies the frame index to give the x coordinate.
    pub x_scale: f64,
    pub stroke: String,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            title: String::new(),
            x_label: "Frame".into(),
            x_scale: 1.0,
            stroke: "#1f77b4".into(),
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        (lo - pad, hi + pad)
    }
}

struct Frame2d {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame2d {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect class=\"background\" x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>");
    if !title.is_empty() {
        let _ = writeln!(
            out,
            "<text class=\"title\" x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
            num(WIDTH / 2.0),
            esc(title)
        );
    }
}

fn axes(out: &mut String, f: &Frame2d, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(out, "<g class=\"axes\" stroke=\"#000000\" fill=\"none\">");
    let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", num(l), num(b), num(r), num(b));
    let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", num(l), num(t), num(l), num(b));
    out.push_str("</g>\n");
    let _ = writeln!(out, "<g class=\"ticks\" fill=\"#000000\">");
    for k in 0..=TICKS {
        let frac = k as f64 / TICKS as f64;
        let xv = f.x0 + frac * (f.x1 - f.x0);
        let yv = f.y0 + frac * (f.y1 - f.y0);
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            num(f.px(xv)),
            num(b + 16.0),
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            num(l - 6.0),
            num(f.py(yv) + 4.0),
            tick_label(yv)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        "<text class=\"xlabel\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        num((l + r) / 2.0),
        num(HEIGHT - 12.0),
        esc(x_label)
    );
    let (cx, cy) = (18.0, (t + b) / 2.0);
    let _ = writeln!(
        out,
        "<text class=\"ylabel\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
        num(cx),
        num(cy),
        num(cx),
        num(cy),
        esc(y_label)
    );
}

/// Line plot of one series: a single `<polyline>` with one point per sample.
pub fn render_series_svg(s: &TimeSeries, style: &PlotStyle) -> Result<String, ReportError> {
    if s.points.is_empty() {
        return Err(ReportError::EmptyInput(format!("series '{}' has no points", s.name)));
    }
    let xs: Vec<f64> = s.points.iter().map(|p| p.0 as f64 * style.x_scale).collect();
    let (x0, x1) = range(xs.iter().copied());
    let (y0, y1) = range(s.points.iter().map(|p| p.1));
    let f = Frame2d { x0, x1, y0, y1 };
    let mut out = String::new();
    let title = if style.title.is_empty() { s.name.as_str() } else { style.title.as_str() };
    open(&mut out, title);
    axes(&mut out, &f, &style.x_label, &column_title(&s.name, &s.unit));
    let pts: Vec<String> = xs
        .iter()
        .zip(&s.points)
        .map(|(&x, p)| format!("{},{}", num(f.px(x)), num(f.py(p.1))))
        .collect();
    let _ = writeln!(
        out,
        "<polyline class=\"series\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
        esc(&style.stroke),
        pts.join(" ")
    );
    out.push_str("</svg>\n");
    Ok(out)
}

const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let k = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let u = t - k as f64;
    let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heat map of a free-energy surface: one `<rect class="cell">` per
/// occupied bin, Rg on x and RMSD on y.
pub fn render_fes_svg(g: &FesGrid, title: &str) -> Result<String, ReportError> {
    let occupied = g.occupied_mask.iter().flatten().filter(|&&b| b).count();
    if occupied == 0 || g.rg_edges.len() < 2 || g.rmsd_edges.len() < 2 {
        return Err(ReportError::EmptyInput("free-energy grid has no occupied cells".into()));
    }
    let f = Frame2d {
        x0: g.rg_edges[0],
        x1: *g.rg_edges.last().unwrap(),
        y0: g.rmsd_edges[0],
        y1: *g.rmsd_edges.last().unwrap(),
    };
    let fmax = g
        .free_energy
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v));
    let mut out = String::new();
    open(&mut out, title);
    let _ = writeln!(out, "<g class=\"cells\" stroke=\"none\">");
    for (i, row) in g.free_energy.iter().enumerate() {
        for (j, fe) in row.iter().enumerate() {
            let Some(fe) = fe else { continue };
            let (xa, xb) = (f.px(g.rg_edges[i]), f.px(g.rg_edges[i + 1]));
            let (ya, yb) = (f.py(g.rmsd_edges[j + 1]), f.py(g.rmsd_edges[j]));
            let t = if fmax > 0.0 { fe / fmax } else { 0.0 };
            let _ = writeln!(
                out,
                "<rect class=\"cell\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{} kT</title></rect>",
                num(xa),
                num(ya),
                num(xb - xa),
                num(yb - ya),
                color(t),
                tick_label(*fe)
            );
        }
    }
    out.push_str("</g>\n");
    axes(&mut out, &f, "Rg (Å)", "RMSD (Å)");
    let _ = writeln!(
        out,
        "<text class=\"legend\" x=\"{}\" y=\"22\" text-anchor=\"end\">F: 0 to {} kT</text>",
        num(WIDTH - RIGHT),
        tick_label(fmax)
    );
    out.push_str("</svg>\n");
    Ok(out)
}
