//! Result files: summary JSON with fixed float formatting, trajectory CSV,
//! and SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::integrator::Trajectory;
use crate::pws::Point;

/// Pretty JSON in which every float is printed with 17 significant digits,
/// so identical values always give identical bytes.
pub fn format_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                let _ = write!(out, "{n}");
            } else {
                let f = n.as_f64().expect("float");
                let _ = write!(out, "{f:.16e}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            // short numeric arrays stay on one line
            if a.len() <= 4 && a.iter().all(|x| x.is_number() || x.is_null()) {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(indent + 2, out);
                write_value(x, indent + 2, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                pad(indent + 2, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 2, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

/// Samples merged with events, ordered by time. An event that coincides
/// with a sample labels that sample instead of adding a row.
pub fn trajectory_rows(tr: &Trajectory) -> Vec<(f64, Point, String)> {
    let mut rows: Vec<(f64, Point, String)> = tr.samples.iter().map(|&(t, p)| (t, p, String::new())).collect();
    for e in &tr.events {
        let hit = rows
            .iter_mut()
            .find(|r| r.2.is_empty() && r.0 == e.t && r.1 == e.state);
        match hit {
            Some(r) => r.2 = e.kind.label(),
            None => rows.push((e.t, e.state, e.kind.label())),
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows
}

pub fn write_trajectory_csv(path: &Path, tr: &Trajectory) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "y", "z", "event"])?;
    for (t, p, ev) in trajectory_rows(tr) {
        w.write_record([fmt(t), fmt(p[0]), fmt(p[1]), fmt(p[2]), ev])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a table whose cells are already formatted.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];
const MAX_POINTS: usize = 4000;

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn with(mut self, label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { label: label.into(), points });
        self
    }

    pub fn to_svg(&self) -> String {
        let (w, h, m) = (720.0, 520.0, 64.0);
        let finite = self.series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in finite {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 <= 0.0 {
            (x0, x1) = (x0 - 0.5, x1 + 0.5);
        }
        if y1 - y0 <= 0.0 {
            (y0, y1) = (y0 - 0.5, y1 + 0.5);
        }
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - 2.0 * m,
            h - 2.0 * m
        );
        let text = |s: &mut String, x: f64, y: f64, anchor: &str, t: &str| {
            let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{}</text>"#, escape(t));
        };
        text(&mut s, w / 2.0, 24.0, "middle", &self.title);
        text(&mut s, w / 2.0, h - 16.0, "middle", &self.x_label);
        text(&mut s, 16.0, h / 2.0, "middle", &self.y_label);
        text(&mut s, m, h - m + 16.0, "start", &format!("{x0:.4e}"));
        text(&mut s, w - m, h - m + 16.0, "end", &format!("{x1:.4e}"));
        text(&mut s, m - 4.0, h - m, "end", &format!("{y0:.3e}"));
        text(&mut s, m - 4.0, m + 10.0, "end", &format!("{y1:.3e}"));

        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let stride = series.points.len().div_ceil(MAX_POINTS).max(1);
            let mut pts = String::new();
            for (i, &(x, y)) in series.points.iter().enumerate() {
                if (i % stride == 0 || i + 1 == series.points.len()) && x.is_finite() && y.is_finite() {
                    let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
                }
            }
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, pts.trim_end());
            if self.series.len() <= 12 {
                let ly = m + 16.0 + 14.0 * k as f64;
                let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}"/>"#, w - m - 110.0, w - m - 90.0);
                text(&mut s, w - m - 86.0, ly + 4.0, "start", &series.label);
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub type Polyline = Vec<(f64, f64)>;

/// `(x, z)` and `(t, y)` projections of a trajectory.
pub fn projections(tr: &Trajectory) -> (Polyline, Polyline) {
    let xz = tr.samples.iter().map(|(_, p)| (p[0], p[2])).collect();
    let ty = tr.samples.iter().map(|(t, p)| (*t, p[1])).collect();
    (xz, ty)
}
