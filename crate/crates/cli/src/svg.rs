//! Minimal line-plot writer. Reads the CSVs produced by the other commands
//! (metadata lines start with `#`) and draws one polyline per y column.

use crate::error::{CliError, Result};
use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 30.0, 50.0); // left, right, top, bottom
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// A parsed CSV: header names and numeric columns (unparsable cells are NaN).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Table> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header: Vec<String> = match lines.next() {
            Some(h) => h.split(',').map(|s| s.trim().to_string()).collect(),
            None => return Err(CliError::Usage("CSV has no header row".into())),
        };
        let mut columns = vec![Vec::new(); header.len()];
        for line in lines {
            for (i, cell) in line.split(',').enumerate().take(header.len()) {
                columns[i].push(cell.trim().parse().unwrap_or(f64::NAN));
            }
        }
        Ok(Table { header, columns })
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| CliError::Usage(format!("no column {name:?}; columns are {}", self.header.join(", "))))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Axes {
    pub log_x: bool,
    pub log_y: bool,
}

fn tf(v: f64, log: bool) -> f64 {
    if log {
        v.log10()
    } else {
        v
    }
}

fn range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-300 {
        let pad = lo.abs().max(1.0) * 0.5;
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn label(v: f64, log: bool) -> String {
    let x = if log { 10f64.powf(v) } else { v };
    if x != 0.0 && (x.abs() < 1e-2 || x.abs() >= 1e4) {
        format!("{x:.1e}")
    } else {
        format!("{x:.3}")
    }
}

/// Draws `ys` against `x` from `table`. Points with a non-finite coordinate
/// (or a nonpositive one on a log axis) are skipped.
pub fn line_plot(table: &Table, x: &str, ys: &[&str], axes: Axes, title: &str) -> Result<String> {
    let xs = table.column(x)?;
    let series: Vec<(&str, Vec<(f64, f64)>)> = ys
        .iter()
        .map(|name| {
            let y = table.column(name)?;
            let pts = xs
                .iter()
                .zip(y)
                .map(|(a, b)| (tf(*a, axes.log_x), tf(*b, axes.log_y)))
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .collect();
            Ok((*name, pts))
        })
        .collect::<Result<_>>()?;
    let (x0, x1) = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)))
        .ok_or_else(|| CliError::Usage("nothing to plot: no finite points".into()))?;
    let (y0, y1) = range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1))).expect("x range implies y range");

    let (l, r, t, b) = MARGIN;
    let px = |v: f64| l + (v - x0) / (x1 - x0) * (W - l - r);
    let py = |v: f64| H - b - (v - y0) / (y1 - y0) * (H - t - b);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - l - r, H - t - b);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (vx, vy) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, px(vx), H - b + 16.0, label(vx, axes.log_x));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, py(vy) + 4.0, label(vy, axes.log_y));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, l + (W - l - r) / 2.0, H - 12.0, escape(x));
    for (k, (name, pts)) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let path: Vec<String> = pts.iter().map(|(a, b)| format!("{:.2},{:.2}", px(*a), py(*b))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{colour}">{}</text>"#, l + 8.0, t + 14.0 * (k as f64 + 1.0), escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_metadata_and_draws() {
        let csv = "# version: x\nt,mass\n0,1\n1,0.5\n2,nan\n";
        let t = Table::parse(csv).unwrap();
        assert_eq!(t.header, ["t", "mass"]);
        assert!(t.columns[1][2].is_nan());
        let svg = line_plot(&t, "t", &["mass"], Axes::default(), "m").unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
        assert!(line_plot(&t, "t", &["nope"], Axes::default(), "").is_err());
    }

    #[test]
    fn log_axis_drops_nonpositive_points() {
        let t = Table::parse("x,y\n0,1\n1,10\n10,100\n").unwrap();
        let svg = line_plot(&t, "x", &["y"], Axes { log_x: true, log_y: true }, "").unwrap();
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 2);
    }
}
