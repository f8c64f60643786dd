//! Static SVG line plots of CSV tables.
//!
//! The input is `#` comment lines, a header row and numeric rows. The first
//! column is the horizontal axis and every further column becomes one
//! polyline. Comment lines are printed above the plot so the figure carries
//! its configuration. Output depends only on the input text.

use std::fmt::Write as _;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 960.0;
const PLOT_HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 130.0;
const BOTTOM: f64 = 50.0;
const LINE_HEIGHT: f64 = 13.0;
const WRAP: usize = 140;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// A parsed CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    /// `rows[i][c]`.
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> CliResult<Self> {
        let schema = |msg: String| CliError::Config(format!("CSV schema mismatch: {msg}"));
        let mut comments = Vec::new();
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim().to_string());
                continue;
            }
            match &columns {
                None => {
                    let names: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
                    if names.len() < 2 || names.iter().any(String::is_empty) {
                        return Err(schema(format!("header `{line}` needs at least two named columns")));
                    }
                    columns = Some(names);
                }
                Some(names) => {
                    let row = line
                        .split(',')
                        .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                        .collect::<Option<Vec<f64>>>()
                        .ok_or_else(|| schema(format!("line {}: non-numeric or non-finite value", n + 1)))?;
                    if row.len() != names.len() {
                        return Err(schema(format!(
                            "line {}: {} fields, header has {}",
                            n + 1,
                            row.len(),
                            names.len()
                        )));
                    }
                    rows.push(row);
                }
            }
        }
        let columns = columns.ok_or_else(|| schema("no header row".into()))?;
        if rows.is_empty() {
            return Err(schema("no data rows".into()));
        }
        Ok(Table { comments, columns, rows })
    }
}

fn padded_range(values: impl Iterator<Item = f64>, pad: f64) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi > lo {
        let d = (hi - lo) * pad;
        (lo - d, hi + d)
    } else {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        (lo - d, hi + d)
    }
}

fn tick_label(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if (1e-3..1e5).contains(&x.abs()) {
        let s = format!("{x:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.into()
        }
    } else {
        format!("{x:.2e}")
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn wrap(line: &str) -> Vec<String> {
    let chars: Vec<char> = line.chars().collect();
    if chars.is_empty() {
        return vec![String::new()];
    }
    chars.chunks(WRAP).map(|c| c.iter().collect()).collect()
}

/// Renders `table` as a self-contained SVG document.
pub fn render_svg(table: &Table) -> String {
    let notes: Vec<String> = table.comments.iter().flat_map(|c| wrap(c)).collect();
    let top = 20.0 + LINE_HEIGHT * notes.len() as f64;
    let height = top + PLOT_HEIGHT + BOTTOM;
    let (x0, x1) = padded_range(table.rows.iter().map(|r| r[0]), 0.0);
    let (y0, y1) = padded_range(table.rows.iter().flat_map(|r| r[1..].iter().copied()), 0.05);
    let plot_w = WIDTH - LEFT - RIGHT;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * PLOT_HEIGHT;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="monospace" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, note) in notes.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="10" y="{:.1}" fill="dimgray">{}</text>"#,
            14.0 + LINE_HEIGHT * i as f64,
            escape(note)
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{top:.1}" width="{plot_w}" height="{PLOT_HEIGHT}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x0 + f * (x1 - x0);
        let px = sx(xv);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            top + PLOT_HEIGHT,
            top + PLOT_HEIGHT + 5.0,
            top + PLOT_HEIGHT + 18.0,
            tick_label(xv)
        );
        let yv = y0 + f * (y1 - y0);
        let py = sy(yv);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        height - 12.0,
        escape(&table.columns[0])
    );

    for (c, name) in table.columns.iter().enumerate().skip(1) {
        let color = PALETTE[(c - 1) % PALETTE.len()];
        if table.rows.len() == 1 {
            let r = &table.rows[0];
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(r[0]),
                sy(r[c])
            );
        } else {
            let mut points = String::with_capacity(16 * table.rows.len());
            for r in &table.rows {
                let _ = write!(points, "{:.2},{:.2} ", sx(r[0]), sy(r[c]));
            }
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
                points.trim_end()
            );
        }
        let ly = top + 14.0 * c as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - RIGHT + 10.0,
            WIDTH - RIGHT + 30.0,
            WIDTH - RIGHT + 35.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
