//! Minimal self-contained SVG plots for simulator output.
//!
//! Renders stacked panels of line or stem charts with axes, ticks, and a
//! legend, without external assets or scripts. Output is deterministic text
//! so plots from identical runs diff cleanly.

use std::fmt::Write as _;

use crate::sweep::PdTable;

const PANEL_WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 18.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 46.0;
const TICK_COUNT: usize = 5;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// One labeled curve of `(x, y)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }

    /// Curve over the index axis `0..values.len()`.
    pub fn from_values(label: impl Into<String>, values: &[f64]) -> Self {
        Series {
            label: label.into(),
            points: values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as f64, v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PanelKind {
    /// Continuous curves connected point to point.
    Lines(Vec<Series>),
    /// Vertical bars from zero at integer positions, for tap magnitudes.
    Stems(Vec<f64>),
}

/// A single chart; several can be stacked into one figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub kind: PanelKind,
    /// Fixed y range; `None` fits the data.
    pub y_range: Option<(f64, f64)>,
}

impl Panel {
    pub fn lines(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        series: Vec<Series>,
    ) -> Self {
        Panel {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            kind: PanelKind::Lines(series),
            y_range: None,
        }
    }

    pub fn stems(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        values: Vec<f64>,
    ) -> Self {
        Panel {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            kind: PanelKind::Stems(values),
            y_range: None,
        }
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
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

fn tick_label(v: f64) -> String {
    let text = format!("{v:.3}");
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    if trimmed == "-0" {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

#[derive(Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        if lo == hi {
            return Range {
                lo: lo - 0.5,
                hi: hi + 0.5,
            };
        }
        Range { lo, hi }
    }

    fn at(&self, t: f64) -> f64 {
        self.lo + t * (self.hi - self.lo)
    }

    fn unit(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

struct Frame {
    x: Range,
    y: Range,
    top: f64,
}

impl Frame {
    fn map_x(&self, v: f64) -> f64 {
        MARGIN_LEFT + self.x.unit(v) * (PANEL_WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn map_y(&self, v: f64) -> f64 {
        let span = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        self.top + MARGIN_TOP + (1.0 - self.y.unit(v)) * span
    }
}

fn render_panel(svg: &mut String, panel: &Panel, top: f64) {
    let (x_range, y_range) = match &panel.kind {
        PanelKind::Lines(series) => {
            let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
            let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
            (Range::of(xs), Range::of(ys))
        }
        PanelKind::Stems(values) => (
            Range::of([0.0, (values.len().saturating_sub(1)) as f64].into_iter()),
            Range::of(values.iter().copied().chain([0.0])),
        ),
    };
    let y_range = match panel.y_range {
        Some((lo, hi)) => Range { lo, hi },
        None => y_range,
    };
    let frame = Frame {
        x: x_range,
        y: y_range,
        top,
    };

    let left = MARGIN_LEFT;
    let right = PANEL_WIDTH - MARGIN_RIGHT;
    let floor = top + PANEL_HEIGHT - MARGIN_BOTTOM;
    let ceil = top + MARGIN_TOP;

    writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        PANEL_WIDTH / 2.0,
        top + 18.0,
        escape(&panel.title)
    )
    .unwrap();

    for i in 0..=TICK_COUNT {
        let t = i as f64 / TICK_COUNT as f64;
        let xv = frame.x.at(t);
        let yv = frame.y.at(t);
        let xp = frame.map_x(xv);
        let yp = frame.map_y(yv);
        writeln!(
            svg,
            "  <line x1=\"{left:.1}\" y1=\"{yp:.1}\" x2=\"{right:.1}\" y2=\"{yp:.1}\" stroke=\"#dddddd\" stroke-width=\"1\"/>"
        )
        .unwrap();
        writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\">{}</text>",
            left - 6.0,
            yp + 4.0,
            tick_label(yv)
        )
        .unwrap();
        writeln!(
            svg,
            "  <line x1=\"{xp:.1}\" y1=\"{floor:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"#bbbbbb\" stroke-width=\"1\"/>",
            floor + 4.0
        )
        .unwrap();
        writeln!(
            svg,
            "  <text x=\"{xp:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{}</text>",
            floor + 17.0,
            tick_label(xv)
        )
        .unwrap();
    }

    writeln!(
        svg,
        "  <rect x=\"{left:.1}\" y=\"{ceil:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>",
        right - left,
        floor - ceil
    )
    .unwrap();

    match &panel.kind {
        PanelKind::Lines(series) => {
            for (idx, s) in series.iter().enumerate() {
                let color = PALETTE[idx % PALETTE.len()];
                let mut pts = String::new();
                for &(x, y) in &s.points {
                    write!(pts, "{:.2},{:.2} ", frame.map_x(x), frame.map_y(y)).unwrap();
                }
                writeln!(
                    svg,
                    "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
                    pts.trim_end()
                )
                .unwrap();
                for &(x, y) in &s.points {
                    writeln!(
                        svg,
                        "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>",
                        frame.map_x(x),
                        frame.map_y(y)
                    )
                    .unwrap();
                }
                if !s.label.is_empty() {
                    let ly = ceil + 16.0 + 16.0 * idx as f64;
                    writeln!(
                        svg,
                        "  <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
                        right - 110.0,
                        ly - 4.0,
                        right - 86.0,
                        ly - 4.0
                    )
                    .unwrap();
                    writeln!(
                        svg,
                        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>",
                        right - 80.0,
                        ly,
                        escape(&s.label)
                    )
                    .unwrap();
                }
            }
        }
        PanelKind::Stems(values) => {
            let base = frame.map_y(frame.y.lo.max(0.0).min(frame.y.hi));
            let color = PALETTE[0];
            for (i, &v) in values.iter().enumerate() {
                let xp = frame.map_x(i as f64);
                let yp = frame.map_y(v);
                writeln!(
                    svg,
                    "  <line x1=\"{xp:.2}\" y1=\"{base:.2}\" x2=\"{xp:.2}\" y2=\"{yp:.2}\" stroke=\"{color}\" stroke-width=\"1.4\"/>"
                )
                .unwrap();
                writeln!(
                    svg,
                    "  <circle cx=\"{xp:.2}\" cy=\"{yp:.2}\" r=\"2.0\" fill=\"{color}\"/>"
                )
                .unwrap();
            }
        }
    }

    writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">{}</text>",
        (left + right) / 2.0,
        floor + 34.0,
        escape(&panel.x_label)
    )
    .unwrap();
    writeln!(
        svg,
        "  <text x=\"15\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 {:.1})\">{}</text>",
        (ceil + floor) / 2.0,
        (ceil + floor) / 2.0,
        escape(&panel.y_label)
    )
    .unwrap();
}

/// Renders panels stacked vertically into one standalone SVG document.
pub fn render_panels(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PANEL_WIDTH:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {PANEL_WIDTH:.0} {height:.0}\" font-family=\"sans-serif\">"
    )
    .unwrap();
    writeln!(svg, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut svg, panel, PANEL_HEIGHT * i as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Detection-probability curves, one series per recovery mode.
pub fn pd_panel(table: &PdTable, x_label: impl Into<String>) -> Panel {
    let mut modes: Vec<&'static str> = Vec::new();
    for cell in &table.cells {
        if !modes.contains(&cell.mode) {
            modes.push(cell.mode);
        }
    }
    let series = modes
        .into_iter()
        .map(|mode| {
            let points = table
                .cells
                .iter()
                .filter(|c| c.mode == mode)
                .map(|c| (c.point, c.pd()))
                .collect();
            Series::new(mode, points)
        })
        .collect();
    Panel {
        title: "Detection probability".to_string(),
        x_label: x_label.into(),
        y_label: "Pd".to_string(),
        kind: PanelKind::Lines(series),
        y_range: Some((0.0, 1.05)),
    }
}

pub fn render_pd_plot(table: &PdTable, x_label: &str) -> String {
    render_panels(&[pd_panel(table, x_label)])
}
