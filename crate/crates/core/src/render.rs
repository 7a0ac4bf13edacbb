//! SVG output: grid heatmaps for both topologies, line charts and grouped
//! bar panels. Output depends only on the inputs, so files diff cleanly.

use std::fmt::Write as _;

use crate::analysis::MapLayer;
use crate::clustering::CompareRow;
use crate::error::{Result, SomError};
use crate::grid::TopologyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colormap {
    /// Dark purple through teal to yellow.
    Sequential,
    /// 12-color cycle for classes and clusters.
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    pub cell_size: f64,
    pub colormap: Colormap,
    pub show_colorbar: bool,
    pub title: String,
    pub absent_fill: String,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            cell_size: 24.0,
            colormap: Colormap::Sequential,
            show_colorbar: true,
            title: String::new(),
            absent_fill: "#d9d9d9".into(),
        }
    }
}

impl RenderStyle {
    pub fn titled(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Self::default()
        }
    }

    pub fn categorical(mut self) -> Self {
        self.colormap = Colormap::Categorical;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(SomError::Parameter(format!("cell size must be positive, got {}", self.cell_size)));
        }
        Ok(())
    }
}

const SEQUENTIAL: [[u8; 3]; 11] = [
    [0x44, 0x01, 0x54],
    [0x48, 0x24, 0x75],
    [0x41, 0x44, 0x87],
    [0x35, 0x5f, 0x8d],
    [0x2a, 0x78, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x22, 0xa8, 0x84],
    [0x44, 0xbf, 0x70],
    [0x7a, 0xd1, 0x51],
    [0xbd, 0xdf, 0x26],
    [0xfd, 0xe7, 0x25],
];

pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];

/// Number of distinct sequential colors. Each step is strictly brighter than
/// the previous one.
pub const SEQUENTIAL_LEVELS: usize = 128;

fn anchor_blend(t: f64) -> [u8; 3] {
    let pos = t * (SEQUENTIAL.len() - 1) as f64;
    let i = (pos.floor() as usize).min(SEQUENTIAL.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (SEQUENTIAL[i], SEQUENTIAL[i + 1]);
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8;
    }
    out
}

/// Sequential color for `t` in [0, 1] (clamped), quantized to
/// [`SEQUENTIAL_LEVELS`] steps.
pub fn sequential_rgb(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let level = (t * (SEQUENTIAL_LEVELS - 1) as f64).round();
    anchor_blend(level / (SEQUENTIAL_LEVELS - 1) as f64)
}

fn hex(rgb: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

/// Relative luminance of an sRGB color.
pub fn luminance(rgb: [u8; 3]) -> f64 {
    let lin = |c: u8| {
        let c = c as f64 / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    };
    0.2126 * lin(rgb[0]) + 0.7152 * lin(rgb[1]) + 0.0722 * lin(rgb[2])
}

pub fn category_color(id: i64) -> &'static str {
    PALETTE[id.rem_euclid(PALETTE.len() as i64) as usize]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Short fixed-width tick label.
fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Self {
        Self { body: String::new() }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.body.push_str(s.as_ref());
        self.body.push('\n');
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, s: &str) {
        self.line(format!(
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="{size}">{}</text>"#,
            esc(s)
        ));
    }

    fn finish(self, width: f64, height: f64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}" font-family="sans-serif">"#
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{width:.2}" height="{height:.2}" fill="white"/>"#);
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

const MARGIN: f64 = 10.0;
const TITLE_H: f64 = 24.0;

/// One shape per neuron: squares for rectangular grids, pointy-top hexagons
/// with odd rows shifted right for hexagonal grids.
pub fn render_map(layer: &MapLayer, style: &RenderStyle) -> Result<String> {
    style.validate()?;
    let topo = layer.topology();
    let s = style.cell_size;
    let top = if style.title.is_empty() { MARGIN } else { MARGIN + TITLE_H };
    let radius = s / 3f64.sqrt();
    let (grid_w, grid_h) = match topo.kind() {
        TopologyKind::Rectangular => (topo.cols() as f64 * s, topo.rows() as f64 * s),
        TopologyKind::Hexagonal => {
            let shift = if topo.rows() > 1 { 0.5 } else { 0.0 };
            ((topo.cols() as f64 + shift) * s, radius * (2.0 + 1.5 * (topo.rows() as f64 - 1.0)))
        }
    };

    let range = layer.range();
    let fill = |v: Option<f64>| -> String {
        match (v, style.colormap) {
            (None, _) => style.absent_fill.clone(),
            (Some(v), Colormap::Categorical) => category_color(v.round() as i64).to_string(),
            (Some(v), Colormap::Sequential) => {
                let (lo, hi) = range.expect("present value implies a range");
                let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                hex(sequential_rgb(t))
            }
        }
    };

    let mut svg = Svg::new();
    if !style.title.is_empty() {
        svg.text(MARGIN, MARGIN + 16.0, "start", 14, &style.title);
    }
    svg.line(r##"<g class="cells" stroke="#ffffff" stroke-width="0.5">"##);
    for (c, v) in topo.coords().zip(layer.values()) {
        let f = fill(*v);
        match topo.kind() {
            TopologyKind::Rectangular => svg.line(format!(
                r#"<rect class="cell" data-row="{}" data-col="{}" x="{:.2}" y="{:.2}" width="{s:.2}" height="{s:.2}" fill="{f}"/>"#,
                c.row,
                c.col,
                MARGIN + c.col as f64 * s,
                top + c.row as f64 * s
            )),
            TopologyKind::Hexagonal => {
                let cx = MARGIN + s / 2.0 + (c.col as f64 + if c.row % 2 == 1 { 0.5 } else { 0.0 }) * s;
                let cy = top + radius + c.row as f64 * 1.5 * radius;
                let pts: Vec<String> = (0..6)
                    .map(|i| {
                        let a = (60.0 * i as f64 - 90.0).to_radians();
                        format!("{:.2},{:.2}", cx + radius * a.cos(), cy + radius * a.sin())
                    })
                    .collect();
                svg.line(format!(
                    r#"<polygon class="cell" data-row="{}" data-col="{}" points="{}" fill="{f}"/>"#,
                    c.row,
                    c.col,
                    pts.join(" ")
                ));
            }
        }
    }
    svg.line("</g>");

    let mut width = MARGIN * 2.0 + grid_w;
    let mut height = top + grid_h + MARGIN;
    if style.show_colorbar {
        let x0 = MARGIN * 2.0 + grid_w;
        let (w, h) = legend(&mut svg, layer, style, x0, top, grid_h);
        width = width.max(x0 + w + MARGIN);
        height = height.max(top + h + MARGIN);
    }
    Ok(svg.finish(width, height))
}

/// Colorbar or category legend at (`x0`, `y0`); returns its size.
fn legend(svg: &mut Svg, layer: &MapLayer, style: &RenderStyle, x0: f64, y0: f64, grid_h: f64) -> (f64, f64) {
    let Some((lo, hi)) = layer.range() else {
        svg.line(format!(
            r#"<rect class="legend" x="{x0:.2}" y="{y0:.2}" width="14.00" height="14.00" fill="{}"/>"#,
            style.absent_fill
        ));
        svg.text(x0 + 20.0, y0 + 11.0, "start", 11, "no data");
        return (80.0, 14.0);
    };
    match style.colormap {
        Colormap::Sequential => {
            let h = grid_h.max(60.0);
            svg.line(r#"<defs><linearGradient id="colorbar" x1="0" y1="1" x2="0" y2="0">"#);
            for (i, rgb) in SEQUENTIAL.iter().enumerate() {
                svg.line(format!(
                    r#"<stop offset="{:.2}" stop-color="{}"/>"#,
                    i as f64 / (SEQUENTIAL.len() - 1) as f64,
                    hex(*rgb)
                ));
            }
            svg.line("</linearGradient></defs>");
            svg.line(format!(
                r#"<rect class="colorbar" x="{x0:.2}" y="{y0:.2}" width="14.00" height="{h:.2}" fill="url(#colorbar)"/>"#
            ));
            svg.text(x0 + 20.0, y0 + 10.0, "start", 11, &tick(hi));
            svg.text(x0 + 20.0, y0 + h, "start", 11, &tick(lo));
            (80.0, h)
        }
        Colormap::Categorical => {
            let mut ids: Vec<i64> = layer.present().map(|v| v.round() as i64).collect();
            ids.sort_unstable();
            ids.dedup();
            let mut y = y0;
            for &id in &ids {
                svg.line(format!(
                    r#"<rect class="legend" x="{x0:.2}" y="{y:.2}" width="14.00" height="14.00" fill="{}"/>"#,
                    category_color(id)
                ));
                svg.text(x0 + 20.0, y + 11.0, "start", 11, &id.to_string());
                y += 18.0;
            }
            if ids.len() > PALETTE.len() {
                svg.text(x0, y + 11.0, "start", 11, &format!("{} classes, colors repeat", ids.len()));
                y += 18.0;
            }
            (120.0, y - y0)
        }
    }
}

/// Named series of `(x, y)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// Points at x = 1, 2, ... (epoch numbering).
    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Self {
        Self {
            name: name.into(),
            points: values.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect(),
        }
    }

    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub series: Vec<Series>,
}

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 220.0;
const AXIS_L: f64 = 56.0;
const AXIS_B: f64 = 36.0;

/// Padded data range; degenerate ranges are widened so every point lies
/// strictly inside.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        let pad = if lo == 0.0 { 0.5 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

struct Frame {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, v: f64) -> f64 {
        self.x + (v - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, v: f64) -> f64 {
        self.y + self.h - (v - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, svg: &mut Svg, x_ticks: bool) {
        svg.line(format!(
            r##"<rect class="frame" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444444"/>"##,
            self.x, self.y, self.w, self.h
        ));
        for i in 0..=4 {
            let v = self.yr.0 + (self.yr.1 - self.yr.0) * i as f64 / 4.0;
            let y = self.py(v);
            svg.line(format!(
                r##"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#444444"/>"##,
                self.x - 4.0,
                self.x
            ));
            svg.text(self.x - 6.0, y + 4.0, "end", 10, &tick(v));
        }
        if x_ticks {
            for i in 0..=4 {
                let v = self.xr.0 + (self.xr.1 - self.xr.0) * i as f64 / 4.0;
                let x = self.px(v);
                let y = self.y + self.h;
                svg.line(format!(
                    r##"<line class="tick" x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444444"/>"##,
                    y + 4.0
                ));
                svg.text(x, y + 16.0, "middle", 10, &tick(v));
            }
        }
    }
}

/// Side-by-side line-chart panels sharing one legend per panel.
pub fn render_panels(panels: &[Panel], style: &RenderStyle) -> Result<String> {
    style.validate()?;
    let top = if style.title.is_empty() { MARGIN } else { MARGIN + TITLE_H };
    let mut svg = Svg::new();
    if !style.title.is_empty() {
        svg.text(MARGIN, MARGIN + 16.0, "start", 14, &style.title);
    }
    for (p, panel) in panels.iter().enumerate() {
        let ox = MARGIN + p as f64 * (PANEL_W + MARGIN);
        let pts = panel.series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
        let (xlo, xhi, ylo, yhi) = pts.fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        let xr = if xlo < xhi { (xlo, xhi) } else { padded(xlo, xhi) };
        let frame = Frame {
            x: ox + AXIS_L,
            y: top + 20.0,
            w: PANEL_W - AXIS_L - 8.0,
            h: PANEL_H - AXIS_B - 20.0,
            xr,
            yr: padded(ylo, yhi),
        };
        svg.line(format!(r#"<g class="panel" data-index="{p}">"#));
        svg.text(frame.x + frame.w / 2.0, top + 14.0, "middle", 12, &panel.title);
        frame.axes(&mut svg, true);
        svg.text(frame.x + frame.w / 2.0, frame.y + frame.h + 32.0, "middle", 11, &panel.x_label);
        for (i, series) in panel.series.iter().enumerate() {
            let color = category_color(i as i64);
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| (frame.px(x), frame.py(y)))
                .collect();
            match pts.len() {
                0 => {}
                1 => svg.line(format!(
                    r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3.00" fill="{color}"/>"#,
                    pts[0].0, pts[0].1
                )),
                _ => {
                    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    svg.line(format!(
                        r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="1.50"/>"#,
                        coords.join(" ")
                    ));
                }
            }
            let ly = frame.y + 8.0 + i as f64 * 14.0;
            let lx = frame.x + frame.w - 90.0;
            svg.line(format!(
                r#"<rect class="legend" x="{lx:.2}" y="{:.2}" width="10.00" height="3.00" fill="{color}"/>"#,
                ly - 4.0
            ));
            svg.text(lx + 14.0, ly, "start", 10, &series.name);
        }
        svg.line("</g>");
    }
    let n = panels.len().max(1) as f64;
    Ok(svg.finish(MARGIN + n * (PANEL_W + MARGIN), top + PANEL_H + MARGIN))
}

/// Single-panel line chart titled by the style.
pub fn render_curves(series: &[Series], style: &RenderStyle) -> Result<String> {
    let panel = Panel {
        title: String::new(),
        x_label: String::new(),
        series: series.to_vec(),
    };
    render_panels(&[panel], style)
}

/// Two panels: quantization error and topographic error per epoch.
pub fn render_learning_curves(qe: &[f64], te: &[f64], style: &RenderStyle) -> Result<String> {
    render_panels(
        &[
            Panel {
                title: "Quantization error".into(),
                x_label: "epoch".into(),
                series: vec![Series::from_values("QE", qe)],
            },
            Panel {
                title: "Topographic error".into(),
                x_label: "epoch".into(),
                series: vec![Series::from_values("TE", te)],
            },
        ],
        style,
    )
}

/// One panel per quality metric, one bar per (space, algorithm) row.
pub fn render_bars(rows: &[CompareRow], style: &RenderStyle) -> Result<String> {
    style.validate()?;
    let metrics: [(&str, fn(&CompareRow) -> f64); 3] = [
        ("silhouette", |r| r.quality.silhouette),
        ("davies_bouldin", |r| r.quality.davies_bouldin),
        ("calinski_harabasz", |r| r.quality.calinski_harabasz),
    ];
    let top = if style.title.is_empty() { MARGIN } else { MARGIN + TITLE_H };
    let mut svg = Svg::new();
    if !style.title.is_empty() {
        svg.text(MARGIN, MARGIN + 16.0, "start", 14, &style.title);
    }
    for (p, (name, get)) in metrics.iter().enumerate() {
        let ox = MARGIN + p as f64 * (PANEL_W + MARGIN);
        let vals: Vec<f64> = rows.iter().map(get).map(|v| if v.is_finite() { v } else { 0.0 }).collect();
        let lo = vals.iter().copied().fold(0.0f64, f64::min);
        let hi = vals.iter().copied().fold(0.0f64, f64::max);
        let frame = Frame {
            x: ox + AXIS_L,
            y: top + 20.0,
            w: PANEL_W - AXIS_L - 8.0,
            h: PANEL_H - AXIS_B - 20.0,
            xr: (0.0, rows.len().max(1) as f64),
            yr: padded(lo, hi),
        };
        svg.line(format!(r#"<g class="panel" data-metric="{name}">"#));
        svg.text(frame.x + frame.w / 2.0, top + 14.0, "middle", 12, name);
        frame.axes(&mut svg, false);
        let base = frame.py(0.0);
        svg.line(format!(
            r##"<line class="baseline" x1="{:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#444444"/>"##,
            frame.x,
            frame.x + frame.w
        ));
        for (i, (row, &v)) in rows.iter().zip(&vals).enumerate() {
            let x = frame.px(i as f64 + 0.15);
            let w = frame.px(i as f64 + 0.85) - x;
            let y = frame.py(v);
            let (ry, rh) = if v >= 0.0 { (y, base - y) } else { (base, y - base) };
            let label = format!("{}/{}", row.space, row.algorithm);
            svg.line(format!(
                r#"<rect class="bar" data-label="{}" x="{x:.2}" y="{ry:.2}" width="{w:.2}" height="{rh:.2}" fill="{}"/>"#,
                esc(&label),
                category_color(i as i64)
            ));
            svg.text(x + w / 2.0, frame.y + frame.h + 14.0, "middle", 9, &label);
        }
        svg.line("</g>");
    }
    Ok(svg.finish(MARGIN + 3.0 * (PANEL_W + MARGIN), top + PANEL_H + MARGIN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{Algorithm, ClusterSpace, Objective, Quality};
    use crate::grid::GridTopology;

    fn count(svg: &str, needle: &str) -> usize {
        svg.matches(needle).count()
    }

    fn layer(kind: TopologyKind, rows: usize, cols: usize, values: Vec<Option<f64>>) -> MapLayer {
        MapLayer::new(GridTopology::new(kind, rows, cols).unwrap(), values, "t").unwrap()
    }

    #[test]
    fn one_shape_per_neuron() {
        for kind in [TopologyKind::Rectangular, TopologyKind::Hexagonal] {
            let l = layer(kind, 2, 3, (0..6).map(|i| Some(i as f64)).collect());
            let svg = render_map(&l, &RenderStyle::default()).unwrap();
            assert_eq!(count(&svg, r#"class="cell""#), 6);
        }
    }

    #[test]
    fn constant_layer_single_fill() {
        let l = layer(TopologyKind::Hexagonal, 3, 3, vec![Some(2.5); 9]);
        let svg = render_map(&l, &RenderStyle::default()).unwrap();
        let fills: std::collections::BTreeSet<&str> = svg
            .lines()
            .filter(|l| l.contains(r#"class="cell""#))
            .map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap())
            .collect();
        assert_eq!(fills.len(), 1);
    }

    #[test]
    fn absent_cells_and_empty_layer() {
        let style = RenderStyle::default();
        let l = layer(TopologyKind::Rectangular, 1, 3, vec![Some(1.0), None, Some(2.0)]);
        let svg = render_map(&l, &style).unwrap();
        assert_eq!(count(&svg, &format!(r#"fill="{}""#, style.absent_fill)), 1);
        let empty = layer(TopologyKind::Rectangular, 2, 2, vec![None; 4]);
        let svg = render_map(&empty, &style).unwrap();
        assert!(svg.contains("no data"));
        assert_eq!(count(&svg, &format!(r#"fill="{}""#, style.absent_fill)), 5);
    }

    #[test]
    fn sequential_map_is_monotone_in_luminance() {
        for k in 1..SEQUENTIAL_LEVELS {
            let step = |k: usize| luminance(sequential_rgb(k as f64 / (SEQUENTIAL_LEVELS - 1) as f64));
            assert!(step(k) > step(k - 1), "level {k}");
        }
        let mut prev = luminance(sequential_rgb(0.0));
        for i in 1..=1000 {
            let l = luminance(sequential_rgb(i as f64 / 1000.0));
            assert!(l >= prev - 1e-12, "step {i}");
            prev = l;
        }
        assert_eq!(hex(sequential_rgb(0.0)), "#440154");
        assert_eq!(hex(sequential_rgb(1.0)), "#fde725");
    }

    #[test]
    fn categorical_wraps_with_warning() {
        let l = layer(TopologyKind::Rectangular, 2, 7, (0..14).map(|i| Some(i as f64)).collect());
        let svg = render_map(&l, &RenderStyle::default().categorical()).unwrap();
        assert!(svg.contains("colors repeat"));
        assert_eq!(category_color(12), category_color(0));
    }

    #[test]
    fn curves_markers_and_bounds() {
        let one = render_curves(&[Series::from_values("a", &[0.7])], &RenderStyle::default()).unwrap();
        assert_eq!(count(&one, r#"class="marker""#), 1);
        assert_eq!(count(&one, r#"class="series""#), 0);

        let vals = [3.0, -1.0, 10.0, 4.0];
        let svg = render_curves(&[Series::from_values("a", &vals)], &RenderStyle::default()).unwrap();
        let line = svg.lines().find(|l| l.contains(r#"class="series""#)).unwrap();
        let frame = svg.lines().find(|l| l.contains(r#"class="frame""#)).unwrap();
        let attr = |s: &str, k: &str| -> f64 {
            s.split(&format!(" {k}=\"")).nth(1).unwrap().split('"').next().unwrap().parse().unwrap()
        };
        let (fx, fy, fw, fh) = (attr(frame, "x"), attr(frame, "y"), attr(frame, "width"), attr(frame, "height"));
        let pts = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        for p in pts.split(' ') {
            let (x, y) = p.split_once(',').unwrap();
            let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
            assert!(x >= fx && x <= fx + fw && y > fy && y < fy + fh, "{p}");
        }
    }

    #[test]
    fn learning_curves_have_two_panels() {
        let svg = render_learning_curves(&[1.0, 0.5, 0.4], &[0.2, 0.1, 0.1], &RenderStyle::default()).unwrap();
        assert_eq!(count(&svg, r#"class="panel""#), 2);
        assert_eq!(count(&svg, r#"class="series""#), 2);
    }

    fn compare_rows() -> Vec<CompareRow> {
        let q = |s: f64| Quality {
            silhouette: s,
            davies_bouldin: 0.8,
            calinski_harabasz: 120.0,
        };
        vec![
            CompareRow {
                space: ClusterSpace::WEIGHTS,
                algorithm: Algorithm::KMeans,
                k: 3,
                quality: q(0.6),
                objective: Objective::Inertia(4.0),
            },
            CompareRow {
                space: ClusterSpace::POSITIONS,
                algorithm: Algorithm::Gmm,
                k: 3,
                quality: q(-0.2),
                objective: Objective::LogLikelihood(-10.0),
            },
        ]
    }

    #[test]
    fn bars_per_panel_and_negative_below_baseline() {
        let svg = render_bars(&compare_rows(), &RenderStyle::default()).unwrap();
        assert_eq!(count(&svg, r#"class="bar""#), 6);
        let panel: Vec<&str> = svg
            .split(r#"data-metric="silhouette""#)
            .nth(1)
            .unwrap()
            .split("</g>")
            .next()
            .unwrap()
            .lines()
            .collect();
        let base: f64 = panel
            .iter()
            .find(|l| l.contains("baseline"))
            .unwrap()
            .split(" y1=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        let neg = panel.iter().find(|l| l.contains("positions/gmm") && l.contains("<rect")).unwrap();
        let y: f64 = neg.split(" y=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
        assert!((y - base).abs() < 1e-9);
    }

    #[test]
    fn rendering_is_pure() {
        let l = layer(TopologyKind::Hexagonal, 3, 4, (0..12).map(|i| Some((i * 5 % 7) as f64)).collect());
        let s = RenderStyle::titled("U & <matrix>");
        assert_eq!(render_map(&l, &s).unwrap(), render_map(&l, &s).unwrap());
        assert!(render_map(&l, &s).unwrap().contains("U &amp; &lt;matrix&gt;"));
        let bad = RenderStyle {
            cell_size: 0.0,
            ..RenderStyle::default()
        };
        assert!(render_map(&l, &bad).is_err());
    }
}
