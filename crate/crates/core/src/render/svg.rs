//! Standalone SVG 1.1 plots. Output is a pure function of the [`PlotSpec`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nullsim::SimulationReport;
use crate::pplot::PValuePlotDiagnosis;
use crate::volcano::{Direction, VolcanoReport};

const NOMINAL_STROKE: &str = "#1f4fd1";
const CORRECTED_STROKE: &str = "#d11f1f";
const NEUTRAL_STROKE: &str = "#555555";
/// Cap on markers in the pooled simulation panel.
const POOLED_MARKERS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Pvalue,
    Volcano,
    SimulationGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerStyle {
    Plain,
    Increase,
    Decrease,
    Muted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub label: Option<String>,
    pub style: MarkerStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LineGeometry {
    Horizontal { y: f64 },
    Segment { x0: f64, y0: f64, x1: f64, y1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefLine {
    pub geometry: LineGeometry,
    /// Short role name, used as a CSS class (`uniform`, `nominal`, `bonferroni`, `null`).
    pub role: String,
    pub label: String,
    pub stroke: String,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub title: Option<String>,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub markers: Vec<Marker>,
    /// Fitted curves drawn as polylines.
    pub curves: Vec<Vec<(f64, f64)>>,
    pub lines: Vec<RefLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
    pub panels: Vec<Panel>,
}

impl PlotSpec {
    pub fn pvalue(d: &PValuePlotDiagnosis, title: &str) -> Self {
        let n = d.plot.len() as f64;
        let markers = d
            .plot
            .points
            .iter()
            .enumerate()
            .map(|(i, pt)| Marker {
                x: pt.rank as f64,
                y: pt.p,
                label: d.plot.labels.get(i).cloned(),
                style: MarkerStyle::Plain,
            })
            .collect();
        let steps = 60;
        let fit: Vec<(f64, f64)> = (0..=steps)
            .map(|k| {
                let x = 1.0 + (n - 1.0) * k as f64 / steps as f64;
                (x, d.quadratic_fit.eval(x))
            })
            .collect();
        PlotSpec {
            kind: PlotKind::Pvalue,
            title: title.to_string(),
            x_label: "Rank".into(),
            y_label: "p-value".into(),
            width: 640.0,
            height: 480.0,
            panels: vec![Panel {
                title: Some(format!("verdict: {}", d.verdict)),
                x_range: Some((0.0, n + 1.0)),
                y_range: Some((0.0, 1.0)),
                markers,
                curves: vec![fit],
                lines: vec![uniform_line(n)],
            }],
        }
    }

    pub fn volcano(v: &VolcanoReport, title: &str) -> Self {
        let markers = v
            .points
            .iter()
            .map(|pt| Marker {
                x: if v.log_x { pt.effect.ln() } else { pt.effect },
                y: pt.neg_log10_p,
                label: Some(pt.label.clone()),
                style: match (pt.significant, pt.direction) {
                    (true, Direction::Increase) => MarkerStyle::Increase,
                    (true, Direction::Decrease) => MarkerStyle::Decrease,
                    _ => MarkerStyle::Plain,
                },
            })
            .collect();
        let mut lines = vec![
            RefLine {
                geometry: LineGeometry::Horizontal { y: v.nominal_line },
                role: "nominal".into(),
                label: format!("p = {}", trim_number(v.alpha)),
                stroke: NOMINAL_STROKE.into(),
                dashed: false,
            },
            RefLine {
                geometry: LineGeometry::Horizontal { y: v.bonferroni_line },
                role: "bonferroni".into(),
                label: format!("p = {:.3e} (m = {})", v.corrected_alpha, v.m_tests),
                stroke: CORRECTED_STROKE.into(),
                dashed: false,
            },
        ];
        if v.m_tests == 1 {
            lines.pop();
        }
        PlotSpec {
            kind: PlotKind::Volcano,
            title: title.to_string(),
            x_label: if v.log_x { "ln(effect)".into() } else { "Effect".into() },
            y_label: "-log10(p)".into(),
            width: 640.0,
            height: 480.0,
            panels: vec![Panel {
                title: None,
                x_range: None,
                y_range: None,
                markers,
                curves: Vec::new(),
                lines,
            }],
        }
    }

    /// One panel per replication (up to `max_panels`), then a pooled panel.
    pub fn simulation_grid(r: &SimulationReport, max_panels: usize) -> Self {
        let panel_for = |title: String, ps: &[f64]| {
            let n = ps.len() as f64;
            Panel {
                title: Some(title),
                x_range: Some((0.0, n + 1.0)),
                y_range: Some((0.0, 1.0)),
                markers: ps
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| Marker {
                        x: (i + 1) as f64,
                        y: p,
                        label: None,
                        style: MarkerStyle::Plain,
                    })
                    .collect(),
                curves: Vec::new(),
                lines: vec![uniform_line(n)],
            }
        };
        let mut panels: Vec<Panel> = r
            .per_replication
            .iter()
            .take(max_panels)
            .map(|rep| panel_for(format!("#{} min p {:.4}", rep.index + 1, rep.min_p), &rep.ranked))
            .collect();
        if r.per_replication.len() > 1 {
            let all = r.pooled_ranked();
            let mut pooled = panel_for(format!("pooled ({} p-values)", all.len()), &[]);
            pooled.x_range = Some((0.0, all.len() as f64 + 1.0));
            pooled.lines = vec![uniform_line(all.len() as f64)];
            // Evenly spaced ranks keep the file small for large runs.
            let shown = all.len().min(POOLED_MARKERS);
            pooled.markers = (0..shown)
                .map(|k| {
                    let i = if shown == all.len() {
                        k
                    } else {
                        k * (all.len() - 1) / (shown - 1)
                    };
                    Marker {
                        x: (i + 1) as f64,
                        y: all[i],
                        label: None,
                        style: MarkerStyle::Muted,
                    }
                })
                .collect();
            panels.push(pooled);
        }
        let side = (panels.len() as f64).sqrt().ceil().max(1.0);
        PlotSpec {
            kind: PlotKind::SimulationGrid,
            title: format!(
                "Null simulation: {} x {} p-values, seed {}",
                r.config.replications, r.config.n_per_study, r.config.seed
            ),
            x_label: "Rank".into(),
            y_label: "p-value".into(),
            width: 220.0 * side,
            height: 200.0 * side + 40.0,
            panels,
        }
    }
}

fn uniform_line(n: f64) -> RefLine {
    RefLine {
        geometry: LineGeometry::Segment {
            x0: 0.0,
            y0: 0.0,
            x1: n + 1.0,
            y1: 1.0,
        },
        role: "uniform".into(),
        label: "uniform i/(n+1)".into(),
        stroke: NEUTRAL_STROKE.into(),
        dashed: true,
    }
}

struct Frame {
    left: f64,
    top: f64,
    w: f64,
    h: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.h - (y - self.y.0) / (self.y.1 - self.y.0) * self.h
    }
}

fn check_finite(spec: &PlotSpec) -> Result<()> {
    let mut values = vec![spec.width, spec.height];
    for p in &spec.panels {
        values.extend(p.markers.iter().flat_map(|m| [m.x, m.y]));
        values.extend(p.curves.iter().flatten().flat_map(|&(x, y)| [x, y]));
        for l in &p.lines {
            match l.geometry {
                LineGeometry::Horizontal { y } => values.push(y),
                LineGeometry::Segment { x0, y0, x1, y1 } => values.extend([x0, y0, x1, y1]),
            }
        }
        if let Some((a, b)) = p.x_range {
            values.extend([a, b]);
        }
        if let Some((a, b)) = p.y_range {
            values.extend([a, b]);
        }
    }
    match values.into_iter().find(|v| !v.is_finite()) {
        Some(bad) => Err(Error::domain("plot geometry", bad)),
        None => Ok(()),
    }
}

fn auto_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
    (lo - 0.06 * span, hi + 0.06 * span)
}

fn panel_ranges(p: &Panel) -> ((f64, f64), (f64, f64)) {
    let x = p.x_range.unwrap_or_else(|| {
        let mut xs: Vec<f64> = p.markers.iter().map(|m| m.x).collect();
        xs.extend(p.curves.iter().flatten().map(|c| c.0));
        auto_range(xs.into_iter())
    });
    let y = p.y_range.unwrap_or_else(|| {
        let mut ys: Vec<f64> = p.markers.iter().map(|m| m.y).collect();
        ys.extend(p.lines.iter().filter_map(|l| match l.geometry {
            LineGeometry::Horizontal { y } => Some(y),
            LineGeometry::Segment { .. } => None,
        }));
        ys.push(0.0);
        let (_, hi) = auto_range(ys.into_iter());
        (0.0, hi)
    });
    (x, y)
}

/// Tick positions at 1, 2 or 5 × 10^k spacing.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render_svg(spec: &PlotSpec) -> Result<String> {
    if spec.panels.is_empty() || spec.panels.iter().any(|p| p.markers.is_empty()) {
        return Err(Error::EmptyPlot);
    }
    check_finite(spec)?;

    let mut out = String::new();
    let (w, h) = (spec.width, spec.height);
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        out,
        "<style>.pt{{fill:#222}} .pt-increase{{fill:{CORRECTED_STROKE}}} .pt-decrease{{fill:{NOMINAL_STROKE}}} .pt-muted{{fill:#222;fill-opacity:0.35}} .fit{{fill:none;stroke:#2a9d3a;stroke-width:1.5}} .axis{{stroke:#000}} .tick{{font-size:10px}}</style>"
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(&spec.title)
    );

    let cols = match spec.kind {
        PlotKind::SimulationGrid => (spec.panels.len() as f64).sqrt().ceil() as usize,
        _ => 1,
    }
    .max(1);
    let rows = spec.panels.len().div_ceil(cols);
    let cell_w = w / cols as f64;
    let cell_h = (h - 34.0) / rows as f64;
    let compact = cols > 1;

    for (i, panel) in spec.panels.iter().enumerate() {
        let (cx, cy) = ((i % cols) as f64 * cell_w, 34.0 + (i / cols) as f64 * cell_h);
        let (ml, mr, mt, mb) = if compact {
            (34.0, 10.0, 20.0, 24.0)
        } else {
            (64.0, 24.0, 22.0, 48.0)
        };
        let (xr, yr) = panel_ranges(panel);
        let frame = Frame {
            left: cx + ml,
            top: cy + mt,
            w: cell_w - ml - mr,
            h: cell_h - mt - mb,
            x: xr,
            y: yr,
        };
        render_panel(&mut out, spec, panel, &frame, compact);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn render_panel(out: &mut String, spec: &PlotSpec, panel: &Panel, f: &Frame, compact: bool) {
    let _ = writeln!(out, "<g class=\"panel\">");
    if let Some(t) = &panel.title {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="{}">{}</text>"#,
            f.left + f.w / 2.0,
            f.top - 6.0,
            if compact { 10 } else { 12 },
            escape(t)
        );
    }
    let (x0, y0, x1, y1) = (f.left, f.top + f.h, f.left + f.w, f.top);
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" class="axis"/>"#,
        f.w, f.h
    );

    let n_ticks = if compact { 3 } else { 6 };
    for t in ticks(f.x.0, f.x.1, n_ticks) {
        let px = f.px(t);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" class="axis"/><text x="{px:.2}" y="{:.2}" text-anchor="middle" class="tick">{}</text>"#,
            y0 + 4.0,
            y0 + 15.0,
            trim_number(t)
        );
    }
    for t in ticks(f.y.0, f.y.1, n_ticks) {
        let py = f.py(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" class="axis"/><text x="{:.2}" y="{:.2}" text-anchor="end" class="tick">{}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            py + 3.5,
            trim_number(t)
        );
    }
    if !compact {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
            f.left + f.w / 2.0,
            y0 + 36.0,
            escape(&spec.x_label)
        );
        let (lx, ly) = (f.left - 46.0, f.top + f.h / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
            escape(&spec.y_label)
        );
    }

    let _ = writeln!(
        out,
        r#"<clipPath id="clip-{:.0}-{:.0}"><rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
        f.left, f.top, f.w, f.h
    );
    let clip = format!("url(#clip-{:.0}-{:.0})", f.left, f.top);

    for line in &panel.lines {
        let dash = if line.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        match line.geometry {
            LineGeometry::Horizontal { y } => {
                let py = f.py(y);
                let _ = writeln!(
                    out,
                    r#"<line class="ref ref-{}" data-y="{y:.4}" x1="{x0:.2}" y1="{py:.2}" x2="{x1:.2}" y2="{py:.2}" stroke="{}" stroke-width="1.5"{dash}><title>{}</title></line>"#,
                    line.role,
                    line.stroke,
                    escape(&line.label)
                );
            }
            LineGeometry::Segment {
                x0: a,
                y0: b,
                x1: c,
                y1: d,
            } => {
                let _ = writeln!(
                    out,
                    r#"<line class="ref ref-{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1"{dash} clip-path="{clip}"><title>{}</title></line>"#,
                    line.role,
                    f.px(a),
                    f.py(b),
                    f.px(c),
                    f.py(d),
                    line.stroke,
                    escape(&line.label)
                );
            }
        }
    }
    for curve in &panel.curves {
        let pts: Vec<String> = curve
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="fit" clip-path="{clip}" points="{}"/>"#,
            pts.join(" ")
        );
    }
    let r = if compact { 2.2 } else { 3.5 };
    for m in &panel.markers {
        let class = match m.style {
            MarkerStyle::Plain => "pt",
            MarkerStyle::Increase => "pt pt-increase",
            MarkerStyle::Decrease => "pt pt-decrease",
            MarkerStyle::Muted => "pt pt-muted",
        };
        match &m.label {
            Some(label) => {
                let _ = writeln!(
                    out,
                    r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{r}"><title>{} ({}, {})</title></circle>"#,
                    f.px(m.x),
                    f.py(m.y),
                    escape(label),
                    trim_number(m.x),
                    trim_number(m.y)
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{r}"/>"#,
                    f.px(m.x),
                    f.py(m.y)
                );
            }
        }
    }
    let _ = writeln!(out, "</g>");
}
