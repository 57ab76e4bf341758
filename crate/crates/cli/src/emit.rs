//! CSV, JSON and SVG emitters. Every file lands under the run's output
//! directory and is written to a temporary name first, then renamed into
//! place.

use anyhow::{Context, Result};
use sdosc_core::bifurcation::{CurveKind, CurveSample};
use sdosc_core::integrate::{EventKind, Trajectory};
use sdosc_core::model::{lienard_data, Chart, Params, PhasePoint};
use sdosc_core::poincare::{CycleKind, CycleRecord, Stability};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Decimal with 17 significant digits; diff-friendly and round-trip exact.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn curve_kind_name(kind: CurveKind) -> &'static str {
    match kind {
        CurveKind::Hopf => "hopf",
        CurveKind::Grazing => "grazing",
        CurveKind::Dl1 => "dl1",
        CurveKind::Dl2 => "dl2",
        CurveKind::B1 => "b1",
        CurveKind::B2 => "b2",
        CurveKind::B3 => "b3",
    }
}

pub const CURVE_CSV_HEADER: &str = "kind,a,b,delta,residual,valid";

pub fn curve_csv(samples: &[CurveSample]) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            curve_kind_name(s.kind),
            num(s.a),
            num(s.b),
            num(s.delta),
            num(s.residual),
            s.valid
        );
    }
    out
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,x,y,chart,event";

fn event_name(kind: EventKind) -> &'static str {
    match kind {
        EventKind::SwitchingLine => "switching_line",
        EventKind::PositiveXAxis => "positive_x_axis",
        EventKind::NegativeXAxis => "negative_x_axis",
        EventKind::CustomSection { .. } => "custom_section",
        EventKind::Graze => "graze",
    }
}

pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::from(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for &(t, p) in &tr.samples {
        let event = tr
            .events
            .iter()
            .find(|e| e.t.to_bits() == t.to_bits())
            .map(|e| event_name(e.kind))
            .unwrap_or("");
        let chart = match p.chart {
            Chart::Sd => "sd",
            Chart::Lienard => "lienard",
        };
        let _ = writeln!(out, "{},{},{},{},{}", num(t), num(p.x), num(p.y), chart, event);
    }
    out
}

#[derive(Debug, Serialize)]
pub struct CycleOut {
    pub kind: &'static str,
    pub stability: &'static str,
    pub c_left: Option<f64>,
    pub x_right: f64,
    pub period: f64,
    pub div_integral: f64,
    pub min_x: f64,
    pub max_x: f64,
}

pub fn cycle_out(c: &CycleRecord) -> CycleOut {
    CycleOut {
        kind: match c.kind {
            CycleKind::Crossing => "crossing",
            CycleKind::Small => "small",
            CycleKind::Grazing => "grazing",
        },
        stability: match c.stability {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::SemiStableExtStable => "semi_stable_ext_stable",
            Stability::SemiStableExtUnstable => "semi_stable_ext_unstable",
        },
        c_left: c.c_left,
        x_right: c.x_right,
        period: c.period,
        div_integral: c.div_integral,
        min_x: c.min_x(),
        max_x: c.max_x(),
    }
}

/// What to draw and where. Orbits arrive already integrated from the seed
/// points, so the spec carries only the frame and layer toggles.
#[derive(Debug, Clone)]
pub struct PortraitSpec {
    /// `(x_min, x_max, y_min, y_max)` in SD-chart coordinates.
    pub window: (f64, f64, f64, f64),
    pub nullcline: bool,
    pub switching_line: bool,
    pub equilibrium_marker: bool,
}

impl PortraitSpec {
    pub fn validate(&self) -> Result<()> {
        let (x0, x1, y0, y1) = self.window;
        anyhow::ensure!(
            x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite() && x1 > x0 && y1 > y0,
            "portrait window must be finite and nondegenerate"
        );
        Ok(())
    }
}

fn stability_class(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        _ => "semistable",
    }
}

/// Splits a point sequence into maximal runs inside the window and renders
/// each as a polyline; vertices outside the window are dropped so that every
/// emitted vertex sits inside the viewBox.
fn polylines(
    out: &mut String,
    pts: impl Iterator<Item = (f64, f64)>,
    window: (f64, f64, f64, f64),
    class: &str,
    closed: bool,
) {
    let (x0, x1, y0, y1) = window;
    let inside = |p: &(f64, f64)| p.0 >= x0 && p.0 <= x1 && p.1 >= y0 && p.1 <= y1;
    let all: Vec<(f64, f64)> = pts.collect();
    let fully_inside = all.iter().all(inside);
    let mut run: Vec<(f64, f64)> = Vec::new();
    let mut flush = |run: &mut Vec<(f64, f64)>, close: bool| {
        if run.len() >= 2 {
            let tag = if close { "polygon" } else { "polyline" };
            let _ = write!(out, "  <{tag} class=\"{class}\" points=\"");
            for (i, (x, y)) in run.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{:.6},{:.6}", x, -y);
            }
            let _ = writeln!(out, "\"/>");
        }
        run.clear();
    };
    for p in all.iter() {
        if inside(p) {
            run.push(*p);
        } else {
            flush(&mut run, false);
        }
    }
    flush(&mut run, closed && fully_inside);
}

/// Builds a standalone SVG phase portrait in the SD chart: orbits, detected
/// cycles (solid stable, dashed unstable, dot-dash semi-stable), the
/// switching line, the nullcline `y = F(x)` and the equilibrium marker.
/// The y axis points up; the viewBox covers exactly the requested window.
pub fn emit_portrait_svg(
    spec: &PortraitSpec,
    params: &Params,
    cycles: &[CycleRecord],
    trajectories: &[Trajectory],
) -> Result<String> {
    spec.validate()?;
    let (x0, x1, y0, y1) = spec.window;
    let (w, h) = (x1 - x0, y1 - y0);
    let stroke = 0.004 * w.max(h);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{x0} {} {w} {h}\" width=\"720\" height=\"{:.0}\">",
        -y1,
        720.0 * h / w
    );
    let _ = writeln!(
        svg,
        "  <style>\n    .orbit {{ fill: none; stroke: #8890a0; stroke-width: {sw}; }}\n    .cycle {{ fill: none; stroke-width: {sw2}; }}\n    .stable {{ stroke: #1a7f37; }}\n    .unstable {{ stroke: #c03221; stroke-dasharray: {d1},{d1}; }}\n    .semistable {{ stroke: #aa6f10; stroke-dasharray: {d2},{d1},{d0},{d1}; }}\n    .axis {{ stroke: #c8ccd4; stroke-width: {sw}; }}\n    .switching {{ stroke: #3352a3; stroke-width: {sw2}; }}\n    .nullcline {{ fill: none; stroke: #9a58b5; stroke-width: {sw}; stroke-dasharray: {d1},{d0}; }}\n  </style>",
        sw = stroke,
        sw2 = 1.8 * stroke,
        d0 = stroke * 2.0,
        d1 = stroke * 4.0,
        d2 = stroke * 9.0,
    );
    // axes
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(svg, "  <line class=\"axis\" x1=\"{x0}\" y1=\"0\" x2=\"{x1}\" y2=\"0\"/>");
    }
    if spec.switching_line && x0 < 0.0 && x1 > 0.0 {
        let _ = writeln!(
            svg,
            "  <line class=\"switching\" x1=\"0\" y1=\"{}\" x2=\"0\" y2=\"{}\"/>",
            -y1, -y0
        );
    }
    if spec.nullcline {
        let n = 400;
        let pts = (0..=n).map(|i| {
            let x = x0 + w * i as f64 / n as f64;
            (x, lienard_data(x, params).f_int)
        });
        polylines(&mut svg, pts, spec.window, "nullcline", false);
    }
    for tr in trajectories {
        let pts = tr.samples.iter().map(|(_, p)| {
            let q = p.to_chart(Chart::Sd, params);
            (q.x, q.y)
        });
        polylines(&mut svg, pts, spec.window, "orbit", false);
    }
    for c in cycles {
        let class = format!("cycle {}", stability_class(c.stability));
        let pts = c.points.iter().map(|p| {
            let q = p.to_chart(Chart::Sd, params);
            (q.x, q.y)
        });
        polylines(&mut svg, pts, spec.window, &class, true);
    }
    if spec.equilibrium_marker {
        let er = PhasePoint::sd(
            params.equilibrium_x(),
            lienard_data(params.equilibrium_x(), params).f_int,
        );
        if er.x >= x0 && er.x <= x1 && er.y >= y0 && er.y <= y1 {
            let _ = writeln!(
                svg,
                "  <circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{}\" fill=\"#14233d\"/>",
                er.x,
                -er.y,
                2.2 * stroke
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
