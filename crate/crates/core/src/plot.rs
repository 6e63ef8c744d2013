//! Self-contained SVG rendering of traces and eigenvalue sweeps.
//!
//! Output is a pure function of the inputs: coordinates are printed with a
//! fixed number of decimals and nothing depends on the clock or host.

use std::fmt::Write as _;
use std::io::Read;

use num_complex::Complex64;

use crate::engine::SimTrace;
use crate::error::{Error, Result};
use crate::small_signal::EigenPoint;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub channels: Vec<String>,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Vertical reference lines, `(time, label)`.
    pub markers: Vec<(f64, String)>,
}

impl PlotSpec {
    /// Titled after the scenario, with a marker at every logged event except
    /// informational notes.
    pub fn for_trace(trace: &SimTrace, channels: &[String]) -> Self {
        let markers = trace
            .events
            .iter()
            .filter(|e| e.kind != "note")
            .map(|e| (e.time_s, e.kind.clone()))
            .collect();
        Self {
            channels: channels.to_vec(),
            title: trace.scenario.clone(),
            x_label: "time (s)".into(),
            y_label: channels.join(", "),
            markers,
        }
    }
}

struct Series<'a> {
    label: String,
    x: &'a [f64],
    y: &'a [f64],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Data range padded so flat or single-point data still spans an axis.
fn range(values: impl Iterator<Item = f64>) -> Result<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return Err(Error::Render("nothing finite to plot".into()));
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.05 };
    Ok((lo - pad, hi + pad))
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }
    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(svg: &mut String, frame: &Frame, title: &str, x_label: &str, y_label: &str) {
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(svg, "<text x=\"{:.2}\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">{}</text>", LEFT + pw / 2.0, escape(title));
    let _ = writeln!(svg, "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>");
    for t in ticks(frame.x.0, frame.x.1) {
        let x = frame.px(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{TOP}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#e0e0e0\"/><text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 16.0,
            tick_label(t)
        );
    }
    for t in ticks(frame.y.0, frame.y.1) {
        let y = frame.py(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#e0e0e0\"/><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", LEFT + pw / 2.0, HEIGHT - 18.0, escape(x_label));
    let _ = writeln!(
        svg,
        "<text x=\"20\" y=\"{0:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0:.2})\">{1}</text>",
        TOP + ph / 2.0,
        escape(y_label)
    );
}

fn legend(svg: &mut String, labels: &[String]) {
    for (k, l) in labels.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let x = WIDTH - RIGHT + 12.0;
        let c = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{c}\" stroke-width=\"2\"/><text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
            x + 20.0,
            x + 26.0,
            y + 4.0,
            escape(l)
        );
    }
}

fn line_chart(series: &[Series], spec: &PlotSpec) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.x.is_empty()) {
        return Err(Error::Render("empty trace".into()));
    }
    let y = range(series.iter().flat_map(|s| s.y.iter().copied()))?;
    // Time axes span the samples exactly.
    let (x0, x1) = series
        .iter()
        .flat_map(|s| s.x.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let x = if x1 > x0 { (x0, x1) } else { (x0, x0 + 1.0) };
    let frame = Frame { x, y };
    let mut svg = String::new();
    open(&mut svg, &frame, &spec.title, &spec.x_label, &spec.y_label);
    for (k, s) in series.iter().enumerate() {
        let _ = write!(svg, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", PALETTE[k % PALETTE.len()]);
        for (i, (&a, &b)) in s.x.iter().zip(s.y).enumerate() {
            if b.is_finite() {
                let sep = if i == 0 { "" } else { " " };
                let _ = write!(svg, "{sep}{:.2},{:.2}", frame.px(a), frame.py(b));
            }
        }
        svg.push_str("\"/>\n");
    }
    for (k, (t, label)) in spec.markers.iter().enumerate() {
        if *t < frame.x.0 || *t > frame.x.1 {
            continue;
        }
        let px = frame.px(*t);
        let ly = TOP + 12.0 + 12.0 * (k % 4) as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{px:.2}\" y1=\"{TOP}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#555\" stroke-dasharray=\"4 3\"/><text x=\"{:.2}\" y=\"{ly:.2}\" font-size=\"10\" fill=\"#555\">{}</text>",
            HEIGHT - BOTTOM,
            px + 3.0,
            escape(label)
        );
    }
    legend(&mut svg, &series.iter().map(|s| s.label.clone()).collect::<Vec<_>>());
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn channel<'a>(trace: &'a SimTrace, name: &str) -> Result<&'a [f64]> {
    trace.channel(name).ok_or_else(|| Error::Render(format!("trace has no channel `{name}`")))
}

/// The spec's channels from one trace against time.
pub fn render_trace(trace: &SimTrace, spec: &PlotSpec) -> Result<String> {
    if trace.is_empty() {
        return Err(Error::Render("empty trace".into()));
    }
    if spec.channels.is_empty() {
        return Err(Error::Render("no channels to plot".into()));
    }
    let series = spec
        .channels
        .iter()
        .map(|c| Ok(Series { label: c.clone(), x: &trace.time, y: channel(trace, c)? }))
        .collect::<Result<Vec<_>>>()?;
    line_chart(&series, spec)
}

/// One channel from several traces, labelled by scenario name. Markers come
/// from the spec only.
pub fn render_overlay(traces: &[&SimTrace], channel_name: &str, spec: &PlotSpec) -> Result<String> {
    if traces.is_empty() || traces.iter().any(|t| t.is_empty()) {
        return Err(Error::Render("empty trace".into()));
    }
    let series = traces
        .iter()
        .map(|t| Ok(Series { label: t.scenario.clone(), x: &t.time, y: channel(t, channel_name)? }))
        .collect::<Result<Vec<_>>>()?;
    line_chart(&series, spec)
}

/// Complex-plane scatter with one series per SCR.
pub fn render_eigen(points: &[EigenPoint], title: &str) -> Result<String> {
    let all: Vec<&Complex64> = points.iter().flat_map(|p| &p.eigenvalues).collect();
    if all.is_empty() {
        return Err(Error::Render("no eigenvalues to plot".into()));
    }
    let mut scrs: Vec<f64> = Vec::new();
    for p in points {
        if !scrs.contains(&p.scr) {
            scrs.push(p.scr);
        }
    }
    let frame = Frame {
        x: range(all.iter().map(|z| z.re).chain([0.0]))?,
        y: range(all.iter().map(|z| z.im))?,
    };
    let mut svg = String::new();
    open(&mut svg, &frame, title, "real part (1/s)", "imaginary part (rad/s)");
    let zx = frame.px(0.0);
    let _ = writeln!(svg, "<line x1=\"{zx:.2}\" y1=\"{TOP}\" x2=\"{zx:.2}\" y2=\"{:.2}\" stroke=\"#555\"/>", HEIGHT - BOTTOM);
    for (k, scr) in scrs.iter().enumerate() {
        let c = PALETTE[k % PALETTE.len()];
        for p in points.iter().filter(|p| p.scr == *scr) {
            for z in &p.eigenvalues {
                let _ = writeln!(svg, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{c}\"/>", frame.px(z.re), frame.py(z.im));
            }
        }
    }
    legend(&mut svg, &scrs.iter().map(|s| format!("SCR {s}")).collect::<Vec<_>>());
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads the eigenvalue CSV back into sweep points.
pub fn read_eigen_csv<R: Read>(r: R) -> Result<Vec<EigenPoint>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(|e| Error::Render(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != crate::output::EIGEN_COLUMNS {
        return Err(Error::Render("not an eigenvalue CSV".into()));
    }
    let mut points: Vec<EigenPoint> = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Render(e.to_string()))?;
        let field = |k: usize| -> Result<Option<f64>> {
            let s = rec.get(k).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| Error::Render(format!("row {}: bad number `{s}`", line + 2)))
        };
        let (scr, brake) = match (field(0)?, field(1)?) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Render(format!("row {}: missing scr or brake", line + 2))),
        };
        let new_point = points.last().is_none_or(|p| p.scr != scr || p.brake_mw != brake);
        if new_point {
            points.push(EigenPoint {
                scr,
                brake_mw: brake,
                eigenvalues: Vec::new(),
                dominant: None,
                stable: rec.get(6) == Some("1"),
                failure: None,
            });
        }
        let p = points.last_mut().expect("pushed above");
        if let (Some(re), Some(im)) = (field(3)?, field(4)?) {
            let z = Complex64::new(re, im);
            p.eigenvalues.push(z);
            if rec.get(5) == Some("1") {
                p.dominant = Some(z);
            }
        } else {
            p.failure = Some("no spectrum".into());
        }
    }
    Ok(points)
}
