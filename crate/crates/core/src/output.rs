//! CSV files and the per-run output directory.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so files
//! do not depend on the host locale and rerunning a scenario reproduces them
//! byte for byte.

use std::io::Write;
use std::path::Path;

use crate::engine::{metrics, SimTrace, SweepRow, TraceMetrics, DEFAULT_BAND_HZ};
use crate::error::{Error, Result};
use crate::plot::{render_trace, PlotSpec};
use crate::scenario::Scenario;
use crate::small_signal::EigenPoint;

pub const EIGEN_COLUMNS: [&str; 7] =
    ["scr", "brake_mw", "eig_index", "re_1_per_s", "im_rad_per_s", "dominant_flag", "stable_flag"];

pub const METRIC_COLUMNS: [&str; 7] = [
    "peak_sg_p_pu",
    "peak_freq_hz",
    "peak_abs_df_hz",
    "max_rocof_hz_per_s",
    "settling_time_s",
    "oscillation_energy",
    "tail_mean_abs_df_hz",
];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// `time_s` followed by `channels` in the given order.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, channels: &[String], w: W) -> Result<()> {
    let cols: Vec<&[f64]> = channels
        .iter()
        .map(|c| trace.channel(c).ok_or_else(|| Error::Config(format!("trace has no channel `{c}`"))))
        .collect::<Result<_>>()?;
    let mut out = writer(w);
    out.write_record(std::iter::once("time_s").chain(channels.iter().map(String::as_str)))
        .map_err(csv_err)?;
    for (k, t) in trace.time.iter().enumerate() {
        out.write_record(std::iter::once(num(*t)).chain(cols.iter().map(|c| num(c[k]))))
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_events_csv<W: Write>(trace: &SimTrace, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["time_s", "kind", "detail"]).map_err(csv_err)?;
    for e in &trace.events {
        out.write_record([num(e.time_s), e.kind.clone(), e.detail.clone()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn metric_fields(m: &TraceMetrics) -> [String; 7] {
    [
        num(m.peak_sg_p_pu),
        num(m.peak_freq_hz),
        num(m.peak_abs_df_hz),
        num(m.max_rocof_hz_per_s),
        m.settling_time_s.map_or_else(String::new, num),
        num(m.oscillation_energy),
        num(m.tail_mean_abs_df_hz),
    ]
}

/// One header row and one value row; an unsettled trace leaves
/// `settling_time_s` empty.
pub fn write_metrics_csv<W: Write>(m: &TraceMetrics, w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(METRIC_COLUMNS).map_err(csv_err)?;
    out.write_record(metric_fields(m)).map_err(csv_err)?;
    out.flush()?;
    Ok(())
}

/// `variant, value`, the metric columns and `error`; failed variants have
/// empty metrics and the failure message.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = writer(w);
    let header = ["variant", "value"].into_iter().chain(METRIC_COLUMNS).chain(["error"]);
    out.write_record(header).map_err(csv_err)?;
    for r in rows {
        let (fields, err) = match &r.result {
            Ok(m) => (metric_fields(m), String::new()),
            Err(e) => (Default::default(), e.clone()),
        };
        let rec = [r.variant.clone(), num(r.value)].into_iter().chain(fields).chain([err]);
        out.write_record(rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per eigenvalue. A point without a spectrum gets a single row
/// with empty eigenvalue fields and `stable_flag` 0.
pub fn write_eigen_csv<W: Write>(points: &[EigenPoint], w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(EIGEN_COLUMNS).map_err(csv_err)?;
    for p in points {
        if p.eigenvalues.is_empty() {
            out.write_record([num(p.scr), num(p.brake_mw), String::new(), String::new(), String::new(), "0".into(), "0".into()])
                .map_err(csv_err)?;
            continue;
        }
        let dom = p.eigenvalues.iter().position(|z| Some(*z) == p.dominant);
        for (k, z) in p.eigenvalues.iter().enumerate() {
            out.write_record([
                num(p.scr),
                num(p.brake_mw),
                k.to_string(),
                num(z.re),
                num(z.im),
                flag(dom == Some(k)).into(),
                flag(p.stable).into(),
            ])
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `scenario.resolved`, `trace.csv`, `events.csv`, `metrics.csv`
/// and, when the scenario names plot channels, `plot.svg`.
pub fn write_run_dir(dir: &Path, scenario: &Scenario, trace: &SimTrace) -> Result<Option<TraceMetrics>> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("scenario.resolved"), scenario.to_toml_string()?)?;
    write_trace_csv(trace, &scenario.outputs.channels, std::fs::File::create(dir.join("trace.csv"))?)?;
    write_events_csv(trace, std::fs::File::create(dir.join("events.csv"))?)?;
    // A trace cut short by a failure may be too short for metrics.
    let m = match metrics(trace, DEFAULT_BAND_HZ) {
        Ok(m) => {
            write_metrics_csv(&m, std::fs::File::create(dir.join("metrics.csv"))?)?;
            Some(m)
        }
        Err(_) if trace.failure.is_some() => None,
        Err(e) => return Err(e),
    };
    if !scenario.outputs.plot_channels.is_empty() && !trace.is_empty() {
        let spec = PlotSpec::for_trace(trace, &scenario.outputs.plot_channels);
        std::fs::write(dir.join("plot.svg"), render_trace(trace, &spec)?)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Channel, EventRecord};
    use num_complex::Complex64;

    fn tiny() -> SimTrace {
        SimTrace {
            scenario: "t".into(),
            dt_s: 0.5,
            f_nominal_hz: 60.0,
            time: vec![0.0, 0.5, 1.0],
            channels: vec![
                Channel { name: "freq_hz".into(), values: vec![60.0, 60.25, 60.125] },
                Channel { name: "sg_p_pu".into(), values: vec![0.5, 1e-7, -2.0] },
            ],
            events: vec![EventRecord { time_s: 0.5, kind: "load_step".into(), detail: "a, \"b\"".into() }],
            brake_windows: Vec::new(),
            brake_energy_mj: Vec::new(),
            thermal_violation: Vec::new(),
            brake_commands: Vec::new(),
            motor_stalled: false,
            failure: None,
        }
    }

    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn trace_columns_follow_request() {
        let t = tiny();
        let s = text(|b| write_trace_csv(&t, &["sg_p_pu".into(), "freq_hz".into()], b));
        assert_eq!(s, "time_s,sg_p_pu,freq_hz\n0.0,0.5,60.0\n0.5,1e-7,60.25\n1.0,-2.0,60.125\n");
        assert!(write_trace_csv(&t, &["nope".into()], Vec::new()).is_err());
    }

    #[test]
    fn events_are_quoted() {
        let s = text(|b| write_events_csv(&tiny(), b));
        assert_eq!(s, "time_s,kind,detail\n0.5,load_step,\"a, \"\"b\"\"\"\n");
    }

    #[test]
    fn eigen_rows() {
        let z = [Complex64::new(-0.5, 2.0), Complex64::new(-0.5, -2.0), Complex64::new(-3.0, 0.0)];
        let p = EigenPoint { scr: 2.0, brake_mw: 125.0, eigenvalues: z.to_vec(), dominant: Some(z[0]), stable: true, failure: None };
        let bad = EigenPoint { eigenvalues: vec![], dominant: None, stable: false, failure: Some("x".into()), ..p.clone() };
        let s = text(|b| write_eigen_csv(&[p, bad], b));
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], EIGEN_COLUMNS.join(","));
        assert_eq!(lines[1], "2.0,125.0,0,-0.5,2.0,1,1");
        assert_eq!(lines[3], "2.0,125.0,2,-3.0,0.0,0,1");
        assert_eq!(lines[4], "2.0,125.0,,,,0,0");
    }
}
