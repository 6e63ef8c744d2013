//! Summary figures recomputed from a trace alone.

use serde::Serialize;

use super::run::SimTrace;
use crate::error::{Error, Result};

/// Window at the end of a trace over which the sustained deviation is
/// averaged.
pub const TAIL_WINDOW_S: f64 = 2.0;
pub const DEFAULT_BAND_HZ: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceMetrics {
    /// Machine base.
    pub peak_sg_p_pu: f64,
    pub peak_freq_hz: f64,
    pub peak_abs_df_hz: f64,
    pub max_rocof_hz_per_s: f64,
    /// From the final brake removal (or the start without a brake) to the
    /// last exit from the band; `None` if the trace ends outside it.
    pub settling_time_s: Option<f64>,
    /// Integral of (df/dt)² after the final brake removal, Hz²/s.
    pub oscillation_energy: f64,
    pub tail_mean_abs_df_hz: f64,
}

/// Centered difference inside, one-sided at the ends.
fn derivative(f: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|k| match k {
            0 => (f[1] - f[0]) / dt,
            k if k == n - 1 => (f[k] - f[k - 1]) / dt,
            k => (f[k + 1] - f[k - 1]) / (2.0 * dt),
        })
        .collect()
}

pub fn metrics(trace: &SimTrace, band_hz: f64) -> Result<TraceMetrics> {
    let n = trace.len();
    if n < 3 {
        return Err(Error::Metrics(format!("trace has {n} samples, at least 3 are needed")));
    }
    if !(band_hz > 0.0) {
        return Err(Error::Metrics("settling band must be positive".into()));
    }
    let f = trace
        .channel("freq_hz")
        .ok_or_else(|| Error::Metrics("trace has no freq_hz channel".into()))?;
    let f_nom = trace.f_nominal_hz;
    let dt = trace.dt_s;
    let df: Vec<f64> = f.iter().map(|x| x - f_nom).collect();
    let peak = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let rocof = derivative(f, dt);
    let from = trace.last_brake_removal().unwrap_or(trace.time[0]);
    let k0 = trace.time.partition_point(|&t| t < from - 1e-9);
    let settling_time_s = match df[k0..].iter().rposition(|d| d.abs() > band_hz) {
        None => Some(0.0),
        Some(j) if k0 + j == n - 1 => None,
        Some(j) => Some(trace.time[k0 + j + 1] - from),
    };
    let oscillation_energy = rocof[k0..].iter().map(|r| r * r).sum::<f64>() * dt;
    let tail_start = trace.time[n - 1] - TAIL_WINDOW_S;
    let kt = trace.time.partition_point(|&t| t < tail_start - 1e-9);
    let tail = &df[kt..];

    Ok(TraceMetrics {
        peak_sg_p_pu: trace.channel("sg_p_pu").map_or(0.0, peak),
        peak_freq_hz: peak(f),
        peak_abs_df_hz: df.iter().map(|d| d.abs()).fold(0.0, f64::max),
        max_rocof_hz_per_s: rocof.iter().map(|r| r.abs()).fold(0.0, f64::max),
        settling_time_s,
        oscillation_energy,
        tail_mean_abs_df_hz: tail.iter().map(|d| d.abs()).sum::<f64>() / tail.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run::Channel;

    fn trace(f: Vec<f64>, dt: f64) -> SimTrace {
        SimTrace {
            scenario: "synthetic".into(),
            dt_s: dt,
            f_nominal_hz: 60.0,
            time: (0..f.len()).map(|k| k as f64 * dt).collect(),
            channels: vec![Channel { name: "freq_hz".into(), values: f }],
            events: Vec::new(),
            brake_windows: Vec::new(),
            brake_energy_mj: Vec::new(),
            thermal_violation: Vec::new(),
            brake_commands: Vec::new(),
            motor_stalled: false,
            failure: None,
        }
    }

    #[test]
    fn constant_trace() {
        let m = metrics(&trace(vec![60.0; 500], 1e-2), 0.05).unwrap();
        assert_eq!(m.peak_abs_df_hz, 0.0);
        assert_eq!(m.max_rocof_hz_per_s, 0.0);
        assert_eq!(m.settling_time_s, Some(0.0));
        assert_eq!(m.oscillation_energy, 0.0);
    }

    #[test]
    fn ramp() {
        let dt = 1e-3;
        let f: Vec<f64> = (0..=1000).map(|k| 60.0 + 0.1 * k as f64 * dt).collect();
        let m = metrics(&trace(f, dt), 0.05).unwrap();
        assert!((m.max_rocof_hz_per_s - 0.1).abs() < 1e-9);
        assert!((m.peak_freq_hz - 60.1).abs() < 1e-12);
        assert_eq!(m.settling_time_s, None);
    }

    #[test]
    fn settling_from_band_exit() {
        let dt = 0.1;
        let f = vec![60.0, 60.2, 60.1, 60.02, 60.01, 60.0];
        let m = metrics(&trace(f, dt), 0.05).unwrap();
        assert!((m.settling_time_s.unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(matches!(metrics(&trace(vec![60.0; 2], 1e-3), 0.05), Err(Error::Metrics(_))));
    }
}
