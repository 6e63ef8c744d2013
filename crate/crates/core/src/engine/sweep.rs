//! Independent runs over one varied parameter, spread across workers.

use rayon::prelude::*;

use super::metrics::{metrics, TraceMetrics, DEFAULT_BAND_HZ};
use super::run::run;
use crate::braking::{BrakeSchedule, BrakeTrigger, StageSpec, DEFAULT_MAX_INSERTION_S};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

pub const WORKERS_ENV: &str = "GRIDBRAKE_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Synchronous share of total generation; the rest is grid-forming.
    Mix,
    /// Single-stage brake rating in MW; 0 removes the brake.
    Brake,
    /// Dwell of every stage, in seconds after its insertion.
    Schedule,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mix" => Ok(Self::Mix),
            "brake" => Ok(Self::Brake),
            "schedule" => Ok(Self::Schedule),
            _ => Err(Error::Config(format!("unknown sweep axis `{s}` (mix, brake, schedule)"))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mix => "mix",
            Self::Brake => "brake",
            Self::Schedule => "schedule",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variant: String,
    pub value: f64,
    /// Failure message for a variant that could not be built or run.
    pub result: std::result::Result<TraceMetrics, String>,
}

/// Applies one axis value to a copy of the template.
pub fn variant(template: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut sc = template.clone();
    sc.name = format!("{}_{}_{}", template.name, axis.name(), value);
    match axis {
        SweepAxis::Mix => {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Config(format!("generation mix {value} outside [0, 1]")));
            }
            sc.devices.sg_share = value;
            sc.devices.gfm_share = 1.0 - value;
        }
        SweepAxis::Brake => {
            if value == 0.0 {
                sc.brake = None;
            } else {
                let (bus, trigger, delay, on, off) = match &template.brake {
                    Some(b) if !b.stages.is_empty() => {
                        let s = &b.stages[0];
                        (b.bus.clone(), b.trigger, b.breaker_delay_s, s.insert_cmd_s, s.remove_cmd_s)
                    }
                    _ => (template.topology.pcc_bus.clone(), BrakeTrigger::OnLoadLoss, 0.05, 0.0, Some(0.1)),
                };
                sc.brake = Some(BrakeSchedule {
                    bus,
                    trigger,
                    breaker_delay_s: delay,
                    max_insertion_s: template.brake.as_ref().map_or(DEFAULT_MAX_INSERTION_S, |b| b.max_insertion_s),
                    stages: vec![StageSpec::new(value, on, off)],
                });
            }
        }
        SweepAxis::Schedule => {
            let b = sc
                .brake
                .as_mut()
                .ok_or_else(|| Error::Config("schedule sweep needs a brake in the template".into()))?;
            for s in &mut b.stages {
                s.remove_cmd_s = Some(s.insert_cmd_s + value);
            }
        }
    }
    sc.validate()?;
    Ok(sc)
}

fn worker_count() -> usize {
    let machine = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n.min(machine.max(1)),
        _ => machine,
    }
}

/// Runs `f` over `items` on a pool capped by the worker variable; results
/// keep the input order.
pub fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match rayon::ThreadPoolBuilder::new().num_threads(worker_count()).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

pub fn sweep(template: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("a sweep needs at least one value".into()));
    }
    Ok(parallel_map(values, |&value| {
        let name = format!("{}={}", axis.name(), value);
        let result = variant(template, axis, value)
            .and_then(|sc| {
                let trace = run(&sc)?;
                match trace.failure {
                    Some(f) => Err(Error::Numeric(f)),
                    None => metrics(&trace, DEFAULT_BAND_HZ),
                }
            })
            .map_err(|e| e.to_string());
        SweepRow { variant: name, value, result }
    }))
}
