//! Breaker-switched braking resistor bank: stage definitions, the insertion
//! and removal schedule, and energy accounting per stage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BreakerCommand;
use crate::units::SystemBase;

/// Hard ceiling on how long any stage may conduct unless a schedule raises it.
pub const DEFAULT_MAX_INSERTION_S: f64 = 1.0;

/// Multiple of a stage's rating giving its default energy limit in MJ: three
/// times a 0.85 s dwell at nameplate.
const THERMAL_LIMIT_FACTOR: f64 = 3.0 * 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub rating_mw: f64,
    /// Close command time, relative to the schedule anchor.
    pub insert_cmd_s: f64,
    /// Open command time, relative to the schedule anchor. Without one the
    /// stage is tripped when it reaches the schedule's insertion limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remove_cmd_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_limit_mj: Option<f64>,
}

impl StageSpec {
    pub fn new(rating_mw: f64, insert_cmd_s: f64, remove_cmd_s: Option<f64>) -> Self {
        Self {
            rating_mw,
            insert_cmd_s,
            remove_cmd_s,
            thermal_limit_mj: None,
        }
    }

    /// Resistance at 1.0 pu voltage on the system base.
    pub fn resistance_pu(&self, base: &SystemBase) -> f64 {
        base.s_base_mva / self.rating_mw
    }

    pub fn conductance_pu(&self, base: &SystemBase) -> f64 {
        self.rating_mw / base.s_base_mva
    }

    pub fn thermal_limit(&self) -> f64 {
        self.thermal_limit_mj.unwrap_or(THERMAL_LIMIT_FACTOR * self.rating_mw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrakeTrigger {
    /// Command times are absolute simulation times.
    Explicit,
    /// Command times count from the first load-loss event.
    OnLoadLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrakeSchedule {
    pub bus: String,
    pub trigger: BrakeTrigger,
    /// Command-to-contact time applied to every breaker operation.
    pub breaker_delay_s: f64,
    pub max_insertion_s: f64,
    pub stages: Vec<StageSpec>,
}

impl BrakeSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.breaker_delay_s >= 0.0) {
            return Err(Error::Config("breaker delay must be non-negative".into()));
        }
        if !(self.max_insertion_s > 0.0) {
            return Err(Error::Config("maximum insertion time must be positive".into()));
        }
        for (k, s) in self.stages.iter().enumerate() {
            let n = k + 1;
            if !(s.rating_mw > 0.0 && s.rating_mw.is_finite()) {
                return Err(Error::Config(format!("brake stage {n}: rating must be positive")));
            }
            if !(s.insert_cmd_s >= 0.0) {
                return Err(Error::Config(format!("brake stage {n}: insertion time must be non-negative")));
            }
            if let Some(r) = s.remove_cmd_s {
                if !(r >= s.insert_cmd_s) {
                    return Err(Error::Config(format!("brake stage {n}: removal precedes insertion")));
                }
                if r - s.insert_cmd_s > self.max_insertion_s + 1e-12 {
                    return Err(Error::Config(format!(
                        "brake stage {n}: dwell {} s exceeds the {} s insertion limit",
                        r - s.insert_cmd_s,
                        self.max_insertion_s
                    )));
                }
            }
            if !(s.thermal_limit() > 0.0) {
                return Err(Error::Config(format!("brake stage {n}: thermal limit must be positive")));
            }
        }
        Ok(())
    }

    pub fn total_mw(&self) -> f64 {
        self.stages.iter().map(|s| s.rating_mw).sum()
    }

    /// Effective (conducting) interval of each stage for a given anchor.
    pub fn conduction_windows(&self, anchor_s: f64) -> Vec<(f64, f64)> {
        self.stages
            .iter()
            .map(|s| {
                let on = anchor_s + s.insert_cmd_s + self.breaker_delay_s;
                let off = match s.remove_cmd_s {
                    Some(r) => anchor_s + r + self.breaker_delay_s,
                    None => on + self.max_insertion_s,
                };
                (on, off)
            })
            .collect()
    }
}

/// Three-stage bank (130, 130, 110 MW) closed together on load loss. Stage
/// 1 opens 0.1 s after insertion, stage 2 0.25 s after stage 1, stage 3 0.5 s
/// after stage 2.
pub fn build_paper_schedule(load_loss_time_s: f64, breaker_delay_s: f64) -> BrakeSchedule {
    let ins = load_loss_time_s;
    let removals = [0.1, 0.35, 0.85];
    BrakeSchedule {
        bus: "pcc".into(),
        trigger: BrakeTrigger::Explicit,
        breaker_delay_s,
        max_insertion_s: DEFAULT_MAX_INSERTION_S,
        stages: [130.0, 130.0, 110.0]
            .iter()
            .zip(removals)
            // Rounded to the microsecond so the times print cleanly.
            .map(|(&mw, dwell)| StageSpec::new(mw, ins, Some(((ins + dwell) * 1e6).round() / 1e6)))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThermalState {
    pub energy_mj: f64,
    pub violated: bool,
}

/// Adds `power_pu * s_base * dt` of dissipated energy. Violations are
/// flagged, never fatal.
pub fn step_thermal(
    state: ThermalState,
    conducting: bool,
    power_pu: f64,
    dt: f64,
    limit_mj: f64,
    base: &SystemBase,
) -> ThermalState {
    if !conducting {
        return state;
    }
    let energy_mj = state.energy_mj + power_pu * base.s_base_mva * dt;
    ThermalState {
        energy_mj,
        violated: state.violated || energy_mj > limit_mj,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakeCommandRecord {
    pub time_s: f64,
    pub stage: usize,
    pub command: BreakerCommand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    stage: usize,
    offset_s: f64,
    command: BreakerCommand,
}

/// Emits each scheduled breaker command exactly once as simulation time
/// advances.
#[derive(Debug, Clone, PartialEq)]
pub struct BrakeController {
    schedule: BrakeSchedule,
    anchor: Option<f64>,
    pending: Vec<Pending>,
    pub log: Vec<BrakeCommandRecord>,
}

impl BrakeController {
    pub fn new(schedule: BrakeSchedule) -> Result<Self> {
        schedule.validate()?;
        let mut pending = Vec::new();
        for (k, s) in schedule.stages.iter().enumerate() {
            pending.push(Pending { stage: k, offset_s: s.insert_cmd_s, command: BreakerCommand::Close });
            let off = s.remove_cmd_s.unwrap_or(s.insert_cmd_s + schedule.max_insertion_s);
            pending.push(Pending { stage: k, offset_s: off, command: BreakerCommand::Open });
        }
        // stable: closes before opens at equal times, stage order otherwise
        pending.sort_by(|a, b| a.offset_s.total_cmp(&b.offset_s));
        let anchor = match schedule.trigger {
            BrakeTrigger::Explicit => Some(0.0),
            BrakeTrigger::OnLoadLoss => None,
        };
        Ok(Self { schedule, anchor, pending, log: Vec::new() })
    }

    pub fn schedule(&self) -> &BrakeSchedule {
        &self.schedule
    }

    pub fn anchor(&self) -> Option<f64> {
        self.anchor
    }

    /// Commands due at or before `t`. `load_loss_at` is the time of the
    /// first load-loss event seen so far.
    pub fn step(&mut self, t: f64, load_loss_at: Option<f64>) -> Vec<BrakeCommandRecord> {
        if self.anchor.is_none() {
            self.anchor = load_loss_at;
        }
        let Some(anchor) = self.anchor else { return Vec::new() };
        let mut out = Vec::new();
        while let Some(p) = self.pending.first() {
            let at = anchor + p.offset_s;
            if at > t + 1e-9 {
                break;
            }
            out.push(BrakeCommandRecord { time_s: at, stage: p.stage, command: p.command });
            self.pending.remove(0);
        }
        self.log.extend_from_slice(&out);
        out
    }

    /// Warning for a run that ended without ever arming the schedule.
    pub fn finish(&self) -> Option<String> {
        match (self.anchor, self.schedule.stages.is_empty()) {
            (None, false) => Some("brake schedule never armed: no load-loss event observed".into()),
            _ => None,
        }
    }
}
