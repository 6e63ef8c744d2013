//! Declarative scenario description and its TOML form.
//!
//! Parsing is strict: unknown keys are rejected and every invariant is
//! checked before a [`Scenario`] is handed out, so downstream code never
//! re-validates. Errors carry the offending key and, when it can be located,
//! its line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::braking::BrakeSchedule;
use crate::error::{Error, Result, ScenarioError};
use crate::models::{GfmParams, InductionMotorParams, SyncGenParams};
use crate::network::{GridEquivalent, LineParams};
use crate::protection::{DataCenterBuilding, VoltageRelay};
use crate::units::SystemBase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub base: SystemBase,
    pub topology: Topology,
    pub devices: Devices,
    pub cluster: ClusterSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brake: Option<BrakeSchedule>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub buses: Vec<String>,
    pub pcc_bus: String,
    #[serde(default)]
    pub lines: Vec<LineParams>,
    /// Absent means the system runs islanded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridEquivalent>,
    #[serde(default)]
    pub capacitor_banks: Vec<CapacitorBankSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitorBankSpec {
    pub name: String,
    pub bus: String,
    pub mvar: f64,
    #[serde(default)]
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Devices {
    pub bus: String,
    pub total_generation_mw: f64,
    pub sg_share: f64,
    pub gfm_share: f64,
    /// Output of each source as a fraction of its rating when a grid
    /// equivalent is present. Islanded sources share the load by rating.
    #[serde(default = "one")]
    pub dispatch_pu: f64,
    #[serde(default = "one")]
    pub voltage_setpoint_pu: f64,
    #[serde(default)]
    pub sync_gen: SyncGenParams,
    #[serde(default)]
    pub gfm: GfmParams,
    #[serde(default)]
    pub motor: InductionMotorParams,
}

impl Devices {
    pub fn sg_mw(&self) -> f64 {
        self.total_generation_mw * self.sg_share
    }

    pub fn gfm_mw(&self) -> f64 {
        self.total_generation_mw * self.gfm_share
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub bus: String,
    pub building_count: usize,
    pub building_rated_mw: f64,
    pub it_fraction: f64,
    /// Shares of the non-IT load.
    pub motor_fraction: f64,
    pub static_fraction: f64,
    #[serde(default)]
    pub relays_enabled: bool,
    #[serde(default)]
    pub relay: VoltageRelay,
}

impl ClusterSpec {
    pub fn buildings(&self) -> Vec<DataCenterBuilding> {
        (0..self.building_count)
            .map(|_| DataCenterBuilding {
                rated_mw: self.building_rated_mw,
                it_fraction: self.it_fraction,
                motor_fraction: self.motor_fraction,
                static_fraction: self.static_fraction,
                relay: self.relay.clone(),
                bus: self.bus.clone(),
            })
            .collect()
    }

    pub fn total_mw(&self) -> f64 {
        self.building_count as f64 * self.building_rated_mw
    }

    pub fn it_mw(&self) -> f64 {
        self.total_mw() * self.it_fraction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchCommand {
    Close,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventSpec {
    /// IT load rides to UPS. Without `buildings` the drop is spread over the
    /// whole cluster.
    ItLoadLoss {
        time_s: f64,
        delta_p_mw: f64,
        /// One-based building numbers.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        buildings: Vec<usize>,
    },
    /// Change of static constant-impedance load at a bus.
    LoadStep { time_s: f64, bus: String, delta_mw: f64 },
    /// Whole building (one-based) transferred to backup supply.
    PlantFault { time_s: f64, building: usize },
    /// Bus voltage held at `magnitude_pu` for `duration_s`.
    VoltageDip {
        time_s: f64,
        bus: String,
        magnitude_pu: f64,
        duration_s: f64,
    },
    ShuntSwitch {
        time_s: f64,
        element: String,
        command: SwitchCommand,
    },
}

impl EventSpec {
    pub fn time_s(&self) -> f64 {
        match self {
            EventSpec::ItLoadLoss { time_s, .. }
            | EventSpec::LoadStep { time_s, .. }
            | EventSpec::PlantFault { time_s, .. }
            | EventSpec::VoltageDip { time_s, .. }
            | EventSpec::ShuntSwitch { time_s, .. } => *time_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    pub horizon_s: f64,
    /// Applied to every machine after the equilibrium is found.
    #[serde(default)]
    pub initial_speed_deviation_pu: f64,
}

fn default_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Trace columns after `time_s`, in order.
    pub channels: Vec<String>,
    /// Channels drawn in `plot.svg`; empty for no plot.
    #[serde(default)]
    pub plot_channels: Vec<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            channels: DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect(),
            plot_channels: Vec::new(),
        }
    }
}

pub const DEFAULT_CHANNELS: [&str; 6] = ["freq_hz", "sg_p_pu", "gfm_p_pu", "v_pcc_pu", "brake_p_pu", "motor_slip"];

/// Channels every trace carries, in canonical order.
pub const FIXED_CHANNELS: [&str; 17] = [
    "freq_hz",
    "sg_p_pu",
    "gfm_p_pu",
    "v_pcc_pu",
    "brake_p_pu",
    "motor_slip",
    "sg_q_pu",
    "gfm_q_pu",
    "sg_speed_pu",
    "sg_pm_pu",
    "gfm_freq_hz",
    "gfm_i_pu",
    "motor_speed_pu",
    "motor_p_pu",
    "load_p_pu",
    "grid_p_pu",
    "brake_stages_closed",
];

impl Scenario {
    /// All channel names a run of this scenario can produce.
    pub fn available_channels(&self) -> Vec<String> {
        let mut c: Vec<String> = FIXED_CHANNELS.iter().map(|s| s.to_string()).collect();
        c.extend(self.topology.buses.iter().map(|b| format!("v_{b}_pu")));
        if let Some(b) = &self.brake {
            c.extend((1..=b.stages.len()).map(|k| format!("brake{k}_p_pu")));
        }
        c
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.check().map_err(|(key, message)| ScenarioError::Invariant { key, line: None, message })
    }

    fn check(&self) -> std::result::Result<(), (String, String)> {
        let fail = |k: &str, m: String| Err((k.to_string(), m));
        let from = |k: &str, e: Error| (k.to_string(), e.to_string());
        if self.name.trim().is_empty() {
            return fail("name", "scenario name must not be empty".into());
        }
        self.base.validate().map_err(|e| from("base", e))?;

        let t = &self.topology;
        let has_bus = |b: &str| t.buses.iter().any(|x| x == b);
        if t.buses.is_empty() {
            return fail("topology.buses", "at least one bus is required".into());
        }
        for (k, b) in t.buses.iter().enumerate() {
            if b.is_empty() || !b.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return fail("topology.buses", format!("bus name `{b}` must be lower_snake_case"));
            }
            if t.buses[..k].contains(b) {
                return fail("topology.buses", format!("duplicate bus `{b}`"));
            }
        }
        if !has_bus(&t.pcc_bus) {
            return fail("topology.pcc_bus", format!("unknown bus `{}`", t.pcc_bus));
        }
        for l in &t.lines {
            if !has_bus(&l.from) || !has_bus(&l.to) {
                return fail("topology.lines", format!("line {}-{} refers to an unknown bus", l.from, l.to));
            }
            l.validate().map_err(|e| from("topology.lines", e))?;
        }
        if let Some(g) = &t.grid {
            if !has_bus(&g.bus) {
                return fail("topology.grid.bus", format!("unknown bus `{}`", g.bus));
            }
            g.validate().map_err(|e| from("topology.grid.scr", e))?;
        }
        for (k, c) in t.capacitor_banks.iter().enumerate() {
            if !has_bus(&c.bus) {
                return fail("topology.capacitor_banks", format!("unknown bus `{}`", c.bus));
            }
            if !c.mvar.is_finite() {
                return fail("topology.capacitor_banks", format!("bank {} rating must be finite", c.name));
            }
            if t.capacitor_banks[..k].iter().any(|o| o.name == c.name) {
                return fail("topology.capacitor_banks", format!("duplicate bank `{}`", c.name));
            }
        }

        let d = &self.devices;
        if !has_bus(&d.bus) {
            return fail("devices.bus", format!("unknown bus `{}`", d.bus));
        }
        if !(d.total_generation_mw >= 0.0 && d.total_generation_mw.is_finite()) {
            return fail("devices.total_generation_mw", "must be non-negative".into());
        }
        for (k, v) in [("devices.sg_share", d.sg_share), ("devices.gfm_share", d.gfm_share)] {
            if !(0.0..=1.0).contains(&v) {
                return fail(k, format!("share {v} outside [0, 1]"));
            }
        }
        if (d.sg_share + d.gfm_share - 1.0).abs() > 1e-9 {
            return fail(
                "devices.gfm_share",
                format!("sg_share + gfm_share must equal 1, got {}", d.sg_share + d.gfm_share),
            );
        }
        if !(d.dispatch_pu >= 0.0 && d.dispatch_pu.is_finite()) {
            return fail("devices.dispatch_pu", "must be non-negative".into());
        }
        if !(d.voltage_setpoint_pu > 0.5 && d.voltage_setpoint_pu < 1.5) {
            return fail("devices.voltage_setpoint_pu", "must lie in (0.5, 1.5)".into());
        }
        d.sync_gen.validate().map_err(|e| from("devices.sync_gen", e))?;
        d.gfm.validate().map_err(|e| from("devices.gfm", e))?;
        d.motor.validate().map_err(|e| from("devices.motor", e))?;
        if t.grid.is_none() && d.total_generation_mw == 0.0 {
            return fail("devices.total_generation_mw", "an islanded system needs generation".into());
        }

        let c = &self.cluster;
        if !has_bus(&c.bus) {
            return fail("cluster.bus", format!("unknown bus `{}`", c.bus));
        }
        if !(c.building_rated_mw > 0.0 && c.building_rated_mw.is_finite()) {
            return fail("cluster.building_rated_mw", "must be positive".into());
        }
        if let Some(b) = c.buildings().first() {
            b.validate().map_err(|e| {
                let key = if e.to_string().contains("relay") { "cluster.relay" } else { "cluster.motor_fraction" };
                from(key, e)
            })?;
        }
        c.relay.validate().map_err(|e| from("cluster.relay", e))?;

        if let Some(b) = &self.brake {
            if !has_bus(&b.bus) {
                return fail("brake.bus", format!("unknown bus `{}`", b.bus));
            }
            b.validate().map_err(|e| from("brake.stages", e))?;
        }

        let s = &self.simulation;
        if !(s.dt_s > 0.0 && s.dt_s.is_finite()) {
            return fail("simulation.dt_s", "must be positive".into());
        }
        if !(s.horizon_s > s.dt_s && s.horizon_s.is_finite()) {
            return fail("simulation.horizon_s", "must exceed dt_s".into());
        }
        if (s.horizon_s / s.dt_s) > 5e7 {
            return fail("simulation.dt_s", "too many steps for the horizon".into());
        }
        if !(s.initial_speed_deviation_pu.abs() < 0.5) {
            return fail("simulation.initial_speed_deviation_pu", "must lie in (-0.5, 0.5)".into());
        }

        let mut it_left: Vec<f64> = vec![c.building_rated_mw * c.it_fraction; c.building_count];
        let mut events: Vec<&EventSpec> = self.events.iter().collect();
        events.sort_by(|a, b| a.time_s().total_cmp(&b.time_s()));
        for ev in events {
            let time = ev.time_s();
            if !(0.0..=s.horizon_s).contains(&time) {
                return fail("events.time_s", format!("event time {time} outside [0, horizon]"));
            }
            match ev {
                EventSpec::ItLoadLoss { delta_p_mw, buildings, .. } => {
                    if !(*delta_p_mw >= 0.0) {
                        return fail("events.delta_p_mw", "must be non-negative".into());
                    }
                    if let Some(&b) = buildings.iter().find(|&&b| b == 0 || b > c.building_count) {
                        return fail("events.buildings", format!("no building {b}"));
                    }
                    let idx: Vec<usize> = if buildings.is_empty() {
                        (0..c.building_count).collect()
                    } else {
                        buildings.iter().map(|b| b - 1).collect()
                    };
                    let avail: f64 = idx.iter().map(|&k| it_left[k]).sum();
                    if *delta_p_mw > avail + 1e-9 {
                        return fail(
                            "events.delta_p_mw",
                            format!("{delta_p_mw} MW exceeds the {avail} MW of connected IT load"),
                        );
                    }
                    let ratio = if avail > 0.0 { delta_p_mw / avail } else { 0.0 };
                    for k in idx {
                        it_left[k] *= 1.0 - ratio;
                    }
                }
                EventSpec::LoadStep { bus, delta_mw, .. } => {
                    if !has_bus(bus) {
                        return fail("events.bus", format!("unknown bus `{bus}`"));
                    }
                    if !delta_mw.is_finite() {
                        return fail("events.delta_mw", "must be finite".into());
                    }
                }
                EventSpec::PlantFault { building, .. } => {
                    if *building == 0 || *building > c.building_count {
                        return fail("events.building", format!("no building {building}"));
                    }
                    it_left[building - 1] = 0.0;
                }
                EventSpec::VoltageDip { bus, magnitude_pu, duration_s, .. } => {
                    if !has_bus(bus) {
                        return fail("events.bus", format!("unknown bus `{bus}`"));
                    }
                    if !(*magnitude_pu >= 0.0 && *magnitude_pu < 2.0) {
                        return fail("events.magnitude_pu", "must lie in [0, 2)".into());
                    }
                    if !(*duration_s > 0.0) {
                        return fail("events.duration_s", "must be positive".into());
                    }
                }
                EventSpec::ShuntSwitch { element, .. } => {
                    if !t.capacitor_banks.iter().any(|cb| &cb.name == element) {
                        return fail("events.element", format!("no capacitor bank `{element}`"));
                    }
                }
            }
        }

        let known = self.available_channels();
        for ch in self.outputs.channels.iter().chain(&self.outputs.plot_channels) {
            if !known.contains(ch) {
                return fail("outputs.channels", format!("unknown channel `{ch}`"));
            }
        }
        Ok(())
    }

    /// Parses and fully validates a scenario document.
    pub fn from_toml_str(src: &str) -> Result<Self, ScenarioError> {
        if src.trim().is_empty() {
            return Err(ScenarioError::Syntax { line: 1, message: "empty scenario file".into() });
        }
        let scenario: Scenario = toml::from_str(src).map_err(|e| classify(src, &e))?;
        scenario.check().map_err(|(key, message)| ScenarioError::Invariant {
            line: locate_key(src, &key),
            key,
            message,
        })?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
    }

    /// Reads a scenario file, or a built-in scenario by name.
    pub fn load(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.exists() {
            let src = std::fs::read_to_string(path)?;
            return Ok(Self::from_toml_str(&src)?);
        }
        crate::builtin::builtin(spec).ok_or_else(|| {
            if spec.ends_with(".toml") || spec.contains('/') {
                Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{spec}: no such file")))
            } else {
                ScenarioError::UnknownBuiltin(spec.into()).into()
            }
        })
    }
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn classify(src: &str, e: &toml::de::Error) -> ScenarioError {
    let message = e.message().to_string();
    let span_line = e.span().map(|s| line_of_offset(src, s.start));
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or_default().to_string();
        let line = span_line
            .filter(|&l| src.lines().nth(l - 1).is_some_and(|t| t.contains(&key)))
            .or_else(|| find_key_line(src, &key, 0))
            .unwrap_or(1);
        return ScenarioError::UnknownKey { key, line };
    }
    ScenarioError::Syntax { line: span_line.unwrap_or(1), message }
}

fn find_key_line(src: &str, key: &str, from_line: usize) -> Option<usize> {
    src.lines().enumerate().skip(from_line).find_map(|(k, l)| {
        let l = l.trim_start();
        let rest = l.strip_prefix(key)?;
        rest.trim_start().starts_with('=').then_some(k + 1)
    })
}

/// Best-effort line of a dotted key such as `devices.sg_share`.
fn locate_key(src: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.rsplit_once('.').unwrap_or(("", dotted));
    let start = if section.is_empty() {
        0
    } else {
        let header = |l: &str| {
            let l = l.trim();
            l == format!("[{section}]") || l == format!("[[{section}]]")
        };
        match src.lines().position(header) {
            Some(k) => k,
            None => {
                // fall back to the first table of the top-level section
                let top = section.split('.').next().unwrap_or(section);
                src.lines()
                    .position(|l| l.trim().starts_with(&format!("[{top}")) || l.trim().starts_with(&format!("[[{top}")))?
            }
        }
    };
    find_key_line(src, key, start).or(Some(start + 1).filter(|_| !section.is_empty()))
}
