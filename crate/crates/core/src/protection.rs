//! Data-center load cluster, undervoltage/overvoltage relays and the
//! load-loss bookkeeping that turns relay and fault outcomes into grid-side
//! load steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::SystemBase;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSegment {
    pub threshold_pu: f64,
    /// Longest tolerated time beyond the threshold.
    pub dwell_s: f64,
}

const fn seg(threshold_pu: f64, dwell_s: f64) -> EnvelopeSegment {
    EnvelopeSegment { threshold_pu, dwell_s }
}

/// Combined 27/59 relay. A segment is violated while the voltage is below
/// (under) or above (over) its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageRelay {
    pub under: Vec<EnvelopeSegment>,
    pub over: Vec<EnvelopeSegment>,
    pub pickup_cycles: f64,
}

impl Default for VoltageRelay {
    /// ITIC-shaped tolerance curve.
    fn default() -> Self {
        Self {
            under: vec![seg(0.70, 0.02), seg(0.80, 0.5), seg(0.90, 10.0)],
            over: vec![seg(1.10, 0.5), seg(1.20, 0.003)],
            pickup_cycles: 1.0,
        }
    }
}

impl VoltageRelay {
    pub fn validate(&self) -> Result<()> {
        let all = self.under.iter().chain(&self.over);
        if all.clone().any(|s| !(s.dwell_s > 0.0) || !(s.threshold_pu > 0.0)) {
            return Err(Error::Config("relay envelope thresholds and dwell times must be positive".into()));
        }
        // deeper excursions must be tolerated for less time
        let under_ok = self
            .under
            .windows(2)
            .all(|w| w[1].threshold_pu > w[0].threshold_pu && w[1].dwell_s > w[0].dwell_s);
        let over_ok = self
            .over
            .windows(2)
            .all(|w| w[1].threshold_pu > w[0].threshold_pu && w[1].dwell_s < w[0].dwell_s);
        if !under_ok || !over_ok {
            return Err(Error::Config("relay envelope must be monotone".into()));
        }
        if let (Some(u), Some(o)) = (self.under.last(), self.over.first()) {
            if u.threshold_pu >= o.threshold_pu {
                return Err(Error::Config("relay undervoltage and overvoltage bands overlap".into()));
            }
        }
        if !(self.pickup_cycles >= 0.0) {
            return Err(Error::Config("relay pickup must be non-negative".into()));
        }
        Ok(())
    }

    fn segments(&self) -> impl Iterator<Item = (bool, &EnvelopeSegment)> {
        self.under.iter().map(|s| (true, s)).chain(self.over.iter().map(|s| (false, s)))
    }
}

/// Streaming evaluation of one relay over a time-ordered voltage record.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayMonitor {
    relay: VoltageRelay,
    pickup_s: f64,
    starts: Vec<Option<f64>>,
    trip_at: Option<f64>,
}

impl RelayMonitor {
    pub fn new(relay: VoltageRelay, f_nominal_hz: f64) -> Self {
        let n = relay.under.len() + relay.over.len();
        Self {
            pickup_s: relay.pickup_cycles / f_nominal_hz,
            relay,
            starts: vec![None; n],
            trip_at: None,
        }
    }

    /// Feeds one sample. Returns the trip time once a segment's dwell is
    /// exceeded; later samples return the same decision.
    pub fn sample(&mut self, t: f64, v_pu: f64) -> Option<f64> {
        if self.trip_at.is_some() {
            return self.trip_at;
        }
        for (k, (under, s)) in self.relay.segments().enumerate() {
            let violated = if under { v_pu < s.threshold_pu } else { v_pu > s.threshold_pu };
            if !violated {
                self.starts[k] = None;
                continue;
            }
            let start = *self.starts[k].get_or_insert(t);
            if t - start >= s.dwell_s - 1e-12 {
                let trip = start + s.dwell_s + self.pickup_s;
                self.trip_at = Some(self.trip_at.map_or(trip, |x: f64| x.min(trip)));
            }
        }
        self.trip_at
    }

    pub fn trip_time(&self) -> Option<f64> {
        self.trip_at
    }
}

/// Trip decision for a complete voltage record, `(time_s, v_pu)` samples.
pub fn relay_evaluate(relay: &VoltageRelay, history: &[(f64, f64)], f_nominal_hz: f64) -> Option<f64> {
    let mut m = RelayMonitor::new(relay.clone(), f_nominal_hz);
    history.iter().find_map(|&(t, v)| m.sample(t, v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCenterBuilding {
    pub rated_mw: f64,
    pub it_fraction: f64,
    /// Shares of the non-IT load; they sum to one.
    pub motor_fraction: f64,
    pub static_fraction: f64,
    pub relay: VoltageRelay,
    pub bus: String,
}

impl DataCenterBuilding {
    pub fn validate(&self) -> Result<()> {
        if !(self.rated_mw > 0.0) {
            return Err(Error::Config("building rating must be positive".into()));
        }
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(in_unit(self.it_fraction) && in_unit(self.motor_fraction) && in_unit(self.static_fraction)) {
            return Err(Error::Config("load fractions must lie in [0, 1]".into()));
        }
        if (self.motor_fraction + self.static_fraction - 1.0).abs() > 1e-9 {
            return Err(Error::Config("motor and static fractions of the non-IT load must sum to 1".into()));
        }
        self.relay.validate()
    }

    pub fn it_mw(&self) -> f64 {
        self.rated_mw * self.it_fraction
    }

    pub fn motor_mw(&self) -> f64 {
        self.rated_mw * (1.0 - self.it_fraction) * self.motor_fraction
    }

    pub fn static_mw(&self) -> f64 {
        self.rated_mw * (1.0 - self.it_fraction) * self.static_fraction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferKind {
    /// IT load rides to UPS; non-IT stays on the grid.
    ItOnly,
    /// Whole building moves to backup supply.
    FullBuilding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadStepEvent {
    pub time_s: f64,
    pub delta_p_mw: f64,
    /// Zero-based building indices.
    pub buildings: Vec<usize>,
    pub kind: TransferKind,
}

impl LoadStepEvent {
    pub fn delta_p_pu(&self, base: &SystemBase) -> f64 {
        self.delta_p_mw / base.s_base_mva
    }
}

#[derive(Debug, Clone)]
pub enum Disturbance<'a> {
    PlantFault { building: usize, time_s: f64 },
    /// Voltage record seen by every building's relay.
    GridVoltageExcursion { history: &'a [(f64, f64)] },
}

/// Grid-side load step caused by a disturbance at the cluster.
pub fn scenario_load_loss(
    cluster: &[DataCenterBuilding],
    disturbance: &Disturbance<'_>,
    f_nominal_hz: f64,
) -> Result<LoadStepEvent> {
    if cluster.is_empty() {
        return Err(Error::Config("data-center cluster is empty".into()));
    }
    match *disturbance {
        Disturbance::PlantFault { building, time_s } => {
            let b = cluster
                .get(building)
                .ok_or_else(|| Error::Config(format!("no building {}", building + 1)))?;
            Ok(LoadStepEvent {
                time_s,
                delta_p_mw: b.rated_mw,
                buildings: vec![building],
                kind: TransferKind::FullBuilding,
            })
        }
        Disturbance::GridVoltageExcursion { history } => {
            let trips: Vec<(usize, f64)> = cluster
                .iter()
                .enumerate()
                .filter_map(|(k, b)| relay_evaluate(&b.relay, history, f_nominal_hz).map(|t| (k, t)))
                .collect();
            let time_s = trips.iter().map(|&(_, t)| t).fold(f64::INFINITY, f64::min);
            Ok(LoadStepEvent {
                time_s: if time_s.is_finite() { time_s } else { history.last().map_or(0.0, |h| h.0) },
                delta_p_mw: trips.iter().map(|&(k, _)| cluster[k].it_mw()).sum(),
                buildings: trips.iter().map(|&(k, _)| k).collect(),
                kind: TransferKind::ItOnly,
            })
        }
    }
}

/// Grid-side demand still connected in each building.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConnectedLoad {
    pub it_mw: f64,
    pub motor_mw: f64,
    pub static_mw: f64,
}

impl ConnectedLoad {
    pub fn total_mw(&self) -> f64 {
        self.it_mw + self.motor_mw + self.static_mw
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadModel {
    pub buildings: Vec<ConnectedLoad>,
}

impl LoadModel {
    pub fn new(cluster: &[DataCenterBuilding]) -> Self {
        Self {
            buildings: cluster
                .iter()
                .map(|b| ConnectedLoad {
                    it_mw: b.it_mw(),
                    motor_mw: b.motor_mw(),
                    static_mw: b.static_mw(),
                })
                .collect(),
        }
    }

    pub fn demand_mw(&self) -> f64 {
        self.buildings.iter().map(ConnectedLoad::total_mw).sum()
    }

    pub fn it_mw(&self) -> f64 {
        self.buildings.iter().map(|b| b.it_mw).sum()
    }

    /// Removes the event's load from grid-side demand. IT transfers are
    /// spread over the affected buildings in proportion to their connected
    /// IT load.
    pub fn apply_load_step(&mut self, event: &LoadStepEvent) -> Result<()> {
        if !(event.delta_p_mw >= 0.0) {
            return Err(Error::Config("load step must be non-negative".into()));
        }
        if let Some(&k) = event.buildings.iter().find(|&&k| k >= self.buildings.len()) {
            return Err(Error::Config(format!("no building {}", k + 1)));
        }
        match event.kind {
            TransferKind::ItOnly => {
                let available: f64 = event.buildings.iter().map(|&k| self.buildings[k].it_mw).sum();
                if event.delta_p_mw > available + 1e-9 {
                    return Err(Error::Config(format!(
                        "load step of {} MW exceeds the {available} MW of connected IT load",
                        event.delta_p_mw
                    )));
                }
                if event.delta_p_mw == 0.0 {
                    return Ok(());
                }
                let ratio = (event.delta_p_mw / available).min(1.0);
                for &k in &event.buildings {
                    let b = &mut self.buildings[k];
                    b.it_mw = if ratio >= 1.0 { 0.0 } else { b.it_mw * (1.0 - ratio) };
                }
            }
            TransferKind::FullBuilding => {
                for &k in &event.buildings {
                    self.buildings[k] = ConnectedLoad::default();
                }
            }
        }
        Ok(())
    }
}
