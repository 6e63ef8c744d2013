//! Fixed-step RK4 integration with grid-aligned discrete events.

use num_complex::Complex64;

use super::equilibrium::find_equilibrium;
use super::system::{Evaluation, System};
use crate::braking::{step_thermal, BrakeCommandRecord, BrakeController, ThermalState};
use crate::error::{Error, Result};
use crate::network::BreakerCommand;
use crate::protection::{LoadStepEvent, RelayMonitor, TransferKind};
use crate::scenario::{EventSpec, Scenario, SwitchCommand};

/// Channels recorded on every run, whatever the output request.
pub const CORE_CHANNELS: [&str; 7] = [
    "freq_hz",
    "sg_p_pu",
    "sg_speed_pu",
    "brake_p_pu",
    "v_pcc_pu",
    "motor_slip",
    "motor_speed_pu",
];

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time_s: f64,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub scenario: String,
    pub dt_s: f64,
    pub f_nominal_hz: f64,
    pub time: Vec<f64>,
    pub channels: Vec<Channel>,
    pub events: Vec<EventRecord>,
    /// Effective conduction interval of each brake stage; `None` for a
    /// stage that never closed, open end if still closed at the horizon.
    pub brake_windows: Vec<Option<(f64, Option<f64>)>>,
    pub brake_energy_mj: Vec<f64>,
    pub thermal_violation: Vec<bool>,
    pub brake_commands: Vec<BrakeCommandRecord>,
    pub motor_stalled: bool,
    /// Set when the run stopped early; the trace holds samples up to the
    /// failure.
    pub failure: Option<String>,
}

impl SimTrace {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Time the last brake stage stopped conducting.
    pub fn last_brake_removal(&self) -> Option<f64> {
        self.brake_windows.iter().flatten().filter_map(|w| w.1).reduce(f64::max)
    }

    /// Brake energy from the recorded dissipation (left Riemann sum).
    pub fn integrated_brake_energy_mj(&self, s_base_mva: f64) -> f64 {
        let p = self.channel("brake_p_pu").unwrap_or(&[]);
        let n = p.len().saturating_sub(1);
        p[..n].iter().sum::<f64>() * self.dt_s * s_base_mva
    }
}

/// Snaps a time to the integration grid, noting any shift.
fn snap(t: f64, dt: f64, what: &str, log: &mut Vec<EventRecord>) -> usize {
    let k = (t / dt).round().max(0.0) as usize;
    let shift = k as f64 * dt - t;
    if shift.abs() > 1e-9 {
        log.push(EventRecord {
            time_s: k as f64 * dt,
            kind: "note".into(),
            detail: format!("{what} at {t:.6} s snapped to the step grid ({shift:+.3e} s)"),
        });
    }
    k
}

enum Action {
    Scenario(EventSpec),
    DipEnd,
    RelayTrip(usize),
}

struct Recorder {
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
}

impl Recorder {
    fn new(names: Vec<String>, capacity: usize) -> Self {
        let cols = names.iter().map(|_| Vec::with_capacity(capacity)).collect();
        Self { names, cols }
    }
}

/// Builds the system, initializes it and integrates over the horizon.
pub fn run(scenario: &Scenario) -> Result<SimTrace> {
    let mut sys = System::build(scenario)?;
    let d = &scenario.devices;
    let eq = find_equilibrium(&mut sys, d.dispatch_pu, d.voltage_setpoint_pu)?;
    let mut x = eq.x;
    let w0 = scenario.simulation.initial_speed_deviation_pu;
    if w0 != 0.0 {
        if sys.sg.is_some() {
            x[sys.sg_span().start + 1] = w0;
        }
        if sys.gfm.is_some() {
            x[sys.gfm_span().start + 1] = w0;
        }
    }
    integrate(scenario, sys, x)
}

fn integrate(sc: &Scenario, mut sys: System, mut x: Vec<f64>) -> Result<SimTrace> {
    let dt = sc.simulation.dt_s;
    let n_steps = (sc.simulation.horizon_s / dt).round() as usize;
    let base = sys.base.clone();
    let mut log: Vec<EventRecord> = Vec::new();

    let mut actions: Vec<(usize, Action)> = Vec::new();
    for ev in &sc.events {
        let k = snap(ev.time_s(), dt, "event", &mut log);
        if let EventSpec::VoltageDip { time_s, duration_s, .. } = ev {
            let end = snap(time_s + duration_s, dt, "dip recovery", &mut log);
            actions.push((end.max(k + 1), Action::DipEnd));
        }
        actions.push((k, Action::Scenario(ev.clone())));
    }

    let mut controller = sc.brake.clone().map(BrakeController::new).transpose()?;
    let stages = sc.brake.as_ref().map_or(0, |b| b.stages.len());
    let delay = sc.brake.as_ref().map_or(0.0, |b| b.breaker_delay_s);
    let limits: Vec<f64> = sc.brake.as_ref().map_or(Vec::new(), |b| b.stages.iter().map(|s| s.thermal_limit()).collect());
    let mut thermal = vec![ThermalState::default(); stages];
    let mut windows: Vec<Option<(f64, Option<f64>)>> = vec![None; stages];

    let mut relays: Vec<Option<RelayMonitor>> = if sc.cluster.relays_enabled {
        (0..sc.cluster.building_count)
            .map(|_| Some(RelayMonitor::new(sc.cluster.relay.clone(), base.f_nominal_hz)))
            .collect()
    } else {
        Vec::new()
    };

    let mut names: Vec<String> = CORE_CHANNELS.iter().map(|s| s.to_string()).collect();
    for c in sc.outputs.channels.iter().chain(&sc.outputs.plot_channels) {
        if !names.contains(c) {
            names.push(c.clone());
        }
    }
    let mut rec = Recorder::new(names, n_steps + 1);
    let mut time = Vec::with_capacity(n_steps + 1);
    let mut load_loss_at: Option<f64> = None;
    let mut failure = None;
    let mut scratch = vec![0.0; x.len()];

    for k in 0..=n_steps {
        let t = k as f64 * dt;
        // discrete updates due at this grid point, in declaration order
        let mut due: Vec<Action> = Vec::new();
        let mut rest = Vec::with_capacity(actions.len());
        for (ka, a) in actions.drain(..) {
            if ka == k {
                due.push(a);
            } else {
                rest.push((ka, a));
            }
        }
        actions = rest;
        for a in due {
            match a {
                Action::Scenario(ev) => {
                    if let Some(lost) = apply_event(&mut sys, &x, &ev, t, &mut log)? {
                        if lost > 0.0 {
                            load_loss_at.get_or_insert(t);
                        }
                    }
                }
                Action::DipEnd => {
                    sys.imposed = None;
                    log.push(EventRecord { time_s: t, kind: "voltage_dip".into(), detail: "voltage released".into() });
                }
                Action::RelayTrip(b) => {
                    let it = sys.loads.buildings[b].it_mw;
                    let ev = LoadStepEvent { time_s: t, delta_p_mw: it, buildings: vec![b], kind: TransferKind::ItOnly };
                    sys.loads.apply_load_step(&ev)?;
                    log.push(EventRecord {
                        time_s: t,
                        kind: "relay_trip".into(),
                        detail: format!("building {} IT load ({it:.1} MW) transferred to UPS", b + 1),
                    });
                    if it > 0.0 {
                        load_loss_at.get_or_insert(t);
                    }
                }
            }
        }
        if let Some(ctrl) = &mut controller {
            for cmd in ctrl.step(t, load_loss_at) {
                let kc = snap(cmd.time_s, dt, "brake command", &mut log);
                let ke = snap(cmd.time_s + delay, dt, "brake operation", &mut log);
                let idx = sys.brake_shunts[cmd.stage];
                let mut blog = Vec::new();
                sys.network.shunts[idx].set_shunt(cmd.command, kc as f64 * dt, (ke - kc) as f64 * dt, &mut blog);
                log.extend(blog.into_iter().map(|b| EventRecord { time_s: b.time_s, kind: b.element, detail: b.detail }));
            }
        }
        for (j, sh) in sys.network.shunts.iter_mut().enumerate() {
            let mut blog = Vec::new();
            if sh.advance_to(t, &mut blog) {
                if let Some(stage) = sys.brake_shunts.iter().position(|&b| b == j) {
                    if sh.conducting() {
                        windows[stage] = Some((t, None));
                    } else if let Some(w) = &mut windows[stage] {
                        w.1 = Some(t);
                    }
                }
            }
            log.extend(blog.into_iter().map(|b| EventRecord { time_s: b.time_s, kind: b.element, detail: b.detail }));
        }

        let ev = match sys.evaluate(&x) {
            Ok(ev) => ev,
            Err(e) => {
                failure = Some(format!("at t = {t:.6} s: {e}"));
                break;
            }
        };
        time.push(t);
        record(&sys, &x, &ev, &mut rec);

        if !relays.is_empty() {
            let v = ev.solution.v[sys.cluster_bus].norm();
            for (b, slot) in relays.iter_mut().enumerate() {
                if let Some(m) = slot {
                    if let Some(trip) = m.sample(t, v) {
                        let kt = snap(trip, dt, "relay trip", &mut log).max(k + 1);
                        actions.push((kt, Action::RelayTrip(b)));
                        *slot = None;
                    }
                }
            }
        }
        if k == n_steps {
            break;
        }

        // classic RK4; the discrete configuration is frozen over the step
        let mut p = [vec![0.0; stages], vec![0.0; stages], vec![0.0; stages], vec![0.0; stages]];
        let k1 = ev.dx.clone();
        p[0] = sys.brake_powers(&ev.solution);
        let stage_eval = |xs: &[f64]| -> Result<Evaluation> { sys.evaluate(xs) };
        let result = (|| -> Result<Vec<f64>> {
            for i in 0..x.len() {
                scratch[i] = x[i] + 0.5 * dt * k1[i];
            }
            let e2 = stage_eval(&scratch)?;
            p[1] = sys.brake_powers(&e2.solution);
            for i in 0..x.len() {
                scratch[i] = x[i] + 0.5 * dt * e2.dx[i];
            }
            let e3 = stage_eval(&scratch)?;
            p[2] = sys.brake_powers(&e3.solution);
            for i in 0..x.len() {
                scratch[i] = x[i] + dt * e3.dx[i];
            }
            let e4 = stage_eval(&scratch)?;
            p[3] = sys.brake_powers(&e4.solution);
            Ok((0..x.len())
                .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * e2.dx[i] + 2.0 * e3.dx[i] + e4.dx[i]))
                .collect())
        })();
        match result {
            Ok(next) if next.iter().all(|v| v.is_finite()) => x = next,
            Ok(_) => {
                failure = Some(format!("state diverged between {t:.6} s and {:.6} s", t + dt));
                break;
            }
            Err(e) => {
                failure = Some(format!("at t = {t:.6} s: {e}"));
                break;
            }
        }
        for j in 0..stages {
            let conducting = sys.network.shunts[sys.brake_shunts[j]].conducting();
            let pw = (p[0][j] + 2.0 * p[1][j] + 2.0 * p[2][j] + p[3][j]) / 6.0;
            thermal[j] = step_thermal(thermal[j], conducting, pw, dt, limits[j], &base);
        }
    }

    if let Some(ctrl) = &controller {
        if let Some(w) = ctrl.finish() {
            log.push(EventRecord { time_s: time.last().copied().unwrap_or(0.0), kind: "warning".into(), detail: w });
        }
    }
    for (j, th) in thermal.iter().enumerate() {
        if th.violated {
            log.push(EventRecord {
                time_s: time.last().copied().unwrap_or(0.0),
                kind: "thermal".into(),
                detail: format!("brake stage {} exceeded its {:.1} MJ limit ({:.1} MJ)", j + 1, limits[j], th.energy_mj),
            });
        }
    }
    let motor_stalled = sys.motor.as_ref().is_some_and(|m| {
        let slip = &rec.cols[5];
        stall_check(slip, dt, m.pull_out_slip())
    });
    log.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    Ok(SimTrace {
        scenario: sc.name.clone(),
        dt_s: dt,
        f_nominal_hz: base.f_nominal_hz,
        time,
        channels: rec.names.into_iter().zip(rec.cols).map(|(name, values)| Channel { name, values }).collect(),
        events: log,
        brake_windows: windows,
        brake_energy_mj: thermal.iter().map(|t| t.energy_mj).collect(),
        thermal_violation: thermal.iter().map(|t| t.violated).collect(),
        brake_commands: controller.map(|c| c.log).unwrap_or_default(),
        motor_stalled,
        failure,
    })
}

/// Stalled: beyond pull-out at the end, or still decelerating while well
/// above the initial slip.
fn stall_check(slip: &[f64], dt: f64, pull_out: f64) -> bool {
    let (Some(&first), Some(&last)) = (slip.first(), slip.last()) else { return false };
    let back = ((0.5 / dt) as usize).min(slip.len() - 1);
    let earlier = slip[slip.len() - 1 - back];
    last > pull_out || (last > 1.05 * first && last > earlier)
}

/// Applies a scenario event. Returns the grid-side load removed, in MW,
/// for load-loss events.
fn apply_event(sys: &mut System, x: &[f64], ev: &EventSpec, t: f64, log: &mut Vec<EventRecord>) -> Result<Option<f64>> {
    let mut note = |kind: &str, detail: String| log.push(EventRecord { time_s: t, kind: kind.into(), detail });
    match ev {
        EventSpec::ItLoadLoss { delta_p_mw, buildings, .. } => {
            let idx: Vec<usize> = if buildings.is_empty() {
                (0..sys.loads.buildings.len()).collect()
            } else {
                buildings.iter().map(|b| b - 1).collect()
            };
            let step = LoadStepEvent { time_s: t, delta_p_mw: *delta_p_mw, buildings: idx, kind: TransferKind::ItOnly };
            sys.loads.apply_load_step(&step)?;
            note("it_load_loss", format!("{delta_p_mw:.1} MW of IT load transferred to UPS"));
            Ok(Some(*delta_p_mw))
        }
        EventSpec::PlantFault { building, .. } => {
            let b = &sys.loads.buildings[building - 1];
            let mw = b.total_mw();
            let step = LoadStepEvent { time_s: t, delta_p_mw: mw, buildings: vec![building - 1], kind: TransferKind::FullBuilding };
            sys.loads.apply_load_step(&step)?;
            note("plant_fault", format!("building {building} ({mw:.1} MW) transferred to backup supply"));
            Ok(Some(mw))
        }
        EventSpec::LoadStep { bus, delta_mw, .. } => {
            let k = sys.network.bus(bus)?;
            let new = sys.extra_static_mw[k] + delta_mw;
            let connected: f64 = if k == sys.cluster_bus {
                sys.loads.buildings.iter().map(|b| b.it_mw + b.static_mw).sum()
            } else {
                0.0
            };
            if new + connected < -1e-9 {
                return Err(Error::Config(format!("load step leaves negative load at bus {bus}")));
            }
            sys.extra_static_mw[k] = new;
            note("load_step", format!("{delta_mw:+.1} MW static load at bus {bus}"));
            Ok(Some(-delta_mw))
        }
        EventSpec::VoltageDip { bus, magnitude_pu, .. } => {
            let k = sys.network.bus(bus)?;
            let angle = sys.evaluate(x)?.solution.v[k].arg();
            sys.imposed = Some((k, Complex64::from_polar(*magnitude_pu, angle)));
            note("voltage_dip", format!("bus {bus} held at {magnitude_pu:.3} pu"));
            Ok(None)
        }
        EventSpec::ShuntSwitch { element, command, .. } => {
            let idx = sys
                .network
                .shunts
                .iter()
                .position(|s| &s.name == element)
                .ok_or_else(|| Error::Config(format!("no shunt element `{element}`")))?;
            let cmd = match command {
                SwitchCommand::Close => BreakerCommand::Close,
                SwitchCommand::Open => BreakerCommand::Open,
            };
            let mut blog = Vec::new();
            sys.network.shunts[idx].set_shunt(cmd, t, 0.0, &mut blog);
            log.extend(blog.into_iter().map(|b| EventRecord { time_s: b.time_s, kind: b.element, detail: b.detail }));
            Ok(None)
        }
    }
}

fn record(sys: &System, x: &[f64], ev: &Evaluation, rec: &mut Recorder) {
    let f_nom = sys.base.f_nominal_hz;
    for (name, col) in rec.names.iter().zip(rec.cols.iter_mut()) {
        col.push(channel_value(sys, x, ev, name, f_nom));
    }
}

fn channel_value(sys: &System, x: &[f64], ev: &Evaluation, name: &str, f_nom: f64) -> f64 {
    let s_b = sys.base.s_base_mva;
    let sg_s = ev.sg.map(|t| t.power()).unwrap_or_default();
    let gfm_s = ev.gfm.map(|t| t.power()).unwrap_or_default();
    let slip = sys.motor.as_ref().map_or(0.0, |_| x[sys.motor_span().start + 2]);
    match name {
        "freq_hz" => f_nom * (1.0 + sys.system_speed(x)),
        "sg_p_pu" => sg_s.re,
        "sg_q_pu" => sg_s.im,
        "gfm_p_pu" => gfm_s.re,
        "gfm_q_pu" => gfm_s.im,
        "sg_speed_pu" => sys.sg.as_ref().map_or(0.0, |_| x[sys.sg_span().start + 1]),
        "sg_pm_pu" => sys.sg.as_ref().map_or(0.0, |sg| sg.mechanical_power(&sg.unpack(&x[sys.sg_span()]))),
        "gfm_freq_hz" => f_nom * (1.0 + sys.gfm.as_ref().map_or(0.0, |_| x[sys.gfm_span().start + 1])),
        "gfm_i_pu" => ev.gfm.map_or(0.0, |t| t.i.norm()),
        "v_pcc_pu" => ev.solution.v[sys.pcc].norm(),
        "brake_p_pu" => sys.brake_powers(&ev.solution).iter().sum(),
        "brake_stages_closed" => sys.brake_shunts.iter().filter(|&&k| sys.network.shunts[k].conducting()).count() as f64,
        "motor_slip" => slip,
        "motor_speed_pu" => sys.motor.as_ref().map_or(0.0, |_| 1.0 - slip),
        "motor_p_pu" => ev.motor.map_or(0.0, |t| t.power().re * sys.motor_mw() / s_b),
        "load_p_pu" => sys.load_power(ev),
        "grid_p_pu" => match (sys.network.grid, ev.solution.grid_current) {
            (Some((b, _, _)), Some(i)) => (ev.solution.v[b] * i.conj()).re,
            _ => 0.0,
        },
        other => {
            if let Some(k) = other.strip_prefix("brake").and_then(|r| r.strip_suffix("_p_pu")).and_then(|n| n.parse::<usize>().ok()) {
                return sys.brake_powers(&ev.solution).get(k - 1).copied().unwrap_or(0.0);
            }
            if let Some(bus) = other.strip_prefix("v_").and_then(|r| r.strip_suffix("_pu")) {
                if let Ok(k) = sys.network.bus(bus) {
                    return ev.solution.v[k].norm();
                }
            }
            f64::NAN
        }
    }
}
