//! Built-in scenarios reproducing the study cases, plus a reduced
//! single-machine case that isolates the bare swing equation.

use crate::braking::{build_paper_schedule, BrakeSchedule, BrakeTrigger, StageSpec};
use crate::models::{GfmParams, InductionMotorParams, SyncGenParams};
use crate::network::{GridEquivalent, LineParams};
use crate::protection::VoltageRelay;
use crate::scenario::{ClusterSpec, Devices, EventSpec, OutputSpec, Scenario, SimulationSpec, Topology};
use crate::units::SystemBase;

pub const BUILTIN_NAMES: [&str; 10] = [
    "fig2_no_brake",
    "fig2_brake_125",
    "fig2_brake_250",
    "fig3_mix_75sm",
    "fig3_mix_50sm",
    "fig3_mix_25sm",
    "fig4_single_stage",
    "fig4_multi_stage",
    "fig5_eigen_sweep",
    "fig6_motor_dip",
];

/// Time of the IT load drop in the study cases.
pub const LOAD_LOSS_TIME_S: f64 = 0.1;
/// Relay pickup (1 cycle) plus breaker operation (2 cycles) at 60 Hz.
pub const BREAKER_DELAY_S: f64 = 0.05;
/// Single-stage brake removal, as simulation time.
pub const SINGLE_STAGE_OFF_S: f64 = 0.25;
pub const EIGEN_SCR: [f64; 2] = [2.0, 5.0];
pub const EIGEN_BRAKE_MW: [f64; 5] = [50.0, 125.0, 250.0, 370.0, 500.0];

pub fn builtin(name: &str) -> Option<Scenario> {
    let sc = match name {
        "fig2_no_brake" => fig2(None),
        "fig2_brake_125" => fig2(Some(125.0)),
        "fig2_brake_250" => fig2(Some(250.0)),
        "fig3_mix_75sm" => fig3(0.75),
        "fig3_mix_50sm" => fig3(0.50),
        "fig3_mix_25sm" => fig3(0.25),
        "fig4_single_stage" => fig4(false),
        "fig4_multi_stage" => fig4(true),
        "fig5_eigen_sweep" => fig5(),
        "fig6_motor_dip" => fig6(),
        _ => return None,
    };
    Some(sc)
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    BUILTIN_NAMES.iter().filter_map(|n| builtin(n)).collect()
}

/// Two-bus study system: grid equivalent, 50 km double-circuit line, and a
/// PCC hosting the sources, the brake and five 200 MW buildings.
fn study_system(name: &str, description: &str, sg_share: f64, total_mw: f64, grid: Option<f64>) -> Scenario {
    let (buses, lines) = if grid.is_some() {
        (vec!["grid".to_string(), "pcc".to_string()], vec![LineParams::new("grid", "pcc", 50.0, 2)])
    } else {
        (vec!["pcc".to_string()], Vec::new())
    };
    Scenario {
        name: name.into(),
        description: description.into(),
        base: SystemBase::default(),
        topology: Topology {
            buses,
            pcc_bus: "pcc".into(),
            lines,
            grid: grid.map(|scr| GridEquivalent::new("grid", scr)),
            capacitor_banks: Vec::new(),
        },
        devices: Devices {
            bus: "pcc".into(),
            total_generation_mw: total_mw,
            sg_share,
            gfm_share: 1.0 - sg_share,
            dispatch_pu: 1.0,
            voltage_setpoint_pu: 1.0,
            sync_gen: SyncGenParams::default(),
            gfm: GfmParams::default(),
            motor: InductionMotorParams::default(),
        },
        cluster: ClusterSpec {
            bus: "pcc".into(),
            building_count: 5,
            building_rated_mw: 200.0,
            it_fraction: 0.5,
            motor_fraction: 0.6,
            static_fraction: 0.4,
            relays_enabled: false,
            relay: VoltageRelay::default(),
        },
        brake: None,
        events: vec![EventSpec::ItLoadLoss { time_s: LOAD_LOSS_TIME_S, delta_p_mw: 500.0, buildings: Vec::new() }],
        simulation: SimulationSpec { dt_s: 1e-3, horizon_s: 10.0, initial_speed_deviation_pu: 0.0 },
        outputs: OutputSpec::default(),
    }
}

/// One stage closed on the load loss and opened at `off_s` simulation time.
pub fn single_stage(mw: f64, off_s: f64) -> BrakeSchedule {
    let on_cmd = LOAD_LOSS_TIME_S;
    BrakeSchedule {
        bus: "pcc".into(),
        trigger: BrakeTrigger::Explicit,
        breaker_delay_s: BREAKER_DELAY_S,
        max_insertion_s: crate::braking::DEFAULT_MAX_INSERTION_S,
        stages: vec![StageSpec::new(mw, on_cmd, Some(off_s - BREAKER_DELAY_S))],
    }
}

fn fig2(brake_mw: Option<f64>) -> Scenario {
    let name = match brake_mw {
        None => "fig2_no_brake".to_string(),
        Some(mw) => format!("fig2_brake_{mw:.0}"),
    };
    let brake = brake_mw.map_or("no brake".to_string(), |mw| format!("{mw:.0} MW brake"));
    let mut sc = study_system(
        &name,
        &format!("500 MW synchronous machine and grid equivalent serving a 1000 MW cluster; 500 MW of IT load drops at 0.1 s; {brake}"),
        1.0,
        500.0,
        Some(2.0),
    );
    sc.brake = brake_mw.map(|mw| single_stage(mw, SINGLE_STAGE_OFF_S));
    sc.outputs.plot_channels = vec!["sg_p_pu".into()];
    sc
}

fn fig3(sg_share: f64) -> Scenario {
    let pct = (sg_share * 100.0).round();
    let mut sc = study_system(
        &format!("fig3_mix_{pct:.0}sm"),
        &format!("{pct:.0}% synchronous, {:.0}% grid-forming generation; 250 MW brake on the 500 MW IT drop", 100.0 - pct),
        sg_share,
        1000.0,
        None,
    );
    sc.brake = Some(single_stage(250.0, SINGLE_STAGE_OFF_S));
    sc.outputs.plot_channels = vec!["freq_hz".into()];
    sc
}

fn fig4(multi: bool) -> Scenario {
    let mut sc = fig3(0.25);
    if multi {
        sc.name = "fig4_multi_stage".into();
        sc.description = "25% synchronous mix; 130, 130 and 110 MW stages removed in sequence".into();
        sc.brake = Some(build_paper_schedule(LOAD_LOSS_TIME_S, BREAKER_DELAY_S));
    } else {
        sc.name = "fig4_single_stage".into();
        sc.description = "25% synchronous mix; single 250 MW stage".into();
    }
    sc.outputs.plot_channels = vec!["freq_hz".into(), "brake_p_pu".into()];
    sc
}

/// Template for the eigenvalue sweep: the brake conducts and the IT load
/// is already gone at the operating point. The machine carries an explicit
/// damping term in place of damper windings and its turbine output passes
/// entirely through the reheater.
fn fig5() -> Scenario {
    let mut sc = study_system(
        "fig5_eigen_sweep",
        "synchronous plant behind a grid equivalent; linearized with the brake conducting after the IT drop",
        1.0,
        1000.0,
        Some(EIGEN_SCR[0]),
    );
    let sg = &mut sc.devices.sync_gen;
    sg.d_pu = 2.0;
    if let Some(e) = sg.exciter.as_mut() {
        e.k_a = 100.0;
        e.k_f = 0.03;
    }
    if let Some(g) = sg.governor.as_mut() {
        g.hp_fraction = 0.0;
    }
    sc.brake = Some(single_stage(250.0, SINGLE_STAGE_OFF_S));
    sc
}

fn fig6() -> Scenario {
    let mut sc = study_system(
        "fig6_motor_dip",
        "cluster bus held at 0.25 pu for 100 ms; motor ride-through",
        0.5,
        1000.0,
        Some(5.0),
    );
    sc.events = vec![EventSpec::VoltageDip { time_s: 0.5, bus: "pcc".into(), magnitude_pu: 0.25, duration_s: 0.1 }];
    sc.devices.dispatch_pu = 0.5;
    sc.simulation.horizon_s = 4.0;
    sc.outputs.channels.push("motor_speed_pu".into());
    sc.outputs.plot_channels = vec!["motor_speed_pu".into()];
    sc
}

/// Parameters of the reduced single-machine case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingCase {
    pub h_s: f64,
    pub d_pu: f64,
    pub delta_p_pu: f64,
    pub p_br_pu: f64,
    pub omega0_pu: f64,
    pub dt_s: f64,
    pub horizon_s: f64,
}

/// One ideal machine on the system base holding its bus at 1.0 pu, frozen
/// mechanical power, purely static load. The load drop and brake insertion
/// both take effect at t = 0 and the brake stays in for the horizon.
pub fn swing_case(c: &SwingCase) -> Scenario {
    let base = SystemBase::default();
    let s_b = base.s_base_mva;
    let mut sc = study_system("reduced_swing", "single machine, constant bus voltage", 1.0, s_b, None);
    sc.devices.sync_gen = SyncGenParams::classical(c.h_s, c.d_pu, 0.0, 0.0);
    sc.cluster.motor_fraction = 0.0;
    sc.cluster.static_fraction = 1.0;
    sc.events = vec![EventSpec::ItLoadLoss { time_s: 0.0, delta_p_mw: c.delta_p_pu * s_b, buildings: Vec::new() }];
    sc.brake = (c.p_br_pu > 0.0).then(|| BrakeSchedule {
        bus: "pcc".into(),
        trigger: BrakeTrigger::Explicit,
        breaker_delay_s: 0.0,
        max_insertion_s: 2.0 * c.horizon_s,
        stages: vec![StageSpec { thermal_limit_mj: Some(f64::MAX), ..StageSpec::new(c.p_br_pu * s_b, 0.0, None) }],
    });
    sc.simulation = SimulationSpec { dt_s: c.dt_s, horizon_s: c.horizon_s, initial_speed_deviation_pu: c.omega0_pu };
    sc
}
