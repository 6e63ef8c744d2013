//! Grid-forming inverter: a droop-controlled voltage source behind the
//! output filter inductance, with magnitude current limiting.
//!
//! States (machine base): internal angle, internal frequency deviation (the
//! low-pass filtered P-f droop output) and internal voltage magnitude.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_finite, Terminal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfmParams {
    pub filter_inductance_mh: f64,
    pub filter_capacitance_uf: f64,
    /// Voltage at which the filter components sit.
    pub converter_kv: f64,
    /// Rating the filter components are sized for. The aggregate keeps the
    /// resulting per-unit values when its rating is scaled.
    pub filter_base_mw: f64,
    pub current_limit_pu: f64,
    /// Frequency drop per unit of power above setpoint (pu/pu).
    pub p_droop_pu: f64,
    /// Voltage drop per unit of reactive power above setpoint (pu/pu).
    pub q_droop_pu: f64,
    pub power_filter_s: f64,
    pub voltage_time_constant_s: f64,
}

impl Default for GfmParams {
    fn default() -> Self {
        Self {
            filter_inductance_mh: 3.0,
            filter_capacitance_uf: 30.0,
            converter_kv: 34.5,
            filter_base_mw: 500.0,
            current_limit_pu: 1.3,
            p_droop_pu: 0.12,
            q_droop_pu: 0.05,
            power_filter_s: 0.1,
            voltage_time_constant_s: 0.05,
        }
    }
}

impl GfmParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("grid-forming inverter: {m}")));
        if !(self.current_limit_pu >= 1.0) {
            return bad("current limit must be at least 1.0 pu");
        }
        if !(self.p_droop_pu > 0.0 && self.q_droop_pu > 0.0) {
            return bad("droop gains must be positive");
        }
        if !(self.filter_inductance_mh > 0.0
            && self.filter_capacitance_uf >= 0.0
            && self.converter_kv > 0.0
            && self.filter_base_mw > 0.0)
        {
            return bad("filter data must be positive");
        }
        if !(self.power_filter_s > 0.0 && self.voltage_time_constant_s > 0.0) {
            return bad("control time constants must be positive");
        }
        Ok(())
    }

    fn z_base_ohm(&self) -> f64 {
        self.converter_kv * self.converter_kv / self.filter_base_mw
    }

    /// Filter reactance on the machine base.
    pub fn filter_reactance_pu(&self, f_nominal_hz: f64) -> f64 {
        2.0 * std::f64::consts::PI * f_nominal_hz * self.filter_inductance_mh * 1e-3 / self.z_base_ohm()
    }

    /// Filter capacitor susceptance on the machine base.
    pub fn filter_susceptance_pu(&self, f_nominal_hz: f64) -> f64 {
        2.0 * std::f64::consts::PI * f_nominal_hz * self.filter_capacitance_uf * 1e-6 * self.z_base_ohm()
    }

    /// Equivalent inertia of the filtered droop loop, `tau / (2 m_p)`.
    pub fn virtual_inertia_s(&self) -> f64 {
        self.power_filter_s / (2.0 * self.p_droop_pu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GfmSetpoints {
    pub p_set: f64,
    pub q_set: f64,
    pub v_set: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GfmState {
    pub theta: f64,
    pub omega: f64,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gfm {
    pub rated_mw: f64,
    pub params: GfmParams,
    pub setpoints: GfmSetpoints,
    x_f: f64,
    b_c: f64,
}

pub const GFM_STATES: [&str; 3] = ["theta", "omega", "e"];

impl Gfm {
    pub fn new(rated_mw: f64, params: GfmParams, f_nominal_hz: f64) -> Result<Self> {
        params.validate()?;
        if !(rated_mw > 0.0) {
            return Err(Error::Config("inverter rating must be positive".into()));
        }
        Ok(Self {
            rated_mw,
            x_f: params.filter_reactance_pu(f_nominal_hz),
            b_c: params.filter_susceptance_pu(f_nominal_hz),
            params,
            setpoints: GfmSetpoints::default(),
        })
    }

    pub fn unpack(x: &[f64]) -> GfmState {
        GfmState {
            theta: x[0],
            omega: x[1],
            e: x[2],
        }
    }

    pub fn pack(s: &GfmState, out: &mut [f64]) {
        out[0] = s.theta;
        out[1] = s.omega;
        out[2] = s.e;
    }

    pub fn source_impedance(&self) -> Complex64 {
        Complex64::new(0.0, self.x_f)
    }

    /// Filter capacitor admittance at the terminal (machine base).
    pub fn shunt_admittance(&self) -> Complex64 {
        Complex64::new(0.0, self.b_c)
    }

    pub fn internal_voltage(&self, s: &GfmState) -> Complex64 {
        Complex64::from_polar(s.e, s.theta)
    }

    pub fn current_limit(&self) -> f64 {
        self.params.current_limit_pu
    }

    /// Clamps a requested output current to the limit, keeping its angle.
    pub fn limit_current(&self, requested: Complex64) -> Complex64 {
        let mag = requested.norm();
        if mag > self.params.current_limit_pu {
            requested * (self.params.current_limit_pu / mag)
        } else {
            requested
        }
    }

    /// Output current for a given terminal voltage, after limiting.
    pub fn output_current(&self, s: &GfmState, v_terminal: Complex64) -> Complex64 {
        self.limit_current((self.internal_voltage(s) - v_terminal) / self.source_impedance())
    }

    pub fn derivatives(&self, s: &GfmState, terminal: &Terminal, omega_base: f64) -> Result<GfmState> {
        check_finite("grid-forming inverter", [s.theta, s.omega, s.e])?;
        check_finite("grid-forming inverter terminal", terminal.values())?;
        let p = &self.params;
        let power = terminal.v * terminal.i.conj();
        let sp = &self.setpoints;
        Ok(GfmState {
            theta: omega_base * s.omega,
            omega: (-p.p_droop_pu * (power.re - sp.p_set) - s.omega) / p.power_filter_s,
            e: (sp.v_set - p.q_droop_pu * (power.im - sp.q_set) - s.e) / p.voltage_time_constant_s,
        })
    }

    /// Steady state reproducing the terminal voltage and (unlimited) current.
    pub fn initialize(&mut self, terminal: &Terminal) -> GfmState {
        let e = terminal.v + self.source_impedance() * terminal.i;
        let power = terminal.v * terminal.i.conj();
        self.setpoints = GfmSetpoints {
            p_set: power.re,
            q_set: 0.0,
            v_set: e.norm() + self.params.q_droop_pu * power.im,
        };
        GfmState {
            theta: e.arg(),
            omega: 0.0,
            e: e.norm(),
        }
    }
}
