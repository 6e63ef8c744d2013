//! Synchronous generator: rotor swing, one-axis field flux, IEEE type-1
//! exciter and a droop governor with a reheat lag.
//!
//! The stator is a voltage `E'q` at rotor angle `delta` behind
//! `r_a + j x_a` (round rotor, `x'q = x'd = x_a`). All quantities are on the
//! machine base; currents are positive out of the machine.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_finite, Terminal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncGenParams {
    pub r_a_pu: f64,
    /// Driving reactance used at the electromechanical time scale.
    pub x_a_pu: f64,
    pub h_s: f64,
    #[serde(default)]
    pub d_pu: f64,
    /// `None` holds the internal EMF constant (classical model).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exciter: Option<ExciterParams>,
    /// `None` freezes mechanical power at its initial value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub governor: Option<GovernorParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldParams {
    pub x_d_pu: f64,
    pub t_do_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExciterParams {
    pub k_a: f64,
    pub t_a_s: f64,
    pub k_e: f64,
    pub t_e_s: f64,
    pub k_f: f64,
    pub t_f_s: f64,
    pub v_r_min_pu: f64,
    pub v_r_max_pu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernorParams {
    /// Speed droop (pu speed per pu power).
    pub droop_pu: f64,
    pub t_servo_s: f64,
    pub t_reheat_s: f64,
    /// Share of turbine power that bypasses the reheat lag.
    pub hp_fraction: f64,
    pub p_min_pu: f64,
    pub p_max_pu: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            x_d_pu: 1.2,
            t_do_s: 5.0,
        }
    }
}

impl Default for ExciterParams {
    fn default() -> Self {
        Self {
            k_a: 50.0,
            t_a_s: 0.05,
            k_e: 1.0,
            t_e_s: 0.5,
            k_f: 0.05,
            t_f_s: 1.0,
            v_r_min_pu: -5.0,
            v_r_max_pu: 5.0,
        }
    }
}

impl Default for GovernorParams {
    fn default() -> Self {
        Self {
            droop_pu: 0.05,
            t_servo_s: 0.2,
            t_reheat_s: 7.0,
            hp_fraction: 0.3,
            p_min_pu: 0.0,
            p_max_pu: 1.1,
        }
    }
}

impl Default for SyncGenParams {
    fn default() -> Self {
        Self {
            r_a_pu: 0.003,
            x_a_pu: 0.102,
            h_s: 11.0,
            d_pu: 0.0,
            field: Some(FieldParams::default()),
            exciter: Some(ExciterParams::default()),
            governor: Some(GovernorParams::default()),
        }
    }
}

impl SyncGenParams {
    /// Constant-EMF machine with frozen mechanical power: the bare swing
    /// equation.
    pub fn classical(h_s: f64, d_pu: f64, r_a_pu: f64, x_a_pu: f64) -> Self {
        Self {
            r_a_pu,
            x_a_pu,
            h_s,
            d_pu,
            field: None,
            exciter: None,
            governor: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synchronous generator: {m}")));
        if !(self.h_s > 0.0) {
            return bad("inertia must be positive");
        }
        if !(self.r_a_pu >= 0.0 && self.x_a_pu >= 0.0) {
            return bad("armature resistance and reactance must be non-negative");
        }
        if !(self.d_pu >= 0.0) {
            return bad("damping must be non-negative");
        }
        if let Some(f) = &self.field {
            if !(f.t_do_s > 0.0 && f.x_d_pu >= self.x_a_pu) {
                return bad("field needs t_do_s > 0 and x_d_pu >= x_a_pu");
            }
        }
        if let Some(e) = &self.exciter {
            if self.field.is_none() {
                return bad("an exciter needs field dynamics");
            }
            if !(e.t_a_s > 0.0 && e.t_e_s > 0.0 && e.t_f_s > 0.0 && e.k_e > 0.0 && e.k_a > 0.0) {
                return bad("exciter gains and time constants must be positive");
            }
            if !(e.v_r_min_pu < e.v_r_max_pu) {
                return bad("exciter limits out of order");
            }
        }
        if let Some(g) = &self.governor {
            if !(g.droop_pu > 0.0) {
                return bad("governor droop must be positive");
            }
            if !(g.t_servo_s > 0.0 && g.t_reheat_s > 0.0) {
                return bad("governor time constants must be positive");
            }
            if !(0.0..=1.0).contains(&g.hp_fraction) || !(g.p_min_pu < g.p_max_pu) {
                return bad("governor fraction or limits out of range");
            }
        }
        Ok(())
    }
}

/// Operating setpoints fixed at initialization. Their meaning depends on
/// which controls are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SyncGenSetpoints {
    /// Governor load reference, or the frozen mechanical power.
    pub power: f64,
    /// Exciter voltage reference, the frozen field voltage, or the classical
    /// EMF magnitude.
    pub voltage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SyncGenState {
    pub delta: f64,
    pub omega: f64,
    pub e_q: f64,
    pub v_r: f64,
    pub e_fd: f64,
    pub v_f: f64,
    pub p_v: f64,
    pub x_rh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncGen {
    pub rated_mw: f64,
    pub params: SyncGenParams,
    pub setpoints: SyncGenSetpoints,
}

impl SyncGen {
    pub fn new(rated_mw: f64, params: SyncGenParams) -> Result<Self> {
        params.validate()?;
        if !(rated_mw > 0.0) {
            return Err(Error::Config("generator rating must be positive".into()));
        }
        Ok(Self {
            rated_mw,
            params,
            setpoints: SyncGenSetpoints::default(),
        })
    }

    pub fn state_names(&self) -> Vec<&'static str> {
        let mut n = vec!["delta", "omega"];
        if self.params.field.is_some() {
            n.push("e_q");
        }
        if self.params.exciter.is_some() {
            n.extend(["v_r", "e_fd", "v_f"]);
        }
        if self.params.governor.is_some() {
            n.extend(["p_v", "x_rh"]);
        }
        n
    }

    pub fn state_len(&self) -> usize {
        self.state_names().len()
    }

    pub fn unpack(&self, x: &[f64]) -> SyncGenState {
        let mut s = SyncGenState {
            delta: x[0],
            omega: x[1],
            ..Default::default()
        };
        let mut k = 2;
        if self.params.field.is_some() {
            s.e_q = x[k];
            k += 1;
        } else {
            s.e_q = self.setpoints.voltage;
        }
        if self.params.exciter.is_some() {
            s.v_r = x[k];
            s.e_fd = x[k + 1];
            s.v_f = x[k + 2];
            k += 3;
        } else {
            s.e_fd = self.setpoints.voltage;
        }
        if self.params.governor.is_some() {
            s.p_v = x[k];
            s.x_rh = x[k + 1];
        } else {
            s.p_v = self.setpoints.power;
            s.x_rh = self.setpoints.power;
        }
        s
    }

    pub fn pack(&self, s: &SyncGenState, out: &mut [f64]) {
        out[0] = s.delta;
        out[1] = s.omega;
        let mut k = 2;
        if self.params.field.is_some() {
            out[k] = s.e_q;
            k += 1;
        }
        if self.params.exciter.is_some() {
            out[k] = s.v_r;
            out[k + 1] = s.e_fd;
            out[k + 2] = s.v_f;
            k += 3;
        }
        if self.params.governor.is_some() {
            out[k] = s.p_v;
            out[k + 1] = s.x_rh;
        }
    }

    pub fn source_impedance(&self) -> Complex64 {
        Complex64::new(self.params.r_a_pu, self.params.x_a_pu)
    }

    pub fn internal_emf(&self, s: &SyncGenState) -> Complex64 {
        Complex64::from_polar(s.e_q, s.delta)
    }

    pub fn mechanical_power(&self, s: &SyncGenState) -> f64 {
        match &self.params.governor {
            Some(g) => g.hp_fraction * s.p_v + (1.0 - g.hp_fraction) * s.x_rh,
            None => self.setpoints.power,
        }
    }

    /// Air-gap power delivered across the rotor.
    pub fn electrical_power(&self, s: &SyncGenState, current: Complex64) -> f64 {
        (self.internal_emf(s) * current.conj()).re
    }

    /// d-axis current (positive for lagging output).
    fn current_d(s: &SyncGenState, current: Complex64) -> f64 {
        let to_dq = Complex64::from_polar(1.0, -(s.delta - std::f64::consts::FRAC_PI_2));
        (current * to_dq).re
    }

    /// Time derivatives of every state. Frozen quantities get zero rates.
    pub fn derivatives(
        &self,
        s: &SyncGenState,
        terminal: &Terminal,
        omega_base: f64,
    ) -> Result<SyncGenState> {
        check_finite("synchronous generator", s.as_array().iter().copied())?;
        check_finite("synchronous generator terminal", terminal.values())?;
        let p = &self.params;
        let mut d = SyncGenState {
            delta: omega_base * s.omega,
            ..Default::default()
        };
        let p_e = self.electrical_power(s, terminal.i);
        let p_m = self.mechanical_power(s);
        d.omega = (p_m - p_e - p.d_pu * s.omega) / (2.0 * p.h_s);

        if let Some(f) = &p.field {
            let i_d = Self::current_d(s, terminal.i);
            d.e_q = (s.e_fd - s.e_q - (f.x_d_pu - p.x_a_pu) * i_d) / f.t_do_s;
        }
        if let Some(e) = &p.exciter {
            let v_t = terminal.v.norm();
            let mut dv_r = (e.k_a * (self.setpoints.voltage - v_t - s.v_f) - s.v_r) / e.t_a_s;
            if (s.v_r >= e.v_r_max_pu && dv_r > 0.0) || (s.v_r <= e.v_r_min_pu && dv_r < 0.0) {
                dv_r = 0.0;
            }
            d.v_r = dv_r;
            d.e_fd = (s.v_r - e.k_e * s.e_fd) / e.t_e_s;
            d.v_f = (e.k_f * d.e_fd - s.v_f) / e.t_f_s;
        }
        if let Some(g) = &p.governor {
            let mut dp_v = (self.setpoints.power - s.omega / g.droop_pu - s.p_v) / g.t_servo_s;
            if (s.p_v >= g.p_max_pu && dp_v > 0.0) || (s.p_v <= g.p_min_pu && dp_v < 0.0) {
                dp_v = 0.0;
            }
            d.p_v = dp_v;
            d.x_rh = (s.p_v - s.x_rh) / g.t_reheat_s;
        }
        Ok(d)
    }

    /// Steady state and setpoints that reproduce the given terminal voltage
    /// and output current at nominal speed.
    pub fn initialize(&mut self, terminal: &Terminal) -> SyncGenState {
        let p = self.params.clone();
        let e = terminal.v + self.source_impedance() * terminal.i;
        let mut s = SyncGenState {
            delta: e.arg(),
            omega: 0.0,
            e_q: e.norm(),
            ..Default::default()
        };
        let p_m = self.electrical_power(&s, terminal.i);
        s.e_fd = match &p.field {
            Some(f) => s.e_q + (f.x_d_pu - p.x_a_pu) * Self::current_d(&s, terminal.i),
            None => s.e_q,
        };
        self.setpoints.voltage = match &p.exciter {
            Some(ex) => {
                s.v_r = ex.k_e * s.e_fd;
                s.v_f = 0.0;
                terminal.v.norm() + s.v_r / ex.k_a
            }
            None if p.field.is_some() => s.e_fd,
            None => s.e_q,
        };
        s.p_v = p_m;
        s.x_rh = p_m;
        self.setpoints.power = p_m;
        s
    }
}

impl SyncGenState {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.delta, self.omega, self.e_q, self.v_r, self.e_fd, self.v_f, self.p_v, self.x_rh,
        ]
    }
}
