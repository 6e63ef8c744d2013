//! Third-order induction motor: transient EMF behind the stator transient
//! impedance plus rotor slip. Current is positive into the motor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_finite, Terminal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InductionMotorParams {
    pub r_s_pu: f64,
    pub x_s_pu: f64,
    pub x_m_pu: f64,
    pub r_r_pu: f64,
    pub x_r_pu: f64,
    pub h_s: f64,
    /// Load torque scales with speed to this power (2 for fans and pumps).
    pub load_torque_exponent: f64,
}

impl Default for InductionMotorParams {
    fn default() -> Self {
        Self {
            r_s_pu: 0.01,
            x_s_pu: 0.1,
            x_m_pu: 3.0,
            r_r_pu: 0.013,
            x_r_pu: 0.1,
            h_s: 0.8,
            load_torque_exponent: 2.0,
        }
    }
}

impl InductionMotorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_s_pu > 0.0 && self.x_m_pu > 0.0 && self.x_r_pu > 0.0 && self.r_r_pu > 0.0) {
            return Err(Error::Config(
                "induction motor: reactances and rotor resistance must be positive".into(),
            ));
        }
        if !(self.r_s_pu >= 0.0 && self.h_s > 0.0 && self.load_torque_exponent >= 0.0) {
            return Err(Error::Config(
                "induction motor: stator resistance, inertia and torque exponent out of range".into(),
            ));
        }
        Ok(())
    }

    pub fn open_circuit_reactance(&self) -> f64 {
        self.x_s_pu + self.x_m_pu
    }

    pub fn transient_reactance(&self) -> f64 {
        self.x_s_pu + self.x_m_pu * self.x_r_pu / (self.x_m_pu + self.x_r_pu)
    }

    pub fn transient_time_constant(&self, omega_base: f64) -> f64 {
        (self.x_r_pu + self.x_m_pu) / (omega_base * self.r_r_pu)
    }

    /// Steady-state electrical torque at slip `s` and terminal voltage
    /// magnitude `v` from the equivalent circuit.
    pub fn steady_torque(&self, s: f64, v: f64) -> f64 {
        let j = Complex64::i();
        let z_m = j * self.x_m_pu;
        let z_r = Complex64::new(self.r_r_pu / s, self.x_r_pu);
        let z_s = Complex64::new(self.r_s_pu, self.x_s_pu);
        let i_s = Complex64::new(v, 0.0) / (z_s + z_m * z_r / (z_m + z_r));
        let i_r = i_s * z_m / (z_m + z_r);
        i_r.norm_sqr() * self.r_r_pu / s
    }
}

fn pull_out_slip(p: &InductionMotorParams) -> f64 {
    // golden-section search on the unimodal torque curve
    let (mut a, mut b) = (1e-6, 1.0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if p.steady_torque(c, 1.0) > p.steady_torque(d, 1.0) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InductionMotorState {
    pub e: Complex64,
    pub slip: f64,
}

pub const MOTOR_STATES: [&str; 3] = ["e_re", "e_im", "slip"];

#[derive(Debug, Clone, PartialEq)]
pub struct InductionMotor {
    pub params: InductionMotorParams,
    /// Mechanical torque at synchronous speed, fixed so the motor draws its
    /// rating at 1.0 pu voltage.
    pub load_torque_pu: f64,
    omega_base: f64,
    s_peak: f64,
}

impl InductionMotor {
    pub fn new(params: InductionMotorParams, omega_base: f64) -> Result<Self> {
        params.validate()?;
        let mut m = Self {
            s_peak: pull_out_slip(&params),
            params,
            load_torque_pu: 1.0,
            omega_base,
        };
        // input power is monotone in the load torque on the stable branch
        let (mut lo, mut hi) = (0.0, 1.0);
        while m.with_torque(hi).nominal_input()? < 1.0 {
            hi *= 1.5;
            if hi > 10.0 {
                return Err(Error::Config(
                    "induction motor cannot draw its rating at nominal voltage".into(),
                ));
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if m.with_torque(mid).nominal_input()? < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        m.load_torque_pu = 0.5 * (lo + hi);
        Ok(m)
    }

    fn with_torque(&self, t: f64) -> Self {
        Self {
            load_torque_pu: t,
            ..self.clone()
        }
    }

    fn nominal_input(&self) -> Result<f64> {
        let v = Complex64::new(1.0, 0.0);
        let s = self.initialize(v)?;
        Ok((v * self.current(&s, v).conj()).re)
    }

    pub fn unpack(x: &[f64]) -> InductionMotorState {
        InductionMotorState {
            e: Complex64::new(x[0], x[1]),
            slip: x[2],
        }
    }

    pub fn pack(s: &InductionMotorState, out: &mut [f64]) {
        out[0] = s.e.re;
        out[1] = s.e.im;
        out[2] = s.slip;
    }

    pub fn source_impedance(&self) -> Complex64 {
        Complex64::new(self.params.r_s_pu, self.params.transient_reactance())
    }

    pub fn current(&self, s: &InductionMotorState, v: Complex64) -> Complex64 {
        (v - s.e) / self.source_impedance()
    }

    pub fn load_torque(&self, slip: f64) -> f64 {
        self.load_torque_pu * (1.0 - slip).max(0.0).powf(self.params.load_torque_exponent)
    }

    pub fn electrical_torque(&self, s: &InductionMotorState, i: Complex64) -> f64 {
        (s.e * i.conj()).re
    }

    pub fn derivatives(&self, s: &InductionMotorState, terminal: &Terminal) -> Result<InductionMotorState> {
        check_finite("induction motor", [s.e.re, s.e.im, s.slip])?;
        check_finite("induction motor terminal", terminal.values())?;
        let p = &self.params;
        let x0 = p.open_circuit_reactance();
        let xp = p.transient_reactance();
        let t0 = p.transient_time_constant(self.omega_base);
        let j = Complex64::i();
        let de = -j * self.omega_base * s.slip * s.e - (s.e - j * (x0 - xp) * terminal.i) / t0;
        let te = self.electrical_torque(s, terminal.i);
        Ok(InductionMotorState {
            e: de,
            slip: (self.load_torque(s.slip) - te) / (2.0 * p.h_s),
        })
    }

    /// Slip of peak steady-state torque (independent of voltage).
    pub fn pull_out_slip(&self) -> f64 {
        self.s_peak
    }

    /// Steady state at terminal voltage `v` on the stable (low-slip) branch.
    pub fn initialize(&self, v: Complex64) -> Result<InductionMotorState> {
        let vm = v.norm();
        let s_peak = self.pull_out_slip();
        let excess = |s: f64| self.params.steady_torque(s, vm) - self.load_torque(s);
        if excess(s_peak) <= 0.0 {
            return Err(Error::Numeric(format!(
                "induction motor stalls at {vm:.4} pu terminal voltage"
            )));
        }
        let (mut lo, mut hi) = (1e-12, s_peak);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let slip = 0.5 * (lo + hi);
        let p = &self.params;
        let j = Complex64::i();
        let x0 = p.open_circuit_reactance();
        let xp = p.transient_reactance();
        let t0 = p.transient_time_constant(self.omega_base);
        // E' (1 + j wb s T0') = j (X0 - X') I and V = Zs' I + E'
        let k = j * (x0 - xp) / (Complex64::new(1.0, self.omega_base * slip * t0));
        let i = v / (self.source_impedance() + k);
        Ok(InductionMotorState { e: k * i, slip })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WB: f64 = 2.0 * std::f64::consts::PI * 60.0;

    fn motor() -> InductionMotor {
        InductionMotor::new(InductionMotorParams::default(), WB).unwrap()
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let m = motor();
        let v = Complex64::from_polar(1.0, -0.2);
        let s = m.initialize(v).unwrap();
        let i = m.current(&s, v);
        let d = m.derivatives(&s, &Terminal { v, i }).unwrap();
        assert!(d.e.norm() < 1e-10, "{:?}", d.e);
        assert!(d.slip.abs() < 1e-10);
        // draws its rating at nominal voltage
        assert!(((v * i.conj()).re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn third_order_steady_state_matches_equivalent_circuit() {
        let m = motor();
        let v = Complex64::new(0.97, 0.0);
        let s = m.initialize(v).unwrap();
        let i = m.current(&s, v);
        let te = m.electrical_torque(&s, i);
        assert!((te - m.params.steady_torque(s.slip, 0.97)).abs() < 1e-9);
    }

    #[test]
    fn defaults_look_like_design_b() {
        let m = motor();
        let p = &m.params;
        let t_max = p.steady_torque(m.pull_out_slip(), 1.0);
        assert!((2.0..2.5).contains(&t_max), "pull-out torque {t_max}");
        let s = m.initialize(Complex64::new(1.0, 0.0)).unwrap();
        assert!((0.01..0.02).contains(&s.slip), "rated slip {}", s.slip);
    }

    #[test]
    fn zero_voltage_decelerates() {
        let m = motor();
        let s = m.initialize(Complex64::new(1.0, 0.0)).unwrap();
        let v = Complex64::new(0.0, 0.0);
        let i = m.current(&s, v);
        let d = m.derivatives(&s, &Terminal { v, i }).unwrap();
        assert!(d.slip > 0.0);
        // a collapsed flux gives no torque
        let dead = InductionMotorState { e: Complex64::new(0.0, 0.0), slip: s.slip };
        let i = m.current(&dead, v);
        assert_eq!(m.electrical_torque(&dead, i), 0.0);
    }

    #[test]
    fn torque_curve_has_single_peak() {
        let p = InductionMotorParams::default();
        let n = 10_000;
        let t: Vec<f64> = (1..=n).map(|k| p.steady_torque(k as f64 / n as f64, 1.0)).collect();
        assert!(t.iter().all(|x| x.is_finite()));
        let rises = t.windows(2).take_while(|w| w[1] >= w[0]).count();
        assert!(rises > 0 && rises < n - 2);
        assert!(t[rises..].windows(2).all(|w| w[1] <= w[0]), "torque rises again after peak");
    }

    #[test]
    fn sag_ride_through() {
        // 0.25 pu for 100 ms on a stiff supply, then recovery
        let m = motor();
        let v1 = Complex64::new(1.0, 0.0);
        let mut s = m.initialize(v1).unwrap();
        let s0 = s.slip;
        let dt = 1e-4;
        let mut t = 0.0;
        while t < 2.1 {
            let v = if (0.1..0.2).contains(&t) { v1 * 0.25 } else { v1 };
            let f = |st: &InductionMotorState| {
                let i = m.current(st, v);
                m.derivatives(st, &Terminal { v, i }).unwrap()
            };
            let k1 = f(&s);
            let mid = InductionMotorState { e: s.e + k1.e * (0.5 * dt), slip: s.slip + 0.5 * dt * k1.slip };
            let k2 = f(&mid);
            s = InductionMotorState { e: s.e + k2.e * dt, slip: s.slip + dt * k2.slip };
            t += dt;
        }
        assert!((s.slip - s0).abs() < 0.01 * s0.max(1e-3) + 1e-6, "{} vs {}", s.slip, s0);
    }
}
