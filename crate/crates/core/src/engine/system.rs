//! Assembled system: devices, network and the discrete configuration
//! (connected load, breaker states, imposed voltages) at one instant.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::{motor::MOTOR_STATES, Gfm, InductionMotor, SyncGen, Terminal};
use crate::network::{Network, NetworkSolution, ShuntElement, Source};
use crate::protection::LoadModel;
use crate::scenario::Scenario;
use crate::units::SystemBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct Span {
    pub start: usize,
    pub len: usize,
}

impl Span {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone)]
pub struct System {
    pub base: SystemBase,
    pub omega_base: f64,
    pub network: Network,
    pub pcc: usize,
    pub device_bus: usize,
    pub cluster_bus: usize,
    pub sg: Option<SyncGen>,
    pub gfm: Option<Gfm>,
    /// Aggregate of every connected motor; its rating follows `loads`.
    pub motor: Option<InductionMotor>,
    pub loads: LoadModel,
    /// Static load added by load-step events, per bus (MW).
    pub extra_static_mw: Vec<f64>,
    /// Bus held at an imposed voltage.
    pub imposed: Option<(usize, Complex64)>,
    /// Indices of brake stages in `network.shunts`.
    pub brake_shunts: Vec<usize>,
    pub(crate) sg_span: Span,
    pub(crate) gfm_span: Span,
    pub(crate) motor_span: Span,
    pub state_len: usize,
}

/// Everything computed from one state evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub dx: Vec<f64>,
    pub solution: NetworkSolution,
    /// Machine-base terminal conditions.
    pub sg: Option<Terminal>,
    pub gfm: Option<Terminal>,
    /// Motor terminal with current into the motor.
    pub motor: Option<Terminal>,
}

impl System {
    pub fn build(sc: &Scenario) -> Result<Self> {
        sc.validate()?;
        let base = sc.base.clone();
        let t = &sc.topology;
        let mut network = Network::new(t.buses.clone(), t.lines.clone())?;
        let pcc = network.bus(&t.pcc_bus)?;
        if let Some(g) = &t.grid {
            network.set_grid(g, pcc, &base)?;
        }
        for cb in &t.capacitor_banks {
            let bus = network.bus(&cb.bus)?;
            let mut sh = ShuntElement::capacitor(&cb.name, bus, cb.mvar / base.s_base_mva)?;
            if cb.closed {
                sh.state = crate::network::BreakerState::Closed;
            }
            network.add_shunt(sh)?;
        }
        let mut brake_shunts = Vec::new();
        if let Some(b) = &sc.brake {
            let bus = network.bus(&b.bus)?;
            for (k, st) in b.stages.iter().enumerate() {
                let sh = ShuntElement::brake(&format!("brake{}", k + 1), bus, st.conductance_pu(&base))?;
                brake_shunts.push(network.add_shunt(sh)?);
            }
        }

        let d = &sc.devices;
        let sg = (d.sg_mw() > 0.0)
            .then(|| SyncGen::new(d.sg_mw(), d.sync_gen.clone()))
            .transpose()?;
        let gfm = (d.gfm_mw() > 0.0)
            .then(|| Gfm::new(d.gfm_mw(), d.gfm.clone(), base.f_nominal_hz))
            .transpose()?;
        let buildings = sc.cluster.buildings();
        let loads = LoadModel::new(&buildings);
        let motor_mw: f64 = loads.buildings.iter().map(|b| b.motor_mw).sum();
        let motor = (motor_mw > 0.0)
            .then(|| InductionMotor::new(d.motor.clone(), base.omega_base()))
            .transpose()?;

        let sg_span = Span { start: 0, len: sg.as_ref().map_or(0, SyncGen::state_len) };
        let gfm_span = Span { start: sg_span.len, len: if gfm.is_some() { 3 } else { 0 } };
        let motor_span = Span {
            start: gfm_span.start + gfm_span.len,
            len: if motor.is_some() { MOTOR_STATES.len() } else { 0 },
        };
        let n_bus = network.len();
        Ok(Self {
            omega_base: base.omega_base(),
            pcc,
            device_bus: network.bus(&d.bus)?,
            cluster_bus: network.bus(&sc.cluster.bus)?,
            base,
            network,
            sg,
            gfm,
            motor,
            loads,
            extra_static_mw: vec![0.0; n_bus],
            imposed: None,
            brake_shunts,
            state_len: motor_span.start + motor_span.len,
            sg_span,
            gfm_span,
            motor_span,
        })
    }

    pub fn islanded(&self) -> bool {
        self.network.grid.is_none()
    }

    pub fn state_names(&self) -> Vec<String> {
        let mut n = Vec::with_capacity(self.state_len);
        if let Some(sg) = &self.sg {
            n.extend(sg.state_names().iter().map(|s| format!("sg.{s}")));
        }
        if self.gfm.is_some() {
            n.extend(crate::models::gfm::GFM_STATES.iter().map(|s| format!("gfm.{s}")));
        }
        if self.motor.is_some() {
            n.extend(MOTOR_STATES.iter().map(|s| format!("motor.{s}")));
        }
        n
    }

    /// Index of the state whose absolute value is arbitrary in an islanded
    /// system.
    pub fn reference_angle(&self) -> Option<usize> {
        if !self.islanded() {
            return None;
        }
        if self.sg.is_some() {
            Some(self.sg_span.start)
        } else if self.gfm.is_some() {
            Some(self.gfm_span.start)
        } else {
            None
        }
    }

    /// Rate of change of every state under a uniform rotation of the phase
    /// reference: angles move one-for-one, Cartesian phasors rotate.
    pub fn rotation_generator(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.state_len];
        if self.sg.is_some() {
            r[self.sg_span.start] = 1.0;
        }
        if self.gfm.is_some() {
            r[self.gfm_span.start] = 1.0;
        }
        if self.motor.is_some() {
            let m = self.motor_span.start;
            r[m] = -x[m + 1];
            r[m + 1] = x[m];
        }
        r
    }

    pub fn motor_mw(&self) -> f64 {
        self.loads.buildings.iter().map(|b| b.motor_mw).sum()
    }

    /// Constant-impedance load per bus (system base).
    fn load_admittance(&self) -> Vec<Complex64> {
        let mut y: Vec<Complex64> = self
            .extra_static_mw
            .iter()
            .map(|mw| Complex64::new(mw / self.base.s_base_mva, 0.0))
            .collect();
        let it_static: f64 = self.loads.buildings.iter().map(|b| b.it_mw + b.static_mw).sum();
        y[self.cluster_bus] += Complex64::new(it_static / self.base.s_base_mva, 0.0);
        y
    }

    /// Total constant-impedance load at 1.0 pu voltage (system base).
    pub fn static_load_pu(&self) -> f64 {
        self.load_admittance().iter().map(|y| y.re).sum()
    }

    fn scale(&self, rated_mw: f64) -> f64 {
        self.base.s_base_mva / rated_mw
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        let zero = Complex64::new(0.0, 0.0);
        let mut sources = Vec::with_capacity(3);
        let mut shunts = self.load_admittance();
        let sg_state = self.sg.as_ref().map(|sg| sg.unpack(&x[self.sg_span.range()]));
        if let (Some(sg), Some(s)) = (&self.sg, &sg_state) {
            let k = self.scale(sg.rated_mw);
            sources.push(Source {
                bus: self.device_bus,
                emf: sg.internal_emf(s),
                impedance: sg.source_impedance() * k,
                current_limit: None,
            });
        }
        let gfm_state = self.gfm.as_ref().map(|_| Gfm::unpack(&x[self.gfm_span.range()]));
        if let (Some(g), Some(s)) = (&self.gfm, &gfm_state) {
            let k = self.scale(g.rated_mw);
            sources.push(Source {
                bus: self.device_bus,
                emf: g.internal_voltage(s),
                impedance: g.source_impedance() * k,
                current_limit: Some(g.current_limit() / k),
            });
            shunts[self.device_bus] += g.shunt_admittance() / k;
        }
        let motor_mw = self.motor_mw();
        let motor_state = self.motor.as_ref().map(|_| InductionMotor::unpack(&x[self.motor_span.range()]));
        let motor_on = motor_mw > 0.0;
        if let (Some(m), Some(s), true) = (&self.motor, &motor_state, motor_on) {
            sources.push(Source {
                bus: self.cluster_bus,
                emf: s.e,
                impedance: m.source_impedance() * self.scale(motor_mw),
                current_limit: None,
            });
        }
        if sources.is_empty() && self.network.grid.is_none() && self.imposed.is_none() {
            return Err(Error::Islanding("no generation connected".into()));
        }
        let fixed: Vec<(usize, Complex64)> = self.imposed.into_iter().collect();
        let solution = self.network.solve(&sources, &shunts, &fixed)?;

        let mut dx = vec![0.0; self.state_len];
        let mut idx = 0;
        let mut sg_term = None;
        if let (Some(sg), Some(s)) = (&self.sg, &sg_state) {
            let term = Terminal {
                v: solution.v[self.device_bus],
                i: solution.source_currents[idx] * self.scale(sg.rated_mw),
            };
            let d = sg.derivatives(s, &term, self.omega_base)?;
            sg.pack(&d, &mut dx[self.sg_span.range()]);
            sg_term = Some(term);
            idx += 1;
        }
        let mut gfm_term = None;
        if let (Some(g), Some(s)) = (&self.gfm, &gfm_state) {
            let term = Terminal {
                v: solution.v[self.device_bus],
                i: solution.source_currents[idx] * self.scale(g.rated_mw),
            };
            let d = g.derivatives(s, &term, self.omega_base)?;
            Gfm::pack(&d, &mut dx[self.gfm_span.range()]);
            gfm_term = Some(term);
            idx += 1;
        }
        let mut motor_term = None;
        if let (Some(m), Some(s)) = (&self.motor, &motor_state) {
            let term = if motor_on {
                Terminal {
                    v: solution.v[self.cluster_bus],
                    i: -solution.source_currents[idx] * self.scale(motor_mw),
                }
            } else {
                Terminal { v: solution.v[self.cluster_bus], i: zero }
            };
            // a disconnected aggregate keeps its last state
            if motor_on {
                let d = m.derivatives(s, &term)?;
                InductionMotor::pack(&d, &mut dx[self.motor_span.range()]);
            }
            motor_term = Some(term);
        }
        Ok(Evaluation { dx, solution, sg: sg_term, gfm: gfm_term, motor: motor_term })
    }

    /// Inertia-weighted frequency deviation (pu) of the synchronous machine
    /// speed and the inverter's internal frequency.
    pub fn system_speed(&self, x: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        if let Some(sg) = &self.sg {
            let w = sg.params.h_s * sg.rated_mw;
            num += w * x[self.sg_span.start + 1];
            den += w;
        }
        if let Some(g) = &self.gfm {
            let w = g.params.virtual_inertia_s() * g.rated_mw;
            num += w * x[self.gfm_span.start + 1];
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// Power drawn by each brake stage (system base).
    pub fn brake_powers(&self, sol: &NetworkSolution) -> Vec<f64> {
        self.brake_shunts
            .iter()
            .map(|&k| {
                let s = &self.network.shunts[k];
                if s.conducting() {
                    sol.v[s.bus].norm_sqr() * s.admittance.re
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Grid-side load at the solved voltages: constant-impedance loads plus
    /// the motor aggregate (system base).
    pub fn load_power(&self, ev: &Evaluation) -> f64 {
        let y = self.load_admittance();
        let mut p: f64 = y.iter().zip(&ev.solution.v).map(|(y, v)| y.re * v.norm_sqr()).sum();
        if let Some(m) = &ev.motor {
            p += m.power().re * self.motor_mw() / self.base.s_base_mva;
        }
        p
    }

    pub(crate) fn sg_span(&self) -> std::ops::Range<usize> {
        self.sg_span.range()
    }

    pub(crate) fn gfm_span(&self) -> std::ops::Range<usize> {
        self.gfm_span.range()
    }

    pub(crate) fn motor_span(&self) -> std::ops::Range<usize> {
        self.motor_span.range()
    }
}
