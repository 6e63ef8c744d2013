//! Quasi-static phasor network: lines, grid equivalent, breaker-switched
//! shunts and the nodal solution that couples the dynamic devices.
//!
//! All quantities are on the system base. Source currents are positive into
//! the network.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::SystemBase;

const RESIDUAL_TOL: f64 = 1e-8;
const LIMIT_ITERATIONS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineParams {
    pub from: String,
    pub to: String,
    #[serde(default = "default_r_per_km")]
    pub resistance_per_km_pu: f64,
    #[serde(default = "default_x_per_km")]
    pub reactance_per_km_pu: f64,
    pub length_km: f64,
    #[serde(default = "one")]
    pub parallel_count: u32,
}

fn default_r_per_km() -> f64 {
    1e-4
}
fn default_x_per_km() -> f64 {
    1e-3
}
fn one() -> u32 {
    1
}

impl LineParams {
    pub fn new(from: &str, to: &str, length_km: f64, parallel_count: u32) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            resistance_per_km_pu: default_r_per_km(),
            reactance_per_km_pu: default_x_per_km(),
            length_km,
            parallel_count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km > 0.0) {
            return Err(Error::Config(format!("line {}-{}: length_km must be positive", self.from, self.to)));
        }
        if self.parallel_count < 1 {
            return Err(Error::Config(format!("line {}-{}: parallel_count must be at least 1", self.from, self.to)));
        }
        if !(self.resistance_per_km_pu >= 0.0 && self.reactance_per_km_pu > 0.0) {
            return Err(Error::Config(format!("line {}-{}: per-km impedance out of range", self.from, self.to)));
        }
        Ok(())
    }

    /// Series impedance of the whole corridor (all circuits in parallel).
    pub fn impedance(&self) -> Complex64 {
        Complex64::new(self.resistance_per_km_pu, self.reactance_per_km_pu) * self.length_km
            / self.parallel_count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEquivalent {
    pub bus: String,
    pub scr: f64,
    #[serde(default = "default_x_over_r")]
    pub x_over_r: f64,
    #[serde(default = "one_f")]
    pub voltage_pu: f64,
}

fn default_x_over_r() -> f64 {
    10.0
}
fn one_f() -> f64 {
    1.0
}

impl GridEquivalent {
    pub fn new(bus: &str, scr: f64) -> Self {
        Self {
            bus: bus.into(),
            scr,
            x_over_r: default_x_over_r(),
            voltage_pu: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scr > 0.0) {
            return Err(Error::Domain(format!("short-circuit ratio must be positive, got {}", self.scr)));
        }
        if !(self.x_over_r > 0.0) {
            return Err(Error::Domain("grid x/r must be positive".into()));
        }
        if !(self.voltage_pu > 0.0) {
            return Err(Error::Domain("grid source voltage must be positive".into()));
        }
        Ok(())
    }
}

/// Thevenin impedance with `|Z| = 1/scr` and angle `atan(x/r)`.
pub fn scr_to_thevenin(scr: f64, x_over_r: f64, base: &SystemBase) -> Result<Complex64> {
    base.validate()?;
    if !(scr > 0.0 && scr.is_finite()) {
        return Err(Error::Domain(format!("short-circuit ratio must be positive, got {scr}")));
    }
    if !(x_over_r > 0.0) {
        return Err(Error::Domain("grid x/r must be positive".into()));
    }
    Ok(Complex64::from_polar(1.0 / scr, x_over_r.atan()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuntKind {
    BrakeResistor,
    CapacitorBank,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BreakerState {
    Open,
    Closing { at: f64 },
    Closed,
    Opening { at: f64 },
}

impl BreakerState {
    /// Whether the element is in circuit right now.
    pub fn conducting(&self) -> bool {
        matches!(self, BreakerState::Closed | BreakerState::Opening { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakerCommand {
    Close,
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakerLogEntry {
    pub time_s: f64,
    pub element: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShuntElement {
    pub name: String,
    pub kind: ShuntKind,
    pub bus: usize,
    /// Admittance when closed.
    pub admittance: Complex64,
    pub state: BreakerState,
}

impl ShuntElement {
    pub fn brake(name: &str, bus: usize, conductance_pu: f64) -> Result<Self> {
        Self::new(name, ShuntKind::BrakeResistor, bus, Complex64::new(conductance_pu, 0.0))
    }

    pub fn capacitor(name: &str, bus: usize, susceptance_pu: f64) -> Result<Self> {
        Self::new(name, ShuntKind::CapacitorBank, bus, Complex64::new(0.0, susceptance_pu))
    }

    pub fn new(name: &str, kind: ShuntKind, bus: usize, admittance: Complex64) -> Result<Self> {
        if !(admittance.re.is_finite() && admittance.im.is_finite()) {
            return Err(Error::Config(format!("shunt {name}: admittance must be finite")));
        }
        let ok = match kind {
            ShuntKind::BrakeResistor => admittance.im == 0.0 && admittance.re >= 0.0,
            ShuntKind::CapacitorBank => admittance.re == 0.0,
        };
        if !ok {
            return Err(Error::Config(match kind {
                ShuntKind::BrakeResistor => format!("brake {name} must be purely conductive"),
                ShuntKind::CapacitorBank => format!("capacitor bank {name} must be purely susceptive"),
            }));
        }
        Ok(Self {
            name: name.into(),
            kind,
            bus,
            admittance,
            state: BreakerState::Open,
        })
    }

    pub fn conducting(&self) -> bool {
        self.state.conducting()
    }

    /// Schedules a breaker operation effective at `command_time + delay`.
    /// A later command replaces any pending one.
    pub fn set_shunt(
        &mut self,
        command: BreakerCommand,
        command_time: f64,
        delay: f64,
        log: &mut Vec<BreakerLogEntry>,
    ) {
        let at = command_time + delay;
        let mut note = |detail: String| {
            log.push(BreakerLogEntry {
                time_s: command_time,
                element: self.name.clone(),
                detail,
            })
        };
        use BreakerState::*;
        self.state = match (command, self.state) {
            (BreakerCommand::Close, Open) => {
                note(format!("close commanded, effective {at:.6} s"));
                Closing { at }
            }
            (BreakerCommand::Close, Closing { at: old }) => {
                note(format!("close re-commanded, effective {at:.6} s (was {old:.6} s)"));
                Closing { at }
            }
            (BreakerCommand::Close, Closed) => {
                note("close commanded on closed element, no-op".into());
                Closed
            }
            (BreakerCommand::Close, Opening { at: old }) => {
                note(format!("close overrides pending open at {old:.6} s"));
                Closed
            }
            (BreakerCommand::Open, Closed) => {
                note(format!("open commanded, effective {at:.6} s"));
                Opening { at }
            }
            (BreakerCommand::Open, Opening { at: old }) => {
                note(format!("open re-commanded, effective {at:.6} s (was {old:.6} s)"));
                Opening { at }
            }
            (BreakerCommand::Open, Open) => {
                note("open commanded on open element, no-op".into());
                Open
            }
            (BreakerCommand::Open, Closing { at: old }) => {
                note(format!("open overrides pending close at {old:.6} s"));
                Open
            }
        };
    }

    /// Applies any pending transition due at or before `t`. Returns true if
    /// the conducting status changed.
    pub fn advance_to(&mut self, t: f64, log: &mut Vec<BreakerLogEntry>) -> bool {
        let (due, next, word) = match self.state {
            BreakerState::Closing { at } => (at <= t + 1e-9, BreakerState::Closed, "closed"),
            BreakerState::Opening { at } => (at <= t + 1e-9, BreakerState::Open, "opened"),
            _ => (false, self.state, ""),
        };
        if due {
            self.state = next;
            log.push(BreakerLogEntry {
                time_s: t,
                element: self.name.clone(),
                detail: word.into(),
            });
        }
        due
    }
}

/// A voltage source behind an impedance. Zero impedance makes it ideal
/// (the bus voltage is fixed to `emf`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub bus: usize,
    pub emf: Complex64,
    pub impedance: Complex64,
    /// Magnitude cap on the injected current, if any.
    pub current_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    pub v: Vec<Complex64>,
    /// Current injected by each source, in the order given.
    pub source_currents: Vec<Complex64>,
    /// Current injected by the grid equivalent, if present.
    pub grid_current: Option<Complex64>,
    /// Sources whose current limit is active.
    pub limited: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub bus_names: Vec<String>,
    pub lines: Vec<LineParams>,
    y_lines: DMatrix<Complex64>,
    /// Grid equivalent as (bus, emf, impedance).
    pub grid: Option<(usize, Complex64, Complex64)>,
    pub shunts: Vec<ShuntElement>,
}

impl Network {
    pub fn new(bus_names: Vec<String>, lines: Vec<LineParams>) -> Result<Self> {
        if bus_names.is_empty() {
            return Err(Error::Config("network needs at least one bus".into()));
        }
        for (k, b) in bus_names.iter().enumerate() {
            if bus_names[..k].contains(b) {
                return Err(Error::Config(format!("duplicate bus `{b}`")));
            }
        }
        let n = bus_names.len();
        let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        let mut net = Self {
            bus_names,
            lines: Vec::new(),
            y_lines: y.clone(),
            grid: None,
            shunts: Vec::new(),
        };
        for line in &lines {
            line.validate()?;
            let (a, b) = (net.bus(&line.from)?, net.bus(&line.to)?);
            if a == b {
                return Err(Error::Config(format!("line {}-{} connects a bus to itself", line.from, line.to)));
            }
            let ys = 1.0 / line.impedance();
            y[(a, a)] += ys;
            y[(b, b)] += ys;
            y[(a, b)] -= ys;
            y[(b, a)] -= ys;
        }
        net.lines = lines;
        net.y_lines = y;
        Ok(net)
    }

    pub fn bus(&self, name: &str) -> Result<usize> {
        self.bus_names
            .iter()
            .position(|b| b == name)
            .ok_or_else(|| Error::Config(format!("unknown bus `{name}`")))
    }

    pub fn len(&self) -> usize {
        self.bus_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bus_names.is_empty()
    }

    /// Impedance seen at `at` through the lines with bus `grounded` shorted
    /// to ground.
    pub fn path_impedance(&self, at: usize, grounded: usize) -> Result<Complex64> {
        if at == grounded {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let keep: Vec<usize> = (0..self.len()).filter(|&k| k != grounded).collect();
        let y = DMatrix::from_fn(keep.len(), keep.len(), |r, c| self.y_lines[(keep[r], keep[c])]);
        let pos = keep.iter().position(|&k| k == at).expect("bus kept");
        let mut e = DVector::from_element(keep.len(), Complex64::new(0.0, 0.0));
        e[pos] = Complex64::new(1.0, 0.0);
        let z = y
            .lu()
            .solve(&e)
            .ok_or_else(|| Error::Config(format!("bus {} is not connected to {}", self.bus_names[at], self.bus_names[grounded])))?;
        Ok(z[pos])
    }

    /// Places the grid equivalent so that the impedance seen at `pcc`
    /// (including the lines) has magnitude `1/scr`.
    pub fn set_grid(&mut self, grid: &GridEquivalent, pcc: usize, base: &SystemBase) -> Result<()> {
        grid.validate()?;
        let bus = self.bus(&grid.bus)?;
        let z_total = scr_to_thevenin(grid.scr, grid.x_over_r, base)?;
        let z = z_total - self.path_impedance(pcc, bus)?;
        if !(z.re >= 0.0 && z.im > 0.0) {
            return Err(Error::Config(format!(
                "short-circuit ratio {} is too high for the line impedance to the grid bus",
                grid.scr
            )));
        }
        self.grid = Some((bus, Complex64::new(grid.voltage_pu, 0.0), z));
        Ok(())
    }

    pub fn add_shunt(&mut self, shunt: ShuntElement) -> Result<usize> {
        if shunt.bus >= self.len() {
            return Err(Error::Config(format!("shunt {} placed on a missing bus", shunt.name)));
        }
        self.shunts.push(shunt);
        Ok(self.shunts.len() - 1)
    }

    /// Net admittance of conducting shunt elements at each bus.
    pub fn shunt_admittance(&self) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.len()];
        for s in self.shunts.iter().filter(|s| s.conducting()) {
            y[s.bus] += s.admittance;
        }
        y
    }

    /// Nodal admittance matrix of lines, conducting shunts and `extra` bus
    /// shunts (loads, filter capacitors). Source impedances are not included.
    pub fn admittance_matrix(&self, extra: &[Complex64]) -> DMatrix<Complex64> {
        let mut y = self.y_lines.clone();
        for (k, ys) in self.shunt_admittance().into_iter().enumerate() {
            y[(k, k)] += ys + extra.get(k).copied().unwrap_or_default();
        }
        y
    }

    /// Solves the bus voltages for the given sources, extra bus shunt
    /// admittances and buses whose voltage is imposed externally.
    pub fn solve(
        &self,
        sources: &[Source],
        extra_shunts: &[Complex64],
        fixed: &[(usize, Complex64)],
    ) -> Result<NetworkSolution> {
        let n = self.len();
        let zero = Complex64::new(0.0, 0.0);
        // fixed-voltage buses: imposed ones and ideal sources
        let mut v_fixed: Vec<Option<Complex64>> = vec![None; n];
        for &(b, v) in fixed {
            v_fixed[b] = Some(v);
        }
        for s in sources {
            if s.impedance == zero {
                if s.current_limit.is_some() {
                    return Err(Error::Config("a current-limited source needs a series impedance".into()));
                }
                if v_fixed[s.bus].is_some() {
                    return Err(Error::Config(format!(
                        "bus {} has more than one imposed voltage",
                        self.bus_names[s.bus]
                    )));
                }
                v_fixed[s.bus] = Some(s.emf);
            }
        }
        let has_source = v_fixed.iter().any(Option::is_some) || self.grid.is_some() || !sources.is_empty();
        if !has_source {
            return Err(Error::Islanding("all sources are disconnected".into()));
        }

        let mut y = self.admittance_matrix(extra_shunts);
        if let Some((b, _, z)) = self.grid {
            y[(b, b)] += 1.0 / z;
        }
        for s in sources.iter().filter(|s| s.impedance != zero) {
            y[(s.bus, s.bus)] += 1.0 / s.impedance;
        }
        let free: Vec<usize> = (0..n).filter(|&k| v_fixed[k].is_none()).collect();
        let mut pos = vec![usize::MAX; n];
        for (i, &k) in free.iter().enumerate() {
            pos[k] = i;
        }
        let lu = if free.is_empty() {
            None
        } else {
            let yff = DMatrix::from_fn(free.len(), free.len(), |r, c| y[(free[r], free[c])]);
            Some(yff.lu())
        };

        let mut limited = vec![false; sources.len()];
        let mut forced = vec![zero; sources.len()];
        let mut v = vec![zero; n];
        for iteration in 0..=LIMIT_ITERATIONS {
            // Norton injections; limited sources become fixed current injections
            let mut inj = vec![zero; n];
            if let Some((b, e, z)) = self.grid {
                inj[b] += e / z;
            }
            for (k, s) in sources.iter().enumerate() {
                if s.impedance == zero {
                    continue;
                }
                if limited[k] {
                    // remove the Norton admittance already stamped in y
                    inj[s.bus] += forced[k];
                } else {
                    inj[s.bus] += s.emf / s.impedance;
                }
            }
            for k in 0..n {
                v[k] = v_fixed[k].unwrap_or(zero);
            }
            if let Some(lu) = &lu {
                let mut rhs = DVector::from_fn(free.len(), |r, _| inj[free[r]]);
                for (r, &k) in free.iter().enumerate() {
                    for (c, vf) in v_fixed.iter().enumerate() {
                        if let Some(vf) = vf {
                            rhs[r] -= y[(k, c)] * vf;
                        }
                    }
                }
                // limited sources: their stamped admittance must not draw current
                let mut y_adj = None;
                if limited.iter().any(|&l| l) {
                    let mut m = DMatrix::from_fn(free.len(), free.len(), |r, c| y[(free[r], free[c])]);
                    for (k, s) in sources.iter().enumerate() {
                        if limited[k] && pos[s.bus] != usize::MAX {
                            m[(pos[s.bus], pos[s.bus])] -= 1.0 / s.impedance;
                        }
                    }
                    y_adj = Some(m.lu());
                }
                let sol = match &y_adj {
                    Some(m) => m.solve(&rhs),
                    None => lu.solve(&rhs),
                }
                .ok_or_else(|| Error::Islanding("network admittance matrix is singular".into()))?;
                for (r, &k) in free.iter().enumerate() {
                    v[k] = sol[r];
                }
            }
            let mut changed = false;
            for (k, s) in sources.iter().enumerate() {
                let Some(limit) = s.current_limit else { continue };
                let requested = (s.emf - v[s.bus]) / s.impedance;
                if requested.norm() > limit * (1.0 + 1e-12) {
                    let target = requested * (limit / requested.norm());
                    if !limited[k] || (target - forced[k]).norm() > 1e-13 {
                        changed = true;
                    }
                    limited[k] = true;
                    forced[k] = target;
                } else if limited[k] {
                    limited[k] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            if iteration == LIMIT_ITERATIONS {
                return Err(Error::Solver {
                    iterations: iteration,
                    mismatch: f64::NAN,
                });
            }
        }

        let source_currents: Vec<Complex64> = sources
            .iter()
            .enumerate()
            .map(|(k, s)| if limited[k] { forced[k] } else if s.impedance == zero { zero } else { (s.emf - v[s.bus]) / s.impedance })
            .collect();
        let grid_current = self.grid.map(|(b, e, z)| (e - v[b]) / z);

        // ideal sources supply whatever their bus needs
        let base = self.admittance_matrix(extra_shunts);
        let mut out = vec![zero; n];
        for r in 0..n {
            for c in 0..n {
                out[r] += base[(r, c)] * v[c];
            }
        }
        let mut residual_src = source_currents.clone();
        let mut net = out.clone();
        if let (Some(i), Some((b, _, _))) = (grid_current, self.grid) {
            net[b] -= i;
        }
        for (k, s) in sources.iter().enumerate() {
            if s.impedance != zero {
                net[s.bus] -= residual_src[k];
            }
        }
        for (k, s) in sources.iter().enumerate() {
            if s.impedance == zero && fixed.iter().all(|&(b, _)| b != s.bus) {
                residual_src[k] = net[s.bus];
                net[s.bus] = zero;
            }
        }
        let mismatch = free.iter().map(|&k| net[k].norm()).fold(0.0, f64::max);
        if !(mismatch < RESIDUAL_TOL) {
            return Err(Error::Solver {
                iterations: 1,
                mismatch,
            });
        }
        Ok(NetworkSolution {
            v,
            source_currents: residual_src,
            grid_current,
            limited,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scr_magnitudes() {
        let b = SystemBase::default();
        assert!((scr_to_thevenin(2.0, 10.0, &b).unwrap().norm() - 0.5).abs() < 1e-15);
        assert!((scr_to_thevenin(5.0, 10.0, &b).unwrap().norm() - 0.2).abs() < 1e-15);
        for xr in [0.5, 3.0, 10.0, 40.0] {
            let z = scr_to_thevenin(1.0, xr, &b).unwrap();
            assert!((z.norm() - 1.0).abs() < 1e-15);
            assert!((z.im / z.re - xr).abs() < 1e-9 * xr);
        }
        assert!(matches!(scr_to_thevenin(0.0, 10.0, &b), Err(Error::Domain(_))));
        assert!(matches!(scr_to_thevenin(-1.0, 10.0, &b), Err(Error::Domain(_))));
    }

    #[test]
    fn ideal_source_no_load() {
        let net = Network::new(
            vec!["a".into(), "b".into()],
            vec![LineParams::new("a", "b", 50.0, 2)],
        )
        .unwrap();
        let src = Source { bus: 0, emf: c(1.0, 0.0), impedance: c(0.0, 0.0), current_limit: None };
        let sol = net.solve(&[src], &[], &[]).unwrap();
        for v in &sol.v {
            assert!((v - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn two_bus_against_hand_solution() {
        // 1.0 pu behind j0.5, load 0.5 pu conductance at the far bus
        let net = Network::new(vec!["pcc".into()], vec![]).unwrap();
        let z = c(0.0, 0.5);
        let src = Source { bus: 0, emf: c(1.0, 0.0), impedance: z, current_limit: None };
        let g = c(0.5, 0.0);
        let sol = net.solve(&[src], &[g], &[]).unwrap();
        let expected = c(1.0, 0.0) / (1.0 + z * g);
        assert!((sol.v[0] - expected).norm() < 1e-14);
        // |V| = 1/sqrt(1 + 0.0625)
        assert!((sol.v[0].norm() - 1.0 / 1.0625f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn brake_adds_exact_conductance() {
        let mut net = Network::new(vec!["a".into(), "b".into()], vec![LineParams::new("a", "b", 10.0, 1)]).unwrap();
        let before = net.admittance_matrix(&[]);
        let k = net.add_shunt(ShuntElement::brake("br", 1, 0.25).unwrap()).unwrap();
        let mut log = Vec::new();
        net.shunts[k].set_shunt(BreakerCommand::Close, 0.0, 0.0, &mut log);
        net.shunts[k].advance_to(0.0, &mut log);
        let after = net.admittance_matrix(&[]);
        assert_eq!(after[(1, 1)] - before[(1, 1)], c(0.25, 0.0));
        assert_eq!(after[(0, 0)], before[(0, 0)]);
        assert_eq!(after.transpose(), after);
    }

    #[test]
    fn shunt_kinds_validated() {
        assert!(ShuntElement::new("x", ShuntKind::BrakeResistor, 0, c(0.1, 0.1)).is_err());
        assert!(ShuntElement::new("x", ShuntKind::CapacitorBank, 0, c(0.1, 0.1)).is_err());
        assert!(ShuntElement::new("x", ShuntKind::BrakeResistor, 0, c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn breaker_timing() {
        let mut s = ShuntElement::brake("b", 0, 0.25).unwrap();
        let mut log = Vec::new();
        s.set_shunt(BreakerCommand::Close, 0.10, 0.05, &mut log);
        assert!(!s.advance_to(0.149, &mut log));
        assert!(!s.conducting());
        assert!(s.advance_to(0.15, &mut log));
        assert!(s.conducting());
        s.set_shunt(BreakerCommand::Open, 0.25, 0.0, &mut log);
        assert!(s.conducting());
        assert!(s.advance_to(0.25, &mut log));
        assert!(!s.conducting());
        let n = log.len();
        s.set_shunt(BreakerCommand::Open, 0.3, 0.0, &mut log);
        assert_eq!(s.state, BreakerState::Open);
        assert_eq!(log.len(), n + 1);
        assert!(log.last().unwrap().detail.contains("no-op"));
    }

    #[test]
    fn last_command_wins() {
        let mut s = ShuntElement::brake("b", 0, 0.25).unwrap();
        let mut log = Vec::new();
        s.set_shunt(BreakerCommand::Close, 0.1, 0.05, &mut log);
        s.set_shunt(BreakerCommand::Open, 0.12, 0.0, &mut log);
        assert_eq!(s.state, BreakerState::Open);
        assert!(!s.advance_to(1.0, &mut log));
        assert_eq!(log.len(), 2);
    }

    fn grid_net(scr: f64) -> Network {
        let base = SystemBase::default();
        let mut net = Network::new(
            vec!["grid".into(), "pcc".into()],
            vec![LineParams::new("grid", "pcc", 50.0, 2)],
        )
        .unwrap();
        net.set_grid(&GridEquivalent::new("grid", scr), 1, &base).unwrap();
        net
    }

    #[test]
    fn grid_strength_is_seen_at_pcc() {
        for scr in [2.0, 5.0] {
            let net = grid_net(scr);
            let (b, _, z) = net.grid.unwrap();
            let total = z + net.path_impedance(1, b).unwrap();
            assert!((total.norm() - 1.0 / scr).abs() < 1e-12);
        }
        let base = SystemBase::default();
        let mut net = grid_net(2.0);
        assert!(net.set_grid(&GridEquivalent::new("grid", 100.0), 1, &base).is_err());
    }

    #[test]
    fn power_balance() {
        let mut net = grid_net(2.0);
        net.add_shunt(ShuntElement::capacitor("cap", 1, 0.1).unwrap()).unwrap();
        let mut log = Vec::new();
        net.shunts[0].set_shunt(BreakerCommand::Close, 0.0, 0.0, &mut log);
        net.shunts[0].advance_to(0.0, &mut log);
        let sources = [
            Source { bus: 1, emf: Complex64::from_polar(1.05, 0.3), impedance: c(0.003, 0.2), current_limit: None },
            Source { bus: 1, emf: Complex64::from_polar(1.02, 0.25), impedance: c(0.0, 0.24), current_limit: Some(0.3) },
        ];
        let loads = [c(0.0, 0.0), c(0.9, 0.0)];
        let sol = net.solve(&sources, &loads, &[]).unwrap();
        assert!(sol.limited[1]);
        assert!((sol.source_currents[1].norm() - 0.3).abs() < 1e-12);
        // terminal powers of all injections against load and line losses
        let gb = net.grid.unwrap().0;
        let ig = sol.grid_current.unwrap();
        let mut generated = (sol.v[gb] * ig.conj()).re;
        for (s, i) in sources.iter().zip(&sol.source_currents) {
            generated += (sol.v[s.bus] * i.conj()).re;
        }
        let line = net.lines[0].impedance();
        let il = (sol.v[gb] - sol.v[1]) / line;
        let consumed = loads[1].re * sol.v[1].norm_sqr() + line.re * il.norm_sqr();
        assert!((generated - consumed).abs() < 1e-6, "{generated} vs {consumed}");
    }

    #[test]
    fn no_source_is_islanding() {
        let net = Network::new(vec!["a".into()], vec![]).unwrap();
        assert!(matches!(net.solve(&[], &[c(1.0, 0.0)], &[]), Err(Error::Islanding(_))));
    }

    #[test]
    fn deterministic() {
        let net = grid_net(5.0);
        let src = [Source { bus: 1, emf: Complex64::from_polar(1.1, 0.2), impedance: c(0.003, 0.2), current_limit: None }];
        let a = net.solve(&src, &[c(0.0, 0.0), c(0.7, 0.1)], &[]).unwrap();
        let b = net.solve(&src, &[c(0.0, 0.0), c(0.7, 0.1)], &[]).unwrap();
        assert_eq!(a, b);
    }
}
