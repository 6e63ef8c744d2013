//! Linearization about an operating point, eigenvalues, and the
//! SCR × brake-size sweep.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::engine::{find_equilibrium, parallel_map, System};
use crate::error::{Error, Result};
use crate::network::BreakerState;
use crate::protection::{LoadStepEvent, TransferKind};
use crate::scenario::{EventSpec, Scenario};

/// Largest derivative accepted at a linearization point.
const EQUILIBRIUM_TOL: f64 = 1e-7;
const PERTURBATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub state_names: Vec<String>,
    pub a: DMatrix<f64>,
    /// Full state vector of the operating point.
    pub operating_point: Vec<f64>,
}

/// Central-difference state matrix at `x`. Islanded systems drop the
/// reference angle and measure the remaining states in its rotating frame;
/// disconnected motor states are dropped as well.
pub fn linearize(sys: &System, x: &[f64]) -> Result<LinearModel> {
    linearize_with(sys, x, PERTURBATION)
}

pub fn linearize_with(sys: &System, x: &[f64], perturbation: f64) -> Result<LinearModel> {
    let f0 = sys.evaluate(x).map_err(|e| Error::Linearization(e.to_string()))?;
    let worst = f0.dx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(worst < EQUILIBRIUM_TOL) {
        return Err(Error::Linearization(format!("not an equilibrium: largest derivative {worst:.3e}")));
    }
    let reference = sys.reference_angle();
    let motor = sys.motor_span();
    let motor_idle = sys.motor_mw() == 0.0;
    let keep: Vec<usize> = (0..x.len())
        .filter(|&i| Some(i) != reference && !(motor_idle && motor.contains(&i)))
        .collect();
    let reduced = |xs: &[f64]| -> Result<Vec<f64>> {
        let dx = sys.evaluate(xs).map_err(|e| Error::Linearization(e.to_string()))?.dx;
        Ok(match reference {
            Some(r) => {
                let gen = sys.rotation_generator(xs);
                keep.iter().map(|&i| dx[i] - dx[r] * gen[i]).collect()
            }
            None => keep.iter().map(|&i| dx[i]).collect(),
        })
    };
    let n = keep.len();
    let mut a = DMatrix::zeros(n, n);
    for (c, &j) in keep.iter().enumerate() {
        let h = perturbation * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        xp[j] += h;
        let mut xm = x.to_vec();
        xm[j] -= h;
        let (fp, fm) = (reduced(&xp)?, reduced(&xm)?);
        for r in 0..n {
            a[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Linearization("state matrix has non-finite entries".into()));
    }
    let names = sys.state_names();
    Ok(LinearModel {
        state_names: keep.iter().map(|&i| names[i].clone()).collect(),
        a,
        operating_point: x.to_vec(),
    })
}

/// Full spectrum, sorted by descending real part with each conjugate pair
/// adjacent (positive imaginary part first).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Numeric("state matrix is not square".into()));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let ev = a
        .clone()
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("eigenvalue iteration did not converge".into()))?
        .complex_eigenvalues();
    let mut v: Vec<Complex64> = ev.iter().copied().collect();
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(v)
}

pub fn dominant(eigs: &[Complex64]) -> Option<Complex64> {
    eigs.iter().copied().reduce(|a, b| if b.re > a.re { b } else { a })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPoint {
    pub scr: f64,
    pub brake_mw: f64,
    pub eigenvalues: Vec<Complex64>,
    pub dominant: Option<Complex64>,
    pub stable: bool,
    /// Why the point has no spectrum.
    pub failure: Option<String>,
}

/// System at the post-disturbance operating point: every IT load loss in
/// the template applied and a single brake of `brake_mw` conducting.
pub fn operating_system(template: &Scenario, scr: Option<f64>, brake_mw: f64) -> Result<System> {
    let mut sc = template.clone();
    if let Some(scr) = scr {
        sc.topology
            .grid
            .as_mut()
            .ok_or_else(|| Error::Config("an SCR sweep needs a grid equivalent in the template".into()))?
            .scr = scr;
    }
    sc.brake = match (brake_mw > 0.0, sc.brake.take()) {
        (false, _) => None,
        (true, Some(mut b)) => {
            b.stages.truncate(1);
            if b.stages.is_empty() {
                return Err(Error::Config("brake schedule has no stages".into()));
            }
            b.stages[0].rating_mw = brake_mw;
            Some(b)
        }
        (true, None) => Some(crate::builtin::single_stage(brake_mw, crate::builtin::SINGLE_STAGE_OFF_S)),
    };
    sc.validate()?;
    let mut sys = System::build(&sc)?;
    for ev in &sc.events {
        if let EventSpec::ItLoadLoss { delta_p_mw, buildings, time_s } = ev {
            let idx = if buildings.is_empty() {
                (0..sys.loads.buildings.len()).collect()
            } else {
                buildings.iter().map(|b| b - 1).collect()
            };
            sys.loads.apply_load_step(&LoadStepEvent {
                time_s: *time_s,
                delta_p_mw: *delta_p_mw,
                buildings: idx,
                kind: TransferKind::ItOnly,
            })?;
        }
    }
    for &k in &sys.brake_shunts {
        sys.network.shunts[k].state = BreakerState::Closed;
    }
    Ok(sys)
}

pub fn eigen_point(template: &Scenario, scr: f64, brake_mw: f64) -> EigenPoint {
    let result = (|| -> Result<Vec<Complex64>> {
        let mut sys = operating_system(template, Some(scr), brake_mw)?;
        let d = &template.devices;
        let eq = find_equilibrium(&mut sys, d.dispatch_pu, d.voltage_setpoint_pu)?;
        let model = linearize(&sys, &eq.x)?;
        eigenvalues(&model.a)
    })();
    match result {
        Ok(eigs) => {
            let dom = dominant(&eigs);
            EigenPoint {
                scr,
                brake_mw,
                stable: eigs.iter().all(|z| z.re < 0.0),
                dominant: dom,
                eigenvalues: eigs,
                failure: None,
            }
        }
        Err(e) => EigenPoint {
            scr,
            brake_mw,
            eigenvalues: Vec::new(),
            dominant: None,
            stable: false,
            failure: Some(e.to_string()),
        },
    }
}

/// One point per (SCR, brake) pair, SCR-major; failed points are flagged
/// and the sweep continues.
pub fn eigen_sweep(template: &Scenario, scr: &[f64], brake_mw: &[f64]) -> Result<Vec<EigenPoint>> {
    if scr.is_empty() || brake_mw.is_empty() {
        return Err(Error::Config("eigen sweep needs at least one SCR and one brake size".into()));
    }
    let grid: Vec<(f64, f64)> = scr.iter().flat_map(|&s| brake_mw.iter().map(move |&b| (s, b))).collect();
    Ok(parallel_map(&grid, |&(s, b)| eigen_point(template, s, b)))
}
