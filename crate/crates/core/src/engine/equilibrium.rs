//! Steady-state initialization: device states and control setpoints that
//! zero every derivative for the system's current configuration.
//!
//! Unknowns are the states (less the reference angle when islanded) and two
//! setpoints per source. The extra equations fix the regulated bus voltage,
//! share reactive power by rating, and either hold each source at its
//! dispatch (grid-connected) or share active power by rating (islanded).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::system::System;
use crate::error::{Error, Result};
use crate::models::Terminal;

const TOL: f64 = 1e-11;
const MAX_ITER: usize = 60;

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub x: Vec<f64>,
    /// Largest derivative magnitude at `x`.
    pub max_derivative: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    sys: &'a mut System,
    free: Vec<usize>,
    /// Derivative rows kept as equations.
    rows: Vec<usize>,
    base_x: Vec<f64>,
    dispatch: f64,
    v_set: f64,
    names: Vec<String>,
}

impl Problem<'_> {
    fn unpack(&mut self, z: &[f64]) -> Vec<f64> {
        let mut x = self.base_x.clone();
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = z[k];
        }
        let mut k = self.free.len();
        if let Some(sg) = &mut self.sys.sg {
            sg.setpoints.power = z[k];
            sg.setpoints.voltage = z[k + 1];
            k += 2;
        }
        if let Some(g) = &mut self.sys.gfm {
            g.setpoints.p_set = z[k];
            g.setpoints.v_set = z[k + 1];
        }
        x
    }

    fn pack(&self, x: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self.free.iter().map(|&i| x[i]).collect();
        if let Some(sg) = &self.sys.sg {
            z.extend([sg.setpoints.power, sg.setpoints.voltage]);
        }
        if let Some(g) = &self.sys.gfm {
            z.extend([g.setpoints.p_set, g.setpoints.v_set]);
        }
        z
    }

    fn residual(&mut self, z: &[f64]) -> Result<Vec<f64>> {
        let x = self.unpack(z);
        let ev = self.sys.evaluate(&x)?;
        let mut f: Vec<f64> = self.rows.iter().map(|&i| ev.dx[i]).collect();
        let pq = |t: &Option<Terminal>| t.map(|t| t.power()).unwrap_or_default();
        let (s_sg, s_gfm) = (pq(&ev.sg), pq(&ev.gfm));
        let v = ev.solution.v[self.sys.device_bus].norm();
        match (&self.sys.sg, &self.sys.gfm) {
            (None, None) => {}
            (Some(_), None) | (None, Some(_)) => {
                let s = if self.sys.sg.is_some() { s_sg } else { s_gfm };
                f.push(v - self.v_set);
                if !self.sys.islanded() {
                    f.push(s.re - self.dispatch);
                }
            }
            (Some(_), Some(_)) => {
                f.push(v - self.v_set);
                f.push(s_sg.im - s_gfm.im);
                if self.sys.islanded() {
                    f.push(s_sg.re - s_gfm.re);
                } else {
                    f.push(s_sg.re - self.dispatch);
                    f.push(s_gfm.re - self.dispatch);
                }
            }
        }
        Ok(f)
    }
}

fn constraint_names(sys: &System) -> Vec<String> {
    let grid = !sys.islanded();
    let v: Vec<&str> = match (sys.sg.is_some(), sys.gfm.is_some()) {
        (false, false) => vec![],
        (true, true) if grid => vec!["regulated voltage", "reactive sharing", "generator dispatch", "inverter dispatch"],
        (true, true) => vec!["regulated voltage", "reactive sharing", "active sharing"],
        _ if grid => vec!["regulated voltage", "dispatch"],
        _ => vec!["regulated voltage"],
    };
    v.into_iter().map(String::from).collect()
}

fn max_abs(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, &x)| if x.abs() > bv || x.is_nan() { (i, x.abs()) } else { (bi, bv) })
}

/// Analytic starting point: every source at its dispatch (or rating share)
/// with the regulated bus at `v_set` and zero angle.
fn initial_guess(sys: &mut System, dispatch: f64, v_set: f64) -> Result<Vec<f64>> {
    let v0 = Complex64::new(v_set, 0.0);
    let mut x = vec![0.0; sys.state_len];
    let s_b = sys.base.s_base_mva;
    let gen_mw = sys.sg.as_ref().map_or(0.0, |g| g.rated_mw) + sys.gfm.as_ref().map_or(0.0, |g| g.rated_mw);
    let brake: f64 = sys
        .brake_shunts
        .iter()
        .map(|&k| &sys.network.shunts[k])
        .filter(|s| s.conducting())
        .map(|s| s.admittance.re)
        .sum();
    let demand_pu = sys.static_load_pu() * v_set * v_set + brake + sys.motor_mw() / s_b;
    let machine_p = if sys.islanded() { demand_pu * s_b / gen_mw } else { dispatch };
    if let Some(sg) = &sys.sg {
        let p = machine_p;
        let mut sg = sg.clone();
        let st = sg.initialize(&Terminal { v: v0, i: Complex64::new(p, 0.0) / v0 });
        sg.pack(&st, &mut x[sys.sg_span()]);
        sys.sg = Some(sg);
    }
    if let Some(g) = &sys.gfm {
        let p = machine_p;
        let mut g = g.clone();
        let st = g.initialize(&Terminal { v: v0, i: Complex64::new(p, 0.0) / v0 });
        crate::models::Gfm::pack(&st, &mut x[sys.gfm_span()]);
        sys.gfm = Some(g);
    }
    if let Some(m) = &sys.motor {
        let st = m.initialize(v0)?;
        crate::models::InductionMotor::pack(&st, &mut x[sys.motor_span()]);
    }
    Ok(x)
}

/// Finds the operating point for the system's present configuration and
/// leaves the solved setpoints in the devices.
pub fn find_equilibrium(sys: &mut System, dispatch_pu: f64, v_set: f64) -> Result<Equilibrium> {
    let base_x = initial_guess(sys, dispatch_pu, v_set).map_err(|e| Error::Initialization {
        message: e.to_string(),
        name: "initial guess".into(),
        residual: f64::NAN,
    })?;
    let reference = sys.reference_angle();
    let motor_idle = sys.motor_mw() == 0.0;
    let motor = sys.motor_span();
    let free: Vec<usize> = (0..sys.state_len)
        .filter(|&i| Some(i) != reference && !(motor_idle && motor.contains(&i)))
        .collect();
    let rows: Vec<usize> = (0..sys.state_len).filter(|i| !(motor_idle && motor.contains(i))).collect();
    let all_names = sys.state_names();
    let mut names: Vec<String> = rows.iter().map(|&i| all_names[i].clone()).collect();
    names.extend(constraint_names(sys));
    let mut pb = Problem { sys, free, rows, base_x: base_x.clone(), dispatch: dispatch_pu, v_set, names };

    let mut z = pb.pack(&base_x);
    let fail = |pb: &Problem, f: &[f64], message: String| {
        let (i, r) = max_abs(f);
        Error::Initialization {
            message,
            name: pb.names.get(i).cloned().unwrap_or_else(|| format!("equation {i}")),
            residual: r,
        }
    };
    let mut f = pb.residual(&z).map_err(|e| Error::Initialization {
        message: e.to_string(),
        name: "network".into(),
        residual: f64::NAN,
    })?;
    let n = z.len();
    if f.len() != n {
        return Err(fail(&pb, &f, format!("{} equations for {} unknowns", f.len(), n)));
    }
    let mut iterations = 0;
    while max_abs(&f).1 > TOL {
        if iterations == MAX_ITER {
            return Err(fail(&pb, &f, format!("Newton iteration stalled after {MAX_ITER} steps")));
        }
        iterations += 1;
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * z[j].abs().max(1.0);
            let mut zp = z.clone();
            zp[j] += h;
            let mut zm = z.clone();
            zm[j] -= h;
            let fp = pb.residual(&zp)?;
            let fm = pb.residual(&zm)?;
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| fail(&pb, &f, "singular Jacobian".into()))?;
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let f0 = norm(&f);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + alpha * b).collect();
            match pb.residual(&trial) {
                Ok(ft) if norm(&ft) < f0 || alpha < 1e-3 && ft.iter().all(|v| v.is_finite()) => {
                    z = trial;
                    f = ft;
                    break;
                }
                _ if alpha < 1e-6 => return Err(fail(&pb, &f, "line search failed".into())),
                _ => alpha *= 0.5,
            }
        }
    }
    let x = pb.unpack(&z);
    let ev = pb.sys.evaluate(&x)?;
    let max_derivative = max_abs(&ev.dx).1;
    if max_derivative > 1e-9 {
        return Err(fail(&pb, &ev.dx, "derivatives not settled".into()));
    }
    check_limits(pb.sys, &x, &ev)?;
    Ok(Equilibrium { x, max_derivative, iterations })
}

fn check_limits(sys: &System, x: &[f64], ev: &super::system::Evaluation) -> Result<()> {
    let err = |name: &str, message: String, residual: f64| {
        Err(Error::Initialization { message, name: name.into(), residual })
    };
    if let Some(sg) = &sys.sg {
        let s = sg.unpack(&x[sys.sg_span()]);
        if let Some(g) = &sg.params.governor {
            if s.p_v > g.p_max_pu + 1e-9 || s.p_v < g.p_min_pu - 1e-9 {
                return err(
                    "sg.p_v",
                    format!("mechanical power {:.4} pu outside governor limits", s.p_v),
                    (s.p_v - s.p_v.clamp(g.p_min_pu, g.p_max_pu)).abs(),
                );
            }
        }
        if let Some(e) = &sg.params.exciter {
            if s.v_r > e.v_r_max_pu + 1e-9 || s.v_r < e.v_r_min_pu - 1e-9 {
                return err("sg.v_r", "exciter output outside its limits".into(), s.v_r.abs());
            }
        }
    }
    if let (Some(g), Some(t)) = (&sys.gfm, &ev.gfm) {
        if t.i.norm() > g.current_limit() - 1e-9 {
            return err(
                "gfm.current",
                format!("inverter current {:.4} pu at or beyond its limit", t.i.norm()),
                t.i.norm() - g.current_limit(),
            );
        }
    }
    if let (Some(m), Some(_)) = (&sys.motor, &ev.motor) {
        let slip = x[sys.motor_span().start + 2];
        if !(slip > 0.0 && slip < m.pull_out_slip()) {
            return err("motor.slip", format!("motor operating point slip {slip:.4} is not stable"), slip);
        }
    }
    Ok(())
}
