//! Closed-form single-machine swing analytics for brake sizing.
//!
//! With a shunt brake absorbing `p_br` after a step loss of `delta_p`, the
//! one-machine swing equation reads
//!
//! ```text
//! 2H dw/dt = delta_p - p_br - D w
//! ```
//!
//! and has an exponential solution for `D > 0` and a linear one for `D = 0`.
//! These functions are used directly as a sizing tool and as the analytic
//! reference for the time-domain engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingParams {
    /// Inertia constant (s).
    pub h: f64,
    /// Damping (pu power per pu speed).
    pub d: f64,
    /// Tripped load (pu).
    pub delta_p: f64,
    /// Brake power while inserted (pu).
    pub p_br: f64,
}

impl SwingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::Domain(format!("inertia must be positive, got {}", self.h)));
        }
        if !(self.d >= 0.0) || !(self.delta_p >= 0.0) || !(self.p_br >= 0.0) {
            return Err(Error::Domain(
                "damping, tripped load and brake power must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Steady-state speed deviation `(delta_p - p_br) / D`.
    fn asymptote(&self) -> f64 {
        (self.delta_p - self.p_br) / self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakeElectrical {
    pub v_pu: f64,
    pub r_br_pu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryQuery {
    /// Speed deviation at insertion (pu).
    pub omega0: f64,
    /// Time since insertion (s).
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemovalSolution {
    /// Time from insertion to the target; `None` when unreachable.
    pub t_removal: Option<f64>,
    pub omega_target: f64,
    pub reachable: bool,
}

impl RemovalSolution {
    fn reached(t: f64, omega_target: f64) -> Self {
        Self {
            t_removal: Some(t),
            omega_target,
            reachable: true,
        }
    }

    fn unreachable(omega_target: f64) -> Self {
        Self {
            t_removal: None,
            omega_target,
            reachable: false,
        }
    }
}

/// Power absorbed by a resistive brake, `V^2 / R`.
pub fn brake_power(e: BrakeElectrical) -> Result<f64> {
    if !(e.r_br_pu > 0.0) {
        return Err(Error::Domain(format!(
            "brake resistance must be positive, got {}",
            e.r_br_pu
        )));
    }
    if !(e.v_pu >= 0.0) {
        return Err(Error::Domain(format!("voltage must be non-negative, got {}", e.v_pu)));
    }
    Ok(e.v_pu * e.v_pu / e.r_br_pu)
}

/// Speed deviation `t` seconds after brake insertion. Requires `D > 0`; use
/// [`speed_deviation_first_swing`] for the undamped case.
pub fn speed_deviation_at(p: &SwingParams, q: &TrajectoryQuery) -> Result<f64> {
    p.validate()?;
    if p.d <= 0.0 {
        return Err(Error::Domain(
            "exponential form needs D > 0; use the first-swing form".into(),
        ));
    }
    if !(q.t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {}", q.t)));
    }
    let s = p.asymptote();
    Ok((q.omega0 - s) * (-p.d * q.t / (2.0 * p.h)).exp() + s)
}

/// Undamped trajectory `w0 + (delta_p - p_br) t / 2H`.
pub fn speed_deviation_first_swing(p: &SwingParams, q: &TrajectoryQuery) -> Result<f64> {
    p.validate()?;
    if !(q.t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {}", q.t)));
    }
    Ok(q.omega0 + (p.delta_p - p.p_br) * q.t / (2.0 * p.h))
}

/// Time for the damped trajectory to reach `omega_target`.
pub fn removal_time_damped(p: &SwingParams, omega0: f64, omega_target: f64) -> Result<RemovalSolution> {
    p.validate()?;
    if p.d <= 0.0 {
        return Err(Error::Domain(
            "damped removal time needs D > 0; use the first-swing form".into(),
        ));
    }
    if omega0 == omega_target {
        return Ok(RemovalSolution::reached(0.0, omega_target));
    }
    let s = p.asymptote();
    let ratio = (omega0 - s) / (omega_target - s);
    // ratio <= 0: target on the far side of the asymptote.
    // ratio < 1: trajectory moves away from the target.
    if !(ratio.is_finite() && ratio >= 1.0) {
        return Ok(RemovalSolution::unreachable(omega_target));
    }
    let t = 2.0 * p.h / p.d * ratio.ln();
    Ok(RemovalSolution::reached(t, omega_target))
}

/// Time for the undamped trajectory to be brought back down to
/// `omega_target`. Only a net decelerating brake (`p_br > delta_p`) can do
/// that; a smaller brake merely slows the rise and is reported unreachable.
pub fn removal_time_first_swing(
    p: &SwingParams,
    omega0: f64,
    omega_target: f64,
) -> Result<RemovalSolution> {
    p.validate()?;
    if omega0 == omega_target {
        return Ok(RemovalSolution::reached(0.0, omega_target));
    }
    let net = p.p_br - p.delta_p;
    if net <= 0.0 {
        return Ok(RemovalSolution::unreachable(omega_target));
    }
    let t = 2.0 * p.h * (omega0 - omega_target) / net;
    if t < 0.0 {
        return Ok(RemovalSolution::unreachable(omega_target));
    }
    Ok(RemovalSolution::reached(t, omega_target))
}

/// Splits a total brake rating into the fewest stages no larger than
/// `max_step_mw`: equal stages first, one remainder stage last.
pub fn allocate_stages(total_brake_mw: f64, max_step_mw: f64) -> Result<Vec<f64>> {
    if !(total_brake_mw > 0.0 && total_brake_mw.is_finite()) {
        return Err(Error::Domain(format!(
            "total brake rating must be positive, got {total_brake_mw}"
        )));
    }
    if !(max_step_mw > 0.0 && max_step_mw.is_finite()) {
        return Err(Error::Domain(format!(
            "maximum step must be positive, got {max_step_mw}"
        )));
    }
    let ratio = total_brake_mw / max_step_mw;
    let count = ((ratio - 1e-9).ceil() as usize).max(1);
    let mut stages = vec![max_step_mw; count - 1];
    let remainder = total_brake_mw - max_step_mw * (count - 1) as f64;
    stages.push(remainder.min(max_step_mw));
    Ok(stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H: f64 = 11.0;

    fn params(d: f64, delta_p: f64, p_br: f64) -> SwingParams {
        SwingParams { h: H, d, delta_p, p_br }
    }

    /// Independent reference: classic RK4 on the swing equation at 10 us.
    fn integrate(p: &SwingParams, omega0: f64, t_end: f64) -> f64 {
        let dt = 1e-5;
        let f = |w: f64| (p.delta_p - p.p_br - p.d * w) / (2.0 * p.h);
        let steps = (t_end / dt).round() as usize;
        let mut w = omega0;
        for _ in 0..steps {
            let k1 = f(w);
            let k2 = f(w + 0.5 * dt * k1);
            let k3 = f(w + 0.5 * dt * k2);
            let k4 = f(w + dt * k3);
            w += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        w
    }

    #[test]
    fn brake_power_examples() {
        let bp = |v, r| brake_power(BrakeElectrical { v_pu: v, r_br_pu: r }).unwrap();
        assert_eq!(bp(1.0, 2.0), 0.5);
        assert_eq!(bp(0.0, 4.0), 0.0);
        assert!((bp(0.95, 4.0) - 0.225625).abs() < 1e-15);
        assert!(brake_power(BrakeElectrical { v_pu: 1.0, r_br_pu: 0.0 }).is_err());
    }

    #[test]
    fn trajectory_examples() {
        let p = params(1.0, 0.5, 0.25);
        let at = |t| speed_deviation_at(&p, &TrajectoryQuery { omega0: 0.0, t }).unwrap();
        assert_eq!(at(0.0), 0.0);
        assert!((at(1e4) - 0.25).abs() < 1e-12);
        // frozen from the RK4 reference below: 0.25 * (1 - e^-1)
        assert!((at(22.0) - 0.158_030_139_707_3).abs() < 1e-9);
        assert!((integrate(&p, 0.0, 22.0) - at(22.0)).abs() < 1e-9);
        let p0 = params(0.0, 0.5, 0.25);
        assert!(matches!(
            speed_deviation_at(&p0, &TrajectoryQuery { omega0: 0.0, t: 1.0 }),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn damped_removal_examples() {
        let p = params(1.0, 0.5, 0.25);
        let sol = removal_time_damped(&p, 0.0, 0.1).unwrap();
        let t = sol.t_removal.unwrap();
        // 22 ln(5/3)
        assert!((t - 11.238_22).abs() < 1e-4, "{t}");
        // cross-check by bisection on the integrated trajectory
        let (mut lo, mut hi) = (0.0, 20.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if integrate(&p, 0.0, mid) < 0.1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((0.5 * (lo + hi) - t).abs() < 1e-4);

        assert_eq!(removal_time_damped(&p, 0.2, 0.2).unwrap().t_removal, Some(0.0));
        let beyond = removal_time_damped(&p, 0.0, 0.3).unwrap();
        assert!(!beyond.reachable && beyond.t_removal.is_none());
        // moving away: already above target and rising toward 0.25
        assert!(!removal_time_damped(&p, 0.15, 0.1).unwrap().reachable);
        assert!(removal_time_damped(&params(0.0, 0.5, 0.25), 0.0, 0.1).is_err());
    }

    #[test]
    fn first_swing_examples() {
        let p = params(0.0, 0.5, 0.75);
        let sol = removal_time_first_swing(&p, 0.01, 0.0).unwrap();
        assert!((sol.t_removal.unwrap() - 0.88).abs() < 1e-12);
        // RK4 with D = 0 reaches zero at the same instant
        assert!(integrate(&p, 0.01, 0.88).abs() < 1e-12);

        assert_eq!(removal_time_first_swing(&p, 0.3, 0.3).unwrap().t_removal, Some(0.0));
        let weak = params(0.0, 0.5, 0.25);
        assert!(!removal_time_first_swing(&weak, 0.0, 0.1).unwrap().reachable);
        let balanced = params(0.0, 0.5, 0.5);
        assert!(!removal_time_first_swing(&balanced, 0.01, 0.0).unwrap().reachable);
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate_stages(370.0, 130.0).unwrap(), vec![130.0, 130.0, 110.0]);
        assert_eq!(allocate_stages(250.0, 250.0).unwrap(), vec![250.0]);
        assert_eq!(
            allocate_stages(500.0, 150.0).unwrap(),
            vec![150.0, 150.0, 150.0, 50.0]
        );
        assert!(allocate_stages(0.0, 10.0).is_err());
        assert!(allocate_stages(10.0, -1.0).is_err());
    }

    #[test]
    fn allocation_minimal_by_brute_force() {
        for total in (10..=1000).step_by(10) {
            for step in (10..=1000).step_by(10) {
                let stages = allocate_stages(total as f64, step as f64).unwrap();
                let sum: f64 = stages.iter().sum();
                assert_eq!(sum, total as f64, "{total} / {step}");
                assert!(stages.iter().all(|&s| s > 0.0 && s <= step as f64));
                assert!(stages.windows(2).all(|w| w[0] >= w[1]));
                // fewest k stages of size <= step that can cover the total
                let minimal = (1..).find(|k| k * step >= total).unwrap();
                assert_eq!(stages.len(), minimal as usize);
            }
        }
    }

    proptest! {
        #[test]
        fn matches_numerical_integration(
            d in 0.05f64..5.0,
            delta_p in 0.0f64..1.0,
            p_br in 0.0f64..1.0,
            omega0 in -0.05f64..0.05,
            t in 0.0f64..10.0,
        ) {
            let p = SwingParams { h: H, d, delta_p, p_br };
            let closed = speed_deviation_at(&p, &TrajectoryQuery { omega0, t }).unwrap();
            prop_assert!((closed - integrate(&p, omega0, t)).abs() < 1e-6);
        }

        #[test]
        fn small_damping_limit(
            delta_p in 0.0f64..1.0,
            p_br in 0.0f64..1.0,
            omega0 in -0.05f64..0.05,
            t in 0.0f64..5.0,
        ) {
            let q = TrajectoryQuery { omega0, t };
            let damped = speed_deviation_at(&params(1e-6, delta_p, p_br), &q).unwrap();
            let linear = speed_deviation_first_swing(&params(0.0, delta_p, p_br), &q).unwrap();
            prop_assert!((damped - linear).abs() < 1e-4);
        }

        #[test]
        fn removal_time_substitutes_back(
            d in 0.05f64..5.0,
            delta_p in 0.0f64..1.0,
            p_br in 0.0f64..1.0,
            omega0 in -0.1f64..0.1,
            target in -0.1f64..0.1,
        ) {
            let p = SwingParams { h: H, d, delta_p, p_br };
            let sol = removal_time_damped(&p, omega0, target).unwrap();
            if let (true, Some(t)) = (sol.reachable, sol.t_removal) {
                prop_assert!(t >= 0.0 && t.is_finite());
                let w = speed_deviation_at(&p, &TrajectoryQuery { omega0, t }).unwrap();
                prop_assert!((w - target).abs() < 1e-9);
            }
        }
    }
}
