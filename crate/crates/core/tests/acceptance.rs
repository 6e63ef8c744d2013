//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the report is always printed; exits non-zero if any fails.

use std::time::{Duration, Instant};

use gridbrake::analytics::{
    allocate_stages, removal_time_damped, removal_time_first_swing, speed_deviation_at, SwingParams, TrajectoryQuery,
};
use gridbrake::builtin::{builtin, builtin_scenarios, swing_case, SwingCase, EIGEN_BRAKE_MW, EIGEN_SCR};
use gridbrake::engine::{find_equilibrium, metrics, run, SimTrace, DEFAULT_BAND_HZ};
use gridbrake::output::{write_events_csv, write_trace_csv};
use gridbrake::protection::{relay_evaluate, VoltageRelay};
use gridbrake::small_signal::{eigen_sweep, eigenvalues, linearize, operating_system};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const DT: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed())
}

fn speed(trace: &SimTrace) -> &[f64] {
    trace.channel("sg_speed_pu").expect("core channel")
}

fn case(d: f64, p_br: f64, omega0: f64, horizon: f64) -> SwingCase {
    SwingCase { h_s: 11.0, d_pu: d, delta_p_pu: 0.5, p_br_pu: p_br, omega0_pu: omega0, dt_s: DT, horizon_s: horizon }
}

/// Scalar RK4 of `2H dw/dt = dP - P_br - D w` at 10 us.
fn fine_oracle(p: &SwingParams, omega0: f64, t_end: f64) -> f64 {
    let h = 1e-5;
    let f = |w: f64| (p.delta_p - p.p_br - p.d * w) / (2.0 * p.h);
    let n = (t_end / h).round() as usize;
    let mut w = omega0;
    for _ in 0..n {
        let k1 = f(w);
        let k2 = f(w + 0.5 * h * k1);
        let k3 = f(w + 0.5 * h * k2);
        let k4 = f(w + h * k3);
        w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    w
}

fn c1_oracle() -> Outcome {
    let p = SwingParams { h: 11.0, d: 1.0, delta_p: 0.5, p_br: 0.25 };
    let (trace, elapsed) = timed(|| run(&swing_case(&case(1.0, 0.25, 0.0, 10.0))));
    let trace = match trace {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let w = speed(&trace);
    let err = trace
        .time
        .iter()
        .zip(w)
        .map(|(&t, &x)| (x - speed_deviation_at(&p, &TrajectoryQuery { omega0: 0.0, t }).unwrap()).abs())
        .fold(0.0, f64::max);
    // the closed form itself against a 10 us integration
    let oracle_gap = [2.0, 5.0, 10.0]
        .iter()
        .map(|&t| (fine_oracle(&p, 0.0, t) - speed_deviation_at(&p, &TrajectoryQuery { omega0: 0.0, t }).unwrap()).abs())
        .fold(0.0, f64::max);
    let pass = err < 1e-6 && oracle_gap < 1e-9 && elapsed < Duration::from_secs(1) && trace.failure.is_none();
    outcome(pass, format!("max |engine - closed form| {err:.2e} pu, closed form vs 10 us RK4 {oracle_gap:.1e}, {elapsed:.2?}"))
}

fn c2_removal_time() -> Outcome {
    let p = SwingParams { h: 11.0, d: 1.0, delta_p: 0.5, p_br: 0.25 };
    let t_ref = match removal_time_damped(&p, 0.0, 0.1) {
        Ok(s) => s.t_removal.unwrap_or(f64::NAN),
        Err(e) => return outcome(false, e.to_string()),
    };
    let (trace, elapsed) = timed(|| run(&swing_case(&case(1.0, 0.25, 0.0, 12.0))).expect("reduced run"));
    let crossing = speed(&trace).iter().position(|&w| w >= 0.1).map(|k| trace.time[k]);
    let pass = crossing.is_some_and(|t| (t - t_ref).abs() <= 2.0 * DT && (t_ref - 11.238).abs() < 5e-4)
        && elapsed < Duration::from_secs(2);
    outcome(pass, format!("closed form T = {t_ref:.4} s, trace crosses 0.1 pu at {crossing:?} s, {elapsed:.2?}"))
}

fn c3_first_swing() -> Outcome {
    let p = SwingParams { h: 11.0, d: 0.0, delta_p: 0.5, p_br: 0.75 };
    let t_ref = removal_time_first_swing(&p, 0.01, 0.0).ok().and_then(|s| s.t_removal).unwrap_or(f64::NAN);
    let trace = run(&swing_case(&case(0.0, 0.75, 0.01, 2.0))).expect("reduced run");
    let zero = speed(&trace).iter().position(|&w| w <= 0.0).map(|k| trace.time[k]);
    let pass = zero.is_some_and(|t| (t - 0.88).abs() <= 2.0 * DT) && (t_ref - 0.88).abs() < 1e-12;
    outcome(pass, format!("closed form {t_ref:.4} s, trace reaches 0 at {zero:?} s"))
}

fn c4_fig2() -> Outcome {
    let mut peaks = Vec::new();
    let mut slowest = Duration::ZERO;
    for name in ["fig2_no_brake", "fig2_brake_125", "fig2_brake_250"] {
        let (m, el) = timed(|| run(&builtin(name).unwrap()).and_then(|t| metrics(&t, DEFAULT_BAND_HZ)));
        slowest = slowest.max(el);
        match m {
            Ok(m) => peaks.push(m.peak_sg_p_pu),
            Err(e) => return outcome(false, format!("{name}: {e}")),
        }
    }
    let pass = (1.45..=1.75).contains(&peaks[0]) && peaks[0] > peaks[1] && peaks[1] > peaks[2] && slowest < Duration::from_secs(5);
    outcome(pass, format!("peak generator power {:.4} > {:.4} > {:.4} pu, slowest run {slowest:.2?}", peaks[0], peaks[1], peaks[2]))
}

fn c5_fig3() -> Outcome {
    let ms: Vec<_> = ["fig3_mix_75sm", "fig3_mix_50sm", "fig3_mix_25sm"]
        .iter()
        .map(|n| metrics(&run(&builtin(n).unwrap()).unwrap(), DEFAULT_BAND_HZ).unwrap())
        .collect();
    let pass = ms.windows(2).all(|w| w[1].peak_abs_df_hz > w[0].peak_abs_df_hz && w[1].tail_mean_abs_df_hz > w[0].tail_mean_abs_df_hz);
    let peaks: Vec<String> = ms.iter().map(|m| format!("{:.3}", m.peak_abs_df_hz)).collect();
    let tails: Vec<String> = ms.iter().map(|m| format!("{:.3}", m.tail_mean_abs_df_hz)).collect();
    outcome(pass, format!("peak |df| {} Hz; final 2 s mean |df| {} Hz", peaks.join(" < "), tails.join(" < ")))
}

fn c6_fig4() -> Outcome {
    let single = run(&builtin("fig4_single_stage").unwrap()).unwrap();
    let multi_sc = builtin("fig4_multi_stage").unwrap();
    let multi = run(&multi_sc).unwrap();
    let (ms, mm) = (metrics(&single, DEFAULT_BAND_HZ).unwrap(), metrics(&multi, DEFAULT_BAND_HZ).unwrap());
    let cap = multi_sc.brake.as_ref().unwrap().max_insertion_s;
    let dwell: Vec<f64> = multi
        .brake_windows
        .iter()
        .map(|w| match w {
            Some((on, Some(off))) => off - on,
            _ => f64::INFINITY,
        })
        .collect();
    let longest = dwell.iter().copied().fold(0.0, f64::max);
    let pass = mm.peak_abs_df_hz <= ms.peak_abs_df_hz
        && mm.oscillation_energy < ms.oscillation_energy
        && longest <= 0.85 + 1e-9
        && longest <= cap.min(1.0);
    outcome(
        pass,
        format!(
            "peak |df| {:.4} <= {:.4} Hz, oscillation energy {:.3} < {:.3}, longest stage dwell {longest:.3} s",
            mm.peak_abs_df_hz, ms.peak_abs_df_hz, mm.oscillation_energy, ms.oscillation_energy
        ),
    )
}

fn c7_fig5() -> Outcome {
    let template = builtin("fig5_eigen_sweep").unwrap();
    let (points, elapsed) = timed(|| eigen_sweep(&template, &EIGEN_SCR, &EIGEN_BRAKE_MW).unwrap());
    let dom: Vec<f64> = points.iter().map(|p| p.dominant.map_or(f64::INFINITY, |z| z.re)).collect();
    let n = EIGEN_BRAKE_MW.len();
    let a = points.iter().all(|p| p.stable);
    let b = (0..n).all(|i| dom[n + i] < dom[i]);
    let c = (1..n).all(|i| dom[i - 1] >= dom[i]);
    let pass = a && b && c && elapsed < Duration::from_secs(30);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    outcome(
        pass,
        format!("stable {a}, SCR 5 left of SCR 2 {b}, SCR 2 trend {c}; SCR 2 [{}], SCR 5 [{}], {elapsed:.2?}", fmt(&dom[..n]), fmt(&dom[n..])),
    )
}

fn c8_fig6() -> Outcome {
    let sc = builtin("fig6_motor_dip").unwrap();
    let (onset, release) = match &sc.events[0] {
        gridbrake::scenario::EventSpec::VoltageDip { time_s, duration_s, .. } => (*time_s, time_s + duration_s),
        _ => return outcome(false, "first event is not a dip"),
    };
    let trace = run(&sc).unwrap();
    let slip = trace.channel("motor_slip").unwrap();
    let k_pre = trace.time.partition_point(|&t| t < onset - 1e-9) - 1;
    let s0 = slip[k_pre];
    // Last sample outside one percentage point of the pre-dip slip.
    let last_out = (0..trace.len()).rev().find(|&k| trace.time[k] > release && (slip[k] - s0).abs() > 0.01);
    let back_at = last_out.map_or(release, |k| trace.time[(k + 1).min(trace.len() - 1)]);
    let k_end = trace.time.partition_point(|&t| t < release + 2.0 - 1e-9);
    let rel = slip[k_end..].iter().map(|s| (s - s0).abs() / s0).fold(0.0, f64::max);
    let pass = back_at - release <= 2.0 && !trace.motor_stalled && trace.failure.is_none();
    outcome(
        pass,
        format!(
            "pre-dip slip {s0:.5}, within 0.01 of it {:.3} s after recovery, stalled {}; largest relative slip departure after recovery + 2 s {:.1}%",
            back_at - release,
            trace.motor_stalled,
            100.0 * rel
        ),
    )
}

fn c9_energy() -> Outcome {
    let mut worst: (f64, String) = (0.0, String::new());
    for sc in builtin_scenarios() {
        let t = run(&sc).unwrap();
        let thermal: f64 = t.brake_energy_mj.iter().sum();
        let integral = t.integrated_brake_energy_mj(sc.base.s_base_mva);
        let rel = if thermal == 0.0 && integral == 0.0 { 0.0 } else { (thermal - integral).abs() / integral.abs().max(thermal.abs()) };
        if rel >= worst.0 {
            worst = (rel, sc.name.clone());
        }
    }
    let multi = run(&builtin("fig4_multi_stage").unwrap()).unwrap();
    let (e1, e3) = (multi.brake_energy_mj[0], multi.brake_energy_mj[2]);
    let pass = worst.0 < 1e-3 && (e1 / 13.0 - 1.0).abs() < 0.05 && (e3 / 93.5 - 1.0).abs() < 0.05;
    outcome(pass, format!("worst thermal vs trace mismatch {:.4}% ({}), stage 1 {e1:.2} MJ, stage 3 {e3:.2} MJ", 100.0 * worst.0, worst.1))
}

fn bytes(trace: &SimTrace) -> Vec<u8> {
    let names: Vec<String> = trace.channels.iter().map(|c| c.name.clone()).collect();
    let mut buf = Vec::new();
    write_trace_csv(trace, &names, &mut buf).unwrap();
    write_events_csv(trace, &mut buf).unwrap();
    buf
}

fn c10_determinism() -> Outcome {
    let mut identical = true;
    let mut worst: (f64, String) = (0.0, String::new());
    for sc in builtin_scenarios() {
        let a = run(&sc).unwrap();
        let b = run(&sc).unwrap();
        identical &= bytes(&a) == bytes(&b);
        let mut half = sc.clone();
        half.simulation.dt_s = sc.simulation.dt_s / 2.0;
        let h = run(&half).unwrap();
        let (pa, ph) = (metrics(&a, DEFAULT_BAND_HZ).unwrap().peak_abs_df_hz, metrics(&h, DEFAULT_BAND_HZ).unwrap().peak_abs_df_hz);
        let rel = if pa == 0.0 && ph == 0.0 { 0.0 } else { (pa - ph).abs() / pa.abs().max(ph.abs()) };
        if rel >= worst.0 {
            worst = (rel, sc.name.clone());
        }
    }
    outcome(identical && worst.0 < 5e-3, format!("reruns byte-identical {identical}; worst peak |df| change on halving dt {:.4}% ({})", 100.0 * worst.0, worst.1))
}

/// Expected decision of the default envelope for one rectangular sag,
/// stepped by hand through the segments.
fn hand_relay(depth: f64, start: f64, len: f64, dt: f64) -> Option<f64> {
    let pickup = 1.0 / 60.0;
    let segs = [(0.70, 0.02), (0.80, 0.5), (0.90, 10.0)];
    let samples = (len / dt).round() as usize;
    // Samples at start, start + dt, ..., start + (samples - 1) dt are low.
    let held = (samples.max(1) - 1) as f64 * dt;
    segs.iter()
        .filter(|(thr, dwell)| depth < *thr && held >= dwell - 1e-12)
        .map(|(_, dwell)| start + dwell + pickup)
        .reduce(f64::min)
}

fn c11_properties() -> Outcome {
    let mut notes = Vec::new();

    let mut alloc_ok = true;
    for total in (10..=1000).step_by(10) {
        for step in (10..=1000).step_by(10) {
            let s = allocate_stages(total as f64, step as f64).unwrap();
            // brute force: smallest k with k stages of at most `step` covering the total
            let k_min = (1..=total / 10).find(|k| k * step >= total).unwrap();
            alloc_ok &= s.len() == k_min as usize
                && s.iter().sum::<f64>() == total as f64
                && s.iter().all(|&x| x > 0.0 && x <= step as f64);
        }
    }
    notes.push(format!("allocation {alloc_ok}"));

    let relay = VoltageRelay::default();
    let dt = 1e-3;
    let mut runner = TestRunner::new(Config { cases: 256, failure_persistence: None, ..Config::default() });
    let relay_ok = runner
        .run(&(0.3f64..1.0, 1usize..800), |(depth, n)| {
            let len = n as f64 * dt;
            let start = 0.1;
            let history: Vec<(f64, f64)> = (0..1500)
                .map(|k| {
                    let t = k as f64 * dt;
                    let low = k >= 100 && k < 100 + n;
                    (t, if low { depth } else { 1.0 })
                })
                .collect();
            let got = relay_evaluate(&relay, &history, 60.0);
            let want = hand_relay(depth, start, len, dt);
            prop_assert_eq!(got.is_some(), want.is_some(), "depth {} len {}", depth, len);
            if let (Some(g), Some(w)) = (got, want) {
                prop_assert!((g - w).abs() < 1e-9);
            }
            Ok(())
        })
        .is_ok();
    notes.push(format!("relay {relay_ok}"));

    let mut conj_ok = true;
    let sweep = eigen_sweep(&builtin("fig5_eigen_sweep").unwrap(), &EIGEN_SCR, &EIGEN_BRAKE_MW).unwrap();
    let spectra: Vec<Vec<Complex64>> = sweep.into_iter().map(|p| p.eigenvalues).collect();
    let mut runner = TestRunner::new(Config { cases: 64, failure_persistence: None, ..Config::default() });
    let random = (1usize..12).prop_flat_map(|n| (Just(n), proptest::collection::vec(-1.0f64..1.0, n * n)));
    let random_ok = runner
        .run(&random, |(n, v)| {
            let eig = eigenvalues(&DMatrix::from_row_slice(n, n, &v)).unwrap();
            prop_assert!(eig.iter().all(|z| eig.iter().any(|w| (w - z.conj()).norm() < 1e-9)));
            Ok(())
        })
        .is_ok();
    conj_ok &= random_ok;
    for eig in &spectra {
        conj_ok &= eig.iter().all(|z| eig.iter().any(|w| (w - z.conj()).norm() < 1e-9));
    }
    notes.push(format!("conjugate closure {conj_ok}"));

    let worst = std::cell::Cell::new(0.0f64);
    let mut runner = TestRunner::new(Config { cases: 24, failure_persistence: None, ..Config::default() });
    let analytic_ok = runner
        .run(&(1.0f64..15.0, 0.1f64..5.0), |(h, d)| {
            let c = SwingCase { h_s: h, d_pu: d, delta_p_pu: 0.5, p_br_pu: 0.0, omega0_pu: 0.0, dt_s: DT, horizon_s: 1.0 };
            let sc = swing_case(&c);
            let mut sys = operating_system(&sc, None, 0.0).unwrap();
            let eq = find_equilibrium(&mut sys, sc.devices.dispatch_pu, sc.devices.voltage_setpoint_pu).unwrap();
            let model = linearize(&sys, &eq.x).unwrap();
            let eig = eigenvalues(&model.a).unwrap();
            prop_assert_eq!(eig.len(), 1);
            let err = (eig[0] - Complex64::new(-d / (2.0 * h), 0.0)).norm();
            worst.set(worst.get().max(err));
            prop_assert!(err < 1e-6, "H {} D {} -> {:?}", h, d, eig);
            Ok(())
        })
        .is_ok();
    notes.push(format!("-D/2H {analytic_ok} (worst {:.1e})", worst.get()));

    outcome(alloc_ok && relay_ok && conj_ok && analytic_ok, notes.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("analytic oracle equivalence", c1_oracle),
        ("removal-time consistency", c2_removal_time),
        ("first-swing zero crossing", c3_first_swing),
        ("brake size orders generator peak", c4_fig2),
        ("frequency rise grows with grid-forming share", c5_fig3),
        ("multi-stage against single-stage brake", c6_fig4),
        ("eigenvalue sweep properties", c7_fig5),
        ("motor ride-through", c8_fig6),
        ("energy bookkeeping", c9_energy),
        ("determinism and step-size convergence", c10_determinism),
        ("property suites", c11_properties),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
