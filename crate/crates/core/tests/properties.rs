use gridbrake::braking::{step_thermal, BrakeSchedule, BrakeTrigger, StageSpec, ThermalState};
use gridbrake::engine::{metrics, Channel, SimTrace, DEFAULT_BAND_HZ};
use gridbrake::network::scr_to_thevenin;
use gridbrake::small_signal::eigenvalues;
use gridbrake::units::SystemBase;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn schedule(delay: f64, max_ins: f64, stages: Vec<(f64, f64, Option<f64>)>) -> BrakeSchedule {
    BrakeSchedule {
        bus: "pcc".into(),
        trigger: BrakeTrigger::Explicit,
        breaker_delay_s: delay,
        max_insertion_s: max_ins,
        stages: stages.into_iter().map(|(mw, ins, rem)| StageSpec::new(mw, ins, rem)).collect(),
    }
}

fn stage() -> impl Strategy<Value = (f64, f64, Option<f64>)> {
    (1.0..500.0f64, 0.0..5.0f64, proptest::option::of(0.0..1.0f64))
        .prop_map(|(mw, ins, dwell)| (mw, ins, dwell.map(|d| ins + d)))
}

fn trace_from(freq: Vec<f64>, dt: f64) -> SimTrace {
    let n = freq.len();
    SimTrace {
        scenario: "p".into(),
        dt_s: dt,
        f_nominal_hz: 60.0,
        time: (0..n).map(|k| k as f64 * dt).collect(),
        channels: vec![
            Channel { name: "freq_hz".into(), values: freq },
            Channel { name: "sg_p_pu".into(), values: vec![0.5; n] },
        ],
        events: Vec::new(),
        brake_windows: Vec::new(),
        brake_energy_mj: Vec::new(),
        thermal_violation: Vec::new(),
        brake_commands: Vec::new(),
        motor_stalled: false,
        failure: None,
    }
}

proptest! {
    #[test]
    fn windows_start_after_delay_and_respect_limit(
        delay in 0.0..0.2f64,
        max_ins in 0.1..1.0f64,
        anchor in 0.0..10.0f64,
        stages in proptest::collection::vec(stage(), 1..5),
    ) {
        let stages: Vec<_> = stages
            .into_iter()
            .map(|(mw, ins, rem)| (mw, ins, rem.map(|r| r.min(ins + max_ins))))
            .collect();
        let sch = schedule(delay, max_ins, stages.clone());
        prop_assert!(sch.validate().is_ok());
        for ((on, off), (_, ins, _)) in sch.conduction_windows(anchor).into_iter().zip(&stages) {
            prop_assert!((on - (anchor + ins + delay)).abs() < 1e-12);
            prop_assert!(off >= on);
            prop_assert!(off - on <= max_ins + 1e-9);
        }
    }

    #[test]
    fn thermal_energy_is_power_times_time(
        powers in proptest::collection::vec((0.0..0.6f64, any::<bool>()), 1..200),
        dt in 1e-4..1e-2f64,
    ) {
        let base = SystemBase::default();
        let limit = 50.0;
        let mut st = ThermalState::default();
        let mut expect = 0.0;
        let mut crossed = false;
        for &(p, on) in &powers {
            st = step_thermal(st, on, p, dt, limit, &base);
            if on {
                expect += p * base.s_base_mva * dt;
                crossed |= expect > limit;
            }
        }
        prop_assert!((st.energy_mj - expect).abs() <= 1e-9 * expect.max(1.0));
        // the flag latches at the first crossing
        prop_assert_eq!(st.violated, crossed);
    }

    #[test]
    fn metrics_scale_with_deviation(
        dev in proptest::collection::vec(-0.5..0.5f64, 20..200),
        k in 0.1..5.0f64,
    ) {
        let dt = 0.01;
        let a = metrics(&trace_from(dev.iter().map(|d| 60.0 + d).collect(), dt), DEFAULT_BAND_HZ).unwrap();
        let b = metrics(&trace_from(dev.iter().map(|d| 60.0 + k * d).collect(), dt), DEFAULT_BAND_HZ).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()));
        prop_assert!(close(b.peak_abs_df_hz, k * a.peak_abs_df_hz));
        prop_assert!(close(b.max_rocof_hz_per_s, k * a.max_rocof_hz_per_s));
        prop_assert!(close(b.tail_mean_abs_df_hz, k * a.tail_mean_abs_df_hz));
        prop_assert!(close(b.oscillation_energy, k * k * a.oscillation_energy));
    }

    #[test]
    fn eigenvalue_sum_matches_trace(
        n in 1usize..8,
        entries in proptest::collection::vec(-5.0..5.0f64, 64),
    ) {
        let a = DMatrix::from_fn(n, n, |r, c| entries[r * 8 + c]);
        let eigs = eigenvalues(&a).unwrap();
        prop_assert_eq!(eigs.len(), n);
        let sum: f64 = eigs.iter().map(|z| z.re).sum();
        prop_assert!((sum - a.trace()).abs() < 1e-8 * (1.0 + a.norm()));
        let im: f64 = eigs.iter().map(|z| z.im).sum();
        prop_assert!(im.abs() < 1e-8 * (1.0 + a.norm()));
    }

    #[test]
    fn thevenin_magnitude_is_reciprocal_scr(scr in 0.5..50.0f64, xr in 0.5..30.0f64) {
        let z = scr_to_thevenin(scr, xr, &SystemBase::default()).unwrap();
        prop_assert!((z.norm() * scr - 1.0).abs() < 1e-12);
        prop_assert!((z.im / z.re - xr).abs() < 1e-9 * xr);
    }
}
