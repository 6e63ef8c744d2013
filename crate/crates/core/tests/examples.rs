//! Every example runs to completion.

macro_rules! example {
    ($m:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $m {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(swing_sizing, "swing_sizing.rs");
example!(load_loss_brake, "load_loss_brake.rs");
example!(generation_mix, "generation_mix.rs");
example!(staged_braking, "staged_braking.rs");
example!(eigen_sweep, "eigen_sweep.rs");
example!(motor_ride_through, "motor_ride_through.rs");
example!(relay_ride_through, "relay_ride_through.rs");
example!(scenario_files, "scenario_files.rs");

#[test]
fn analytic_examples() {
    swing_sizing::run_example().unwrap();
    relay_ride_through::run_example().unwrap();
}

#[test]
fn simulation_examples() {
    let tmp = tempfile::tempdir().unwrap();
    load_loss_brake::run_example(&tmp.path().join("fig2")).unwrap();
    assert!(tmp.path().join("fig2/sg_power.svg").exists());
    generation_mix::run_example(&tmp.path().join("mix")).unwrap();
    staged_braking::run_example(&tmp.path().join("stages")).unwrap();
    motor_ride_through::run_example(&tmp.path().join("motor")).unwrap();
}

#[test]
fn eigen_and_scenario_examples() {
    let tmp = tempfile::tempdir().unwrap();
    eigen_sweep::run_example(&tmp.path().join("eigen")).unwrap();
    assert!(tmp.path().join("eigen/eigen.csv").exists());
    scenario_files::run_example(&tmp.path().join("files")).unwrap();
}
