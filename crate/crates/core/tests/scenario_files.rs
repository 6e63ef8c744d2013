use std::path::PathBuf;

use gridbrake::builtin::{builtin, BUILTIN_NAMES};
use gridbrake::error::ScenarioError;
use gridbrake::scenario::Scenario;
use proptest::prelude::*;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

#[test]
fn shipped_files_match_builtins_byte_for_byte() {
    let mut files: Vec<String> = std::fs::read_dir(dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    let mut names: Vec<String> = BUILTIN_NAMES.iter().map(|n| format!("{n}.toml")).collect();
    names.sort();
    assert_eq!(files, names);
    for name in BUILTIN_NAMES {
        let text = std::fs::read_to_string(dir().join(format!("{name}.toml"))).unwrap();
        assert_eq!(text, builtin(name).unwrap().to_toml_string().unwrap(), "{name}");
        assert_eq!(Scenario::from_toml_str(&text).unwrap(), builtin(name).unwrap());
    }
}

#[test]
fn fig2_file_describes_the_study() {
    let sc = Scenario::load(dir().join("fig2_no_brake.toml").to_str().unwrap()).unwrap();
    assert_eq!(sc.cluster.total_mw(), 1000.0);
    assert!(sc.brake.is_none());
    assert_eq!(sc.events[0].time_s(), 0.1);
}

#[test]
fn empty_file_is_a_line_one_syntax_error() {
    assert!(matches!(Scenario::from_toml_str(""), Err(ScenarioError::Syntax { line: 1, .. })));
    assert!(matches!(Scenario::from_toml_str("\n  \n"), Err(ScenarioError::Syntax { line: 1, .. })));
}

#[test]
fn shares_must_sum_to_one() {
    let text = builtin("fig3_mix_50sm").unwrap().to_toml_string().unwrap().replace("gfm_share = 0.5", "gfm_share = 0.7").replace("sg_share = 0.5", "sg_share = 0.7");
    match Scenario::from_toml_str(&text) {
        Err(ScenarioError::Invariant { key, line, .. }) => {
            assert!(key.contains("share"));
            let l = line.expect("line located");
            assert!(text.lines().nth(l - 1).unwrap().contains("share"));
        }
        r => panic!("{r:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected_with_their_line() {
    let text = builtin("fig6_motor_dip").unwrap().to_toml_string().unwrap().replace("dt_s = ", "step_s = ");
    match Scenario::from_toml_str(&text) {
        Err(ScenarioError::UnknownKey { key, line }) => {
            assert_eq!(key, "step_s");
            assert!(text.lines().nth(line - 1).unwrap().starts_with("step_s"));
        }
        r => panic!("{r:?}"),
    }
}

#[test]
fn bad_syntax_reports_a_line() {
    let text = builtin("fig6_motor_dip").unwrap().to_toml_string().unwrap().replace("horizon_s = 4.0", "horizon_s = = 4.0");
    match Scenario::from_toml_str(&text) {
        Err(ScenarioError::Syntax { line, .. }) => assert!(text.lines().nth(line - 1).unwrap().contains("horizon_s")),
        r => panic!("{r:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn edited_scenarios_round_trip(
        which in 0usize..10,
        sg in 0.0f64..=1.0,
        dt_us in 100u32..5000,
        horizon in 1.0f64..30.0,
        dispatch in 0.3f64..1.0,
    ) {
        let mut sc = builtin(BUILTIN_NAMES[which]).unwrap();
        sc.devices.sg_share = sg;
        sc.devices.gfm_share = 1.0 - sg;
        sc.devices.dispatch_pu = dispatch;
        sc.simulation.dt_s = dt_us as f64 * 1e-6;
        sc.simulation.horizon_s = horizon;
        prop_assume!(sc.validate().is_ok());
        let text = sc.to_toml_string().unwrap();
        let back = Scenario::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &sc);
        prop_assert_eq!(back.to_toml_string().unwrap(), text);
    }
}
