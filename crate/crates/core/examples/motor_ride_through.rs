// Cooling-motor slip through a 100 ms dip to 0.25 pu at the cluster bus.

use std::path::{Path, PathBuf};

use gridbrake::builtin::builtin;
use gridbrake::engine::run;
use gridbrake::error::Result;
use gridbrake::output::write_run_dir;

pub fn run_example(out: &Path) -> Result<()> {
    let sc = builtin("fig6_motor_dip").expect("built-in");
    let trace = run(&sc)?;
    write_run_dir(out, &sc, &trace)?;
    let slip = trace.channel("motor_slip").expect("core channel");
    let v = trace.channel("v_pcc_pu").expect("core channel");
    for k in (0..trace.len()).step_by(250) {
        println!("t = {:.2} s  v = {:.3} pu  slip = {:.5}", trace.time[k], v[k], slip[k]);
    }
    println!("stalled: {}", trace.motor_stalled);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("gridbrake-motor"));
    run_example(&out)
}
