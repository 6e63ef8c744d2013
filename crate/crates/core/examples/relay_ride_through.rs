// Undervoltage relays on the cluster: hand-made voltage records against
// the default envelope, then a dip deep enough that the buildings move
// their IT load to UPS and the brake closes on the resulting load loss.

use gridbrake::braking::BrakeTrigger;
use gridbrake::builtin::{builtin, single_stage};
use gridbrake::engine::run;
use gridbrake::error::Result;
use gridbrake::protection::{relay_evaluate, VoltageRelay};
use gridbrake::scenario::EventSpec;

fn sag(depth: f64, from: f64, to: f64) -> Vec<(f64, f64)> {
    (0..=1000).map(|k| k as f64 * 1e-3).map(|t| (t, if (from..to).contains(&t) { depth } else { 1.0 })).collect()
}

pub fn run_example() -> Result<()> {
    let relay = VoltageRelay::default();
    for (depth, len) in [(0.85, 0.3), (0.75, 0.3), (0.75, 0.6), (0.5, 0.01), (0.5, 0.05)] {
        let trip = relay_evaluate(&relay, &sag(depth, 0.1, 0.1 + len), 60.0);
        println!("{depth:.2} pu for {:>3.0} ms -> {}", len * 1e3, trip.map_or("ride through".into(), |t| format!("trip at {t:.4} s")));
    }

    let mut sc = builtin("fig6_motor_dip").expect("built-in");
    sc.name = "relay_trip".into();
    sc.cluster.relays_enabled = true;
    sc.events = vec![EventSpec::VoltageDip { time_s: 0.5, bus: "pcc".into(), magnitude_pu: 0.5, duration_s: 0.1 }];
    let mut brake = single_stage(250.0, 0.0);
    brake.trigger = BrakeTrigger::OnLoadLoss;
    brake.stages[0].insert_cmd_s = 0.0;
    brake.stages[0].remove_cmd_s = Some(0.2);
    sc.brake = Some(brake);
    let trace = run(&sc)?;
    for e in trace.events.iter().filter(|e| e.kind != "note") {
        println!("{:>7.3} s  {:<14} {}", e.time_s, e.kind, e.detail);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
