// Sizing a brake from the single-machine swing equation: brake power from
// bus voltage and resistance, speed trajectories with and without damping,
// removal times, and the split into breaker stages.

use gridbrake::analytics::{
    allocate_stages, brake_power, removal_time_damped, removal_time_first_swing, speed_deviation_at, BrakeElectrical,
    SwingParams, TrajectoryQuery,
};
use gridbrake::error::Result;

pub fn run_example() -> Result<()> {
    // 500 MW of IT load lost on a 1000 MVA base, 250 MW of brake.
    let p = SwingParams { h: 11.0, d: 1.0, delta_p: 0.5, p_br: 0.25 };

    let r_br = 4.0;
    println!("brake at 0.95 pu through {r_br} pu: {:.6} pu", brake_power(BrakeElectrical { v_pu: 0.95, r_br_pu: r_br })?);

    for t in [0.0, 5.0, 11.0, 22.0, 60.0] {
        let w = speed_deviation_at(&p, &TrajectoryQuery { omega0: 0.0, t })?;
        println!("t = {t:>4} s  speed deviation {w:.5} pu");
    }

    let sol = removal_time_damped(&p, 0.0, 0.1)?;
    println!("damped: 0.1 pu reached after {:.3} s", sol.t_removal.unwrap_or(f64::NAN));
    let beyond = removal_time_damped(&p, 0.0, 0.3)?;
    println!("damped: 0.3 pu reachable? {}", beyond.reachable);

    let strong = SwingParams { d: 0.0, p_br: 0.75, ..p };
    let fs = removal_time_first_swing(&strong, 0.01, 0.0)?;
    println!("first swing: back to nominal after {:.3} s", fs.t_removal.unwrap_or(f64::NAN));

    for (total, step) in [(370.0, 130.0), (250.0, 250.0), (500.0, 150.0)] {
        println!("{total} MW in steps of at most {step} MW: {:?}", allocate_stages(total, step)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
