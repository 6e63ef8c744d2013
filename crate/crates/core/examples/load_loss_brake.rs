// Generator power after a 500 MW IT load loss with no brake, 125 MW and
// 250 MW of brake. Writes each run's output directory and an overlay plot.

use std::path::{Path, PathBuf};

use gridbrake::builtin::builtin;
use gridbrake::engine::run;
use gridbrake::error::Result;
use gridbrake::output::write_run_dir;
use gridbrake::plot::{render_overlay, PlotSpec};

pub fn run_example(out: &Path) -> Result<()> {
    let mut traces = Vec::new();
    for name in ["fig2_no_brake", "fig2_brake_125", "fig2_brake_250"] {
        let sc = builtin(name).expect("built-in");
        let trace = run(&sc)?;
        let m = write_run_dir(&out.join(name), &sc, &trace)?.expect("complete run");
        println!("{name:<16} peak generator power {:.4} pu (machine base)", m.peak_sg_p_pu);
        traces.push(trace);
    }
    let refs: Vec<_> = traces.iter().collect();
    let spec = PlotSpec {
        channels: vec!["sg_p_pu".into()],
        title: "synchronous machine power after IT load loss".into(),
        x_label: "time (s)".into(),
        y_label: "P (pu, machine base)".into(),
        markers: vec![(0.1, "load loss".into()), (0.25, "brake out".into())],
    };
    std::fs::write(out.join("sg_power.svg"), render_overlay(&refs, "sg_p_pu", &spec)?)?;
    println!("written to {}", out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("gridbrake-load-loss"));
    run_example(&out)
}
