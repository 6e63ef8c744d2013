// One 250 MW stage against three stages (130, 130, 110 MW) removed one
// after another, in the low-inertia mix.

use std::path::{Path, PathBuf};

use gridbrake::builtin::builtin;
use gridbrake::engine::{metrics, run, DEFAULT_BAND_HZ};
use gridbrake::error::Result;
use gridbrake::output::write_run_dir;

pub fn run_example(out: &Path) -> Result<()> {
    for name in ["fig4_single_stage", "fig4_multi_stage"] {
        let sc = builtin(name).expect("built-in");
        let trace = run(&sc)?;
        write_run_dir(&out.join(name), &sc, &trace)?;
        let m = metrics(&trace, DEFAULT_BAND_HZ)?;
        println!("{name}");
        println!("  peak |df|            {:.4} Hz", m.peak_abs_df_hz);
        println!("  oscillation energy   {:.4} Hz^2/s", m.oscillation_energy);
        for (k, (w, e)) in trace.brake_windows.iter().zip(&trace.brake_energy_mj).enumerate() {
            if let Some((on, Some(off))) = w {
                println!("  stage {}: {on:.3} s to {off:.3} s, {e:.1} MJ", k + 1);
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("gridbrake-stages"));
    run_example(&out)
}
