// Frequency rise after the load loss for three synchronous/grid-forming
// splits, run as a parallel sweep over the mix.

use std::path::{Path, PathBuf};

use gridbrake::builtin::builtin;
use gridbrake::engine::{sweep, SweepAxis};
use gridbrake::error::Result;
use gridbrake::output::write_sweep_csv;

pub fn run_example(out: &Path) -> Result<()> {
    let template = builtin("fig3_mix_50sm").expect("built-in");
    let rows = sweep(&template, SweepAxis::Mix, &[0.75, 0.5, 0.25])?;
    for r in &rows {
        match &r.result {
            Ok(m) => println!(
                "synchronous share {:.2}: peak |df| {:.3} Hz, final 2 s mean |df| {:.3} Hz",
                r.value, m.peak_abs_df_hz, m.tail_mean_abs_df_hz
            ),
            Err(e) => println!("synchronous share {:.2}: failed: {e}", r.value),
        }
    }
    std::fs::create_dir_all(out)?;
    write_sweep_csv(&rows, std::fs::File::create(out.join("sweep.csv"))?)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("gridbrake-mix"));
    run_example(&out)
}
