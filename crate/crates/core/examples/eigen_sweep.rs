// Small-signal spectrum with the brake conducting, for a weak (SCR 2) and
// a stronger (SCR 5) grid over five brake sizes.

use std::path::{Path, PathBuf};

use gridbrake::builtin::{builtin, EIGEN_BRAKE_MW, EIGEN_SCR};
use gridbrake::error::Result;
use gridbrake::output::write_eigen_csv;
use gridbrake::plot::render_eigen;
use gridbrake::small_signal::eigen_sweep;

pub fn run_example(out: &Path) -> Result<()> {
    let template = builtin("fig5_eigen_sweep").expect("built-in");
    let points = eigen_sweep(&template, &EIGEN_SCR, &EIGEN_BRAKE_MW)?;
    println!("{:>5} {:>9} {:>24} {:>7}", "scr", "brake_mw", "dominant", "stable");
    for p in &points {
        let dom = p.dominant.map_or("-".to_string(), |z| format!("{:.4} {:+.3}j", z.re, z.im));
        println!("{:>5} {:>9} {:>24} {:>7}", p.scr, p.brake_mw, dom, p.stable);
    }
    std::fs::create_dir_all(out)?;
    write_eigen_csv(&points, std::fs::File::create(out.join("eigen.csv"))?)?;
    std::fs::write(out.join("eigen.svg"), render_eigen(&points, "eigenvalues with the brake conducting")?)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("gridbrake-eigen"));
    run_example(&out)
}
