// Scenario documents: load a built-in, edit it, write it as TOML, read it
// back, and see what strict parsing rejects.

use std::path::{Path, PathBuf};

use gridbrake::builtin::builtin;
use gridbrake::error::Result;
use gridbrake::scenario::Scenario;

pub fn run_example(out: &Path) -> Result<()> {
    let mut sc = builtin("fig3_mix_25sm").expect("built-in");
    sc.name = "fig3_mix_25sm_short".into();
    sc.simulation.horizon_s = 3.0;
    sc.outputs.channels.push("gfm_freq_hz".into());

    std::fs::create_dir_all(out)?;
    let path = out.join("short.toml");
    std::fs::write(&path, sc.to_toml_string()?)?;
    let back = Scenario::load(path.to_str().expect("utf-8 path"))?;
    println!("round trip identical: {}", back == sc);

    let bad = std::fs::read_to_string(&path)?.replace("sg_share = 0.25", "sg_share = 0.7");
    match Scenario::from_toml_str(&bad) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    let typo = std::fs::read_to_string(&path)?.replace("horizon_s", "horizon");
    if let Err(e) = Scenario::from_toml_str(&typo) {
        println!("rejected: {e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("gridbrake-scenario"));
    run_example(&out)
}
