use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gridbrake::analytics::{allocate_stages, removal_time_damped, removal_time_first_swing, SwingParams};
use gridbrake::builtin::{builtin, BUILTIN_NAMES};
use gridbrake::engine::{run, sweep, SweepAxis};
use gridbrake::error::{Error, Result};
use gridbrake::output::{write_eigen_csv, write_run_dir, write_sweep_csv};
use gridbrake::plot::render_eigen;
use gridbrake::scenario::Scenario;
use gridbrake::small_signal::eigen_sweep;

#[derive(Parser)]
#[command(name = "gridbrake", version, about = "Braking-resistor studies for data-center load loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its output directory.
    Simulate {
        /// Scenario file or built-in name.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Vary one parameter of a template and tabulate the metrics.
    Sweep {
        #[arg(long)]
        template: String,
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Directory for sweep.csv; standard output otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues over SCR and brake size.
    Eigen {
        #[arg(long)]
        template: String,
        #[arg(long, value_delimiter = ',', required = true)]
        scr: Vec<f64>,
        #[arg(long = "brake-mw", value_delimiter = ',', required = true)]
        brake_mw: Vec<f64>,
        /// Directory for eigen.csv and eigen.svg; standard output otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form brake sizing for a single machine.
    Size {
        #[arg(long = "delta-p-mw")]
        delta_p_mw: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 0.0)]
        d: f64,
        /// Speed deviation at which the brake is removed (pu).
        #[arg(long)]
        target: f64,
        /// Brake rating; defaults to the tripped load.
        #[arg(long = "brake-mw")]
        brake_mw: Option<f64>,
        /// Speed deviation at insertion (pu).
        #[arg(long, default_value_t = 0.0)]
        omega0: f64,
        #[arg(long = "base-mva", default_value_t = 1000.0)]
        base_mva: f64,
        /// Also split the brake into breaker stages.
        #[arg(long, requires = "max_step_mw")]
        stages: bool,
        #[arg(long = "max-step-mw")]
        max_step_mw: Option<f64>,
    },
    /// Built-in scenario names.
    List,
}

fn load(spec: &str, dt: Option<f64>, horizon: Option<f64>) -> Result<Scenario> {
    let mut sc = Scenario::load(spec)?;
    if let Some(dt) = dt {
        sc.simulation.dt_s = dt;
    }
    if let Some(h) = horizon {
        sc.simulation.horizon_s = h;
    }
    sc.validate()?;
    Ok(sc)
}

fn sink(out: &Option<PathBuf>, file: &str) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Box::new(std::fs::File::create(dir.join(file))?)
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

fn simulate(spec: &str, out: &Path, dt: Option<f64>, horizon: Option<f64>) -> Result<()> {
    let sc = load(spec, dt, horizon)?;
    let trace = run(&sc)?;
    let m = write_run_dir(out, &sc, &trace)?;
    eprintln!("{}: {} samples written to {}", sc.name, trace.len(), out.display());
    if let Some(m) = m {
        eprintln!("peak |df| {:.4} Hz, peak generator power {:.4} pu", m.peak_abs_df_hz, m.peak_sg_p_pu);
    }
    match trace.failure {
        Some(f) => Err(Error::Numeric(f)),
        None => Ok(()),
    }
}

fn size(cmd: &Command) -> Result<()> {
    let Command::Size { delta_p_mw, h, d, target, brake_mw, omega0, base_mva, stages, max_step_mw } = cmd else {
        unreachable!()
    };
    if !(*base_mva > 0.0) {
        return Err(Error::Domain("base MVA must be positive".into()));
    }
    let brake_mw = brake_mw.unwrap_or(*delta_p_mw);
    let p = SwingParams { h: *h, d: *d, delta_p: delta_p_mw / base_mva, p_br: brake_mw / base_mva };
    p.validate()?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "delta_p_pu = {}", p.delta_p)?;
    writeln!(out, "brake_mw = {brake_mw}")?;
    writeln!(out, "brake_pu = {}", p.p_br)?;
    let sol = if *d > 0.0 {
        // Smallest brake whose steady-state deviation stays at the target.
        let min_mw = ((p.delta_p - d * target) * base_mva).max(0.0);
        writeln!(out, "min_brake_mw = {min_mw}")?;
        removal_time_damped(&p, *omega0, *target)?
    } else {
        removal_time_first_swing(&p, *omega0, *target)?
    };
    writeln!(out, "model = {}", if *d > 0.0 { "damped" } else { "first_swing" })?;
    writeln!(out, "reachable = {}", sol.reachable)?;
    if let Some(t) = sol.t_removal {
        writeln!(out, "removal_time_s = {t}")?;
    }
    if *stages {
        let list = allocate_stages(brake_mw, max_step_mw.unwrap_or(brake_mw))?;
        let s: Vec<String> = list.iter().map(|v| v.to_string()).collect();
        writeln!(out, "stages_mw = [{}]", s.join(", "))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { scenario, out, dt, horizon } => simulate(scenario, out, *dt, *horizon),
        Command::Sweep { template, axis, values, out } => {
            let sc = load(template, None, None)?;
            let rows = sweep(&sc, *axis, values)?;
            write_sweep_csv(&rows, sink(out, "sweep.csv")?)?;
            match rows.iter().find_map(|r| r.result.as_ref().err()) {
                Some(e) => Err(Error::Numeric(format!("a sweep variant failed: {e}"))),
                None => Ok(()),
            }
        }
        Command::Eigen { template, scr, brake_mw, out } => {
            let sc = load(template, None, None)?;
            let points = eigen_sweep(&sc, scr, brake_mw)?;
            write_eigen_csv(&points, sink(out, "eigen.csv")?)?;
            if let Some(dir) = out {
                std::fs::write(dir.join("eigen.svg"), render_eigen(&points, &sc.name)?)?;
            }
            match points.iter().find_map(|p| p.failure.as_ref()) {
                Some(f) => Err(Error::Numeric(format!("an eigen point failed: {f}"))),
                None => Ok(()),
            }
        }
        Command::Size { .. } => size(&cli.command),
        Command::List => {
            let mut out = std::io::stdout().lock();
            for name in BUILTIN_NAMES {
                let desc = builtin(name).map(|s| s.description).unwrap_or_default();
                writeln!(out, "{name}\t{desc}")?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
