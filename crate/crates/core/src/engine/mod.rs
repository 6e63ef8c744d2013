//! Time-domain engine: system assembly, initialization, fixed-step
//! integration, trace metrics and parameter sweeps.

mod equilibrium;
mod metrics;
mod run;
mod sweep;
mod system;

pub use equilibrium::{find_equilibrium, Equilibrium};
pub use metrics::{metrics, TraceMetrics, DEFAULT_BAND_HZ, TAIL_WINDOW_S};
pub use run::{run, Channel, EventRecord, SimTrace, CORE_CHANNELS};
pub use sweep::{parallel_map, sweep, variant, SweepAxis, SweepRow, WORKERS_ENV};
pub use system::{Evaluation, System};
