//! Braking-resistor studies for sudden loss of a large data-center load:
//! closed-form swing analytics, an RMS time-domain engine, small-signal
//! sweeps, and CSV/SVG output.

pub mod analytics;
pub mod braking;
pub mod builtin;
pub mod engine;
pub mod error;
pub mod models;
pub mod network;
pub mod output;
pub mod plot;
pub mod protection;
pub mod scenario;
pub mod small_signal;
pub mod units;
