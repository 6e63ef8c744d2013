//! Dynamic device models integrated by the engine.
//!
//! Every model is expressed on its own machine base and exchanges a terminal
//! voltage and current with the network layer. Derivative functions are pure.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub mod gfm;
pub mod motor;
pub mod sync_gen;

pub use gfm::{Gfm, GfmParams, GfmSetpoints, GfmState};
pub use motor::{InductionMotor, InductionMotorParams, InductionMotorState};
pub use sync_gen::{
    ExciterParams, FieldParams, GovernorParams, SyncGen, SyncGenParams, SyncGenSetpoints,
    SyncGenState,
};

/// Terminal phasors on the machine base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminal {
    pub v: Complex64,
    pub i: Complex64,
}

impl Terminal {
    pub fn values(&self) -> [f64; 4] {
        [self.v.re, self.v.im, self.i.re, self.i.im]
    }

    pub fn power(&self) -> Complex64 {
        self.v * self.i.conj()
    }
}

pub(crate) fn check_finite(what: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what}: non-finite input")))
    }
}
