//! Per-unit bases and time conversions shared by every other module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Common system base. Network quantities are expressed on this base;
/// device parameters are on their own machine base and converted at the
/// device terminals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBase {
    pub s_base_mva: f64,
    pub v_base_kv: f64,
    #[serde(default = "default_f_nominal")]
    pub f_nominal_hz: f64,
}

fn default_f_nominal() -> f64 {
    60.0
}

impl Default for SystemBase {
    fn default() -> Self {
        Self {
            s_base_mva: 1000.0,
            v_base_kv: 345.0,
            f_nominal_hz: 60.0,
        }
    }
}

impl SystemBase {
    pub fn new(s_base_mva: f64, v_base_kv: f64, f_nominal_hz: f64) -> Result<Self> {
        let base = Self {
            s_base_mva,
            v_base_kv,
            f_nominal_hz,
        };
        base.validate()?;
        Ok(base)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("s_base_mva", self.s_base_mva),
            ("v_base_kv", self.v_base_kv),
            ("f_nominal_hz", self.f_nominal_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Base impedance in ohms.
    pub fn z_base_ohm(&self) -> f64 {
        self.v_base_kv * self.v_base_kv / self.s_base_mva
    }

    /// Electrical base angular speed in rad/s.
    pub fn omega_base(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_nominal_hz
    }
}

/// Real power in MW to per-unit on the system base.
pub fn to_pu(value_mw: f64, base: &SystemBase) -> Result<f64> {
    base.validate()?;
    Ok(value_mw / base.s_base_mva)
}

pub fn from_pu(value_pu: f64, base: &SystemBase) -> Result<f64> {
    base.validate()?;
    Ok(value_pu * base.s_base_mva)
}

/// Converts a per-unit quantity from one MVA base to another.
pub fn rebase(value_pu: f64, from_mva: f64, to_mva: f64) -> f64 {
    value_pu * from_mva / to_mva
}

/// Breaker and relay delays are quoted in cycles of the nominal frequency.
pub fn cycles_to_seconds(n_cycles: f64, f_nominal_hz: f64) -> Result<f64> {
    if !(n_cycles >= 0.0) {
        return Err(Error::Domain(format!(
            "cycle count must be non-negative, got {n_cycles}"
        )));
    }
    if !(f_nominal_hz > 0.0) {
        return Err(Error::Config(format!(
            "nominal frequency must be positive, got {f_nominal_hz}"
        )));
    }
    Ok(n_cycles / f_nominal_hz)
}
