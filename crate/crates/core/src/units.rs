//! Frequency units accepted in configuration files.
//!
//! Internally every frequency is an angular frequency in rad/μs, so times
//! come out in μs. Runs set up in "natural" units (for example everything in
//! multiples of the enhanced coupling G) pass their numbers through as-is.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FrequencyUnit {
    /// Ordinary frequency in MHz, i.e. the value `x` in "2π × x MHz".
    #[serde(rename = "2pi_MHz")]
    #[default]
    TwoPiMHz,
    #[serde(rename = "rad_per_s")]
    RadPerS,
    #[serde(rename = "rad_per_us")]
    RadPerUs,
    #[serde(rename = "natural")]
    Natural,
}

impl FrequencyUnit {
    pub fn to_internal(self, value: f64) -> f64 {
        match self {
            FrequencyUnit::TwoPiMHz => value * TAU,
            FrequencyUnit::RadPerS => value * 1e-6,
            FrequencyUnit::RadPerUs | FrequencyUnit::Natural => value,
        }
    }

    pub fn from_internal(self, value: f64) -> f64 {
        match self {
            FrequencyUnit::TwoPiMHz => value / TAU,
            FrequencyUnit::RadPerS => value * 1e6,
            FrequencyUnit::RadPerUs | FrequencyUnit::Natural => value,
        }
    }
}

/// A frequency normalized to rad/μs at parse time.
///
/// Accepts either a bare number (read as 2π·MHz) or `{"value": x, "unit": u}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "FrequencySpec", into = "FrequencySpec")]
pub struct Frequency(pub f64);

impl Frequency {
    pub fn rad_per_us(self) -> f64 {
        self.0
    }
}

/// `deserialize_with` adapter for plain `f64` fields holding a [`Frequency`].
pub fn deserialize_frequency<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Frequency::deserialize(d).map(Frequency::rad_per_us)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum FrequencySpec {
    Bare(f64),
    Tagged { value: f64, unit: FrequencyUnit },
}

impl From<FrequencySpec> for Frequency {
    fn from(spec: FrequencySpec) -> Self {
        match spec {
            FrequencySpec::Bare(v) => Frequency(FrequencyUnit::TwoPiMHz.to_internal(v)),
            FrequencySpec::Tagged { value, unit } => Frequency(unit.to_internal(value)),
        }
    }
}

impl From<Frequency> for FrequencySpec {
    fn from(f: Frequency) -> Self {
        FrequencySpec::Tagged { value: f.0, unit: FrequencyUnit::RadPerUs }
    }
}
