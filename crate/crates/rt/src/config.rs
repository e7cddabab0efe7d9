use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Result, RtError};

/// Where audio comes from or goes to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    File(PathBuf),
    /// Named audio device, written `dev:<name>` on the command line.
    Device(String),
}

impl FromStr for Endpoint {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.strip_prefix("dev:").or_else(|| s.strip_prefix("device:")) {
            Some(name) => Endpoint::Device(name.to_string()),
            None => Endpoint::File(PathBuf::from(s)),
        })
    }
}

#[derive(Debug, Clone)]
pub struct StreamConfig {
    /// Taken from the input when `None`; must match it otherwise.
    pub sample_rate: Option<u32>,
    pub block_size: usize,
    pub input: Endpoint,
    pub output: Endpoint,
    /// Hard output ceiling in dBFS; `None` disables the limiter.
    pub limiter_ceiling: Option<f64>,
    /// Playback speed relative to real time; `None` runs as fast as possible.
    pub pace: Option<f64>,
    /// Telemetry frames per second of audio.
    pub telemetry_rate: f64,
    pub telemetry_capacity: usize,
}

impl StreamConfig {
    pub const MIN_BLOCK: usize = 64;
    pub const MAX_BLOCK: usize = 4096;

    pub fn files(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        StreamConfig {
            sample_rate: None,
            block_size: 512,
            input: Endpoint::File(input.into()),
            output: Endpoint::File(output.into()),
            limiter_ceiling: None,
            pace: None,
            telemetry_rate: 20.0,
            telemetry_capacity: 256,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.block_size;
        if !b.is_power_of_two() || !(Self::MIN_BLOCK..=Self::MAX_BLOCK).contains(&b) {
            return Err(RtError::Config(format!("block size {b} must be a power of two in 64..=4096")));
        }
        if let Some(c) = self.limiter_ceiling {
            if !(c <= 0.0 && c.is_finite()) {
                return Err(RtError::Config(format!("limiter ceiling {c} dBFS must be at most 0")));
            }
        }
        if let Some(p) = self.pace {
            if !(p > 0.0 && p.is_finite()) {
                return Err(RtError::Config(format!("pace {p} must be positive")));
            }
        }
        if !(self.telemetry_rate > 0.0) || self.telemetry_capacity == 0 {
            return Err(RtError::Config("telemetry rate and capacity must be positive".into()));
        }
        for e in [&self.input, &self.output] {
            if let Endpoint::Device(name) = e {
                return Err(RtError::DeviceUnsupported(name.clone()));
            }
        }
        Ok(())
    }
}
