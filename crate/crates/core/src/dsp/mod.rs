//! Streaming DSP primitives shared by every other module.

mod biquad;
mod oscillator;

pub use biquad::{biquad_process, design_highpass_biquad, BiquadCoeffs, BiquadState};
pub use oscillator::{render_modulator, OscillatorState};

use crate::error::{Error, Result};

/// A mono run of samples with its position in the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBlock {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    /// Seconds from the start of the stream to the first sample.
    pub start_time: f64,
}

impl AudioBlock {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        Self::at(samples, sample_rate, 0.0)
    }

    pub fn at(samples: Vec<f32>, sample_rate: u32, start_time: f64) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        AudioBlock {
            samples,
            sample_rate,
            start_time,
        }
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Start time of the block that directly follows this one.
    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration()
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Splits the block into consecutive gapless chunks of at most `size` samples.
    pub fn chunks(&self, size: usize) -> impl Iterator<Item = AudioBlock> + '_ {
        assert!(size > 0);
        self.samples.chunks(size).enumerate().map(move |(i, c)| {
            let offset = (i * size) as f64 / self.sample_rate as f64;
            AudioBlock::at(c.to_vec(), self.sample_rate, self.start_time + offset)
        })
    }

    /// Joins consecutive blocks of one stream back into a single block.
    pub fn concat(blocks: &[AudioBlock]) -> Result<AudioBlock> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::invalid("cannot concatenate zero blocks"))?;
        if blocks.iter().any(|b| b.sample_rate != first.sample_rate) {
            return Err(Error::invalid("blocks have different sample rates"));
        }
        let samples = blocks.iter().flat_map(|b| b.samples.iter().copied()).collect();
        Ok(AudioBlock::at(samples, first.sample_rate, first.start_time))
    }

    pub(crate) fn same_shape(&self, other: &AudioBlock) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "block lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        if self.sample_rate != other.sample_rate {
            return Err(Error::invalid(format!(
                "sample rates differ: {} vs {}",
                self.sample_rate, other.sample_rate
            )));
        }
        Ok(())
    }
}

pub fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum: f64 = samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
    (sum / samples.len() as f64).sqrt()
}
