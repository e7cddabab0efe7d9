use std::f64::consts::TAU;

use super::AudioBlock;
use crate::error::{Error, Result};

/// Phase accumulator for the modulating cosine.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OscillatorState {
    /// Radians in `[0, 2π)`.
    pub phase: f64,
    pub frequency_hz: f64,
    /// Samples rendered so far, used to time-stamp rendered blocks.
    pub elapsed: u64,
}

impl OscillatorState {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn advance(&mut self, increment: f64) {
        self.phase += increment;
        if self.phase >= TAU {
            self.phase -= TAU;
            // huge increments (f close to sample rate) may need more than one wrap
            if self.phase >= TAU {
                self.phase = self.phase.rem_euclid(TAU);
            }
        }
        self.elapsed += 1;
    }

    /// Phase increment per sample for a modulator at `f0 / k`.
    #[inline]
    pub fn increment(f0_hz: f64, k: u32, sample_rate: f64) -> f64 {
        TAU * f0_hz / k as f64 / sample_rate
    }
}

pub(crate) fn check_modulator(f0_hz: f64, k: u32, h: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid(format!("subharmonic ratio k = {k} must be at least 2")));
    }
    if !(f0_hz > 0.0) || !f0_hz.is_finite() {
        return Err(Error::invalid(format!("f0 = {f0_hz} Hz must be positive")));
    }
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::invalid(format!("modulation depth h = {h} outside [0, 1]")));
    }
    Ok(())
}

/// Renders `n` samples of `1 + h cos(phase)` with the phase advancing at `2π f0 / k` rad/s.
///
/// Phase is carried in `state`, so consecutive calls produce one continuous waveform.
pub fn render_modulator(
    f0_hz: f64,
    k: u32,
    h: f64,
    state: &mut OscillatorState,
    n: usize,
    sample_rate: u32,
) -> Result<AudioBlock> {
    check_modulator(f0_hz, k, h)?;
    let sr = sample_rate as f64;
    let start_time = state.elapsed as f64 / sr;
    let inc = OscillatorState::increment(f0_hz, k, sr);
    state.frequency_hz = f0_hz / k as f64;
    let samples = (0..n)
        .map(|_| {
            let v = 1.0 + h * state.phase.cos();
            state.advance(inc);
            v as f32
        })
        .collect();
    Ok(AudioBlock::at(samples, sample_rate, start_time))
}
