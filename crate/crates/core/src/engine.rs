//! The roughness transform.
//!
//! Each voiced sample goes through the same fixed chain:
//!
//! ```text
//! y      = x · (1 + h cos(2π f0/k · t))      amplitude modulation
//! y_sub  = y − x                              subharmonic residual
//! out    = x + α · HP_{m·f0}(Σ gain · y_sub)  high-pass and mix
//! ```
//!
//! With a harmonic input `Σ A_i cos(i ω0 t)` the residual holds the sideband pairs
//! `(A_i h / 2) cos((i ω0 ± ω0/k) t)`; the high-pass at `m·f0` (m = 4 by default)
//! keeps the lowest of them from dominating. Per-sample work is a handful of
//! multiply-adds plus one cosine per modulator.

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::dsp::{design_highpass_biquad, AudioBlock, BiquadCoeffs, BiquadState, OscillatorState};
use crate::error::{Error, Result};
use crate::pitch::PitchEstimate;

pub const MAX_MODULATORS: usize = 8;
pub const ALPHA_MAX: f64 = 2.0;
pub const DEFAULT_FCUT_MULTIPLIER: f64 = 4.0;
pub const DEFAULT_RAMP_SECONDS: f64 = 0.02;
const HIGHPASS_Q: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulatorSpec {
    /// Subharmonic ratio: the modulator runs at `f0 / k`.
    pub k: u32,
    /// Modulation depth in `[0, 1]`.
    pub h: f64,
    /// Weight of this modulator's residual in `[0, 1]`.
    #[serde(default = "one")]
    pub gain: f64,
}

fn one() -> f64 {
    1.0
}

impl ModulatorSpec {
    pub fn new(k: u32, h: f64) -> Self {
        ModulatorSpec { k, h, gain: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid(format!("k = {} must be at least 2", self.k)));
        }
        if !(0.0..=1.0).contains(&self.h) {
            return Err(Error::invalid(format!("h = {} outside [0, 1]", self.h)));
        }
        if !(0.0..=1.0).contains(&self.gain) {
            return Err(Error::invalid(format!("gain = {} outside [0, 1]", self.gain)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngusParams {
    /// Mix factor of the filtered residual, `0 ..= ALPHA_MAX`.
    pub alpha: f64,
    pub modulators: ArrayVec<ModulatorSpec, MAX_MODULATORS>,
    /// High-pass cutoff as a multiple of f0.
    pub fcut_multiplier: f64,
    pub bypass: bool,
    /// Leave unvoiced input untouched.
    pub unvoiced_passthrough: bool,
}

impl Default for AngusParams {
    fn default() -> Self {
        Self::standard()
    }
}

impl AngusParams {
    /// One modulator at `f0 / k` with depth `h`.
    pub fn single(alpha: f64, k: u32, h: f64) -> Self {
        let mut modulators = ArrayVec::new();
        modulators.push(ModulatorSpec::new(k, h));
        AngusParams {
            alpha,
            modulators,
            fcut_multiplier: DEFAULT_FCUT_MULTIPLIER,
            bypass: false,
            unvoiced_passthrough: true,
        }
    }

    /// α = 0.75, k = 3, h = 1.
    pub fn standard() -> Self {
        Self::single(0.75, 3, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=ALPHA_MAX).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha = {} outside [0, {ALPHA_MAX}]", self.alpha)));
        }
        if !(self.fcut_multiplier > 0.0) || !self.fcut_multiplier.is_finite() {
            return Err(Error::invalid(format!(
                "fcut multiplier = {} must be positive",
                self.fcut_multiplier
            )));
        }
        if self.modulators.is_empty() {
            return Err(Error::invalid("at least one modulator is required"));
        }
        self.modulators.iter().try_for_each(ModulatorSpec::validate)
    }
}

/// Streaming state of the transform for one signal.
#[derive(Debug, Clone)]
pub struct EngineState {
    sample_rate: f64,
    oscillators: ArrayVec<OscillatorState, MAX_MODULATORS>,
    filter: BiquadState,
    coeffs: BiquadCoeffs,
    coeff_key: (f64, f64),
    alpha: f64,
    alpha_target: f64,
    alpha_step: f64,
    ramp_left: usize,
    ramp_samples: usize,
    active: bool,
}

impl EngineState {
    pub fn new(params: &AngusParams, sample_rate: u32) -> Self {
        Self::with_ramp(params, sample_rate, DEFAULT_RAMP_SECONDS)
    }

    /// `ramp_seconds` is the time α takes to reach a new target.
    pub fn with_ramp(params: &AngusParams, sample_rate: u32, ramp_seconds: f64) -> Self {
        let mut oscillators = ArrayVec::new();
        for _ in &params.modulators {
            oscillators.push(OscillatorState::new());
        }
        EngineState {
            sample_rate: sample_rate as f64,
            oscillators,
            filter: BiquadState::new(),
            coeffs: BiquadCoeffs::IDENTITY,
            coeff_key: (0.0, 0.0),
            alpha: params.alpha,
            alpha_target: params.alpha,
            alpha_step: 0.0,
            ramp_left: 0,
            ramp_samples: (ramp_seconds * sample_rate as f64).round().max(1.0) as usize,
            active: false,
        }
    }

    pub fn oscillators(&self) -> &[OscillatorState] {
        &self.oscillators
    }

    /// α currently applied (differs from the target while ramping).
    pub fn current_alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coeffs(&self) -> &BiquadCoeffs {
        &self.coeffs
    }

    fn sync_params(&mut self, params: &AngusParams) {
        while self.oscillators.len() < params.modulators.len() {
            self.oscillators.push(OscillatorState::new());
        }
        self.oscillators.truncate(params.modulators.len());

        if params.alpha != self.alpha_target {
            self.alpha_target = params.alpha;
            self.alpha_step = (self.alpha_target - self.alpha) / self.ramp_samples as f64;
            self.ramp_left = self.ramp_samples;
        }
    }

    #[inline]
    fn next_alpha(&mut self) -> f64 {
        if self.ramp_left > 0 {
            self.ramp_left -= 1;
            self.alpha = if self.ramp_left == 0 {
                self.alpha_target
            } else {
                self.alpha + self.alpha_step
            };
        }
        self.alpha
    }

    fn update_filter(&mut self, f0: f64, multiplier: f64) {
        if self.coeff_key == (f0, multiplier) {
            return;
        }
        let cutoff = (multiplier * f0).min(0.49 * self.sample_rate);
        // cutoff is positive and below Nyquist, so the design cannot fail
        if let Ok(c) = design_highpass_biquad(cutoff, self.sample_rate, HIGHPASS_Q) {
            self.coeffs = c;
            self.coeff_key = (f0, multiplier);
        }
    }

    /// Runs the chain over `input`, writing `output`. f0 is taken from `pitch`
    /// for the whole call. Never allocates.
    pub fn run(&mut self, params: &AngusParams, pitch: &PitchEstimate, input: &[f32], output: &mut [f32]) {
        assert_eq!(input.len(), output.len());
        self.sync_params(params);

        let voiced = pitch.voiced && pitch.f0_hz > 0.0;
        let active = !params.bypass && (voiced || !params.unvoiced_passthrough) && pitch.f0_hz > 0.0;
        if !active {
            if self.active {
                self.filter.reset();
            }
            self.active = false;
            output.copy_from_slice(input);
            for _ in 0..input.len() {
                self.next_alpha();
            }
            return;
        }
        self.active = true;

        let f0 = pitch.f0_hz;
        self.update_filter(f0, params.fcut_multiplier);
        let mut increments = [0.0f64; MAX_MODULATORS];
        for (inc, m) in increments.iter_mut().zip(&params.modulators) {
            *inc = OscillatorState::increment(f0, m.k, self.sample_rate);
        }
        for (osc, m) in self.oscillators.iter_mut().zip(&params.modulators) {
            osc.frequency_hz = f0 / m.k as f64;
        }

        for (x_in, y_out) in input.iter().zip(output.iter_mut()) {
            let x = *x_in as f64;
            let mut residual = 0.0;
            for ((osc, m), inc) in self.oscillators.iter_mut().zip(&params.modulators).zip(&increments) {
                let y = x * (1.0 + m.h * osc.phase.cos());
                residual += m.gain * (y - x);
                osc.advance(*inc);
            }
            let wet = self.filter.tick(&self.coeffs, residual);
            let alpha = self.next_alpha();
            *y_out = (x + alpha * wet) as f32;
        }
    }
}

/// Parameters plus state, the usual way to drive the transform.
#[derive(Debug, Clone)]
pub struct Engine {
    params: AngusParams,
    state: EngineState,
}

impl Engine {
    pub fn new(params: AngusParams, sample_rate: u32) -> Result<Self> {
        params.validate()?;
        let state = EngineState::new(&params, sample_rate);
        Ok(Engine { params, state })
    }

    pub fn params(&self) -> &AngusParams {
        &self.params
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    /// Swaps in a new parameter snapshot; α ramps toward the new value.
    pub fn set_params(&mut self, params: AngusParams) -> Result<()> {
        params.validate()?;
        self.params = params;
        Ok(())
    }

    pub fn process(&mut self, input: &[f32], output: &mut [f32], pitch: &PitchEstimate) {
        self.state.run(&self.params, pitch, input, output);
    }

    pub fn process_in_place(&mut self, buf: &mut [f32], pitch: &PitchEstimate) {
        // run() reads input[i] before writing output[i]; an explicit copy keeps it borrow-safe
        const CHUNK: usize = 256;
        let mut tmp = [0.0f32; CHUNK];
        for chunk in buf.chunks_mut(CHUNK) {
            let n = chunk.len();
            tmp[..n].copy_from_slice(chunk);
            self.state.run(&self.params, pitch, &tmp[..n], chunk);
        }
    }
}

/// Amplitude-modulates `x` by `1 + h cos(2π f0/k · t)`, continuing the phase in `state`.
pub fn modulate(x: &AudioBlock, f0_hz: f64, spec: &ModulatorSpec, state: &mut OscillatorState) -> Result<AudioBlock> {
    spec.validate()?;
    if !(f0_hz > 0.0) {
        return Err(Error::invalid(format!("f0 = {f0_hz} Hz must be positive")));
    }
    let inc = OscillatorState::increment(f0_hz, spec.k, x.sample_rate as f64);
    state.frequency_hz = f0_hz / spec.k as f64;
    let samples = x
        .samples
        .iter()
        .map(|&s| {
            let y = s as f64 * (1.0 + spec.h * state.phase.cos());
            state.advance(inc);
            y as f32
        })
        .collect();
    Ok(AudioBlock::at(samples, x.sample_rate, x.start_time))
}

/// `y − x`, sample by sample.
pub fn isolate_subharmonics(y: &AudioBlock, x: &AudioBlock) -> Result<AudioBlock> {
    y.same_shape(x)?;
    let samples = y
        .samples
        .iter()
        .zip(&x.samples)
        .map(|(&a, &b)| (a as f64 - b as f64) as f32)
        .collect();
    Ok(AudioBlock::at(samples, x.sample_rate, x.start_time))
}

/// One block of the full transform: `x + α · HP(Σ residuals)` when voiced,
/// `x` otherwise (or when bypassed).
pub fn process_block(x: &AudioBlock, pitch: &PitchEstimate, params: &AngusParams, state: &mut EngineState) -> AudioBlock {
    let mut out = vec![0.0f32; x.len()];
    state.run(params, pitch, &x.samples, &mut out);
    AudioBlock::at(out, x.sample_rate, x.start_time)
}
