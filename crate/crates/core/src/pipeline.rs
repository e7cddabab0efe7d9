//! Pitch tracking and the transform as one stream processor.
//!
//! Control decisions (f0, voicing, filter coefficients) are made on a fixed grid
//! of absolute sample positions, every `hop_size` samples, from the `frame_size`
//! samples preceding the grid point. Host blocks are split at grid points, so the
//! output is identical for any block size.

use crate::dsp::AudioBlock;
use crate::engine::{AngusParams, Engine};
use crate::error::Result;
use crate::pitch::{PitchConfig, PitchEstimate, StreamingTracker};

pub const DEFAULT_BLOCK_SIZE: usize = 512;

#[derive(Debug)]
pub struct Pipeline {
    sample_rate: u32,
    hop: usize,
    tracker: StreamingTracker,
    engine: Engine,
    history: Vec<f32>,
    position: u64,
    pitch: PitchEstimate,
}

impl Pipeline {
    pub fn new(params: AngusParams, sample_rate: u32) -> Result<Self> {
        Self::with_pitch_config(params, sample_rate, PitchConfig::for_sample_rate(sample_rate))
    }

    pub fn with_pitch_config(params: AngusParams, sample_rate: u32, config: PitchConfig) -> Result<Self> {
        config.validate(sample_rate)?;
        Ok(Pipeline {
            sample_rate,
            hop: config.hop_size,
            tracker: StreamingTracker::new(config, sample_rate)?,
            engine: Engine::new(params, sample_rate)?,
            history: vec![0.0; config.frame_size],
            position: 0,
            pitch: PitchEstimate::unvoiced(0.0, 0.0),
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn params(&self) -> &AngusParams {
        self.engine.params()
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    /// Takes effect from the next processed sample.
    pub fn set_params(&mut self, params: AngusParams) -> Result<()> {
        self.engine.set_params(params)
    }

    /// Decision currently driving the engine.
    pub fn pitch(&self) -> &PitchEstimate {
        &self.pitch
    }

    /// Samples consumed so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn process(&mut self, input: &[f32], output: &mut [f32]) {
        assert_eq!(input.len(), output.len());
        let mut i = 0;
        while i < input.len() {
            let phase = (self.position % self.hop as u64) as usize;
            if phase == 0 {
                let time = self.position as f64 / self.sample_rate as f64;
                let advance = if self.position == 0 { 0 } else { self.hop };
                self.pitch = self.tracker.update(&self.history, advance, time);
            }
            let len = (self.hop - phase).min(input.len() - i);
            let seg = &input[i..i + len];
            self.engine.process(seg, &mut output[i..i + len], &self.pitch);
            self.push_history(seg);
            self.position += len as u64;
            i += len;
        }
    }

    fn push_history(&mut self, seg: &[f32]) {
        let n = self.history.len();
        if seg.len() >= n {
            self.history.copy_from_slice(&seg[seg.len() - n..]);
        } else {
            self.history.copy_within(seg.len().., 0);
            self.history[n - seg.len()..].copy_from_slice(seg);
        }
    }

    /// Whole-signal convenience: runs `signal` through in blocks of `block_size`.
    pub fn run(&mut self, signal: &AudioBlock, block_size: usize) -> AudioBlock {
        assert!(block_size > 0);
        let mut out = vec![0.0f32; signal.len()];
        for (inp, outp) in signal.samples.chunks(block_size).zip(out.chunks_mut(block_size)) {
            self.process(inp, outp);
        }
        AudioBlock::at(out, signal.sample_rate, signal.start_time)
    }
}

/// Offline transform of a whole recording with a fresh pipeline.
pub fn transform(signal: &AudioBlock, params: &AngusParams, block_size: usize) -> Result<AudioBlock> {
    let mut p = Pipeline::new(params.clone(), signal.sample_rate)?;
    Ok(p.run(signal, block_size))
}
