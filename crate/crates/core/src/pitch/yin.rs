use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{PitchConfig, PitchEstimate};
use crate::error::{Error, Result};

/// Frames whose mean power is below this are treated as silence (about -100 dBFS).
const SILENCE_POWER: f64 = 1e-10;

/// YIN estimator with preallocated FFT buffers.
///
/// The difference function `d(τ) = Σ (x_j - x_{j+τ})²` over a window of half the
/// frame is expanded as `E_0 + E_τ - 2 r(τ)`; the cross term comes from one
/// FFT cross-correlation and the energies from a running prefix sum.
pub struct YinEstimator {
    config: PitchConfig,
    sample_rate: f64,
    window: usize,
    min_lag: usize,
    max_lag: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    head: Vec<Complex64>,
    full: Vec<Complex64>,
    scratch: Vec<Complex64>,
    prefix: Vec<f64>,
    cmnd: Vec<f64>,
}

impl std::fmt::Debug for YinEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("YinEstimator")
            .field("config", &self.config)
            .field("sample_rate", &self.sample_rate)
            .finish_non_exhaustive()
    }
}

impl YinEstimator {
    pub fn new(config: PitchConfig, sample_rate: u32) -> Result<Self> {
        config.validate(sample_rate)?;
        let sr = sample_rate as f64;
        let window = config.frame_size / 2;
        let max_lag = ((sr / config.f_min).ceil() as usize).min(config.frame_size - window);
        let min_lag = ((sr / config.f_max).floor() as usize).max(2);
        let fft_len = (config.frame_size + window).next_power_of_two();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());

        Ok(YinEstimator {
            config,
            sample_rate: sr,
            window,
            min_lag,
            max_lag,
            forward,
            inverse,
            head: vec![Complex64::default(); fft_len],
            full: vec![Complex64::default(); fft_len],
            scratch: vec![Complex64::default(); scratch_len],
            prefix: vec![0.0; config.frame_size + 1],
            cmnd: vec![0.0; max_lag + 2],
        })
    }

    pub fn config(&self) -> &PitchConfig {
        &self.config
    }

    /// Estimates f0 for one frame of exactly `frame_size` samples.
    ///
    /// Does not allocate.
    pub fn estimate(&mut self, frame: &[f32], time: f64) -> PitchEstimate {
        assert_eq!(frame.len(), self.config.frame_size, "frame length mismatch");
        let n = frame.len();
        let w = self.window;

        self.prefix[0] = 0.0;
        for (i, &s) in frame.iter().enumerate() {
            let v = s as f64;
            self.prefix[i + 1] = self.prefix[i] + v * v;
        }
        if self.prefix[n] / (n as f64) < SILENCE_POWER {
            return PitchEstimate::unvoiced(time, 0.0);
        }

        for (i, c) in self.head.iter_mut().enumerate() {
            *c = Complex64::new(if i < w { frame[i] as f64 } else { 0.0 }, 0.0);
        }
        for (i, c) in self.full.iter_mut().enumerate() {
            *c = Complex64::new(if i < n { frame[i] as f64 } else { 0.0 }, 0.0);
        }
        self.forward.process_with_scratch(&mut self.head, &mut self.scratch);
        self.forward.process_with_scratch(&mut self.full, &mut self.scratch);
        for (h, f) in self.head.iter().zip(self.full.iter_mut()) {
            *f *= h.conj();
        }
        self.inverse.process_with_scratch(&mut self.full, &mut self.scratch);
        let scale = 1.0 / self.full.len() as f64;

        // cumulative mean normalized difference
        let e0 = self.prefix[w];
        self.cmnd[0] = 1.0;
        let mut running = 0.0;
        for lag in 1..=self.max_lag {
            let e_lag = self.prefix[lag + w] - self.prefix[lag];
            let cross = self.full[lag].re * scale;
            let d = (e0 + e_lag - 2.0 * cross).max(0.0);
            running += d;
            self.cmnd[lag] = if running > 0.0 { d * lag as f64 / running } else { 1.0 };
        }

        let threshold = self.config.voicing_threshold;
        let mut best = None;
        let mut lag = self.min_lag;
        while lag <= self.max_lag {
            if self.cmnd[lag] < threshold {
                while lag < self.max_lag && self.cmnd[lag + 1] < self.cmnd[lag] {
                    lag += 1;
                }
                best = Some(lag);
                break;
            }
            lag += 1;
        }
        let lag = best.unwrap_or_else(|| {
            (self.min_lag..=self.max_lag)
                .min_by(|&a, &b| self.cmnd[a].total_cmp(&self.cmnd[b]))
                .unwrap_or(self.min_lag)
        });

        let depth = self.cmnd[lag];
        let confidence = (1.0 - depth).clamp(0.0, 1.0);
        if depth >= threshold {
            return PitchEstimate::unvoiced(time, confidence);
        }

        let refined = if lag > 1 && lag < self.max_lag {
            let (a, b, c) = (self.cmnd[lag - 1], self.cmnd[lag], self.cmnd[lag + 1]);
            let denom = a - 2.0 * b + c;
            if denom > 0.0 {
                lag as f64 + (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
            } else {
                lag as f64
            }
        } else {
            lag as f64
        };
        let f0 = self.sample_rate / refined;
        if f0 < self.config.f_min || f0 > self.config.f_max {
            return PitchEstimate::unvoiced(time, confidence);
        }
        PitchEstimate {
            time,
            f0_hz: f0,
            voiced: true,
            confidence,
        }
    }
}

pub(super) fn check_frame(len: usize, config: &PitchConfig, sample_rate: u32) -> Result<()> {
    let needed = (2.0 * sample_rate as f64 / config.f_min).ceil() as usize;
    if len < needed {
        return Err(Error::invalid(format!(
            "frame of {len} samples is too short for f_min = {} Hz (need {needed})",
            config.f_min
        )));
    }
    if len != config.frame_size {
        return Err(Error::invalid(format!(
            "frame has {len} samples, configuration expects {}",
            config.frame_size
        )));
    }
    Ok(())
}
