//! Fundamental-frequency estimation.
//!
//! [`YinEstimator`] analyses single frames. [`track`] + [`smooth_track`] build an
//! offline contour for analysis, and [`StreamingTracker`] is the causal variant
//! that drives the real-time pipeline.

mod yin;

pub use yin::YinEstimator;

use serde::{Deserialize, Serialize};

use crate::dsp::AudioBlock;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchEstimate {
    /// Seconds.
    pub time: f64,
    /// 0 when unvoiced.
    pub f0_hz: f64,
    pub voiced: bool,
    /// In `[0, 1]`.
    pub confidence: f64,
}

impl PitchEstimate {
    pub fn unvoiced(time: f64, confidence: f64) -> Self {
        PitchEstimate {
            time,
            f0_hz: 0.0,
            voiced: false,
            confidence,
        }
    }

    pub fn voiced(time: f64, f0_hz: f64) -> Self {
        PitchEstimate {
            time,
            f0_hz,
            voiced: true,
            confidence: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub frame_size: usize,
    pub hop_size: usize,
    /// Upper bound on the normalized difference dip for a voiced decision.
    pub voicing_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig {
            f_min: 70.0,
            f_max: 800.0,
            frame_size: 2048,
            hop_size: 256,
            voicing_threshold: 0.15,
        }
    }
}

impl PitchConfig {
    /// Defaults scaled so the frame covers two periods of `f_min` at any rate.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        let mut cfg = PitchConfig::default();
        let needed = (2.0 * sample_rate as f64 / cfg.f_min).ceil() as usize;
        cfg.frame_size = needed.next_power_of_two().max(256);
        cfg.hop_size = cfg.frame_size / 8;
        if sample_rate < 2 * cfg.f_max as u32 + 2 {
            cfg.f_max = sample_rate as f64 / 2.0 - 1.0;
        }
        cfg
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max < nyquist) {
            return Err(Error::invalid(format!(
                "pitch range [{}, {}] Hz must satisfy 0 < f_min < f_max < {nyquist}",
                self.f_min, self.f_max
            )));
        }
        if self.hop_size == 0 || self.hop_size > self.frame_size {
            return Err(Error::invalid(format!(
                "hop size {} must be in 1..={}",
                self.hop_size, self.frame_size
            )));
        }
        let needed = (2.0 * sample_rate as f64 / self.f_min).ceil() as usize;
        if self.frame_size < needed {
            return Err(Error::invalid(format!(
                "frame of {} samples is too short for f_min = {} Hz (need {needed})",
                self.frame_size, self.f_min
            )));
        }
        if !(self.voicing_threshold > 0.0 && self.voicing_threshold < 1.0) {
            return Err(Error::invalid("voicing threshold must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Single-frame estimate. `frame` must hold exactly `config.frame_size` samples;
/// the estimate is stamped at the frame centre.
pub fn estimate_f0(frame: &AudioBlock, config: &PitchConfig) -> Result<PitchEstimate> {
    yin::check_frame(frame.len(), config, frame.sample_rate)?;
    let mut est = YinEstimator::new(*config, frame.sample_rate)?;
    let centre = frame.start_time + frame.duration() / 2.0;
    Ok(est.estimate(&frame.samples, centre))
}

/// Frame-by-frame contour of a whole recording, frames centred at
/// `start + (i·hop + frame/2) / sr`. Signals shorter than one frame are zero-padded.
pub fn track(signal: &AudioBlock, config: &PitchConfig) -> Result<Vec<PitchEstimate>> {
    let mut est = YinEstimator::new(*config, signal.sample_rate)?;
    let sr = signal.sample_rate as f64;
    let n = signal.len();
    let frames = if n <= config.frame_size {
        1
    } else {
        (n - config.frame_size) / config.hop_size + 1
    };
    let mut buf = vec![0.0f32; config.frame_size];
    let mut out = Vec::with_capacity(frames);
    for i in 0..frames {
        let start = i * config.hop_size;
        let end = (start + config.frame_size).min(n);
        buf.fill(0.0);
        buf[..end - start].copy_from_slice(&signal.samples[start..end]);
        let t = signal.start_time + (start as f64 + config.frame_size as f64 / 2.0) / sr;
        out.push(est.estimate(&buf, t));
    }
    Ok(out)
}

fn is_octave_ratio(ratio: f64) -> bool {
    (ratio - 2.0).abs() < 0.2 || (ratio - 0.5).abs() < 0.05
}

/// Offline cleanup of a contour.
///
/// Single voiced frames between unvoiced neighbours are demoted, single
/// unvoiced gaps between agreeing voiced neighbours are filled, and isolated
/// octave jumps are replaced by the neighbours' mean.
pub fn smooth_track(estimates: &[PitchEstimate]) -> Vec<PitchEstimate> {
    let mut out = estimates.to_vec();
    let n = out.len();
    if n < 3 {
        return out;
    }
    let agree = |a: f64, b: f64| (a / b - 1.0).abs() < 0.1;

    for i in 0..n {
        let prev_voiced = i > 0 && estimates[i - 1].voiced;
        let next_voiced = i + 1 < n && estimates[i + 1].voiced;
        let e = estimates[i];
        if e.voiced && !prev_voiced && !next_voiced {
            out[i] = PitchEstimate::unvoiced(e.time, e.confidence);
        } else if !e.voiced && prev_voiced && next_voiced {
            let (a, b) = (estimates[i - 1].f0_hz, estimates[i + 1].f0_hz);
            if agree(a, b) {
                out[i] = PitchEstimate {
                    time: e.time,
                    f0_hz: 0.5 * (a + b),
                    voiced: true,
                    confidence: e.confidence,
                };
            }
        }
    }

    let snapshot = out.clone();
    for i in 1..n - 1 {
        let (p, c, q) = (snapshot[i - 1], snapshot[i], snapshot[i + 1]);
        if !(p.voiced && c.voiced && q.voiced) || !agree(p.f0_hz, q.f0_hz) {
            continue;
        }
        let mean = 0.5 * (p.f0_hz + q.f0_hz);
        if is_octave_ratio(c.f0_hz / mean) {
            out[i].f0_hz = mean;
        }
    }
    out
}

/// Causal f0 tracker for streaming use.
///
/// Voicing starts after `onset_frames` consecutive voiced frames; after voicing
/// is lost the last f0 is held for `hold_seconds` before reporting unvoiced. An
/// octave jump is only accepted once it persists for two frames.
#[derive(Debug)]
pub struct StreamingTracker {
    estimator: YinEstimator,
    sample_rate: f64,
    hold_samples: usize,
    onset_frames: usize,
    last_f0: Option<f64>,
    since_voiced: usize,
    consecutive_voiced: usize,
    octave_pending: usize,
}

impl StreamingTracker {
    pub const DEFAULT_HOLD_SECONDS: f64 = 0.1;

    pub fn new(config: PitchConfig, sample_rate: u32) -> Result<Self> {
        Ok(StreamingTracker {
            estimator: YinEstimator::new(config, sample_rate)?,
            sample_rate: sample_rate as f64,
            hold_samples: (Self::DEFAULT_HOLD_SECONDS * sample_rate as f64).round() as usize,
            onset_frames: 2,
            last_f0: None,
            since_voiced: 0,
            consecutive_voiced: 0,
            octave_pending: 0,
        })
    }

    pub fn config(&self) -> &PitchConfig {
        self.estimator.config()
    }

    pub fn reset(&mut self) {
        self.last_f0 = None;
        self.since_voiced = 0;
        self.consecutive_voiced = 0;
        self.octave_pending = 0;
    }

    /// Consumes the `frame_size` most recent samples, `advance` samples after the
    /// previous update, and returns the decision for the time `time`.
    pub fn update(&mut self, frame: &[f32], advance: usize, time: f64) -> PitchEstimate {
        let raw = self.estimator.estimate(frame, time);
        if raw.voiced {
            self.consecutive_voiced += 1;
            if let Some(last) = self.last_f0 {
                if is_octave_ratio(raw.f0_hz / last) && self.octave_pending == 0 {
                    self.octave_pending = 1;
                    self.since_voiced = 0;
                    return PitchEstimate { f0_hz: last, ..raw };
                }
            } else if self.consecutive_voiced < self.onset_frames {
                return PitchEstimate::unvoiced(time, raw.confidence);
            }
            self.octave_pending = 0;
            self.last_f0 = Some(raw.f0_hz);
            self.since_voiced = 0;
            return raw;
        }

        self.consecutive_voiced = 0;
        self.octave_pending = 0;
        self.since_voiced += advance;
        match self.last_f0 {
            Some(f0) if self.since_voiced <= self.hold_samples => PitchEstimate {
                time,
                f0_hz: f0,
                voiced: true,
                confidence: raw.confidence,
            },
            _ => {
                self.last_f0 = None;
                raw
            }
        }
    }

    pub fn hold_seconds(&self) -> f64 {
        self.hold_samples as f64 / self.sample_rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn voiced_track(f0s: &[f64]) -> Vec<PitchEstimate> {
        f0s.iter()
            .enumerate()
            .map(|(i, &f)| {
                if f > 0.0 {
                    PitchEstimate::voiced(i as f64 * 0.01, f)
                } else {
                    PitchEstimate::unvoiced(i as f64 * 0.01, 0.0)
                }
            })
            .collect()
    }

    #[test]
    fn sine_220() {
        let cfg = PitchConfig::default();
        let sig = synth::sine(220.0, 0.5, cfg.frame_size, 44100);
        let est = estimate_f0(&sig, &cfg).unwrap();
        assert!(est.voiced);
        assert!((est.f0_hz - 220.0).abs() < 0.5, "{}", est.f0_hz);
    }

    #[test]
    fn silence_is_unvoiced() {
        let cfg = PitchConfig::default();
        let est = estimate_f0(&AudioBlock::silence(cfg.frame_size, 44100), &cfg).unwrap();
        assert!(!est.voiced);
        assert_eq!(est.f0_hz, 0.0);
    }

    #[test]
    fn pulse_train_200() {
        let cfg = PitchConfig::default();
        let sig = synth::PulseTrain::periodic(200.0, 1.0).render(cfg.frame_size as f64 / 44100.0, 44100);
        let est = estimate_f0(&sig, &cfg).unwrap();
        assert!(est.voiced);
        assert!((est.f0_hz - 200.0).abs() < 1.0, "{}", est.f0_hz);
    }

    #[test]
    fn short_frame_is_rejected() {
        let cfg = PitchConfig::default();
        let err = estimate_f0(&AudioBlock::silence(1000, 44100), &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn config_validation() {
        assert!(PitchConfig::default().validate(44100).is_ok());
        let bad = PitchConfig { hop_size: 4096, ..PitchConfig::default() };
        assert!(bad.validate(44100).is_err());
        let bad = PitchConfig { f_max: 30000.0, ..PitchConfig::default() };
        assert!(bad.validate(44100).is_err());
        for sr in [8000, 16000, 44100, 48000, 96000, 192000] {
            PitchConfig::for_sample_rate(sr).validate(sr).unwrap();
        }
    }

    #[test]
    fn smoothing_fixed_point() {
        let t = voiced_track(&[200.0; 6]);
        assert_eq!(smooth_track(&t), t);
    }

    #[test]
    fn smoothing_removes_octave_outlier() {
        let t = voiced_track(&[200.0, 200.0, 400.0, 200.0, 200.0]);
        let s = smooth_track(&t);
        assert!(s.iter().all(|e| e.voiced && e.f0_hz == 200.0));
        let t = voiced_track(&[200.0, 200.0, 100.0, 200.0, 200.0]);
        assert!(smooth_track(&t).iter().all(|e| e.f0_hz == 200.0));
    }

    #[test]
    fn smoothing_demotes_isolated_voiced_frame() {
        let t = voiced_track(&[0.0, 0.0, 180.0, 0.0, 0.0]);
        assert!(smooth_track(&t).iter().all(|e| !e.voiced && e.f0_hz == 0.0));
        let t = voiced_track(&[0.0; 5]);
        assert_eq!(smooth_track(&t), t);
    }

    #[test]
    fn tracker_holds_through_short_dropout() {
        let sr = 44100;
        let cfg = PitchConfig::default();
        let mut tr = StreamingTracker::new(cfg, sr).unwrap();
        let voiced = synth::sine(200.0, 0.5, cfg.frame_size, sr).samples;
        let silent = vec![0.0f32; cfg.frame_size];
        assert!(!tr.update(&voiced, 256, 0.0).voiced, "onset needs two frames");
        assert!(tr.update(&voiced, 256, 0.0).voiced);
        // 100 ms hold = 4410 samples = 17 hops of 256
        for i in 0..17 {
            let e = tr.update(&silent, 256, 0.0);
            assert!(e.voiced, "hop {i}");
            assert!((e.f0_hz - 200.0).abs() < 0.5);
        }
        assert!(!tr.update(&silent, 256, 0.0).voiced);
    }
}
