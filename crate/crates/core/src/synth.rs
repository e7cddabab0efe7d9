//! Deterministic test signals: sines, harmonic vowels, glottal-like pulse trains
//! and white noise. Used as fixtures by tests, benchmarks and the CLI.

use std::f64::consts::{PI, TAU};

use crate::dsp::AudioBlock;

pub fn sine(freq_hz: f64, amplitude: f64, n: usize, sample_rate: u32) -> AudioBlock {
    let sr = sample_rate as f64;
    let samples = (0..n)
        .map(|i| (amplitude * (TAU * freq_hz * i as f64 / sr).sin()) as f32)
        .collect();
    AudioBlock::new(samples, sample_rate)
}

/// Sum of cosine partials `amplitudes[i] cos(2π (i+1) f0 t)`.
pub fn harmonic(f0_hz: f64, amplitudes: &[f64], n: usize, sample_rate: u32) -> AudioBlock {
    let sr = sample_rate as f64;
    let samples = (0..n)
        .map(|j| {
            let t = j as f64 / sr;
            amplitudes
                .iter()
                .enumerate()
                .map(|(i, a)| a * (TAU * (i + 1) as f64 * f0_hz * t).cos())
                .sum::<f64>() as f32
        })
        .collect();
    AudioBlock::new(samples, sample_rate)
}

/// xorshift64* white noise, uniform in `[-amplitude, amplitude]`.
pub fn white_noise(n: usize, amplitude: f64, seed: u64, sample_rate: u32) -> AudioBlock {
    let mut state = seed.max(1);
    let samples = (0..n)
        .map(|_| {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            let r = state.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11;
            let u = r as f64 / (1u64 << 53) as f64;
            (amplitude * (2.0 * u - 1.0)) as f32
        })
        .collect();
    AudioBlock::new(samples, sample_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VowelShape {
    /// Open vowel, formants 700 / 1220 / 2600 Hz.
    A,
    /// Close front vowel, formants 300 / 2300 / 3000 Hz.
    I,
}

impl VowelShape {
    fn formants(self) -> [(f64, f64); 3] {
        match self {
            VowelShape::A => [(700.0, 110.0), (1220.0, 120.0), (2600.0, 160.0)],
            VowelShape::I => [(300.0, 60.0), (2300.0, 150.0), (3000.0, 200.0)],
        }
    }
}

/// Stationary harmonic vowel: -6 dB/octave source shaped by three resonances.
#[derive(Debug, Clone)]
pub struct Vowel {
    pub f0_hz: f64,
    pub shape: VowelShape,
    /// Partial count; `None` fills up to 5 kHz.
    pub n_harmonics: Option<usize>,
    pub peak: f64,
}

impl Vowel {
    pub fn new(f0_hz: f64, shape: VowelShape) -> Self {
        Vowel {
            f0_hz,
            shape,
            n_harmonics: None,
            peak: 0.5,
        }
    }

    pub fn with_harmonics(mut self, n: usize) -> Self {
        self.n_harmonics = Some(n);
        self
    }

    /// Amplitude and phase of every partial before peak normalization.
    pub fn partials(&self, sample_rate: u32) -> Vec<(f64, f64)> {
        let limit = (0.45 * sample_rate as f64).min(5000.0);
        let count = self
            .n_harmonics
            .unwrap_or_else(|| (limit / self.f0_hz).floor() as usize)
            .max(1);
        (1..=count)
            .map(|i| {
                let f = i as f64 * self.f0_hz;
                let mut amp = 1.0 / i as f64;
                let mut phase = 0.0;
                for (fc, bw) in self.shape.formants() {
                    let re = fc * fc - f * f;
                    let im = bw * f;
                    amp *= fc * fc / re.hypot(im);
                    phase -= im.atan2(re);
                }
                (amp, phase)
            })
            .collect()
    }

    pub fn render(&self, duration: f64, sample_rate: u32) -> AudioBlock {
        let sr = sample_rate as f64;
        let n = (duration * sr).round() as usize;
        let partials = self.partials(sample_rate);
        let mut samples: Vec<f64> = (0..n)
            .map(|j| {
                let t = j as f64 / sr;
                partials
                    .iter()
                    .enumerate()
                    .map(|(i, (a, p))| a * (TAU * (i + 1) as f64 * self.f0_hz * t + p).cos())
                    .sum()
            })
            .collect();
        let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if peak > 0.0 {
            let g = self.peak / peak;
            samples.iter_mut().for_each(|s| *s *= g);
        }
        AudioBlock::new(samples.into_iter().map(|s| s as f32).collect(), sample_rate)
    }
}

/// Train of smooth glottal-like pulses with programmable period and amplitude
/// perturbations.
///
/// Pulse `i` is followed by pulse `i+1` after `T(t_i) · (1 + period_pattern[i mod len])`
/// where `T` glides linearly in frequency from `f0_start` to `f0_end` across the
/// rendered duration. Amplitudes are `amplitude · amplitude_pattern[i mod len]`.
#[derive(Debug, Clone)]
pub struct PulseTrain {
    pub f0_start: f64,
    pub f0_end: f64,
    pub amplitude: f64,
    pub period_pattern: Vec<f64>,
    pub amplitude_pattern: Vec<f64>,
    /// Standard deviation of the Gaussian pulse shape, seconds.
    pub width: f64,
}

impl PulseTrain {
    pub fn periodic(f0_hz: f64, amplitude: f64) -> Self {
        PulseTrain {
            f0_start: f0_hz,
            f0_end: f0_hz,
            amplitude,
            period_pattern: vec![0.0],
            amplitude_pattern: vec![1.0],
            width: 0.25e-3,
        }
    }

    pub fn glide(mut self, f0_end: f64) -> Self {
        self.f0_end = f0_end;
        self
    }

    pub fn with_period_pattern(mut self, pattern: Vec<f64>) -> Self {
        assert!(!pattern.is_empty());
        self.period_pattern = pattern;
        self
    }

    pub fn with_amplitude_pattern(mut self, pattern: Vec<f64>) -> Self {
        assert!(!pattern.is_empty());
        self.amplitude_pattern = pattern;
        self
    }

    /// Pulse instants and amplitudes that fall inside `[0, duration)`, leaving a
    /// half-period margin at the start.
    pub fn pulses(&self, duration: f64) -> (Vec<f64>, Vec<f64>) {
        let f0_at = |t: f64| self.f0_start + (self.f0_end - self.f0_start) * (t / duration);
        let mut times = Vec::new();
        let mut amps = Vec::new();
        let mut t = 0.5 / self.f0_start;
        let mut i = 0;
        while t < duration - 4.0 * self.width {
            times.push(t);
            amps.push(self.amplitude * self.amplitude_pattern[i % self.amplitude_pattern.len()]);
            let dev = self.period_pattern[i % self.period_pattern.len()];
            t += (1.0 + dev) / f0_at(t);
            i += 1;
        }
        (times, amps)
    }

    pub fn render(&self, duration: f64, sample_rate: u32) -> AudioBlock {
        let (times, amps) = self.pulses(duration);
        render_pulses(&times, &amps, self.width, duration, sample_rate)
    }
}

/// Sum of Gaussian bumps of standard deviation `width` centred on `times`.
pub fn render_pulses(times: &[f64], amps: &[f64], width: f64, duration: f64, sample_rate: u32) -> AudioBlock {
    let sr = sample_rate as f64;
    let n = (duration * sr).round() as usize;
    let mut out = vec![0.0f64; n];
    let reach = (6.0 * width * sr).ceil() as isize;
    let denom = 2.0 * width * width;
    for (&t, &a) in times.iter().zip(amps) {
        let centre = (t * sr).round() as isize;
        for j in (centre - reach).max(0)..(centre + reach + 1).min(n as isize) {
            let dt = j as f64 / sr - t;
            out[j as usize] += a * (-dt * dt / denom).exp();
        }
    }
    AudioBlock::new(out.into_iter().map(|s| s as f32).collect(), sample_rate)
}

/// Closed-form spectrum check helper: amplitude of the component at `freq_hz`,
/// measured with a Hann-windowed DTFT evaluated exactly at that frequency.
pub fn tone_amplitude(samples: &[f32], freq_hz: f64, sample_rate: u32) -> f64 {
    let n = samples.len();
    let sr = sample_rate as f64;
    let (mut re, mut im, mut wsum) = (0.0, 0.0, 0.0);
    for (j, &s) in samples.iter().enumerate() {
        let w = 0.5 - 0.5 * (TAU * j as f64 / n as f64).cos();
        let arg = 2.0 * PI * freq_hz * j as f64 / sr;
        re += w * s as f64 * arg.cos();
        im -= w * s as f64 * arg.sin();
        wsum += w;
    }
    2.0 * re.hypot(im) / wsum
}
