//! Pulse-level jitter/shimmer control by analysis and resynthesis.
//!
//! A recording is reduced to its pulse instants and amplitudes plus slowly
//! varying local means of period and amplitude. The per-pulse deviations from
//! those means carry the jitter and shimmer; scaling them by `alpha_c` moves the
//! pulse series between the original (`alpha_c = 1`) and a strictly periodic,
//! iso-amplitude series at the local means (`alpha_c = 0`).
//!
//! Resynthesis is pitch-synchronous overlap-add: a Hann grain two local periods
//! long is cut around every source pulse, moved (with fractional-sample
//! interpolation) to the model's pulse instant, rescaled to the model's
//! amplitude, and the grains are summed and normalized by the window sum.

use serde::{Deserialize, Serialize};

use crate::analysis::{self, PulseSeries};
use crate::dsp::AudioBlock;
use crate::error::{Error, Result};

/// Largest relative pulse-count difference tolerated between a model and the
/// source it is resynthesized from.
const MAX_COUNT_MISMATCH: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseModel {
    pub pulse_times: Vec<f64>,
    pub pulse_amplitudes: Vec<f64>,
    /// Local mean of the period starting at each pulse; the last entry repeats
    /// its predecessor since the final pulse has no following period.
    pub local_mean_periods: Vec<f64>,
    pub local_mean_amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    /// 0 = smooth series, 1 = original perturbations.
    pub alpha_c: f64,
}

impl ControlParams {
    pub fn new(alpha_c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha_c) {
            return Err(Error::invalid(format!("alpha_c = {alpha_c} outside [0, 1]")));
        }
        Ok(ControlParams { alpha_c })
    }
}

/// Centred 5-tap trapezoid `[½, 1, 1, 1, ½] / 4`.
///
/// The half-weight end taps make it cancel any zero-mean perturbation that
/// repeats every 1, 2 or 4 pulses, and it reproduces linear trends exactly. The
/// window shrinks symmetrically near the ends (`[½, 1, ½] / 2` one step in); the
/// outermost values are extrapolated linearly from their two inner neighbours.
pub fn local_average(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => return Vec::new(),
        1 | 2 => {
            let m = values.iter().sum::<f64>() / n as f64;
            return vec![m; n];
        }
        _ => {}
    }
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let radius = i.min(n - 1 - i).min(2);
        out[i] = if radius == 2 {
            (0.5 * values[i - 2] + values[i - 1] + values[i] + values[i + 1] + 0.5 * values[i + 2]) / 4.0
        } else {
            (0.5 * values[i - 1] + values[i] + 0.5 * values[i + 1]) / 2.0
        };
    }
    let extrapolate = |near: f64, far: f64| {
        let v = 2.0 * near - far;
        if n > 3 && v > 0.0 { v } else { near }
    };
    out[0] = extrapolate(out[1], out[2]);
    out[n - 1] = extrapolate(out[n - 2], out[n - 3]);
    out
}

impl PulseModel {
    pub fn from_pulses(pulses: &PulseSeries) -> Result<Self> {
        let n = pulses.len();
        if n < 3 {
            return Err(Error::InsufficientData { needed: 3, got: n });
        }
        let periods = pulses.periods();
        let mut local_mean_periods = local_average(&periods);
        local_mean_periods.push(local_mean_periods[n - 2]);
        Ok(PulseModel {
            pulse_times: pulses.times.clone(),
            pulse_amplitudes: pulses.amplitudes.clone(),
            local_mean_periods,
            local_mean_amplitudes: local_average(&pulses.amplitudes),
        })
    }

    pub fn len(&self) -> usize {
        self.pulse_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulse_times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.pulse_amplitudes.len() != n
            || self.local_mean_periods.len() != n
            || self.local_mean_amplitudes.len() != n
        {
            return Err(Error::invalid("pulse model sequences differ in length"));
        }
        if n < 3 {
            return Err(Error::InsufficientData { needed: 3, got: n });
        }
        if self.pulse_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("pulse times must be strictly increasing"));
        }
        if self.local_mean_periods.iter().chain(&self.local_mean_amplitudes).any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("local means must be positive"));
        }
        Ok(())
    }

    /// Adjacent local means differ by less than 20 %.
    pub fn is_smooth(&self) -> bool {
        let smooth = |v: &[f64]| v.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() < 0.2);
        smooth(&self.local_mean_periods) && smooth(&self.local_mean_amplitudes)
    }

    /// Period starting at each pulse; the last pulse reuses its local mean.
    pub fn periods(&self) -> Vec<f64> {
        let n = self.len();
        let mut p: Vec<f64> = self.pulse_times.windows(2).map(|w| w[1] - w[0]).collect();
        if n > 0 {
            p.push(self.local_mean_periods[n - 1]);
        }
        p
    }

    pub fn period_deviations(&self) -> Vec<f64> {
        self.periods().iter().zip(&self.local_mean_periods).map(|(p, m)| p - m).collect()
    }

    pub fn amplitude_deviations(&self) -> Vec<f64> {
        self.pulse_amplitudes
            .iter()
            .zip(&self.local_mean_amplitudes)
            .map(|(a, m)| a - m)
            .collect()
    }

    /// Strictly periodic schedule at the local mean periods, anchored at the first pulse.
    pub fn smooth_times(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.len());
        if let Some(&t0) = self.pulse_times.first() {
            s.push(t0);
            for p in &self.local_mean_periods[..self.len() - 1] {
                s.push(s.last().unwrap() + p);
            }
        }
        s
    }

    pub fn to_pulse_series(&self) -> PulseSeries {
        PulseSeries {
            times: self.pulse_times.clone(),
            amplitudes: self.pulse_amplitudes.clone(),
        }
    }
}

/// Pulses and local means of a voiced recording.
pub fn extract_pulse_model(signal: &AudioBlock) -> Result<PulseModel> {
    let track = analysis::pitch_contour(signal)?;
    let pulses = analysis::detect_pulses(signal, &track)?;
    PulseModel::from_pulses(&pulses)
}

/// Scales the perturbations by `alpha_c`, keeping the local means.
pub fn interpolate_model(model: &PulseModel, params: &ControlParams) -> PulseModel {
    // written as original + (1 - a)(smooth - original) so that a = 1 is exact
    let w = 1.0 - params.alpha_c;
    let smooth = model.smooth_times();
    let pulse_times = model
        .pulse_times
        .iter()
        .zip(&smooth)
        .map(|(&t, &s)| t + w * (s - t))
        .collect();
    let pulse_amplitudes = model
        .pulse_amplitudes
        .iter()
        .zip(&model.local_mean_amplitudes)
        .map(|(&a, &m)| a + w * (m - a))
        .collect();
    PulseModel {
        pulse_times,
        pulse_amplitudes,
        local_mean_periods: model.local_mean_periods.clone(),
        local_mean_amplitudes: model.local_mean_amplitudes.clone(),
    }
}

fn resample_linear(values: &[f64], len: usize) -> Vec<f64> {
    let n = values.len();
    if n == len || n == 0 {
        return values.to_vec();
    }
    let ratio = n as f64 / len as f64;
    (0..len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let lo = (pos.floor() as usize).min(n - 1);
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            values[lo] + frac * (values[hi] - values[lo])
        })
        .collect()
}

/// Gives `target` the relative period and amplitude perturbations of
/// `profile_source`, resampled linearly to the target's pulse count.
pub fn transplant_profile(target: &PulseModel, profile_source: &PulseModel) -> PulseModel {
    let rel_periods: Vec<f64> = profile_source
        .periods()
        .iter()
        .zip(&profile_source.local_mean_periods)
        .map(|(p, m)| p / m - 1.0)
        .collect();
    let rel_amps: Vec<f64> = profile_source
        .pulse_amplitudes
        .iter()
        .zip(&profile_source.local_mean_amplitudes)
        .map(|(a, m)| a / m - 1.0)
        .collect();
    let n = target.len();
    let rel_periods = resample_linear(&rel_periods, n);
    let rel_amps = resample_linear(&rel_amps, n);

    let mut pulse_times = Vec::with_capacity(n);
    if let Some(&t0) = target.pulse_times.first() {
        pulse_times.push(t0);
        for i in 0..n - 1 {
            let next = pulse_times[i] + target.local_mean_periods[i] * (1.0 + rel_periods[i]);
            pulse_times.push(next);
        }
    }
    let pulse_amplitudes = target
        .local_mean_amplitudes
        .iter()
        .zip(&rel_amps)
        .map(|(m, q)| m * (1.0 + q))
        .collect();
    PulseModel {
        pulse_times,
        pulse_amplitudes,
        local_mean_periods: target.local_mean_periods.clone(),
        local_mean_amplitudes: target.local_mean_amplitudes.clone(),
    }
}

/// Catmull-Rom read at a fractional index; zero outside the signal.
fn read_cubic(x: &[f32], pos: f64) -> f64 {
    let i = pos.floor();
    let t = pos - i;
    let i = i as isize;
    let at = |k: isize| -> f64 {
        if k < 0 || k as usize >= x.len() {
            0.0
        } else {
            x[k as usize] as f64
        }
    };
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    p1 + 0.5
        * t
        * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
}

/// Rebuilds `source` with its pulses moved to the model's instants and amplitudes.
pub fn resynthesize(model: &PulseModel, source: &AudioBlock) -> Result<AudioBlock> {
    let source_model = extract_pulse_model(source)?;
    resynthesize_from(&source_model, model, source)
}

/// As [`resynthesize`], with the source's own pulse model already at hand.
pub fn resynthesize_from(source_model: &PulseModel, model: &PulseModel, source: &AudioBlock) -> Result<AudioBlock> {
    model.validate()?;
    source_model.validate()?;
    let (n_model, n_src) = (model.len(), source_model.len());
    if (n_model as f64 - n_src as f64).abs() > MAX_COUNT_MISMATCH * n_src as f64 {
        return Err(Error::ModelMismatch { model: n_model, source_pulses: n_src });
    }

    let sr = source.sample_rate as f64;
    let len = source.len();
    let mut num = vec![0.0f64; len];
    let mut den = vec![0.0f64; len];

    for i in 0..n_model {
        let j = if n_model == n_src {
            i
        } else {
            ((i as f64 * (n_src - 1) as f64 / (n_model - 1) as f64).round() as usize).min(n_src - 1)
        };
        let centre = model.pulse_times[i] * sr;
        let shift = centre - source_model.pulse_times[j] * sr;
        let half = source_model.local_mean_periods[j] * sr;
        let gain = model.pulse_amplitudes[i] / source_model.pulse_amplitudes[j];

        let lo = ((centre - half).ceil().max(0.0)) as usize;
        let hi = ((centre + half).floor().min(len as f64 - 1.0)).max(-1.0);
        if hi < lo as f64 {
            continue;
        }
        for n in lo..=hi as usize {
            let u = (n as f64 - centre) / half;
            let w = 0.5 * (1.0 + (std::f64::consts::PI * u).cos());
            num[n] += w * gain * read_cubic(&source.samples, n as f64 - shift);
            den[n] += w;
        }
    }

    // normalize between the first and last pulse; outside, grains fade out naturally
    let first = (model.pulse_times[0] * sr).ceil().max(0.0) as usize;
    let last = ((model.pulse_times[n_model - 1] * sr).floor() as usize).min(len.saturating_sub(1));
    let samples = (0..len)
        .map(|n| {
            if n >= first && n <= last && den[n] > 1e-6 {
                (num[n] / den[n]) as f32
            } else {
                num[n] as f32
            }
        })
        .collect();
    Ok(AudioBlock::at(samples, source.sample_rate, source.start_time))
}

/// Full control transform of one recording: extract, optionally take the
/// perturbation profile of another recording, scale by `alpha_c`, resynthesize.
pub fn control_transform(source: &AudioBlock, params: &ControlParams, profile: Option<&PulseModel>) -> Result<AudioBlock> {
    let source_model = extract_pulse_model(source)?;
    let target = match profile {
        Some(p) => transplant_profile(&source_model, p),
        None => source_model.clone(),
    };
    let model = interpolate_model(&target, params);
    resynthesize_from(&source_model, &model, source)
}
