//! Pulse marking and local jitter / shimmer.
//!
//! Local jitter is `mean|T_{i+1} − T_i| / mean T_i` over consecutive periods, and
//! local shimmer is `mean|A_{i+1} − A_i| / mean A_i` over consecutive pulse
//! amplitudes. Pulses are marked by peak picking: one peak per expected period,
//! searched in `[0.8, 1.25]` local periods after the previous pulse, refined to
//! sub-sample precision with a parabola through the three samples around it.

use serde::{Deserialize, Serialize};

use crate::dsp::AudioBlock;
use crate::error::{Error, Result};
use crate::pitch::{self, PitchConfig, PitchEstimate};

/// Local jitter above which a voice is usually considered pathological.
pub const JITTER_PATHOLOGICAL: f64 = 0.01040;
/// Local shimmer above which a voice is usually considered pathological.
pub const SHIMMER_PATHOLOGICAL: f64 = 0.038;

const SEARCH_MIN: f64 = 0.8;
const SEARCH_MAX: f64 = 1.25;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSeries {
    /// Seconds, strictly increasing.
    pub times: Vec<f64>,
    /// Peak magnitude per pulse, positive.
    pub amplitudes: Vec<f64>,
}

impl PulseSeries {
    pub fn new(times: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self> {
        if times.len() != amplitudes.len() {
            return Err(Error::invalid(format!(
                "{} pulse times but {} amplitudes",
                times.len(),
                amplitudes.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("pulse times must be strictly increasing"));
        }
        if amplitudes.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::invalid("pulse amplitudes must be positive"));
        }
        Ok(PulseSeries { times, amplitudes })
    }

    /// Builds a series from a first instant and a list of periods.
    pub fn from_periods(start: f64, periods: &[f64], amplitudes: Vec<f64>) -> Result<Self> {
        let mut times = Vec::with_capacity(periods.len() + 1);
        times.push(start);
        for p in periods {
            times.push(times.last().unwrap() + p);
        }
        Self::new(times, amplitudes)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn periods(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceThresholds {
    pub jitter: f64,
    pub shimmer: f64,
}

impl Default for ReferenceThresholds {
    fn default() -> Self {
        ReferenceThresholds {
            jitter: JITTER_PATHOLOGICAL,
            shimmer: SHIMMER_PATHOLOGICAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoiceReport {
    /// Fraction; see [`VoiceReport::jitter_pct`].
    pub local_jitter: f64,
    pub local_shimmer: f64,
    pub n_pulses: usize,
    pub mean_f0: f64,
    pub reference: ReferenceThresholds,
}

impl VoiceReport {
    pub fn jitter_pct(&self) -> f64 {
        100.0 * self.local_jitter
    }

    pub fn shimmer_pct(&self) -> f64 {
        100.0 * self.local_shimmer
    }

    pub fn jitter_is_pathological(&self) -> bool {
        self.local_jitter > self.reference.jitter
    }

    pub fn shimmer_is_pathological(&self) -> bool {
        self.local_shimmer > self.reference.shimmer
    }
}

fn mean(v: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = v.len() as f64;
    v.sum::<f64>() / n
}

pub fn local_jitter(pulses: &PulseSeries) -> Result<f64> {
    if pulses.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: pulses.len() });
    }
    let periods = pulses.periods();
    let diffs = mean(periods.windows(2).map(|w| (w[1] - w[0]).abs()));
    Ok(diffs / mean(periods.iter().copied()))
}

pub fn local_shimmer(pulses: &PulseSeries) -> Result<f64> {
    if pulses.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: pulses.len() });
    }
    let a = &pulses.amplitudes;
    let diffs = mean(a.windows(2).map(|w| (w[1] - w[0]).abs()));
    Ok(diffs / mean(a.iter().copied()))
}

/// Parabolic peak refinement: (offset in samples within ±0.5, peak value).
fn refine_peak(prev: f64, at: f64, next: f64) -> (f64, f64) {
    let denom = prev - 2.0 * at + next;
    if denom >= 0.0 {
        return (0.0, at);
    }
    let delta = (0.5 * (prev - next) / denom).clamp(-0.5, 0.5);
    (delta, at - 0.25 * (prev - next) * delta)
}

struct PeriodLookup<'a> {
    track: &'a [PitchEstimate],
    cursor: usize,
    reach: f64,
}

impl<'a> PeriodLookup<'a> {
    /// Period of the estimate nearest to `time`. When that one is unvoiced, the
    /// nearest voiced estimate within `reach` seconds is used instead, since a
    /// voiced frame vouches for periodicity across its whole span.
    fn at(&mut self, time: f64) -> Option<f64> {
        while self.cursor + 1 < self.track.len()
            && (self.track[self.cursor + 1].time - time).abs() <= (self.track[self.cursor].time - time).abs()
        {
            self.cursor += 1;
        }
        let period = |e: &PitchEstimate| (e.voiced && e.f0_hz > 0.0).then(|| 1.0 / e.f0_hz);
        if let Some(p) = period(&self.track[self.cursor]) {
            return Some(p);
        }
        let before = self.track[..self.cursor]
            .iter()
            .rev()
            .take_while(|e| time - e.time <= self.reach)
            .find(|e| period(e).is_some());
        let after = self.track[self.cursor + 1..]
            .iter()
            .take_while(|e| e.time - time <= self.reach)
            .find(|e| period(e).is_some());
        match (before, after) {
            (Some(b), Some(a)) if a.time - time < time - b.time => period(a),
            (Some(b), _) => period(b),
            (None, Some(a)) => period(a),
            (None, None) => None,
        }
    }
}

/// Marks one pulse per pitch period.
///
/// The peak polarity (positive or negative) is chosen once for the whole signal,
/// whichever has the larger extreme. The first pulse of each voiced run is the
/// largest peak within one period of the run start; every following pulse is
/// the largest peak `[0.8, 1.25]` local periods after its predecessor. Voiced
/// runs extend half an analysis frame beyond their outermost voiced estimates,
/// and peaks more than 60 dB below the signal's extreme are never pulses.
pub fn detect_pulses(signal: &AudioBlock, f0_track: &[PitchEstimate]) -> Result<PulseSeries> {
    let cfg = PitchConfig::for_sample_rate(signal.sample_rate);
    detect_pulses_within(signal, f0_track, 0.5 * cfg.frame_size as f64 / signal.sample_rate as f64)
}

fn detect_pulses_within(signal: &AudioBlock, f0_track: &[PitchEstimate], reach: f64) -> Result<PulseSeries> {
    let x = &signal.samples;
    let sr = signal.sample_rate as f64;
    let n = x.len();
    if f0_track.is_empty() || n < 3 {
        return Err(Error::InsufficientPeriodicity("empty signal or pitch track".into()));
    }
    let max = x.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v));
    let min = x.iter().fold(f32::INFINITY, |m, &v| m.min(v));
    let polarity = if max >= -min { 1.0 } else { -1.0 };
    let gate = 1e-3 * (max as f64).max(-min as f64);
    let value = |i: usize| polarity * x[i] as f64;

    let argmax = |lo: usize, hi: usize| -> usize {
        (lo..hi).fold(lo, |best, i| if value(i) > value(best) { i } else { best })
    };
    // first pulse of a run: prefer a true local maximum over a window edge
    let first_peak = |lo: usize, hi: usize| -> usize {
        let is_peak = |i: usize| i > 0 && i + 1 < n && value(i) >= value(i - 1) && value(i) >= value(i + 1);
        (lo..hi)
            .filter(|&i| is_peak(i))
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if value(b) >= value(i) => Some(b),
                _ => Some(i),
            })
            .unwrap_or_else(|| argmax(lo, hi))
    };
    let time_of = |i: usize| signal.start_time + i as f64 / sr;

    let mut lookup = PeriodLookup { track: f0_track, cursor: 0, reach };
    let mut times = Vec::new();
    let mut amps = Vec::new();

    let push = |i: usize, times: &mut Vec<f64>, amps: &mut Vec<f64>| {
        let (delta, peak) = if i > 0 && i + 1 < n {
            refine_peak(value(i - 1), value(i), value(i + 1))
        } else {
            (0.0, value(i))
        };
        let t = time_of(i) + delta / sr;
        if peak > 0.0 && times.last().map_or(true, |&last| t > last) {
            times.push(t);
            amps.push(peak);
        }
    };

    let mut cursor = 0usize;
    let mut last: Option<usize> = None;
    while cursor < n {
        let Some(period) = lookup.at(time_of(cursor)) else {
            last = None;
            cursor += (0.005 * sr).max(1.0) as usize;
            continue;
        };
        let p = period * sr;
        let (lo, hi) = match last {
            Some(prev) => (
                prev + (SEARCH_MIN * p).round() as usize,
                prev + (SEARCH_MAX * p).round() as usize + 1,
            ),
            None => (cursor, cursor + p.round() as usize),
        };
        if hi > n {
            break;
        }
        let peak = if last.is_some() { argmax(lo, hi) } else { first_peak(lo, hi) };
        if value(peak) <= gate {
            last = None;
            cursor = hi;
            continue;
        }
        push(peak, &mut times, &mut amps);
        last = Some(peak);
        cursor = peak + 1;
    }

    if times.len() < 3 {
        return Err(Error::InsufficientPeriodicity(format!(
            "only {} pulses found",
            times.len()
        )));
    }
    Ok(PulseSeries { times, amplitudes: amps })
}

/// Voicing threshold of the offline contour. Looser than the live tracker's so
/// that strongly perturbed (e.g. subharmonic-rich) voices still count as voiced.
pub const ANALYSIS_VOICING_THRESHOLD: f64 = 0.3;

/// Offline contour used by [`analyze`]: default pitch settings for the rate with
/// [`ANALYSIS_VOICING_THRESHOLD`], smoothed.
pub fn pitch_contour(signal: &AudioBlock) -> Result<Vec<PitchEstimate>> {
    let cfg = PitchConfig {
        voicing_threshold: ANALYSIS_VOICING_THRESHOLD,
        ..PitchConfig::for_sample_rate(signal.sample_rate)
    };
    Ok(pitch::smooth_track(&pitch::track(signal, &cfg)?))
}

/// Pitch track, pulse marking and both perturbation measures.
pub fn analyze(signal: &AudioBlock) -> Result<VoiceReport> {
    let track = pitch_contour(signal)?;
    let pulses = detect_pulses(signal, &track)?;
    report_from_pulses(&pulses)
}

pub fn report_from_pulses(pulses: &PulseSeries) -> Result<VoiceReport> {
    let local_jitter = local_jitter(pulses)?;
    let local_shimmer = local_shimmer(pulses)?;
    let span = pulses.times[pulses.len() - 1] - pulses.times[0];
    Ok(VoiceReport {
        local_jitter,
        local_shimmer,
        n_pulses: pulses.len(),
        mean_f0: (pulses.len() - 1) as f64 / span,
        reference: ReferenceThresholds::default(),
    })
}
