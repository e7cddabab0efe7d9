use std::path::Path;

use angus_core::AudioBlock;
use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};

use crate::error::{BatchError, Result};

pub const MIN_SAMPLE_RATE: u32 = 8_000;
pub const MAX_SAMPLE_RATE: u32 = 192_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    #[default]
    Float32,
    Pcm16,
}

impl std::str::FromStr for SampleFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" | "float" | "float32" => Ok(SampleFormat::Float32),
            "pcm16" | "i16" | "int16" => Ok(SampleFormat::Pcm16),
            other => Err(format!("unknown sample format {other:?} (expected f32 or pcm16)")),
        }
    }
}

/// Reads a mono 16-bit PCM or 32-bit float WAV file.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBlock> {
    let path = path.as_ref();
    let wav_err = |source| BatchError::Wav { path: path.to_path_buf(), source };
    let unsupported = |reason: String| BatchError::UnsupportedFormat { path: path.to_path_buf(), reason };

    let reader = WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(unsupported(format!("{} channels, only mono is supported", spec.channels)));
    }
    if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&spec.sample_rate) {
        return Err(unsupported(format!("sample rate {} Hz outside 8-192 kHz", spec.sample_rate)));
    }
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (HoundFormat::Float, 32) => reader.into_samples::<f32>().collect::<std::result::Result<Vec<_>, _>>(),
        (HoundFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect(),
        (fmt, bits) => return Err(unsupported(format!("{bits}-bit {fmt:?} samples"))),
    }
    .map_err(wav_err)?;
    Ok(AudioBlock::new(samples, spec.sample_rate))
}

pub fn save_wav(block: &AudioBlock, path: impl AsRef<Path>, format: SampleFormat) -> Result<()> {
    let path = path.as_ref();
    let wav_err = |source| BatchError::Wav { path: path.to_path_buf(), source };
    let (bits_per_sample, sample_format) = match format {
        SampleFormat::Float32 => (32, HoundFormat::Float),
        SampleFormat::Pcm16 => (16, HoundFormat::Int),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: block.sample_rate,
        bits_per_sample,
        sample_format,
    };
    let mut w = WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in &block.samples {
        match format {
            SampleFormat::Float32 => w.write_sample(s),
            SampleFormat::Pcm16 => w.write_sample((s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16),
        }
        .map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}
