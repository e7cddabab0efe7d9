use angus_core::AudioBlock;

use crate::error::{BatchError, Result};

/// RMS of a full-scale square wave is 0 dBFS.
pub fn dbfs_to_rms(dbfs: f64) -> f64 {
    10f64.powf(dbfs / 20.0)
}

pub fn rms_to_dbfs(rms: f64) -> f64 {
    20.0 * rms.log10()
}

/// Scales `block` so that its RMS equals `target_rms`.
pub fn normalize_rms(block: &AudioBlock, target_rms: f64) -> Result<AudioBlock> {
    if !(target_rms > 0.0 && target_rms.is_finite()) {
        return Err(angus_core::Error::InvalidArgument(format!("target RMS {target_rms} must be positive")).into());
    }
    let rms = block.rms();
    if rms == 0.0 || !rms.is_finite() {
        return Err(BatchError::CannotNormalize);
    }
    let gain = target_rms / rms;
    if gain == 1.0 {
        return Ok(block.clone());
    }
    let samples = block.samples.iter().map(|&s| (s as f64 * gain) as f32).collect();
    Ok(AudioBlock::at(samples, block.sample_rate, block.start_time))
}

/// The middle `seconds` of `block`; blocks no longer than that are returned whole.
pub fn trim_center(block: &AudioBlock, seconds: f64) -> AudioBlock {
    let keep = (seconds * block.sample_rate as f64).round() as usize;
    if keep >= block.len() {
        return block.clone();
    }
    let start = (block.len() - keep) / 2;
    AudioBlock::at(
        block.samples[start..start + keep].to_vec(),
        block.sample_rate,
        block.start_time + start as f64 / block.sample_rate as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbfs_round_trip() {
        assert!((dbfs_to_rms(-20.0) - 0.1).abs() < 1e-15);
        assert!((rms_to_dbfs(0.1) + 20.0).abs() < 1e-12);
    }

    #[test]
    fn trims_the_middle() {
        let b = AudioBlock::new((0..100).map(|i| i as f32).collect(), 100);
        let t = trim_center(&b, 0.5);
        assert_eq!(t.samples, (25..75).map(|i| i as f32).collect::<Vec<_>>());
        assert_eq!(t.start_time, 0.25);
        assert_eq!(trim_center(&b, 2.0), b);
    }
}
