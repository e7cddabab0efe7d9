//! Parameter sweeps over sets of recordings, one output file per grid point.

use std::path::{Path, PathBuf};

use angus_core::control::{self, ControlParams, PulseModel};
use angus_core::engine::{AngusParams, ALPHA_MAX, DEFAULT_FCUT_MULTIPLIER};
use angus_core::pipeline::{self, DEFAULT_BLOCK_SIZE};
use angus_core::AudioBlock;
use rayon::prelude::*;

use crate::error::{BatchError, Result};
use crate::manifest::{file_sha256, Algorithm, Manifest, ManifestRecord};
use crate::normalize::{dbfs_to_rms, normalize_rms, trim_center};
use crate::wav::{load_wav, save_wav, SampleFormat};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub ks: Vec<u32>,
    pub h: f64,
    pub alpha_cs: Vec<f64>,
}

impl Default for SweepGrid {
    /// Four α by four k for ANGUS, four α_c levels for CONTROL.
    fn default() -> Self {
        SweepGrid {
            alphas: vec![0.25, 0.5, 0.75, 1.0],
            ks: vec![2, 3, 4, 5],
            h: 1.0,
            alpha_cs: vec![0.25, 0.5, 0.75, 1.0],
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, values: &str) -> Result<Vec<T>> {
    values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| BatchError::InvalidGrid(format!("{key}: cannot parse {v:?}"))))
        .collect()
}

impl SweepGrid {
    /// Parses `alpha=0.25,0.5;k=2,3;h=1;alpha_c=0.5,1`. Keys left out keep their
    /// default values; `default` alone gives [`SweepGrid::default`].
    pub fn parse(spec: &str) -> Result<Self> {
        let mut grid = SweepGrid::default();
        let spec = spec.trim();
        if spec.is_empty() || spec == "default" {
            return Ok(grid);
        }
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| BatchError::InvalidGrid(format!("expected key=values, got {part:?}")))?;
            match key.trim() {
                "alpha" | "a" => grid.alphas = parse_list(key, values)?,
                "k" => grid.ks = parse_list(key, values)?,
                "h" => grid.h = values.trim().parse().map_err(|_| BatchError::InvalidGrid(format!("h: cannot parse {values:?}")))?,
                "alpha_c" | "ac" => grid.alpha_cs = parse_list(key, values)?,
                other => return Err(BatchError::InvalidGrid(format!("unknown key {other:?}"))),
            }
        }
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BatchError::InvalidGrid(msg));
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=ALPHA_MAX).contains(*a)) {
            return bad(format!("alpha {a} outside [0, {ALPHA_MAX}]"));
        }
        if let Some(k) = self.ks.iter().find(|&&k| k < 2) {
            return bad(format!("k = {k} must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.h) {
            return bad(format!("h = {} outside [0, 1]", self.h));
        }
        if let Some(a) = self.alpha_cs.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return bad(format!("alpha_c {a} outside [0, 1]"));
        }
        Ok(())
    }

    pub fn angus_points(&self) -> usize {
        self.alphas.len() * self.ks.len()
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub output_dir: PathBuf,
    pub format: SampleFormat,
    pub block_size: usize,
    pub fcut_multiplier: f64,
    /// RMS level of every written file, dBFS.
    pub normalize_dbfs: Option<f64>,
    /// Keep only the middle this-many seconds of each input.
    pub trim_center: Option<f64>,
}

impl SweepOptions {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        SweepOptions {
            output_dir: output_dir.into(),
            format: SampleFormat::Float32,
            block_size: DEFAULT_BLOCK_SIZE,
            fcut_multiplier: DEFAULT_FCUT_MULTIPLIER,
            normalize_dbfs: None,
            trim_center: None,
        }
    }

    fn prepare(&self, path: &Path) -> Result<AudioBlock> {
        let block = load_wav(path)?;
        Ok(match self.trim_center {
            Some(s) => trim_center(&block, s),
            None => block,
        })
    }

    fn write(&self, block: &AudioBlock, name: &str) -> Result<(String, String)> {
        let block = match self.normalize_dbfs {
            Some(db) => normalize_rms(block, dbfs_to_rms(db))?,
            None => block.clone(),
        };
        let path = self.output_dir.join(name);
        save_wav(&block, &path, self.format)?;
        let digest = file_sha256(&path)?;
        Ok((path.display().to_string(), digest))
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

pub fn angus_output_name(stem: &str, alpha: f64, k: u32, h: f64) -> String {
    if h == 1.0 {
        format!("{stem}_angus_a{alpha}_k{k}.wav")
    } else {
        format!("{stem}_angus_a{alpha}_k{k}_h{h}.wav")
    }
}

pub fn control_output_name(stem: &str, alpha_c: f64, profile: Option<&str>) -> String {
    match profile {
        Some(p) => format!("{stem}_control_ac{alpha_c}_from_{p}.wav"),
        None => format!("{stem}_control_ac{alpha_c}.wav"),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BatchError::io(dir, e))
}

fn finish(record: &mut ManifestRecord, result: Result<(String, String)>) {
    match result {
        Ok((output, digest)) => {
            record.output = Some(output);
            record.sha256 = Some(digest);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
}

/// ANGUS-transforms one recording with the offline block pipeline.
pub fn process_block(input: &AudioBlock, params: &AngusParams, block_size: usize) -> Result<AudioBlock> {
    Ok(pipeline::transform(input, params, block_size)?)
}

/// Every input at every (α, k) of `grid`. Failures become manifest records.
pub fn run_angus_sweep(inputs: &[PathBuf], grid: &SweepGrid, opts: &SweepOptions) -> Result<Manifest> {
    grid.validate()?;
    if grid.angus_points() > 0 && !inputs.is_empty() {
        ensure_dir(&opts.output_dir)?;
    }
    let records: Vec<ManifestRecord> = inputs
        .par_iter()
        .flat_map_iter(|path| {
            let source = opts.prepare(path).map_err(|e| e.to_string());
            let stem = stem(path);
            let points: Vec<(f64, u32)> = grid.alphas.iter().flat_map(|&a| grid.ks.iter().map(move |&k| (a, k))).collect();
            points.into_iter().map(move |(alpha, k)| {
                let mut record = ManifestRecord {
                    source: path.display().to_string(),
                    algorithm: Algorithm::Angus,
                    alpha: Some(alpha),
                    k: Some(k),
                    h: Some(grid.h),
                    alpha_c: None,
                    profile: None,
                    output: None,
                    sha256: None,
                    error: None,
                };
                let result = source.as_ref().map_err(|e| BatchError::Input(e.clone())).and_then(|x| {
                    let mut params = AngusParams::single(alpha, k, grid.h);
                    params.fcut_multiplier = opts.fcut_multiplier;
                    let out = process_block(x, &params, opts.block_size)?;
                    opts.write(&out, &angus_output_name(&stem, alpha, k, grid.h))
                });
                finish(&mut record, result);
                record
            })
        })
        .collect();
    Ok(Manifest::new(records))
}

/// Every input at every α_c, optionally with the perturbation profile of `profile_from`.
pub fn run_control_sweep(
    inputs: &[PathBuf],
    alpha_cs: &[f64],
    profile_from: Option<&Path>,
    opts: &SweepOptions,
) -> Result<Manifest> {
    let params: Vec<ControlParams> = alpha_cs.iter().map(|&a| ControlParams::new(a)).collect::<angus_core::Result<_>>()?;
    let profile: Option<(String, PulseModel)> = match profile_from {
        Some(p) => Some((stem(p), control::extract_pulse_model(&opts.prepare(p)?)?)),
        None => None,
    };
    if !params.is_empty() && !inputs.is_empty() {
        ensure_dir(&opts.output_dir)?;
    }
    let records: Vec<ManifestRecord> = inputs
        .par_iter()
        .flat_map_iter(|path| {
            let stem = stem(path);
            // extraction is shared by every α_c of this input
            let prepared = opts.prepare(path).and_then(|x| {
                let model = control::extract_pulse_model(&x)?;
                let target = match &profile {
                    Some((_, p)) => control::transplant_profile(&model, p),
                    None => model.clone(),
                };
                Ok((x, model, target))
            });
            let prepared = prepared.map_err(|e| e.to_string());
            let profile = &profile;
            params.iter().map(move |cp| {
                let mut record = ManifestRecord {
                    source: path.display().to_string(),
                    algorithm: Algorithm::Control,
                    alpha: None,
                    k: None,
                    h: None,
                    alpha_c: Some(cp.alpha_c),
                    profile: profile_from.map(|p| p.display().to_string()),
                    output: None,
                    sha256: None,
                    error: None,
                };
                let result = prepared.as_ref().map_err(|e| BatchError::Input(e.clone())).and_then(|(x, model, target)| {
                    let interpolated = control::interpolate_model(target, cp);
                    let out = control::resynthesize_from(model, &interpolated, x)?;
                    let name = control_output_name(&stem, cp.alpha_c, profile.as_ref().map(|(s, _)| s.as_str()));
                    opts.write(&out, &name)
                });
                finish(&mut record, result);
                record
            })
        })
        .collect();
    Ok(Manifest::new(records))
}
