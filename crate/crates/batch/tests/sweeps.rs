use std::path::{Path, PathBuf};

use angus_batch::{
    load_wav, run_analysis, run_angus_sweep, run_control_sweep, save_wav, summarize, Algorithm, Manifest, SampleFormat,
    SweepGrid, SweepOptions,
};
use angus_core::synth::{PulseTrain, Vowel, VowelShape};
use angus_core::AudioBlock;

const SR: u32 = 44100;

fn write_inputs(dir: &Path, f0s: &[f64]) -> Vec<PathBuf> {
    f0s.iter()
        .enumerate()
        .map(|(i, &f0)| {
            let shape = if i % 2 == 0 { VowelShape::A } else { VowelShape::I };
            let p = dir.join(format!("v{i}_{f0}.wav"));
            save_wav(&Vowel::new(f0, shape).render(0.6, SR), &p, SampleFormat::Float32).unwrap();
            p
        })
        .collect()
}

fn correlation(a: &[f32], b: &[f32]) -> f64 {
    let dot = |x: &[f32], y: &[f32]| x.iter().zip(y).map(|(p, q)| *p as f64 * *q as f64).sum::<f64>();
    dot(a, b) / (dot(a, a) * dot(b, b)).sqrt()
}

#[test]
fn grid_parsing() {
    assert_eq!(SweepGrid::parse("default").unwrap(), SweepGrid::default());
    let g = SweepGrid::parse("alpha=0.75; k=3").unwrap();
    assert_eq!((g.alphas.as_slice(), g.ks.as_slice(), g.h), (&[0.75][..], &[3][..], 1.0));
    assert_eq!(SweepGrid::parse("alpha=;k=2").unwrap().angus_points(), 0);
    assert_eq!(SweepGrid::parse("ac=0,1").unwrap().alpha_cs, vec![0.0, 1.0]);
    assert!(SweepGrid::parse("k=1").is_err());
    assert!(SweepGrid::parse("alpha=3").is_err());
    assert!(SweepGrid::parse("h=1.5").is_err());
    assert!(SweepGrid::parse("q=2").is_err());
    assert!(SweepGrid::parse("alpha=x").is_err());
}

#[test]
fn angus_sweep_emits_one_file_per_point_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path(), &[200.0, 310.0]);
    let grid = SweepGrid::parse("alpha=0.5,1;k=2,3").unwrap();
    let opts = SweepOptions::new(dir.path().join("out"));
    let m = run_angus_sweep(&inputs, &grid, &opts).unwrap();
    assert_eq!(m.len(), 8);
    assert_eq!(m.outputs().count(), 8);
    for r in m.outputs() {
        assert!(Path::new(r.output.as_ref().unwrap()).exists());
        assert_eq!(r.sha256.as_ref().unwrap().len(), 64);
    }
    assert!(m.verify().is_empty());

    let mut first = Vec::new();
    m.write_jsonl(&mut first).unwrap();
    let again = run_angus_sweep(&inputs, &grid, &opts).unwrap();
    let mut second = Vec::new();
    again.write_jsonl(&mut second).unwrap();
    assert_eq!(first, second);
}

#[test]
fn preset_point_and_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path(), &[220.0]);
    let opts = SweepOptions::new(dir.path().join("out"));
    let m = run_angus_sweep(&inputs, &SweepGrid::parse("alpha=0.75;k=3").unwrap(), &opts).unwrap();
    assert_eq!(m.len(), 1);
    let r = &m.records[0];
    assert_eq!((r.alpha, r.k, r.h), (Some(0.75), Some(3), Some(1.0)));
    assert!(r.output.as_ref().unwrap().ends_with("v0_220_angus_a0.75_k3.wav"));

    let empty = run_angus_sweep(&inputs, &SweepGrid::parse("alpha=").unwrap(), &opts).unwrap();
    assert!(empty.is_empty());
}

#[test]
fn a_bad_input_does_not_abort_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = write_inputs(dir.path(), &[250.0]);
    let corrupt = dir.path().join("corrupt.wav");
    std::fs::write(&corrupt, b"RIFF not really").unwrap();
    inputs.push(corrupt);
    inputs.push(dir.path().join("missing.wav"));
    let grid = SweepGrid::parse("alpha=1;k=2,3").unwrap();
    let m = run_angus_sweep(&inputs, &grid, &SweepOptions::new(dir.path().join("out"))).unwrap();
    assert_eq!(m.len(), 6);
    assert_eq!(m.outputs().count(), 2);
    assert_eq!(m.failures().count(), 4);
    assert!(m.failures().all(|r| r.output.is_none() && r.error.is_some()));
}

#[test]
fn normalized_outputs_hit_the_target_level() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path(), &[200.0]);
    let mut opts = SweepOptions::new(dir.path().join("out"));
    opts.normalize_dbfs = Some(-20.0);
    opts.trim_center = Some(0.4);
    let m = run_angus_sweep(&inputs, &SweepGrid::parse("alpha=1;k=3").unwrap(), &opts).unwrap();
    let out = load_wav(m.records[0].output.as_ref().unwrap()).unwrap();
    assert_eq!(out.len(), (0.4 * SR as f64) as usize);
    assert!((out.rms() / 0.1 - 1.0).abs() < 1e-5);
}

#[test]
fn control_sweep_identity_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = write_inputs(dir.path(), &[180.0, 260.0]);
    let silent = dir.path().join("silent.wav");
    save_wav(&AudioBlock::silence(SR as usize / 2, SR), &silent, SampleFormat::Float32).unwrap();
    inputs.push(silent);

    let m = run_control_sweep(&inputs, &[0.5, 1.0], None, &SweepOptions::new(dir.path().join("out"))).unwrap();
    assert_eq!(m.len(), 6);
    assert_eq!(m.failures().count(), 2);
    assert!(m.failures().all(|r| r.source.ends_with("silent.wav")));
    for r in m.outputs().filter(|r| r.alpha_c == Some(1.0)) {
        let src = load_wav(&r.source).unwrap();
        let out = load_wav(r.output.as_ref().unwrap()).unwrap();
        assert!(correlation(&src.samples, &out.samples) > 0.95);
    }
}

#[test]
fn control_sweep_with_transplanted_profile() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path(), &[150.0]);
    let profile = dir.path().join("rough.wav");
    let d = 0.03;
    let rough = PulseTrain::periodic(300.0, 0.5).with_period_pattern(vec![d, -d, 0.5 * d, -0.5 * d]).render(0.6, SR);
    save_wav(&rough, &profile, SampleFormat::Float32).unwrap();

    let m = run_control_sweep(&inputs, &[1.0], Some(&profile), &SweepOptions::new(dir.path().join("out"))).unwrap();
    assert_eq!(m.outputs().count(), 1, "{:?}", m.records);
    let r = &m.records[0];
    assert!(r.profile.as_ref().unwrap().ends_with("rough.wav"));
    assert!(r.output.as_ref().unwrap().ends_with("v0_150_control_ac1_from_rough.wav"));

    let report = run_analysis(&[inputs[0].clone(), PathBuf::from(r.output.as_ref().unwrap())]);
    assert!(report.failures.is_empty());
    assert!(report.rows[1].local_jitter_pct > report.rows[0].local_jitter_pct + 0.5);
}

#[test]
fn analysis_table_of_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_inputs(dir.path(), &[200.0, 300.0]);
    let grid = SweepGrid::parse("alpha=0.25,1;k=3").unwrap();
    let m = run_angus_sweep(&inputs, &grid, &SweepOptions::new(dir.path().join("out"))).unwrap();
    let outputs: Vec<PathBuf> = m.outputs().map(|r| PathBuf::from(r.output.as_ref().unwrap())).collect();

    let report = run_analysis(&outputs);
    assert_eq!(report.rows.len(), 4);
    assert!(report.rows.iter().all(|r| r.algorithm == Some(Algorithm::Angus) && r.k == Some(3)));
    let summary = summarize(&report.rows);
    assert_eq!(summary.len(), 2);
    assert!(summary[1].mean_jitter_pct > summary[0].mean_jitter_pct);

    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);

    let clean = run_analysis(&inputs[..1]);
    assert!(clean.rows[0].local_jitter_pct < 0.2);
    assert_eq!(clean.rows[0].algorithm, None);

    let m2 = Manifest::load({
        let p = dir.path().join("m.jsonl");
        m.save(&p).unwrap();
        p
    })
    .unwrap();
    assert_eq!(m2, m);
}
