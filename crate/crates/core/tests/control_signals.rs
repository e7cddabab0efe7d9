use angus_core::analysis::{analyze, PulseSeries};
use angus_core::control::*;
use angus_core::synth::{PulseTrain, Vowel, VowelShape};
use angus_core::{AudioBlock, Error};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SR: u32 = 44100;

fn correlation(a: &[f32], b: &[f32]) -> f64 {
    let dot = |x: &[f32], y: &[f32]| x.iter().zip(y).map(|(p, q)| *p as f64 * *q as f64).sum::<f64>();
    dot(a, b) / (dot(a, a) * dot(b, b)).sqrt()
}

/// 2 % jitter and 10 % shimmer from period-4 zero-mean patterns.
fn perturbed_train(f0: f64) -> PulseTrain {
    let d = 0.02 / 1.5;
    let s = 0.1 / 1.5;
    PulseTrain::periodic(f0, 0.6)
        .with_period_pattern(vec![d, -d, 0.5 * d, -0.5 * d])
        .with_amplitude_pattern(vec![1.0 + s, 1.0 - s, 1.0 + 0.5 * s, 1.0 - 0.5 * s])
}

#[test]
fn periodic_train_model() {
    let m = extract_pulse_model(&PulseTrain::periodic(200.0, 0.5).render(0.6, SR)).unwrap();
    assert!((m.len() as i64 - 120).abs() <= 1);
    assert!(m.local_mean_periods.iter().all(|p| (p - 5e-3).abs() < 1e-6));
    assert!(m.period_deviations().iter().all(|d| d.abs() < 1e-6));
    assert!(m.is_smooth());
}

#[test]
fn alternating_deviation_recovered_from_signal() {
    let d = 0.2 / 5.0;
    let x = PulseTrain::periodic(200.0, 0.5).with_period_pattern(vec![d, -d]).render(0.6, SR);
    let (times, _) = PulseTrain::periodic(200.0, 0.5).with_period_pattern(vec![d, -d]).pulses(0.6);
    let m = extract_pulse_model(&x).unwrap();
    assert_eq!(m.len(), times.len());
    let dev = m.period_deviations();
    for i in 2..m.len() - 3 {
        let want = if i % 2 == 0 { 0.2e-3 } else { -0.2e-3 };
        assert!((dev[i] - want).abs() < 0.05 * 0.2e-3, "pulse {i}: {}", dev[i]);
        assert!((m.local_mean_periods[i] - 5e-3).abs() < 1e-5);
    }
}

#[test]
fn glide_is_followed_by_local_means() {
    let x = PulseTrain::periodic(200.0, 0.5).glide(210.0).render(0.8, SR);
    let m = extract_pulse_model(&x).unwrap();
    let periods = m.periods();
    for i in 0..m.len() - 1 {
        assert!((m.local_mean_periods[i] / periods[i] - 1.0).abs() < 2e-3, "pulse {i}");
    }
    assert!(m.local_mean_periods[0] > m.local_mean_periods[m.len() - 1]);
    assert!(m.period_deviations().iter().all(|d| d.abs() < 1e-5));
}

#[test]
fn identity_resynthesis_correlates_with_source() {
    for x in [
        perturbed_train(180.0).render(0.6, SR),
        Vowel::new(220.0, VowelShape::A).render(0.6, SR),
        Vowel::new(330.0, VowelShape::I).render(0.6, SR),
    ] {
        let m = extract_pulse_model(&x).unwrap();
        let out = resynthesize(&m, &x).unwrap();
        assert_eq!(out.len(), x.len());
        let c = correlation(&out.samples, &x.samples);
        assert!(c > 0.95, "correlation {c}");
    }
}

#[test]
fn control_grid_scales_jitter_linearly() {
    let x = perturbed_train(150.0).render(1.0, SR);
    let programmed = analyze(&x).unwrap();
    assert!((programmed.local_jitter - 0.02).abs() < 1e-3);
    let measured: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&a| analyze(&control_transform(&x, &ControlParams::new(a).unwrap(), None).unwrap()).unwrap().local_jitter)
        .collect();
    assert!(measured[0] < 0.003, "{measured:?}");
    assert!((measured[4] / 0.02 - 1.0).abs() < 0.2, "{measured:?}");
    assert!(measured.windows(2).all(|w| w[1] > w[0]), "{measured:?}");
    for (a, j) in [0.25, 0.5, 0.75].iter().zip(&measured[1..4]) {
        assert!((j - a * measured[4]).abs() < 0.1 * measured[4], "{measured:?}");
    }
}

#[test]
fn model_and_source_must_agree_in_size() {
    let x = PulseTrain::periodic(200.0, 0.5).render(0.6, SR);
    let m = extract_pulse_model(&x).unwrap();
    let short = PulseModel::from_pulses(&PulseSeries::new(m.pulse_times[..80].to_vec(), m.pulse_amplitudes[..80].to_vec()).unwrap()).unwrap();
    assert!(matches!(resynthesize(&short, &x), Err(Error::ModelMismatch { .. })));
}

#[test]
fn unvoiced_source_is_an_error() {
    let silence = AudioBlock::silence(SR as usize / 2, SR);
    assert!(extract_pulse_model(&silence).is_err());
}

#[test]
fn transplant_halves_pulse_count_and_keeps_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let random_model = |n: usize, period: f64, spread: f64, rng: &mut ChaCha8Rng| {
        let periods: Vec<f64> = (0..n - 1).map(|_| period * (1.0 + rng.random_range(-spread..spread))).collect();
        let amps: Vec<f64> = (0..n).map(|_| 0.5 * (1.0 + rng.random_range(-spread..spread))).collect();
        PulseModel::from_pulses(&PulseSeries::from_periods(0.0, &periods, amps).unwrap()).unwrap()
    };
    let source = random_model(300, 1.0 / 300.0, 0.03, &mut rng);
    let target = random_model(150, 1.0 / 150.0, 0.01, &mut rng);
    let out = transplant_profile(&target, &source);
    assert_eq!(out.len(), 150);

    let rel = |m: &PulseModel| -> Vec<f64> {
        let p = m.periods();
        p.iter().zip(&m.local_mean_periods).map(|(p, l)| p / l - 1.0).collect()
    };
    let variance = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
    };
    let src = rel(&source);
    let got = rel(&out);
    for i in 0..149 {
        assert!((got[i] - src[2 * i]).abs() < 1e-9);
    }
    let ratio = variance(&got[..149]) / variance(&src[..299]);
    assert!((ratio - 1.0).abs() < 0.1, "variance ratio {ratio}");
}
