use angus_core::dsp::{biquad_process, design_highpass_biquad, render_modulator, BiquadState, OscillatorState};
use angus_core::engine::{isolate_subharmonics, modulate, process_block, AngusParams, EngineState, ModulatorSpec};
use angus_core::pipeline::transform;
use angus_core::pitch::PitchEstimate;
use angus_core::synth::{harmonic, Vowel, VowelShape};
use angus_core::AudioBlock;
use proptest::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

const SR: u32 = 44100;

/// Roots of z² + a1 z + a2, computed directly.
fn pole_moduli(a1: f64, a2: f64) -> [f64; 2] {
    let disc = a1 * a1 - 4.0 * a2;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [((-a1 + r) / 2.0).abs(), ((-a1 - r) / 2.0).abs()]
    } else {
        let m = a2.sqrt();
        [m, m]
    }
}

/// Hann-windowed magnitude spectrum, one bin per Hz for a 1 s signal.
fn spectrum(x: &[f32]) -> Vec<f64> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos();
            Complex::new(v as f64 * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..n / 2].iter().map(|c| c.norm() * 4.0 / n as f64).collect()
}

fn residual(x: &AudioBlock, f0: f64, k: u32, h: f64) -> AudioBlock {
    let y = modulate(x, f0, &ModulatorSpec::new(k, h), &mut OscillatorState::new()).unwrap();
    isolate_subharmonics(&y, x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modulator_stays_in_range(f0 in 70.0f64..800.0, k in 2u32..=8, h in 0.0f64..=1.0, n in 1usize..3000) {
        let b = render_modulator(f0, k, h, &mut OscillatorState::new(), n, SR).unwrap();
        for &v in &b.samples {
            prop_assert!(v as f64 >= 1.0 - h - 1e-6 && v as f64 <= 1.0 + h + 1e-6);
        }
    }

    #[test]
    fn designed_highpass_is_stable(
        sr in prop::sample::select(vec![8000u32, 16000, 22050, 44100, 48000, 96000, 192000]),
        frac in 1e-4f64..0.49,
        q in 0.3f64..8.0,
    ) {
        let c = design_highpass_biquad(frac * sr as f64, sr as f64, q).unwrap();
        for m in pole_moduli(c.a1, c.a2) {
            prop_assert!(m < 1.0, "pole modulus {m}");
        }
        prop_assert!(c.is_stable());
    }

    #[test]
    fn carrier_is_preserved(
        f0 in 100.0f64..500.0,
        k in 2u32..=5,
        alpha in 0.0f64..=1.0,
        amps in prop::collection::vec(0.0f64..0.1, 1..8),
    ) {
        let x = harmonic(f0, &amps, 4096, SR);
        let params = AngusParams::single(alpha, k, 1.0);
        let mut state = EngineState::new(&params, SR);
        let out = process_block(&x, &PitchEstimate::voiced(0.0, f0), &params, &mut state);

        let coeffs = design_highpass_biquad(4.0 * f0, SR as f64, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let hp = biquad_process(&residual(&x, f0, k, 1.0), &coeffs, &mut BiquadState::new());
        for i in 0..x.len() {
            let lhs = out.samples[i] as f64 - x.samples[i] as f64;
            let rhs = alpha * hp.samples[i] as f64;
            prop_assert!((lhs - rhs).abs() < 1e-6, "sample {i}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn residual_is_linear_in_depth(f0 in 100.0f64..500.0, k in 2u32..=5, h in 0.0f64..=1.0) {
        let x = harmonic(f0, &[0.3, 0.2, 0.1], 2048, SR);
        let full = residual(&x, f0, k, 1.0);
        let part = residual(&x, f0, k, h);
        for (a, b) in part.samples.iter().zip(&full.samples) {
            prop_assert!((*a as f64 - h * *b as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn block_size_invariance(f0 in 120.0f64..480.0, alpha in 0.0f64..=1.5, k in 2u32..=5, block in 1usize..5000) {
        let sig = Vowel::new(f0, VowelShape::A).render(0.25, SR);
        let params = AngusParams::single(alpha, k, 1.0);
        let reference = transform(&sig, &params, 512).unwrap();
        let out = transform(&sig, &params, block).unwrap();
        for (a, b) in out.samples.iter().zip(&reference.samples) {
            prop_assert!((a - b).abs() as f64 <= 1e-9);
        }
    }

    #[test]
    fn zero_alpha_is_identity(f0 in 90.0f64..600.0, shape in prop::sample::select(vec![VowelShape::A, VowelShape::I]), k in 2u32..=5) {
        let sig = Vowel::new(f0, shape).render(0.3, SR);
        let out = transform(&sig, &AngusParams::single(0.0, k, 1.0), 512).unwrap();
        for (a, b) in out.samples.iter().zip(&sig.samples) {
            prop_assert!((a - b).abs() <= 1e-7);
        }
    }
}

#[test]
fn wet_energy_scales_with_alpha_squared() {
    let f0 = 220.0;
    let x = Vowel::new(f0, VowelShape::A).render(0.5, SR);
    let pitch = PitchEstimate::voiced(0.0, f0);
    let wet_energy = |alpha: f64| -> f64 {
        let params = AngusParams::single(alpha, 3, 1.0);
        let out = process_block(&x, &pitch, &params, &mut EngineState::new(&params, SR));
        out.samples.iter().zip(&x.samples).map(|(o, i)| ((o - i) as f64).powi(2)).sum()
    };
    let unit = wet_energy(1.0);
    assert!(unit > 0.0);
    for alpha in [0.25, 0.5, 0.75] {
        let ratio = wet_energy(alpha) / unit;
        assert!((ratio - alpha * alpha).abs() < 1e-4 * alpha * alpha, "alpha {alpha}: {ratio}");
    }
}

#[test]
fn sine_carrier_sidebands() {
    let x = angus_core::synth::sine(440.0, 0.5, SR as usize, SR);
    let y = modulate(&x, 440.0, &ModulatorSpec::new(4, 1.0), &mut OscillatorState::new()).unwrap();
    let ys = spectrum(&y.samples);
    for (f, a) in [(330, 0.25), (440, 0.5), (550, 0.25)] {
        assert!((ys[f] - a).abs() < 0.01 * a, "{f} Hz: {}", ys[f]);
    }
    let r = spectrum(&isolate_subharmonics(&y, &x).unwrap().samples);
    assert!(20.0 * (r[440] / r[330]).log10() < -60.0);
}

#[test]
fn two_harmonic_sidebands_add_where_they_coincide() {
    let x = harmonic(200.0, &[0.4, 0.2], SR as usize, SR);
    let r = spectrum(&residual(&x, 200.0, 2, 1.0).samples);
    assert!((r[100] - 0.2).abs() < 0.002);
    assert!((r[300] - 0.3).abs() < 0.003);
    assert!((r[500] - 0.1).abs() < 0.001);
    assert!(r[200] < 1e-4 && r[400] < 1e-4);
}

#[test]
fn harmonic_sidebands_sit_at_expected_offsets() {
    let f0 = 200.0;
    let x = harmonic(f0, &[0.1; 10], SR as usize, SR);
    for k in 2..=5u32 {
        let r = spectrum(&residual(&x, f0, k, 1.0).samples);
        let top = r.iter().cloned().fold(0.0, f64::max);
        let floor = top * 1e-3;
        let expected: Vec<f64> = (1..=10)
            .flat_map(|i| {
                let c = i as f64 * f0;
                [c - f0 / k as f64, c + f0 / k as f64]
            })
            .collect();
        for b in 1..r.len() - 1 {
            if r[b] > floor && r[b] >= r[b - 1] && r[b] >= r[b + 1] {
                let near = expected.iter().any(|&e| (e - b as f64).abs() <= 1.0);
                assert!(near, "k={k}: unexpected peak at {b} Hz");
            }
        }
        for i in 1..=10 {
            assert!(r[i * 200] < floor, "k={k}: energy at harmonic {}", i * 200);
        }
    }
}
