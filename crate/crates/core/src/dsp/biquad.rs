use std::f64::consts::PI;

use super::AudioBlock;
use crate::error::{Error, Result};

/// Second-order section coefficients, normalized so that `a0 == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    /// Pass-through section.
    pub const IDENTITY: BiquadCoeffs = BiquadCoeffs {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    /// Both poles strictly inside the unit circle (stability triangle).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    /// Largest pole modulus of `z^2 + a1 z + a2`.
    pub fn pole_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            // complex conjugate pair, |p|^2 = a2
            self.a2.sqrt()
        } else {
            let s = disc.sqrt();
            ((-self.a1 + s) / 2.0).abs().max(((-self.a1 - s) / 2.0).abs())
        }
    }

    /// |H(e^{jw})| at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate;
        let (c1, s1) = (w.cos(), w.sin());
        let (c2, s2) = ((2.0 * w).cos(), (2.0 * w).sin());
        let num_re = self.b0 + self.b1 * c1 + self.b2 * c2;
        let num_im = -(self.b1 * s1 + self.b2 * s2);
        let den_re = 1.0 + self.a1 * c1 + self.a2 * c2;
        let den_im = -(self.a1 * s1 + self.a2 * s2);
        (num_re.hypot(num_im)) / (den_re.hypot(den_im))
    }
}

/// Audio-cookbook second-order high-pass.
///
/// With `q = 1/sqrt(2)` the response is maximally flat and `|H(f_cut)| = 1/sqrt(2)`.
pub fn design_highpass_biquad(f_cut_hz: f64, sample_rate_hz: f64, q: f64) -> Result<BiquadCoeffs> {
    if !(sample_rate_hz > 0.0) {
        return Err(Error::invalid(format!("sample rate {sample_rate_hz} must be positive")));
    }
    let nyquist = sample_rate_hz / 2.0;
    if !(f_cut_hz > 0.0 && f_cut_hz < nyquist) {
        return Err(Error::invalid(format!(
            "cutoff {f_cut_hz} Hz outside (0, {nyquist}) Hz"
        )));
    }
    if !(q > 0.0) {
        return Err(Error::invalid(format!("q {q} must be positive")));
    }

    let w0 = 2.0 * PI * f_cut_hz / sample_rate_hz;
    let (sin_w0, cos_w0) = w0.sin_cos();
    let alpha = sin_w0 / (2.0 * q);
    let a0 = 1.0 + alpha;

    Ok(BiquadCoeffs {
        b0: (1.0 + cos_w0) / 2.0 / a0,
        b1: -(1.0 + cos_w0) / a0,
        b2: (1.0 + cos_w0) / 2.0 / a0,
        a1: -2.0 * cos_w0 / a0,
        a2: (1.0 - alpha) / a0,
    })
}

/// Direct-form-II-transposed delay registers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BiquadState {
    s1: f64,
    s2: f64,
}

impl BiquadState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    #[inline]
    pub fn tick(&mut self, c: &BiquadCoeffs, x: f64) -> f64 {
        let y = c.b0 * x + self.s1;
        self.s1 = c.b1 * x - c.a1 * y + self.s2;
        self.s2 = c.b2 * x - c.a2 * y;
        y
    }

    pub fn process_in_place(&mut self, c: &BiquadCoeffs, samples: &mut [f32]) {
        for s in samples {
            *s = self.tick(c, *s as f64) as f32;
        }
    }
}

/// Filters one block, carrying `state` over to the next block of the stream.
pub fn biquad_process(block: &AudioBlock, coeffs: &BiquadCoeffs, state: &mut BiquadState) -> AudioBlock {
    let mut out = block.clone();
    state.process_in_place(coeffs, &mut out.samples);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SR: f64 = 44100.0;
    const Q: f64 = std::f64::consts::FRAC_1_SQRT_2;

    /// Transfer function evaluated on the unit circle with complex arithmetic
    /// written out independently of `magnitude_at`.
    fn response(c: &BiquadCoeffs, f: f64) -> f64 {
        let w = 2.0 * PI * f / SR;
        let z1 = (w.cos(), -w.sin());
        let z2 = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (c.b0 + c.b1 * z1.0 + c.b2 * z2.0, c.b1 * z1.1 + c.b2 * z2.1);
        let den = (1.0 + c.a1 * z1.0 + c.a2 * z2.0, c.a1 * z1.1 + c.a2 * z2.1);
        ((num.0 * num.0 + num.1 * num.1) / (den.0 * den.0 + den.1 * den.1)).sqrt()
    }

    /// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
    fn direct_form_one(c: &BiquadCoeffs, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for n in 0..x.len() {
            let xm1 = if n >= 1 { x[n - 1] } else { 0.0 };
            let xm2 = if n >= 2 { x[n - 2] } else { 0.0 };
            let ym1 = if n >= 1 { y[n - 1] } else { 0.0 };
            let ym2 = if n >= 2 { y[n - 2] } else { 0.0 };
            y[n] = c.b0 * x[n] + c.b1 * xm1 + c.b2 * xm2 - c.a1 * ym1 - c.a2 * ym2;
        }
        y
    }

    #[test]
    fn highpass_blocks_dc() {
        let c = design_highpass_biquad(1000.0, SR, Q).unwrap();
        assert!(response(&c, 0.0) < 1e-9);
        assert!(c.magnitude_at(0.0, SR) < 1e-9);
    }

    #[test]
    fn minus_three_db_at_cutoff() {
        let c = design_highpass_biquad(1000.0, SR, Q).unwrap();
        assert!((response(&c, 1000.0) - 0.7071).abs() < 0.01);
        assert!((c.magnitude_at(1000.0, SR) - response(&c, 1000.0)).abs() < 1e-12);
    }

    #[test]
    fn cutoff_at_four_times_f0_orders_octaves() {
        let c = design_highpass_biquad(800.0, SR, Q).unwrap();
        assert!(c.is_stable());
        let (lo, mid, hi) = (response(&c, 400.0), response(&c, 800.0), response(&c, 1600.0));
        assert!(hi > mid && mid > lo, "{lo} {mid} {hi}");
    }

    #[test]
    fn rejects_out_of_range_cutoff() {
        assert!(matches!(design_highpass_biquad(0.0, SR, Q), Err(Error::InvalidArgument(_))));
        assert!(design_highpass_biquad(SR / 2.0, SR, Q).is_err());
        assert!(design_highpass_biquad(-5.0, SR, Q).is_err());
        assert!(design_highpass_biquad(1000.0, SR, 0.0).is_err());
    }

    #[test]
    fn zero_in_zero_out() {
        let c = design_highpass_biquad(500.0, SR, Q).unwrap();
        let mut st = BiquadState::new();
        let out = biquad_process(&AudioBlock::silence(256, 44100), &c, &mut st);
        assert!(out.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn impulse_response_matches_recurrence() {
        let c = design_highpass_biquad(800.0, SR, Q).unwrap();
        let mut x = vec![0.0; 512];
        x[0] = 1.0;
        let expected = direct_form_one(&c, &x);
        let mut st = BiquadState::new();
        for (n, &xn) in x.iter().enumerate() {
            let y = st.tick(&c, xn);
            assert!((y - expected[n]).abs() < 1e-14, "sample {n}: {y} vs {}", expected[n]);
        }
    }

    #[test]
    fn dc_step_decays_within_100ms() {
        let c = design_highpass_biquad(800.0, SR, Q).unwrap();
        let mut st = BiquadState::new();
        let block = AudioBlock::new(vec![1.0; 44100], 44100);
        let out = biquad_process(&block, &c, &mut st);
        let tail = &out.samples[4410..];
        assert!(tail.iter().all(|s| s.abs() < 1e-4));
    }

    #[test]
    fn reset_matches_fresh_filter() {
        let c = design_highpass_biquad(300.0, SR, Q).unwrap();
        let input = AudioBlock::new((0..300).map(|i| ((i * 7) % 13) as f32 / 13.0).collect(), 44100);
        let mut used = BiquadState::new();
        biquad_process(&input, &c, &mut used);
        used.reset();
        let a = biquad_process(&input, &c, &mut used);
        let b = biquad_process(&input, &c, &mut BiquadState::new());
        assert_eq!(a, b);
    }

    #[test]
    fn pole_radius_agrees_with_stability() {
        for f in [20.0, 200.0, 2000.0, 20000.0] {
            let c = design_highpass_biquad(f, SR, Q).unwrap();
            assert!(c.is_stable());
            assert!(c.pole_radius() < 1.0);
        }
        let unstable = BiquadCoeffs { a1: 0.0, a2: 1.2, ..BiquadCoeffs::IDENTITY };
        assert!(!unstable.is_stable());
        assert!(unstable.pole_radius() > 1.0);
    }
}
