//! Hard-ceiling lookahead limiter.
//!
//! The signal is delayed by the lookahead. The gain applied to an outgoing
//! sample is the smallest gain any sample still inside the lookahead window
//! requires, with each requirement ramped in linearly over the lookahead so the
//! gain glides down before a peak instead of stepping. Gain recovers linearly
//! over the release time. Output magnitude never exceeds the ceiling.

#[derive(Debug, Clone)]
pub struct Limiter {
    ceiling: f32,
    lookahead: usize,
    release_step: f32,
    delay: Vec<f32>,
    need: Vec<f32>,
    pos: usize,
    /// Samples in the window that need a gain below 1.
    pending: usize,
    gain: f32,
}

impl Limiter {
    pub const LOOKAHEAD_SECONDS: f64 = 0.005;
    pub const RELEASE_SECONDS: f64 = 0.05;

    pub fn new(ceiling_dbfs: f64, sample_rate: u32) -> Self {
        let lookahead = ((Self::LOOKAHEAD_SECONDS * sample_rate as f64).round() as usize).max(1);
        Limiter {
            ceiling: 10f64.powf(ceiling_dbfs / 20.0) as f32,
            lookahead,
            release_step: (1.0 / (Self::RELEASE_SECONDS * sample_rate as f64)) as f32,
            delay: vec![0.0; lookahead],
            need: vec![1.0; lookahead],
            pos: 0,
            pending: 0,
            gain: 1.0,
        }
    }

    /// Added latency in samples.
    pub fn latency(&self) -> usize {
        self.lookahead
    }

    pub fn ceiling(&self) -> f32 {
        self.ceiling
    }

    pub fn reset(&mut self) {
        self.delay.iter_mut().for_each(|s| *s = 0.0);
        self.need.iter_mut().for_each(|g| *g = 1.0);
        self.pending = 0;
        self.gain = 1.0;
    }

    fn tick(&mut self, x: f32) -> f32 {
        let l = self.lookahead;
        let out = self.delay[self.pos];
        if self.need[self.pos] < 1.0 {
            self.pending -= 1;
        }
        let required = if x.abs() > self.ceiling { self.ceiling / x.abs() } else { 1.0 };
        self.delay[self.pos] = x;
        self.need[self.pos] = required;
        if required < 1.0 {
            self.pending += 1;
        }
        self.pos = (self.pos + 1) % l;

        let mut target = 1.0f32;
        if self.pending > 0 {
            // slot pos is the next sample out (age 0); later slots are further ahead
            for age in 0..l {
                let g = self.need[(self.pos + age) % l];
                if g < 1.0 {
                    let ramped = g + (1.0 - g) * age as f32 / l as f32;
                    target = target.min(ramped);
                }
            }
        }
        // the outgoing sample itself is no longer in `need`
        let own = if out.abs() > self.ceiling { self.ceiling / out.abs() } else { 1.0 };
        target = target.min(own);
        self.gain = if target < self.gain { target } else { (self.gain + self.release_step).min(target) };
        let y = out * self.gain;
        y.clamp(-self.ceiling, self.ceiling)
    }

    pub fn process_in_place(&mut self, buf: &mut [f32]) {
        for s in buf {
            *s = self.tick(*s);
        }
    }
}
