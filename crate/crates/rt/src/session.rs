use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use angus_batch::load_wav;
use angus_core::dsp::rms;
use angus_core::engine::AngusParams;
use angus_core::pipeline::Pipeline;
use angus_core::AudioBlock;
use crossbeam_queue::ArrayQueue;
use hound::{WavSpec, WavWriter};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Endpoint, StreamConfig};
use crate::error::{Result, RtError};
use crate::limiter::Limiter;
use crate::protocol::{self, ControlMessage, Telemetry};

pub type TelemetryQueue = Arc<ArrayQueue<Telemetry>>;

#[derive(Debug, Clone)]
struct Snapshot {
    params: AngusParams,
    seq: u64,
}

/// State shared between the audio thread and everyone else. Atomics only.
#[derive(Debug, Default)]
struct Shared {
    position: AtomicU64,
    running: AtomicBool,
    stop: AtomicBool,
    applied_seq: AtomicU64,
    applied_at: AtomicU64,
    telemetry_dropped: AtomicU64,
    f0_bits: AtomicU64,
    voiced: AtomicBool,
}

struct ControlState {
    params: AngusParams,
    seq: u64,
    accepted_at: u64,
    mailbox: triple_buffer::Input<Snapshot>,
}

/// Control-plane side of a session. Cloneable; every clone publishes to the
/// same mailbox.
#[derive(Clone)]
pub struct ControlHandle {
    state: Arc<Mutex<ControlState>>,
    shared: Arc<Shared>,
    sample_rate: u32,
    block_size: usize,
}

impl ControlHandle {
    fn lock(&self) -> MutexGuard<'_, ControlState> {
        // a panic while holding the lock leaves plain data behind; keep serving
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Currently accepted parameters (may not have reached the audio thread yet).
    pub fn params(&self) -> AngusParams {
        self.lock().params.clone()
    }

    /// Validates and publishes a full parameter snapshot; returns its sequence number.
    pub fn set_params(&self, params: AngusParams) -> Result<u64> {
        params.validate()?;
        let mut st = self.lock();
        st.seq += 1;
        st.accepted_at = self.shared.position.load(Ordering::Acquire);
        st.params = params.clone();
        let seq = st.seq;
        st.mailbox.write(Snapshot { params, seq });
        Ok(seq)
    }

    /// Sequence number of the snapshot the audio thread is running.
    pub fn applied_seq(&self) -> u64 {
        self.shared.applied_seq.load(Ordering::Acquire)
    }

    /// Stream position (samples) at which the running snapshot took effect.
    pub fn applied_at(&self) -> u64 {
        self.shared.applied_at.load(Ordering::Acquire)
    }

    /// Stream position when the latest snapshot was accepted.
    pub fn accepted_at(&self) -> u64 {
        self.lock().accepted_at
    }

    pub fn position(&self) -> u64 {
        self.shared.position.load(Ordering::Acquire)
    }

    pub fn telemetry_dropped(&self) -> u64 {
        self.shared.telemetry_dropped.load(Ordering::Relaxed)
    }

    pub fn is_running(&self) -> bool {
        self.shared.running.load(Ordering::Acquire)
    }

    pub fn status(&self) -> Value {
        let st = self.lock();
        let position = self.position();
        json!({
            "ok": true,
            "type": "status",
            "params": st.params,
            "seq": st.seq,
            "applied_seq": self.applied_seq(),
            "running": self.is_running(),
            "position": position,
            "time": position as f64 / self.sample_rate as f64,
            "sample_rate": self.sample_rate,
            "block_size": self.block_size,
            "f0": f64::from_bits(self.shared.f0_bits.load(Ordering::Relaxed)),
            "voiced": self.shared.voiced.load(Ordering::Relaxed),
            "telemetry_dropped": self.telemetry_dropped(),
        })
    }

    /// Handles one control message. Rejected messages leave the state unchanged.
    pub fn apply_control(&self, msg: &ControlMessage) -> Value {
        let next = match msg {
            ControlMessage::GetStatus => return self.status(),
            ControlMessage::SetParam { name, value } => protocol::set_param(&self.params(), name, value),
            ControlMessage::Preset { name } => protocol::preset(name).ok_or_else(|| {
                format!("unknown preset {name:?} (expected one of {})", protocol::PRESETS.join(", "))
            }),
        };
        match next.and_then(|p| self.set_params(p.clone()).map(|seq| (p, seq)).map_err(|e| e.to_string())) {
            Ok((params, seq)) => json!({ "ok": true, "seq": seq, "params": params }),
            Err(e) => protocol::error(e),
        }
    }

    /// Parses and handles a text frame.
    pub fn apply_text(&self, text: &str) -> Value {
        match ControlMessage::parse(text) {
            Ok(msg) => self.apply_control(&msg),
            Err(e) => protocol::error(e),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SessionStats {
    pub samples: u64,
    pub blocks: u64,
    pub sample_rate: u32,
    /// Smallest fraction of a block period left after processing a block.
    pub min_margin: f64,
    pub mean_margin: f64,
    pub telemetry_sent: u64,
    pub telemetry_dropped: u64,
}

pub struct Session {
    control: ControlHandle,
    telemetry: TelemetryQueue,
    shared: Arc<Shared>,
    thread: Option<JoinHandle<Result<SessionStats>>>,
}

impl Session {
    pub fn control(&self) -> ControlHandle {
        self.control.clone()
    }

    pub fn telemetry(&self) -> TelemetryQueue {
        self.telemetry.clone()
    }

    pub fn sample_rate(&self) -> u32 {
        self.control.sample_rate
    }

    pub fn is_running(&self) -> bool {
        self.shared.running.load(Ordering::Acquire)
    }

    /// Asks the audio thread to stop after the current block.
    pub fn stop(&self) {
        self.shared.stop.store(true, Ordering::Release);
    }

    /// Waits for the stream to end (input exhausted or stopped).
    pub fn wait(mut self) -> Result<SessionStats> {
        self.join()
    }

    fn join(&mut self) -> Result<SessionStats> {
        match self.thread.take() {
            Some(t) => t.join().map_err(|_| RtError::AudioThread)?,
            None => Ok(SessionStats::default()),
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.stop();
        let _ = self.join();
    }
}

/// Opens both endpoints and starts the audio thread. Any endpoint failure is
/// reported here, before audio starts.
pub fn start_stream(config: StreamConfig, initial: AngusParams) -> Result<Session> {
    config.validate()?;
    initial.validate()?;
    let Endpoint::File(in_path) = &config.input else { unreachable!("validated") };
    let Endpoint::File(out_path) = &config.output else { unreachable!("validated") };
    let input = load_wav(in_path)?;
    if let Some(sr) = config.sample_rate {
        if sr != input.sample_rate {
            return Err(RtError::Config(format!("input runs at {} Hz, {sr} Hz requested", input.sample_rate)));
        }
    }
    let sr = input.sample_rate;
    let pipeline = Pipeline::new(initial.clone(), sr)?;
    let spec = WavSpec {
        channels: 1,
        sample_rate: sr,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let writer = WavWriter::create(out_path, spec)?;

    let (mailbox_in, mailbox_out) = triple_buffer::triple_buffer(&Snapshot { params: initial.clone(), seq: 0 });
    let shared = Arc::new(Shared::default());
    shared.running.store(true, Ordering::Release);
    let telemetry: TelemetryQueue = Arc::new(ArrayQueue::new(config.telemetry_capacity));
    let control = ControlHandle {
        state: Arc::new(Mutex::new(ControlState {
            params: initial,
            seq: 0,
            accepted_at: 0,
            mailbox: mailbox_in,
        })),
        shared: shared.clone(),
        sample_rate: sr,
        block_size: config.block_size,
    };

    let audio = AudioThread {
        input,
        writer,
        pipeline,
        limiter: config.limiter_ceiling.map(|c| Limiter::new(c, sr)),
        mailbox: mailbox_out,
        shared: shared.clone(),
        telemetry: telemetry.clone(),
        config,
    };
    let thread = std::thread::Builder::new()
        .name("angus-audio".into())
        .spawn(move || {
            let shared = audio.shared.clone();
            let result = audio.run();
            shared.running.store(false, Ordering::Release);
            result
        })?;
    Ok(Session { control, telemetry, shared, thread: Some(thread) })
}

struct AudioThread {
    input: AudioBlock,
    writer: WavWriter<std::io::BufWriter<std::fs::File>>,
    pipeline: Pipeline,
    limiter: Option<Limiter>,
    mailbox: triple_buffer::Output<Snapshot>,
    shared: Arc<Shared>,
    telemetry: TelemetryQueue,
    config: StreamConfig,
}

impl AudioThread {
    fn run(mut self) -> Result<SessionStats> {
        let sr = self.input.sample_rate as f64;
        let block = self.config.block_size;
        let every = ((sr / self.config.telemetry_rate).round() as u64).max(1);
        let mut next_emit = every;
        let mut out = vec![0.0f32; block];
        let mut seq = 0u64;
        let mut stats = SessionStats { sample_rate: self.input.sample_rate, min_margin: 1.0, ..Default::default() };
        let mut margin_sum = 0.0;
        let started = Instant::now();
        let input = std::mem::take(&mut self.input.samples);

        for chunk in input.chunks(block) {
            if self.shared.stop.load(Ordering::Acquire) {
                break;
            }
            let t0 = Instant::now();
            if self.mailbox.update() {
                let snap = self.mailbox.output_buffer();
                if snap.seq != seq {
                    // snapshots are validated before publication
                    let _ = self.pipeline.set_params(snap.params.clone());
                    seq = snap.seq;
                    self.shared.applied_at.store(stats.samples, Ordering::Release);
                    self.shared.applied_seq.store(seq, Ordering::Release);
                }
            }
            let o = &mut out[..chunk.len()];
            self.pipeline.process(chunk, o);
            if let Some(l) = &mut self.limiter {
                l.process_in_place(o);
            }
            let period = chunk.len() as f64 / sr;
            let margin = 1.0 - t0.elapsed().as_secs_f64() / period;

            for &s in o.iter() {
                self.writer.write_sample(s)?;
            }
            stats.samples += chunk.len() as u64;
            stats.blocks += 1;
            stats.min_margin = stats.min_margin.min(margin);
            margin_sum += margin;
            self.shared.position.store(stats.samples, Ordering::Release);
            let pitch = *self.pipeline.pitch();
            self.shared.f0_bits.store(pitch.f0_hz.to_bits(), Ordering::Relaxed);
            self.shared.voiced.store(pitch.voiced, Ordering::Relaxed);

            if stats.samples >= next_emit {
                while next_emit <= stats.samples {
                    next_emit += every;
                }
                let frame = Telemetry {
                    time: stats.samples as f64 / sr,
                    f0: pitch.f0_hz,
                    voiced: pitch.voiced,
                    in_rms: rms(chunk),
                    out_rms: rms(o),
                    margin,
                    params: self.pipeline.params().clone(),
                };
                stats.telemetry_sent += 1;
                if self.telemetry.force_push(frame).is_some() {
                    self.shared.telemetry_dropped.fetch_add(1, Ordering::Relaxed);
                }
            }

            if let Some(speed) = self.config.pace {
                let due = started + Duration::from_secs_f64(stats.samples as f64 / sr / speed);
                let now = Instant::now();
                if due > now {
                    std::thread::sleep(due - now);
                }
            }
        }
        self.writer.finalize()?;
        stats.mean_margin = if stats.blocks > 0 { margin_sum / stats.blocks as f64 } else { 0.0 };
        stats.telemetry_dropped = self.shared.telemetry_dropped.load(Ordering::Relaxed);
        Ok(stats)
    }
}
