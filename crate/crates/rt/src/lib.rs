//! The live engine.
//!
//! A [`Session`] pulls blocks from an input endpoint, runs pitch tracking and
//! the transform on a dedicated audio thread and pushes the result to an output
//! endpoint. Parameters reach the audio thread through a wait-free snapshot
//! mailbox; telemetry leaves it through a bounded queue that drops the oldest
//! frame when full. [`server`] exposes both over a WebSocket.

mod config;
mod error;
pub mod limiter;
pub mod protocol;
pub mod server;
mod session;

pub use config::{Endpoint, StreamConfig};
pub use error::{Result, RtError};
pub use limiter::Limiter;
pub use protocol::{ControlMessage, Telemetry};
pub use server::{serve_control, ControlServer};
pub use session::{start_stream, ControlHandle, Session, SessionStats, TelemetryQueue};
