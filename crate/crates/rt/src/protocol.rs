//! JSON control messages and telemetry frames.
//!
//! Requests: `{"type":"set_param","name":"alpha","value":0.75}`,
//! `{"type":"preset","name":"paper-default"}`, `{"type":"get_status"}`.
//! Replies carry `"ok": true` plus the current state, or `"ok": false` and an
//! `"error"` string.

use angus_core::engine::{AngusParams, ModulatorSpec, MAX_MODULATORS};
use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlMessage {
    SetParam { name: String, value: Value },
    Preset { name: String },
    GetStatus,
}

impl ControlMessage {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("malformed message: {e}"))
    }

    pub fn set(name: &str, value: impl Into<Value>) -> Self {
        ControlMessage::SetParam { name: name.into(), value: value.into() }
    }
}

/// Parameter names accepted by `set_param`.
pub const PARAM_NAMES: &[&str] = &["alpha", "k", "h", "gain", "bypass", "fcut_mult", "unvoiced_passthrough", "modulators"];

pub const PRESETS: &[&str] = &["paper-default", "neutral"];

pub fn preset(name: &str) -> Option<AngusParams> {
    match name {
        "paper-default" => Some(AngusParams::standard()),
        "neutral" => Some(AngusParams { alpha: 0.0, ..AngusParams::standard() }),
        _ => None,
    }
}

fn number(name: &str, v: &Value) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("{name} expects a number, got {v}"))
}

fn boolean(name: &str, v: &Value) -> Result<bool, String> {
    v.as_bool().ok_or_else(|| format!("{name} expects true or false, got {v}"))
}

/// `params` with `name` set to `value`, validated. `k`, `h` and `gain` address
/// the first modulator.
pub fn set_param(params: &AngusParams, name: &str, value: &Value) -> Result<AngusParams, String> {
    let mut p = params.clone();
    match name {
        "alpha" => p.alpha = number(name, value)?,
        "k" => {
            let k = value
                .as_u64()
                .filter(|&k| k <= u32::MAX as u64)
                .ok_or_else(|| format!("k expects a positive integer, got {value}"))?;
            p.modulators[0].k = k as u32;
        }
        "h" => p.modulators[0].h = number(name, value)?,
        "gain" => p.modulators[0].gain = number(name, value)?,
        "bypass" => p.bypass = boolean(name, value)?,
        "unvoiced_passthrough" => p.unvoiced_passthrough = boolean(name, value)?,
        "fcut_mult" | "fcut_multiplier" => p.fcut_multiplier = number(name, value)?,
        "modulators" => {
            let list: Vec<ModulatorSpec> =
                serde_json::from_value(value.clone()).map_err(|e| format!("modulators: {e}"))?;
            if list.len() > MAX_MODULATORS {
                return Err(format!("at most {MAX_MODULATORS} modulators"));
            }
            p.modulators = list.into_iter().collect::<ArrayVec<_, MAX_MODULATORS>>();
        }
        other => return Err(format!("unknown parameter {other:?} (expected one of {})", PARAM_NAMES.join(", "))),
    }
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

/// One decimated snapshot of the audio thread's state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "telemetry")]
pub struct Telemetry {
    /// Audio time at the end of the block, seconds.
    pub time: f64,
    pub f0: f64,
    pub voiced: bool,
    pub in_rms: f64,
    pub out_rms: f64,
    /// Fraction of the block period left after processing the block.
    pub margin: f64,
    pub params: AngusParams,
}

pub fn ok(mut body: serde_json::Map<String, Value>) -> Value {
    body.insert("ok".into(), Value::Bool(true));
    Value::Object(body)
}

pub fn error(msg: impl Into<String>) -> Value {
    serde_json::json!({ "ok": false, "error": msg.into() })
}
