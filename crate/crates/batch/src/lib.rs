//! File-level front end: WAV I/O, RMS normalization, parameter sweeps over
//! folders of recordings, JSONL manifests and jitter/shimmer CSV reports.

mod error;
pub mod manifest;
pub mod normalize;
pub mod report;
pub mod sweep;
pub mod wav;

pub use error::{BatchError, Result};
pub use manifest::{Algorithm, Manifest, ManifestRecord};
pub use normalize::{dbfs_to_rms, normalize_rms, rms_to_dbfs, trim_center};
pub use report::{run_analysis, summarize, AnalysisReport, AnalysisRow, SummaryRow};
pub use sweep::{run_angus_sweep, run_control_sweep, SweepGrid, SweepOptions};
pub use wav::{load_wav, save_wav, SampleFormat};
