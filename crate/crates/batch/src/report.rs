//! Jitter/shimmer analysis of many files into one CSV table.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use angus_core::analysis;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::manifest::Algorithm;
use crate::wav::load_wav;

/// One CSV row. Parameter columns are empty for files that are not sweep outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub file: String,
    pub algorithm: Option<Algorithm>,
    pub alpha: Option<f64>,
    pub k: Option<u32>,
    pub alpha_c: Option<f64>,
    pub n_pulses: usize,
    pub mean_f0_hz: f64,
    pub local_jitter_pct: f64,
    pub local_shimmer_pct: f64,
}

#[derive(Debug, Clone, Default)]
pub struct AnalysisReport {
    pub rows: Vec<AnalysisRow>,
    /// Files that could not be analysed, with the reason.
    pub failures: Vec<(String, String)>,
}

impl AnalysisReport {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        write_csv(&self.rows, w)
    }
}

/// Sweep parameters encoded in an output file name, e.g. `x_angus_a0.5_k3.wav`.
pub fn parse_output_name(path: &Path) -> (Option<Algorithm>, Option<f64>, Option<u32>, Option<f64>) {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if let Some(idx) = stem.rfind("_angus_") {
        let mut alpha = None;
        let mut k = None;
        for part in stem[idx + 7..].split('_') {
            if let Some(v) = part.strip_prefix('a') {
                alpha = v.parse().ok();
            } else if let Some(v) = part.strip_prefix('k') {
                k = v.parse().ok();
            }
        }
        if alpha.is_some() && k.is_some() {
            return (Some(Algorithm::Angus), alpha, k, None);
        }
    }
    if let Some(idx) = stem.rfind("_control_ac") {
        let rest = &stem[idx + 11..];
        let value = rest.split('_').next().and_then(|v| v.parse().ok());
        if value.is_some() {
            return (Some(Algorithm::Control), None, None, value);
        }
    }
    (None, None, None, None)
}

pub fn analyze_file(path: &Path) -> Result<AnalysisRow> {
    let block = load_wav(path)?;
    let r = analysis::analyze(&block)?;
    let (algorithm, alpha, k, alpha_c) = parse_output_name(path);
    Ok(AnalysisRow {
        file: path.display().to_string(),
        algorithm,
        alpha,
        k,
        alpha_c,
        n_pulses: r.n_pulses,
        mean_f0_hz: r.mean_f0,
        local_jitter_pct: r.jitter_pct(),
        local_shimmer_pct: r.shimmer_pct(),
    })
}

/// Analyses every input in parallel; rows keep the input order.
pub fn run_analysis(inputs: &[PathBuf]) -> AnalysisReport {
    let results: Vec<_> = inputs.par_iter().map(|p| (p, analyze_file(p))).collect();
    let mut report = AnalysisReport::default();
    for (path, result) in results {
        match result {
            Ok(row) => report.rows.push(row),
            Err(e) => report.failures.push((path.display().to_string(), e.to_string())),
        }
    }
    report
}

pub fn write_csv(rows: &[AnalysisRow], w: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "file",
        "algorithm",
        "alpha",
        "k",
        "alpha_c",
        "n_pulses",
        "mean_f0_hz",
        "local_jitter_pct",
        "local_shimmer_pct",
    ])?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        csv.write_record([
            r.file.clone(),
            opt(r.algorithm.map(|a| a.to_string())),
            opt(r.alpha.map(|v| v.to_string())),
            opt(r.k.map(|v| v.to_string())),
            opt(r.alpha_c.map(|v| v.to_string())),
            r.n_pulses.to_string(),
            format!("{:.3}", r.mean_f0_hz),
            format!("{:.4}", r.local_jitter_pct),
            format!("{:.4}", r.local_shimmer_pct),
        ])?;
    }
    csv.flush().map_err(|e| crate::BatchError::io("<csv>", e))?;
    Ok(())
}

/// Mean jitter and shimmer per parameter setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: Option<Algorithm>,
    pub alpha: Option<f64>,
    pub k: Option<u32>,
    pub alpha_c: Option<f64>,
    pub files: usize,
    pub mean_jitter_pct: f64,
    pub mean_shimmer_pct: f64,
}

pub fn summarize(rows: &[AnalysisRow]) -> Vec<SummaryRow> {
    type Key = (Option<Algorithm>, Option<u64>, Option<u32>, Option<u64>);
    let mut groups: BTreeMap<Key, (usize, f64, f64)> = BTreeMap::new();
    for r in rows {
        let key = (r.algorithm, r.alpha.map(f64::to_bits), r.k, r.alpha_c.map(f64::to_bits));
        let g = groups.entry(key).or_default();
        g.0 += 1;
        g.1 += r.local_jitter_pct;
        g.2 += r.local_shimmer_pct;
    }
    groups
        .into_iter()
        .map(|((algorithm, alpha, k, alpha_c), (n, j, s))| SummaryRow {
            algorithm,
            alpha: alpha.map(f64::from_bits),
            k,
            alpha_c: alpha_c.map(f64::from_bits),
            files: n,
            mean_jitter_pct: j / n as f64,
            mean_shimmer_pct: s / n as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_names_round_trip() {
        let p = Path::new("out/m1_a_angus_a0.75_k3.wav");
        assert_eq!(parse_output_name(p), (Some(Algorithm::Angus), Some(0.75), Some(3), None));
        let p = Path::new("f2_control_ac0.25_from_m1.wav");
        assert_eq!(parse_output_name(p), (Some(Algorithm::Control), None, None, Some(0.25)));
        assert_eq!(parse_output_name(Path::new("plain.wav")), (None, None, None, None));
    }

    #[test]
    fn empty_input_gives_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "file,algorithm,alpha,k,alpha_c,n_pulses,mean_f0_hz,local_jitter_pct,local_shimmer_pct\n"
        );
    }

    #[test]
    fn summary_groups_by_setting() {
        let row = |alpha: f64, j: f64| AnalysisRow {
            file: String::new(),
            algorithm: Some(Algorithm::Angus),
            alpha: Some(alpha),
            k: Some(3),
            alpha_c: None,
            n_pulses: 10,
            mean_f0_hz: 200.0,
            local_jitter_pct: j,
            local_shimmer_pct: 2.0 * j,
        };
        let s = summarize(&[row(0.5, 1.0), row(0.5, 3.0), row(0.25, 1.0)]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].files, 2);
        assert_eq!(s[1].mean_jitter_pct, 2.0);
        assert_eq!(s[1].mean_shimmer_pct, 4.0);
    }
}
