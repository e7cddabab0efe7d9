//! Line-delimited JSON record of every file a sweep produced or failed to produce.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BatchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Angus,
    Control,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Angus => "angus",
            Algorithm::Control => "control",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub source: String,
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_c: Option<f64>,
    /// Recording whose perturbation profile was transplanted, if any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub output: Option<String>,
    /// Hex SHA-256 of the output file.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl ManifestRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    fn sort_key(&self) -> (&str, Algorithm, u64, u32, u64, u64) {
        // parameters are finite and non-negative, so their bit patterns order like the values
        let bits = |v: Option<f64>| v.map_or(0, f64::to_bits);
        (&self.source, self.algorithm, bits(self.alpha), self.k.unwrap_or(0), bits(self.h), bits(self.alpha_c))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn new(mut records: Vec<ManifestRecord>) -> Self {
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Manifest { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn outputs(&self) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(|r| r.is_ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(|r| !r.is_ok())
    }

    pub fn extend(&mut self, other: Manifest) {
        let mut all = std::mem::take(&mut self.records);
        all.extend(other.records);
        *self = Manifest::new(all);
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| BatchError::io("<manifest>", e))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| BatchError::io(path, e))
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut records = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| BatchError::io("<manifest>", e))?;
            if !line.trim().is_empty() {
                records.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Manifest::new(records))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| BatchError::io(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(f))
    }

    /// Re-hashes every output and returns the records whose file no longer matches.
    pub fn verify(&self) -> Vec<&ManifestRecord> {
        self.outputs()
            .filter(|r| {
                let Some(out) = &r.output else { return true };
                file_sha256(out).ok().as_deref() != r.sha256.as_deref()
            })
            .collect()
    }
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| BatchError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
