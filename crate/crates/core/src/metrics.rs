//! JSON Lines logs and run result files.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::vmc::{float_or_null, EpochRecord};

/// Appends one JSON object per line, flushing after each.
pub struct JsonlWriter {
    file: File,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(Self {
            file: File::create(path)?,
        })
    }

    pub fn append(path: &Path) -> io::Result<Self> {
        Ok(Self {
            file: OpenOptions::new().create(true).append(true).open(path)?,
        })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> io::Result<()> {
        let line = serde_json::to_string(record).map_err(io::Error::other)?;
        writeln!(self.file, "{line}")?;
        self.file.flush()
    }
}

/// Reads every complete record; a truncated final line (an interrupted
/// write) is ignored, a malformed line elsewhere is an error.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> io::Result<Vec<T>> {
    let lines: Vec<String> = BufReader::new(File::open(path)?)
        .lines()
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}:{}: {e}", path.display(), i + 1),
                ))
            }
        }
    }
    Ok(out)
}

pub fn read_metrics(path: &Path) -> io::Result<Vec<EpochRecord>> {
    read_jsonl(path)
}

/// Wall-clock time of one epoch, kept apart from the metrics so that the
/// metrics of repeated runs compare byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub epoch: usize,
    pub wall_seconds: f64,
}

/// One inference result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(with = "float_or_null")]
    pub mean: f64,
    #[serde(with = "float_or_null")]
    pub std_error: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub checkpoint: String,
    /// Ground energy to compare against: exact diagonalization for short
    /// chains, the published DMRG value for the 100-site reference chains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
}

/// Contents of `result.json`: every evaluation performed on the run, most
/// recent last.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub evaluations: Vec<Evaluation>,
}

impl ResultFile {
    pub fn latest(&self) -> Option<&Evaluation> {
        self.evaluations.last()
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    /// Appends `eval` to the file at `path`, creating it if needed.
    pub fn append(path: &Path, eval: Evaluation) -> io::Result<Self> {
        let mut file = if path.exists() {
            Self::load(path)?
        } else {
            Self::default()
        };
        file.evaluations.push(eval);
        let text = serde_json::to_string_pretty(&file).map_err(io::Error::other)?;
        std::fs::write(path, text + "\n")?;
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(epoch: usize) -> EpochRecord {
        EpochRecord {
            epoch,
            energy: -1.0 - epoch as f64,
            variance: 0.5,
            std_error: 0.1,
            best_energy: -1.0 - epoch as f64,
            lr_euclidean: 5e-3,
            lr_hyperbolic: 5e-3,
            grad_norm: f64::NAN,
            skipped: true,
            saved: false,
            clamp_hits: 0,
            max_hidden_norm: 0.3,
            max_hidden_norm_raw: 0.3,
            max_hyperboloid_violation: 0.0,
            invariants_ok: true,
        }
    }

    #[test]
    fn metrics_replay_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let mut w = JsonlWriter::create(&path).unwrap();
        for e in 1..=3 {
            w.write(&record(e)).unwrap();
        }
        let back = read_metrics(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert!(back[0].grad_norm.is_nan());
        assert_eq!(back[2].energy, -4.0);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        write!(f, "{{\"epoch\": 4, \"ener").unwrap();
        assert_eq!(read_metrics(&path).unwrap().len(), 3);
    }

    #[test]
    fn results_append() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.json");
        let e = Evaluation {
            mean: -4.2,
            std_error: 0.01,
            sample_count: 100,
            seed: 1,
            checkpoint: "checkpoint_best".into(),
            reference_energy: None,
            reference_method: None,
            relative_error: None,
        };
        ResultFile::append(&path, e.clone()).unwrap();
        let f = ResultFile::append(&path, Evaluation { seed: 2, ..e }).unwrap();
        assert_eq!(f.evaluations.len(), 2);
        assert_eq!(ResultFile::load(&path).unwrap().latest().unwrap().seed, 2);
    }
}
