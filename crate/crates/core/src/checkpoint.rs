//! Checkpoints: a JSON manifest plus one little-endian `f64` file per
//! parameter segment.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ModelConfig, SystemConfig};
use crate::grad::{ParamVector, SegmentGeometry, SegmentRole};
use crate::hamiltonian::HeisenbergSpec;
use crate::vmc::float_or_null;
use crate::wavefunction::WavefunctionModel;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: malformed manifest: {source}")]
    Manifest {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("checkpoint format {0} is not supported")]
    Version(u32),
    #[error("checkpoint does not match its model: {0}")]
    Mismatch(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub role: SegmentRole,
    pub geometry: SegmentGeometry,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: u32,
    pub model: ModelConfig,
    pub system: SystemConfig,
    pub seed: u64,
    pub epoch: usize,
    #[serde(with = "float_or_null")]
    pub energy: f64,
    #[serde(with = "float_or_null")]
    pub variance: f64,
    pub param_count: usize,
    pub segments: Vec<SegmentEntry>,
}

/// Provenance stored next to the parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub epoch: usize,
    pub energy: f64,
    pub variance: f64,
}

pub fn model_config(model: &WavefunctionModel) -> ModelConfig {
    ModelConfig {
        variant: model.cell.variant,
        hidden: model.cell.hidden,
        r_max: model.cell.r_max,
        l_max: model.cell.l_max,
        clamp_mode: model.cell.clamp_mode,
        clamp_candidate: model.cell.clamp_candidate,
        phase_pi_scaling: model.phase_pi_scaling,
        marshall_sublattice: model.marshall,
    }
}

pub fn save(
    dir: &Path,
    model: &WavefunctionModel,
    spec: &HeisenbergSpec,
    meta: CheckpointMeta,
) -> Result<(), CheckpointError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut segments = Vec::new();
    for seg in &model.params.layout().segments {
        let file = format!("{}.f64", seg.name);
        let bytes: Vec<u8> = model
            .params
            .segment_values(seg)
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        segments.push(SegmentEntry {
            name: seg.name.clone(),
            rows: seg.rows,
            cols: seg.cols,
            role: seg.role,
            geometry: seg.geometry,
            file,
        });
    }
    let manifest = Manifest {
        format: FORMAT_VERSION,
        model: model_config(model),
        system: SystemConfig {
            n: spec.n,
            j1: spec.j1,
            j2: spec.j2,
            j3: spec.j3,
        },
        seed: meta.seed,
        epoch: meta.epoch,
        energy: meta.energy,
        variance: meta.variance,
        param_count: model.params.len(),
        segments,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub manifest: Manifest,
    pub model: WavefunctionModel,
    pub spec: HeisenbergSpec,
}

pub fn load(dir: &Path) -> Result<Checkpoint, CheckpointError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|source| CheckpointError::Manifest {
            path: path.clone(),
            source,
        })?;
    if manifest.format != FORMAT_VERSION {
        return Err(CheckpointError::Version(manifest.format));
    }
    let m = &manifest.model;
    let cell = crate::cells::CellConfig {
        variant: m.variant,
        hidden: m.hidden,
        c: 1.0,
        r_max: m.r_max,
        l_max: m.l_max,
        clamp_mode: m.clamp_mode,
        clamp_candidate: m.clamp_candidate,
    };
    let layout = cell.layout();
    if layout.len() != manifest.param_count || layout.segments.len() != manifest.segments.len() {
        return Err(CheckpointError::Mismatch(format!(
            "{} expects {} parameters in {} segments",
            m.variant,
            layout.len(),
            layout.segments.len()
        )));
    }
    let mut values = Vec::with_capacity(layout.len());
    for (seg, entry) in layout.segments.iter().zip(&manifest.segments) {
        if seg.name != entry.name || seg.rows != entry.rows || seg.cols != entry.cols {
            return Err(CheckpointError::Mismatch(format!(
                "segment `{}` ({}x{}) where `{}` ({}x{}) was expected",
                entry.name, entry.rows, entry.cols, seg.name, seg.rows, seg.cols
            )));
        }
        let p = dir.join(&entry.file);
        let bytes = fs::read(&p).map_err(io_err(&p))?;
        if bytes.len() != seg.len() * 8 {
            return Err(CheckpointError::Mismatch(format!(
                "{} holds {} bytes, expected {}",
                entry.file,
                bytes.len(),
                seg.len() * 8
            )));
        }
        values.extend(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))),
        );
    }
    let params = ParamVector::from_values(layout, values).expect("length checked");
    let mut model = WavefunctionModel::new(cell, manifest.system.n, params)
        .map_err(|e| CheckpointError::Mismatch(e.to_string()))?;
    model.phase_pi_scaling = m.phase_pi_scaling;
    model.marshall = m.marshall_sublattice;
    let s = &manifest.system;
    let spec = HeisenbergSpec {
        n: s.n,
        j1: s.j1,
        j2: s.j2,
        j3: s.j3,
    };
    Ok(Checkpoint {
        manifest,
        model,
        spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{CellConfig, CellVariant};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for v in CellVariant::ALL {
            let mut cell = CellConfig::new(v, 3);
            cell.l_max = Some(4.0);
            let mut m = WavefunctionModel::random(cell, 5, 17).unwrap();
            m.params.values_mut()[0] = std::f64::consts::PI / 7.0;
            let spec = HeisenbergSpec::new(5, 1.0, 0.2, 0.1).unwrap();
            let d = dir.path().join(v.name());
            let meta = CheckpointMeta {
                seed: 17,
                epoch: 4,
                energy: -1.25,
                variance: f64::NAN,
            };
            save(&d, &m, &spec, meta).unwrap();
            let back = load(&d).unwrap();
            assert_eq!(back.model, m);
            assert_eq!(back.spec, spec);
            assert!(back.manifest.variance.is_nan());
        }
    }

    #[test]
    fn truncated_segment_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let m = WavefunctionModel::random(CellConfig::new(CellVariant::EuclideanRnn, 2), 3, 1).unwrap();
        let spec = HeisenbergSpec::new(3, 1.0, 0.0, 0.0).unwrap();
        let meta = CheckpointMeta { seed: 1, epoch: 0, energy: 0.0, variance: 0.0 };
        save(dir.path(), &m, &spec, meta).unwrap();
        fs::write(dir.path().join("w_h.f64"), [0u8; 5]).unwrap();
        assert!(matches!(load(dir.path()), Err(CheckpointError::Mismatch(_))));
    }
}
