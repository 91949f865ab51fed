use std::collections::BTreeSet;
use std::path::PathBuf;

use hypvmc::cells::CellVariant;
use hypvmc::config::ExperimentConfig;
use serde_json::Value;

fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/experiment.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn schema_lists_every_field() {
    let schema = schema();
    let cfg = ExperimentConfig::preset("smoke", CellVariant::LorentzGru, 0.2, 0.0).unwrap();
    let json: Value = serde_json::from_str(&cfg.to_json()).unwrap();
    assert_eq!(keys(&schema["properties"]), keys(&json));
    for section in ["model", "system", "train", "output"] {
        assert_eq!(
            keys(&schema["properties"][section]["properties"]),
            keys(&json[section]),
            "{section}"
        );
    }
    let variants: BTreeSet<String> = schema["properties"]["model"]["properties"]["variant"]["enum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let ours: BTreeSet<String> = CellVariant::ALL.iter().map(|v| v.name().to_string()).collect();
    assert_eq!(variants, ours);
}

#[test]
fn schema_defaults_match_code() {
    let schema = schema();
    let minimal = ExperimentConfig::from_json(
        r#"{"model": {"variant": "euclidean_rnn", "hidden": 4}, "system": {"n": 4}}"#,
    )
    .unwrap();
    let json: Value = serde_json::from_str(&minimal.to_json()).unwrap();
    for section in ["model", "system", "train", "output"] {
        for (k, spec) in schema["properties"][section]["properties"].as_object().unwrap() {
            if let Some(d) = spec.get("default") {
                assert_eq!(d, &json[section][k], "{section}.{k}");
            }
        }
    }
}

#[test]
fn example_configs_match_presets() {
    let dir = workspace().join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let preset = name.split('_').next().unwrap();
        let preset =
            ExperimentConfig::preset(preset, cfg.model.variant, cfg.system.j2, cfg.system.j3).unwrap();
        assert_eq!(cfg, preset, "{name}");
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn round_trip_is_identity() {
    for v in CellVariant::ALL {
        let cfg = ExperimentConfig::preset("j1j2j3", v, 0.2, 0.5).unwrap();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
