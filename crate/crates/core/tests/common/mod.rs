// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

pub mod external_sim;

use std::path::PathBuf;

use treegate::ensemble::load_model_file;
use treegate::{build_netlist, quantize, Netlist, PipelineConfig, QuantizedEnsemble};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Synthetic binary model at w_feature 4 / w_tree 3, pipeline [0, 1, 1].
pub fn binary_fixture() -> (QuantizedEnsemble, Netlist) {
    let ens = load_model_file(fixture("synth_binary_model.json")).unwrap();
    let q = quantize(&ens, 4, 3).unwrap();
    let n = build_netlist(&q, PipelineConfig::new(false, true, 1)).unwrap();
    (q, n)
}

/// 3-class XGBoost model on integer features 0..15 (identity quantizer at
/// w_feature 4), w_tree 3, pipeline [1, 1, 1].
pub fn multiclass_fixture() -> (QuantizedEnsemble, Netlist) {
    let ens = load_model_file(fixture("xgb_multiclass.json")).unwrap();
    let q = quantize(&ens, 4, 3).unwrap();
    let n = build_netlist(&q, PipelineConfig::new(true, true, 1)).unwrap();
    (q, n)
}

/// Compares `text` with a committed golden file. With `TREEGATE_BLESS=1`
/// the golden file is rewritten instead.
pub fn check_golden(name: &str, text: &str) -> Result<(), String> {
    let path = golden(name);
    if std::env::var_os("TREEGATE_BLESS").is_some() {
        std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == text {
        return Ok(());
    }
    let line = expected
        .lines()
        .zip(text.lines())
        .position(|(a, b)| a != b)
        .map_or_else(|| expected.lines().count().min(text.lines().count()) + 1, |i| i + 1);
    Err(format!(
        "{} differs from the emitted text at line {line}",
        path.display()
    ))
}
