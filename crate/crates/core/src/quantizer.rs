// SPDX-License-Identifier: Apache-2.0

//! Uniform min-max input quantization and threshold integerization.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::GbdtEnsemble;
use crate::par::Exec;

pub const MAX_FEATURE_BITS: u32 = 16;

#[derive(Debug, Error)]
pub enum QuantizerError {
    #[error("cannot fit a quantizer on an empty dataset")]
    EmptyData,
    #[error("row {row}, column {column}: value {value} is not finite")]
    NonFinite { row: usize, column: usize, value: f64 },
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("w_feature must be in 1..={MAX_FEATURE_BITS}, got {0}")]
    BadWidth(u32),
    #[error("invalid quantizer: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Per-feature min/max plus the target bitwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureQuantizer {
    pub w_feature: u32,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl FeatureQuantizer {
    pub fn new(w_feature: u32, mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self, QuantizerError> {
        let q = FeatureQuantizer { w_feature, mins, maxs };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), QuantizerError> {
        if !(1..=MAX_FEATURE_BITS).contains(&self.w_feature) {
            return Err(QuantizerError::BadWidth(self.w_feature));
        }
        if self.mins.len() != self.maxs.len() {
            return Err(QuantizerError::Invalid(format!(
                "{} mins but {} maxs",
                self.mins.len(),
                self.maxs.len()
            )));
        }
        for (f, (lo, hi)) in self.mins.iter().zip(&self.maxs).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(QuantizerError::Invalid(format!("feature {f}: min {lo} / max {hi}")));
            }
        }
        Ok(())
    }

    /// Column-wise min/max of `data`.
    pub fn fit<R: AsRef<[f64]>>(data: &[R], w_feature: u32) -> Result<Self, QuantizerError> {
        if !(1..=MAX_FEATURE_BITS).contains(&w_feature) {
            return Err(QuantizerError::BadWidth(w_feature));
        }
        let first = data.first().ok_or(QuantizerError::EmptyData)?.as_ref();
        if first.is_empty() {
            return Err(QuantizerError::EmptyData);
        }
        let mut mins = vec![f64::INFINITY; first.len()];
        let mut maxs = vec![f64::NEG_INFINITY; first.len()];
        for (row, r) in data.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != mins.len() {
                return Err(QuantizerError::Ragged {
                    row,
                    found: r.len(),
                    expected: mins.len(),
                });
            }
            for (column, &value) in r.iter().enumerate() {
                if !value.is_finite() {
                    return Err(QuantizerError::NonFinite { row, column, value });
                }
                mins[column] = mins[column].min(value);
                maxs[column] = maxs[column].max(value);
            }
        }
        Ok(FeatureQuantizer { w_feature, mins, maxs })
    }

    pub fn num_features(&self) -> usize {
        self.mins.len()
    }

    /// Largest quantized value, 2^w - 1.
    pub fn max_level(&self) -> u32 {
        (1u32 << self.w_feature) - 1
    }

    pub fn transform_value(&self, feature: usize, x: f64) -> u32 {
        let (lo, hi) = (self.mins[feature], self.maxs[feature]);
        if hi <= lo || x.is_nan() {
            return 0;
        }
        let norm = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        // f64::round rounds half away from zero.
        (norm * f64::from(self.max_level())).round() as u32
    }

    /// Quantizes one sample. `x` must have `num_features()` entries.
    pub fn transform(&self, x: &[f64]) -> Vec<u32> {
        debug_assert_eq!(x.len(), self.num_features());
        x.iter().enumerate().map(|(f, &v)| self.transform_value(f, v)).collect()
    }

    pub fn transform_batch<R: AsRef<[f64]> + Sync>(&self, rows: &[R], exec: Exec) -> Vec<Vec<u32>> {
        exec.map(rows, |r| self.transform(r.as_ref()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("quantizer serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, QuantizerError> {
        let q: FeatureQuantizer = serde_json::from_str(text).map_err(|e| QuantizerError::Invalid(e.to_string()))?;
        q.validate()?;
        Ok(q)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, QuantizerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| QuantizerError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| QuantizerError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Replaces every threshold `t` by `ceil(t)`. Over integer inputs,
/// `x < t` and `x < ceil(t)` agree, so a model trained on quantized
/// features keeps its decisions.
pub fn integerize_thresholds(ensemble: &GbdtEnsemble) -> GbdtEnsemble {
    ensemble.map_thresholds(f64::ceil)
}
