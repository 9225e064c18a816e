use super::svm::{ClassifierMetrics, TrainedModel};
use super::CalibrationError;
use crate::intent::{validate_boundary, BoundaryParams, Perspective};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const MODEL_VERSION: u32 = 1;

/// On-disk form of a trained boundary (JSON).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub perspective: Perspective,
    pub w1: f64,
    pub w2: f64,
    pub b: f64,
    pub metrics: ClassifierMetrics,
    pub n_samples: usize,
    pub regularization: f64,
    /// Unix seconds; left empty unless asked for so reruns are byte-identical.
    pub trained_at: Option<u64>,
}

impl ModelFile {
    pub fn new(m: &TrainedModel, trained_at: Option<u64>) -> Self {
        Self {
            version: MODEL_VERSION,
            perspective: m.params.perspective,
            w1: m.params.w1,
            w2: m.params.w2,
            b: m.params.b,
            metrics: m.metrics,
            n_samples: m.n_samples,
            regularization: m.regularization,
            trained_at,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain struct serializes");
        s.push('\n');
        s
    }

    pub fn model(&self) -> TrainedModel {
        TrainedModel {
            params: BoundaryParams::new(self.w1, self.w2, self.b, self.perspective),
            metrics: self.metrics,
            n_samples: self.n_samples,
            regularization: self.regularization,
        }
    }
}

pub fn save_model(path: &Path, m: &TrainedModel, trained_at: Option<u64>) -> Result<(), CalibrationError> {
    fs::write(path, ModelFile::new(m, trained_at).to_json())
        .map_err(|source| CalibrationError::Io { path: path.display().to_string(), source })
}

/// Reads a model file and re-applies the boundary checks.
pub fn load_model(path: &Path) -> Result<TrainedModel, CalibrationError> {
    let text = fs::read_to_string(path)
        .map_err(|source| CalibrationError::Io { path: path.display().to_string(), source })?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CalibrationError::Format(format!("{}: {e}", path.display())))?;
    if let Some(v) = raw.get("version").and_then(|v| v.as_u64()) {
        if v != MODEL_VERSION as u64 {
            return Err(CalibrationError::Version { found: v as u32, expected: MODEL_VERSION });
        }
    }
    let file: ModelFile =
        serde_json::from_value(raw).map_err(|e| CalibrationError::Format(format!("{}: {e}", path.display())))?;
    let model = file.model();
    let report = validate_boundary(&model.params);
    if !report.passed() {
        return Err(CalibrationError::Rejected {
            params: model.params,
            failures: report.failures().iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(model)
}
