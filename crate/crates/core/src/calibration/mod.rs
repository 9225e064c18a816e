//! Boundary calibration from drone-style trajectory recordings: ingest,
//! strong-interaction extraction, per-frame labels, linear SVM training and
//! model files.

mod dataset;
mod extract;
mod model;
mod svm;
pub mod synthetic;

pub use dataset::{load_dataset_dir, load_recording, write_recording, AgentClass, Track, TrackFrame, TrajectoryDataset};
pub use extract::{
    extract_interactions, label_segment, ExtractParams, Extraction, InteractionSegment, Outcome,
    PairFrame, SkipReason, Skipped,
};
pub use model::{load_model, save_model, ModelFile, MODEL_VERSION};
pub use svm::{evaluate_classifier, train_linear_svm, ClassifierMetrics, SvmConfig, TrainedModel};

use crate::intent::{BoundaryParams, Intent, Perspective};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: String, column: String },
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("training needs both labels; only {0:?} present")]
    SingleClass(Intent),
    #[error("training needs at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("calibration rejected: boundary ({w1}, {w2}, {b}) fails {failures:?}", w1 = params.w1, w2 = params.w2, b = params.b)]
    Rejected { params: BoundaryParams, failures: Vec<String> },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("model version {found} not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
}

/// One training point in raw feature units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x1: f64,
    pub x2: f64,
    pub label: Intent,
    pub perspective: Perspective,
    pub weight: f64,
}

/// Everything one calibration pass produced, one model result per
/// perspective (pedestrian first).
#[derive(Debug)]
pub struct CalibrationRun {
    pub extraction: Extraction,
    pub samples: [usize; 2],
    pub models: [Result<TrainedModel, CalibrationError>; 2],
}

impl CalibrationRun {
    pub fn succeeded(&self) -> bool {
        self.models.iter().all(|m| m.is_ok())
    }
}

/// Extraction over all recordings, per-frame labels every `stride` frames,
/// and one SVM per perspective.
pub fn calibrate(
    recordings: &[TrajectoryDataset],
    extract: &ExtractParams,
    stride: usize,
    svm: &SvmConfig,
) -> CalibrationRun {
    let mut extraction = Extraction::default();
    for ds in recordings {
        let e = extract_interactions(ds, extract);
        extraction.segments.extend(e.segments);
        extraction.skipped.extend(e.skipped);
    }
    let train = |p: Perspective| {
        let s: Vec<LabeledSample> = extraction.segments.iter().flat_map(|seg| label_segment(seg, p, stride)).collect();
        (s.len(), train_linear_svm(&s, svm))
    };
    let (n_ped, ped) = train(Perspective::PedVsAv);
    let (n_av, av) = train(Perspective::AvVsPed);
    CalibrationRun { extraction, samples: [n_ped, n_av], models: [ped, av] }
}
